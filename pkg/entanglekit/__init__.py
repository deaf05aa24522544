"""entanglekit: entanglement of data tensors, locally connected tensor networks
and correlation-driven feature rearrangement."""

from .data_tensor import (
    Dataset,
    average_canonical_entanglement,
    embed_sincos,
    empirical_data_tensor_dense,
    entanglement_gram,
    sample_size_bound,
    suboptimality_upper_bound,
)
from .partitions import build_compatible_map, canonical_partitions
from .rearrange import (
    FeaturePermutation,
    apply_permutation,
    min_balanced_cut,
    min_balanced_pow2_cut,
    random_swaps,
    rearrange_1d,
    rearrange_pdim,
)
from .surrogate import build_correlation_graph, multivariate_pearson, surrogate_entanglement
from .tensor_core import AxisPartition, DenseTensor, entanglement, matricize
from .tree_tn import TreeTensorNetwork, fit_hierarchical, random_ttn

__all__ = [
    "Dataset",
    "average_canonical_entanglement",
    "embed_sincos",
    "empirical_data_tensor_dense",
    "entanglement_gram",
    "sample_size_bound",
    "suboptimality_upper_bound",
    "build_compatible_map",
    "canonical_partitions",
    "FeaturePermutation",
    "apply_permutation",
    "min_balanced_cut",
    "min_balanced_pow2_cut",
    "random_swaps",
    "rearrange_1d",
    "rearrange_pdim",
    "build_correlation_graph",
    "multivariate_pearson",
    "surrogate_entanglement",
    "AxisPartition",
    "DenseTensor",
    "entanglement",
    "matricize",
    "TreeTensorNetwork",
    "fit_hierarchical",
    "random_ttn",
]
