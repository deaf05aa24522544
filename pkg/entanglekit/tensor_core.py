"""Dense tensors, matricization and entanglement entropy.

Entanglement of a tensor A under an axis partition (K, K^c) is the Shannon
entropy (in nats) of the normalized squared singular values of A arranged as
a matrix with rows indexed by the K axes and columns by the K^c axes.
"""

import logging
import math
from dataclasses import dataclass
from functools import reduce

import numpy as np

from .config import SV_TOL
from .errors import ArgumentError, NumericError, PartitionError, ShapeError
from .utils import binary_entropy

logger = logging.getLogger(__name__)


# ── Types ─────────────────────────────────────────────────────────────


@dataclass(frozen=True)
class DenseTensor:
    """Explicit N-dimensional array of float64 values (row-major)."""

    array: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.array, dtype=np.float64)
        if arr.ndim < 1:
            raise ShapeError("a tensor needs at least one axis")
        if any(d < 1 for d in arr.shape):
            raise ShapeError(f"axis lengths must be positive, got {arr.shape}")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "array", arr)

    @classmethod
    def from_flat(cls, dims, values):
        dims = tuple(int(d) for d in dims)
        values = np.asarray(values, dtype=np.float64).ravel()
        if values.size != math.prod(dims):
            raise ShapeError(
                f"{values.size} values do not fill a tensor of shape {dims}")
        return cls(values.reshape(dims))

    @classmethod
    def zeros(cls, dims):
        return cls(np.zeros(tuple(dims)))

    @property
    def dims(self):
        return tuple(self.array.shape)

    @property
    def ndim(self):
        return self.array.ndim

    @property
    def size(self):
        return self.array.size

    @property
    def data(self):
        """Flat row-major values."""
        return self.array.ravel()

    def __mul__(self, scalar):
        return DenseTensor(self.array * float(scalar))

    __rmul__ = __mul__

    def __add__(self, other):
        _check_same_dims(self, other)
        return DenseTensor(self.array + other.array)

    def __sub__(self, other):
        _check_same_dims(self, other)
        return DenseTensor(self.array - other.array)


@dataclass(frozen=True)
class AxisPartition:
    """Bipartition (K, K^c) of the axes [0, n_axes), K stored sorted."""

    n_axes: int
    subset: tuple

    def __post_init__(self):
        if self.n_axes < 1:
            raise PartitionError(f"n_axes must be positive, got {self.n_axes}")
        subset = tuple(sorted(set(int(k) for k in self.subset)))
        if len(subset) != len(tuple(self.subset)):
            raise PartitionError(f"repeated axes in {self.subset}")
        if not subset:
            raise PartitionError("axis subset is empty")
        if len(subset) == self.n_axes:
            raise PartitionError("axis subset covers every axis")
        if subset[0] < 0 or subset[-1] >= self.n_axes:
            raise PartitionError(
                f"axes {subset} out of range for {self.n_axes} axes")
        object.__setattr__(self, "subset", subset)

    @property
    def complement(self):
        chosen = set(self.subset)
        return tuple(n for n in range(self.n_axes) if n not in chosen)

    def flipped(self):
        return AxisPartition(self.n_axes, self.complement)

    def permuted(self, perm):
        """Partition after moving axis n to position perm[n]."""
        return AxisPartition(self.n_axes, tuple(perm[n] for n in self.subset))


def _check_same_dims(a, b):
    if a.dims != b.dims:
        raise ShapeError(f"dimension mismatch: {a.dims} vs {b.dims}")


def _check_partition(tensor, part):
    if part.n_axes != tensor.ndim:
        raise PartitionError(
            f"partition over {part.n_axes} axes used with a {tensor.ndim}-axis tensor")


# ── Matricization ─────────────────────────────────────────────────────


def matricize(tensor, part):
    """Arrange tensor as a matrix: rows over the K axes, columns over K^c.

    Both row and column indices are lexicographic in ascending axis order,
    first listed axis slowest.
    """
    _check_partition(tensor, part)
    rows, cols = part.subset, part.complement
    dims = tensor.dims
    n_rows = math.prod(dims[n] for n in rows)
    n_cols = math.prod(dims[n] for n in cols)
    return np.transpose(tensor.array, rows + cols).reshape(n_rows, n_cols)


def partition_log_dim(dims, part):
    """ln D_K, where D_K = min(prod of K axis lengths, prod of K^c axis lengths)."""
    rows = math.prod(dims[n] for n in part.subset)
    cols = math.prod(dims[n] for n in part.complement)
    return math.log(min(rows, cols))


# ── Spectra and entropy ───────────────────────────────────────────────


def singular_values(matrix):
    """Singular values in descending order."""
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.ndim != 2:
        raise ShapeError(f"expected a matrix, got shape {matrix.shape}")
    if not np.all(np.isfinite(matrix)):
        raise NumericError("matrix has non-finite entries")
    if matrix.size == 0:
        return np.zeros(0)
    return np.linalg.svd(matrix, compute_uv=False)


def entropy_of_spectrum(sigma, tol=SV_TOL):
    """Entropy of rho_d = sigma_d^2 / sum sigma^2, zero for an all-zero spectrum.

    Values below tol * sigma_max count as exact zeros.
    """
    sigma = np.abs(np.asarray(sigma, dtype=np.float64))
    if sigma.size == 0:
        return 0.0
    top = sigma.max()
    if top == 0.0:
        return 0.0
    kept = sigma[sigma > tol * top]
    # scale first so squaring cannot underflow or overflow
    weights = (kept / top) ** 2
    rho = weights / weights.sum()
    value = float(-np.sum(rho * np.log(rho)))
    return max(value, 0.0)


def entanglement(tensor, part, tol=SV_TOL):
    """Entanglement entropy QE(A; K) in nats."""
    return entropy_of_spectrum(singular_values(matricize(tensor, part)), tol)


def entanglement_perturbation_bound(distance, log_dk):
    """Bound on |QE(V;K) - QE(W;K)| for unit-norm V, W at distance < 1/2."""
    if not 0.0 <= distance < 0.5:
        raise ArgumentError(f"distance must lie in [0, 1/2), got {distance}")
    return binary_entropy(distance) + distance * log_dk


# ── Products ──────────────────────────────────────────────────────────


def outer_product(vectors):
    """Tensor with entry (d_1..d_N) = prod_n x^(n)_{d_n}."""
    vectors = [np.asarray(v, dtype=np.float64).ravel() for v in vectors]
    if not vectors:
        raise ArgumentError("outer product needs at least one vector")
    if any(v.size == 0 for v in vectors):
        raise ArgumentError("outer product of an empty vector")
    return DenseTensor(reduce(np.multiply.outer, vectors))


def inner_product(a, b):
    _check_same_dims(a, b)
    return float(np.vdot(a.array, b.array))


def norm(tensor):
    return float(np.linalg.norm(tensor.data))
