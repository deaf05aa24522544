"""Datasets, feature embedding and entanglement of the empirical data tensor.

The empirical data tensor is D_emp = (1/M) sum_m y^(m) outer(x^(1,m), ...,
x^(N,m)). Its entanglement under any axis partition is computed from two
M x M Gram matrices, so the exponentially large tensor is never formed
(except by empirical_data_tensor_dense, used at tiny scale and as an oracle).
"""

import logging
import math
from dataclasses import dataclass, field, replace
from functools import reduce

import numpy as np

from .config import CLAMP_TOL, DEFAULT_MEM_BUDGET, DEFAULT_THETA, EIG_TOL, SV_TOL
from .errors import (
    ArgumentError,
    CapacityError,
    DegenerateInputError,
    NumericError,
    PreconditionError,
    ShapeError,
)
from .partitions import build_compatible_map, nondegenerate_partitions
from .tensor_core import AxisPartition, DenseTensor, entropy_of_spectrum, norm
from .tree_tn import contract_full, fit_hierarchical
from .utils import integer_root, is_power_of_two, log2_exact, next_power_of_two, parallel_map

logger = logging.getLogger(__name__)

NORM_SLACK = 1e-9


# ── Dataset ───────────────────────────────────────────────────────────


@dataclass(frozen=True)
class Dataset:
    """M instances of N feature vectors of length D, with optional ±1 labels.

    For dim > 1 the features sit on a side^dim grid and are stored in
    row-major order of their grid coordinates. n_original counts the
    features before padding; padded features are appended at the end.
    """

    features: np.ndarray  # (M, N, D)
    labels: np.ndarray = None  # (M,) of ±1, or None
    dim: int = 1
    n_original: int = None
    metadata: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        features = np.asarray(self.features, dtype=np.float64)
        if features.ndim == 2:
            features = features[:, :, None]
        if features.ndim != 3:
            raise ShapeError(f"features must be (M, N, D), got shape {features.shape}")
        if min(features.shape) < 1:
            raise ShapeError(f"empty dataset: shape {features.shape}")
        if not np.all(np.isfinite(features)):
            raise ShapeError("features contain non-finite values")
        features = features.copy()
        features.setflags(write=False)
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "metadata", dict(self.metadata))
        if self.labels is not None:
            labels = np.asarray(self.labels, dtype=np.float64).ravel()
            if labels.size != features.shape[0]:
                raise ShapeError(
                    f"{labels.size} labels for {features.shape[0]} instances")
            if not np.all(np.abs(labels) == 1.0):
                raise PreconditionError("labels must be +1 or -1")
            labels = labels.copy()
            labels.setflags(write=False)
            object.__setattr__(self, "labels", labels)
        if self.n_original is None:
            object.__setattr__(self, "n_original", features.shape[1])
        if self.dim > 1:
            integer_root(features.shape[1], self.dim)

    @property
    def M(self):
        return self.features.shape[0]

    @property
    def N(self):
        """Number of features (N^P for grid data)."""
        return self.features.shape[1]

    @property
    def D(self):
        return self.features.shape[2]

    @property
    def side(self):
        return integer_root(self.N, self.dim)

    @property
    def labeled(self):
        return self.labels is not None

    @property
    def normalized(self):
        """Every feature vector has Euclidean norm at most one."""
        return bool(np.all(np.linalg.norm(self.features, axis=2) <= 1.0 + NORM_SLACK))

    @property
    def padded(self):
        return self.N - self.n_original

    def compatible_map(self):
        return build_compatible_map(self.side, self.dim)

    def axis_features(self, cmap=None):
        """Features reordered into tensor-axis order through the compatible map."""
        if self.dim == 1:
            return self.features
        cmap = cmap or self.compatible_map()
        return self.features[:, cmap.cell_of_axis(), :]

    def subset(self, indices):
        """Dataset restricted to the given instances."""
        indices = np.asarray(indices, dtype=np.int64)
        labels = None if self.labels is None else self.labels[indices]
        return replace(self, features=self.features[indices], labels=labels)


def require_labels(ds):
    if not ds.labeled:
        raise PreconditionError("operation needs a labeled dataset")


# ── Embedding and padding ─────────────────────────────────────────────


def embed_sincos(x, theta=DEFAULT_THETA):
    """phi(x) = (sin(pi theta x), cos(pi theta x))."""
    if not math.isfinite(x):
        raise ArgumentError(f"cannot embed non-finite value {x}")
    angle = math.pi * theta * x
    return np.array([math.sin(angle), math.cos(angle)])


def embed_features(values, theta=DEFAULT_THETA):
    """Vectorized sine-cosine embedding of an (M, N) or (M, N, 1) array."""
    values = np.asarray(values, dtype=np.float64)
    if values.ndim == 3:
        if values.shape[2] != 1:
            raise ShapeError("sine-cosine embedding needs scalar features (D = 1)")
        values = values[:, :, 0]
    angle = np.pi * theta * values
    return np.stack([np.sin(angle), np.cos(angle)], axis=-1)


def embed_dataset(ds, theta=DEFAULT_THETA):
    embedded = replace(ds, features=embed_features(ds.features, theta))
    embedded.metadata.update(embedding="sincos", theta=theta)
    return embedded


def padding_vector(D):
    """Constant padding feature: e_D, which is (0, 1) for D = 2."""
    vec = np.zeros(D)
    vec[-1] = 1.0
    return vec


def pad_to_power_of_two(ds, raw_scalar=False):
    """Append constant features until N is a power of two.

    With raw_scalar the padding value is 0, whose sine-cosine embedding is
    (0, 1); otherwise the padding vector is e_D.
    """
    if ds.dim != 1:
        if not is_power_of_two(ds.side):
            raise ArgumentError("grid data needs a power-of-two side; padding is 1D only")
        return ds
    target = max(2, next_power_of_two(ds.N))
    if target == ds.N:
        return ds
    extra = target - ds.N
    fill = np.zeros(ds.D) if raw_scalar else padding_vector(ds.D)
    pad = np.broadcast_to(fill, (ds.M, extra, ds.D))
    logger.info("Padding %d features with %d constant features", ds.N, extra)
    return replace(ds, features=np.concatenate([ds.features, pad], axis=1),
                   n_original=ds.n_original)


# ── Dense data tensor ─────────────────────────────────────────────────


def empirical_data_tensor_dense(ds, cmap=None, mem_budget=DEFAULT_MEM_BUDGET):
    """(1/M) sum_m y^(m) outer_n x^(n,m), axes in compatible-map order."""
    require_labels(ds)
    total = ds.D ** ds.N
    if total > mem_budget:
        raise CapacityError(f"data tensor needs {total} entries, budget is {mem_budget}")
    X = ds.axis_features(cmap)
    acc = np.zeros((ds.D,) * ds.N)
    for m in range(ds.M):
        acc += ds.labels[m] * reduce(np.multiply.outer, list(X[m]))
    return DenseTensor(acc / ds.M)


# ── Gram-matrix entanglement ──────────────────────────────────────────


def _axis_subsets(ds, part):
    if hasattr(part, "axis_partition"):
        part = part.axis_partition()
    if not isinstance(part, AxisPartition):
        part = AxisPartition(ds.N, tuple(part))
    if part.n_axes != ds.N:
        raise ShapeError(f"partition over {part.n_axes} axes, dataset has {ds.N} features")
    return part.subset, part.complement


def _gram_product(X, axes):
    """Elementwise product over features of the per-feature Gram matrices."""
    M = X.shape[0]
    out = np.ones((M, M))
    for n in axes:
        Xn = X[:, n, :]
        out *= Xn @ Xn.T
    return out


def gram_matrices(ds, part, cmap=None):
    """(G^(K), G^(K^c)); labels enter G^(K) only."""
    require_labels(ds)
    subset, complement = _axis_subsets(ds, part)
    X = ds.axis_features(cmap)
    g_k = _gram_product(X, subset) * np.outer(ds.labels, ds.labels)
    g_kc = _gram_product(X, complement)
    return g_k, g_kc


def psd_eig(matrix, eig_tol=EIG_TOL, clamp_tol=CLAMP_TOL):
    """Eigendecomposition of a symmetric PSD matrix with small eigenvalues clamped.

    A negative eigenvalue larger than clamp_tol * trace in magnitude means
    the matrix is not PSD up to rounding, and raises NumericError.
    """
    vals, vecs = np.linalg.eigh((matrix + matrix.T) / 2.0)
    trace = float(np.trace(matrix))
    floor = eig_tol * abs(trace)
    negative = vals[vals < 0]
    if negative.size:
        worst = float(-negative.min())
        if worst > clamp_tol * abs(trace):
            raise NumericError(
                f"Gram matrix has eigenvalue {-worst:.3g}, beyond rounding for trace {trace:.3g}")
        logger.debug("Clamping negative eigenvalue %.3g (%.3g of trace)",
                     -worst, worst / trace if trace else math.inf)
    vals = np.where(vals < floor, 0.0, vals)
    return vals, vecs


def entanglement_gram(ds, part, cmap=None, eig_tol=EIG_TOL, sv_tol=SV_TOL):
    """QE(D_emp; K) via the two Gram matrices, in O(D N M^2 + M^3)."""
    g_k, g_kc = gram_matrices(ds, part, cmap)
    s_k, u_k = psd_eig(g_k, eig_tol)
    s_kc, u_kc = psd_eig(g_kc, eig_tol)
    q = (np.sqrt(s_k)[:, None] * (u_k.T @ u_kc)) * np.sqrt(s_kc)[None, :]
    if not np.any(q):
        return 0.0
    return entropy_of_spectrum(np.linalg.svd(q, compute_uv=False), sv_tol)


def canonical_entanglements(ds, levels, cmap=None, workers=1,
                            eig_tol=EIG_TOL, sv_tol=SV_TOL):
    """[(partition, QE)] over the canonical partitions of the given levels."""
    levels = list(levels)
    if not levels:
        raise ArgumentError("empty level set")
    if ds.dim == 1 and not is_power_of_two(ds.N):
        raise ArgumentError(f"{ds.N} features is not a power of two; pad first")
    cmap = cmap or ds.compatible_map()
    depth = log2_exact(ds.side)
    for level in levels:
        if not 1 <= level <= depth:
            raise ArgumentError(f"level {level} outside [1, {depth}]")
    parts = nondegenerate_partitions(cmap.side, cmap.dim, levels, cmap)
    values = parallel_map(
        lambda p: entanglement_gram(ds, p, cmap, eig_tol, sv_tol), parts, workers)
    return list(zip(parts, values))


def minibatches(ds, batch_size, batches, seed=0):
    """Seeded mini-batches sampled without replacement (full dataset if batch_size >= M)."""
    if batch_size is None or batch_size >= ds.M:
        return [ds]
    rng = np.random.default_rng(seed)
    return [ds.subset(np.sort(rng.choice(ds.M, size=batch_size, replace=False)))
            for _ in range(batches)]


def average_canonical_entanglement(ds, levels, cmap=None, workers=1,
                                   batch_size=None, batches=1, seed=0):
    """Mean QE over canonical partitions of the given levels (averaged over mini-batches)."""
    means = []
    for batch in minibatches(ds, batch_size, batches, seed):
        values = [v for _, v in canonical_entanglements(batch, levels, cmap, workers)]
        means.append(float(np.mean(values)))
    return float(np.mean(means))


def level_averages(entries):
    """{level: mean value} from [(partition, value)]."""
    by_level = {}
    for part, value in entries:
        by_level.setdefault(part.level, []).append(value)
    return {level: float(np.mean(vals)) for level, vals in sorted(by_level.items())}


# ── Bounds ────────────────────────────────────────────────────────────


def sample_size_bound(delta, gamma, pop_norm_lower, max_log_d):
    """Training-set size guaranteeing entanglement concentration within gamma.

    ceil(128 ln(2/delta) max_log_d^4 / (pop_norm_lower^2 gamma^4)).
    """
    if not 0.0 < delta < 1.0:
        raise ArgumentError(f"delta must lie in (0, 1), got {delta}")
    if gamma <= 0 or pop_norm_lower <= 0:
        raise ArgumentError("gamma and pop_norm_lower must be positive")
    if max_log_d < 0:
        raise ArgumentError(f"max_log_d must be nonnegative, got {max_log_d}")
    value = 128.0 * math.log(2.0 / delta) * max_log_d ** 4 / (pop_norm_lower ** 2 * gamma ** 4)
    nearest = round(value)
    # absorb floating point noise around exact integers
    if abs(value - nearest) <= 1e-9 * max(1.0, value):
        return int(nearest)
    return int(math.ceil(value))


def accuracy_entanglement_bound(eps, width, log_dk):
    """ln R + 2 eps ln D_K + 2 sqrt(2 eps): entanglement allowed at suboptimality eps."""
    if eps < 0:
        raise ArgumentError(f"eps must be nonnegative, got {eps}")
    return math.log(width) + 2.0 * eps * log_dk + 2.0 * math.sqrt(2.0 * eps)


def suboptimality_upper_bound(ds, width, cmap=None, mem_budget=DEFAULT_MEM_BUDGET):
    """|| W/||W|| - D/||D|| || for the width-R hierarchical fit of the normalized data tensor."""
    cmap = cmap or ds.compatible_map()
    tensor = empirical_data_tensor_dense(ds, cmap, mem_budget)
    d_norm = norm(tensor)
    if d_norm == 0.0:
        raise DegenerateInputError("empirical data tensor is zero")
    target = tensor * (1.0 / d_norm)
    tn, _ = fit_hierarchical(target, width, cmap, mem_budget)
    fitted = contract_full(tn, mem_budget)
    w_norm = norm(fitted)
    if w_norm == 0.0:
        raise DegenerateInputError("fitted network is zero")
    return norm(fitted * (1.0 / w_norm) - target)
