"""Multivariate Pearson correlation and correlation-based surrogate entanglement.

Surrogate entanglement of a feature subset K is the sum of correlation
coefficients p(n, n') over n in K and n' outside K. The complete weighted
graph with w(n, n') = p(n, n') turns balanced splits of a block into
minimum balanced cut problems (see rearrange).
"""

import logging
from dataclasses import dataclass, field

import networkx as nx
import numpy as np

from .config import EIG_TOL
from .errors import DegenerateFeatureError, PartitionError, ShapeError
from .partitions import nondegenerate_partitions
from .utils import log2_exact, parallel_map

logger = logging.getLogger(__name__)

CORRELATION_SLACK = 1e-9


# ── Pearson coefficients ──────────────────────────────────────────────


def psd_sqrt(matrix, eig_tol=EIG_TOL):
    """Principal square root of a symmetric PSD matrix.

    Eigenvalues below eig_tol * trace are clamped to zero.
    """
    vals, vecs = np.linalg.eigh((matrix + matrix.T) / 2.0)
    floor = eig_tol * abs(float(np.trace(matrix)))
    vals = np.where(vals < floor, 0.0, vals)
    return (vecs * np.sqrt(vals)) @ vecs.T


def _centered(ds):
    return ds.features - ds.features.mean(axis=0, keepdims=True)


def constant_features(ds):
    """Indices of features taking one value on every instance.

    Compared on the raw values: centering a constant that is not exactly
    representable leaves rounding noise in its covariance.
    """
    spread = np.ptp(ds.features, axis=0).max(axis=-1)
    return tuple(int(n) for n in np.flatnonzero(spread == 0.0))


def _covariances(xc):
    """Per-feature covariance matrices, shape (N, D, D)."""
    return np.einsum("mnd,mne->nde", xc, xc) / xc.shape[0]


def _denominator(sqrt_a, cov_b, eig_tol=EIG_TOL):
    """trace((S_a^2 S_b)^{1/2}) via the symmetric form S_a S_b S_a."""
    inner = sqrt_a @ cov_b @ sqrt_a
    vals = np.linalg.eigvalsh((inner + inner.T) / 2.0)
    floor = eig_tol * abs(float(np.trace(inner)))
    vals = np.where(vals < floor, 0.0, vals)
    return float(np.sum(np.sqrt(vals)))


def multivariate_pearson(ds, n, n2):
    """trace(Sigma(n, n2)) / trace((Sigma(n) Sigma(n2))^{1/2}) over the instances."""
    for idx in (n, n2):
        if not 0 <= idx < ds.N:
            raise ShapeError(f"feature {idx} out of range for {ds.N} features")
    for idx in (n, n2):
        if np.ptp(ds.features[:, idx, :], axis=0).max() == 0.0:
            raise DegenerateFeatureError(f"feature {idx} is constant across instances")
    xc = _centered(ds)
    a, b = xc[:, n, :], xc[:, n2, :]
    cov_a = a.T @ a / ds.M
    cov_b = b.T @ b / ds.M
    denom = _denominator(psd_sqrt(cov_a), cov_b)
    if denom == 0.0:
        raise DegenerateFeatureError(
            f"features {n} and {n2} have orthogonal covariance supports")
    return float(np.sum(a * b) / ds.M / denom)


# ── Correlation graph ─────────────────────────────────────────────────


@dataclass
class CorrelationGraph:
    """Complete graph on the features with edge weights p(n, n').

    weights is symmetric with a zero diagonal; constant features are listed
    in masked and carry zero weight to every other feature.
    """

    weights: np.ndarray
    masked: tuple = ()
    _graph: nx.Graph = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise ShapeError(f"weights must be square, got shape {w.shape}")
        if not np.allclose(w, w.T, atol=1e-12):
            raise ShapeError("weights must be symmetric")
        w = (w + w.T) / 2.0
        np.fill_diagonal(w, 0.0)
        w.setflags(write=False)
        self.weights = w

    @property
    def n_vertices(self):
        return self.weights.shape[0]

    @property
    def graph(self):
        """networkx view: complete graph, every pair carrying its weight."""
        if self._graph is None:
            G = nx.complete_graph(self.n_vertices)
            nx.set_edge_attributes(
                G, {(u, v): self.weights[u, v] for u, v in G.edges()}, "weight")
            self._graph = G
        return self._graph

    def cut_weight(self, part, other=None):
        """Total weight between part and other (default: everything outside part)."""
        return float(nx.cut_size(self.graph, list(part),
                                 None if other is None else list(other), weight="weight"))

    def surrogate(self, subset):
        subset = _check_subset(subset, self.n_vertices)
        inside = np.zeros(self.n_vertices, dtype=bool)
        inside[list(subset)] = True
        return float(self.weights[np.ix_(inside, ~inside)].sum())


def _check_subset(subset, n):
    subset = sorted(set(int(k) for k in subset))
    if not subset or len(subset) == n:
        raise PartitionError("surrogate entanglement needs a proper nonempty subset")
    if subset[0] < 0 or subset[-1] >= n:
        raise PartitionError(f"subset {subset} out of range for {n} features")
    return subset


def build_correlation_graph(ds, workers=1):
    """All pairwise multivariate Pearson coefficients of a dataset's features."""
    xc = _centered(ds)
    covs = _covariances(xc)
    constant = constant_features(ds)
    if constant:
        logger.info("Masking %d constant features: %s", len(constant), list(constant))
    sqrts = [psd_sqrt(c) for c in covs]
    numer = np.einsum("mnd,mkd->nk", xc, xc) / ds.M
    live = [n for n in range(ds.N) if n not in constant]

    def row(n):
        out = np.zeros(ds.N)
        for k in live:
            if k <= n:
                continue
            denom = _denominator(sqrts[n], covs[k])
            out[k] = numer[n, k] / denom if denom > 0.0 else 0.0
        return out

    rows = parallel_map(row, live, workers)
    w = np.zeros((ds.N, ds.N))
    for n, values in zip(live, rows):
        w[n] = values
    w = w + w.T
    off = np.abs(w) > 1.0 + CORRELATION_SLACK
    if np.any(off):
        logger.warning("%d coefficients outside [-1, 1]", int(off.sum()) // 2)
    return CorrelationGraph(weights=w, masked=constant)


def surrogate_entanglement(source, subset):
    """SE(K) for a Dataset or a prebuilt CorrelationGraph."""
    graph = source if isinstance(source, CorrelationGraph) else build_correlation_graph(source)
    return graph.surrogate(subset)


def canonical_surrogates(graph, side, dim=1, levels=None, perm=None, cmap=None):
    """[(partition, SE)] over canonical partitions of an arrangement.

    perm maps each feature to its grid cell; the features sitting in a
    block's cells are those whose image lands there. None means identity.
    """
    if side ** dim != graph.n_vertices:
        raise ShapeError(f"grid {side}^{dim} does not match {graph.n_vertices} features")
    if levels is None:
        levels = range(1, log2_exact(side) + 1)
    occupant = np.arange(graph.n_vertices)
    if perm is not None:
        occupant = np.asarray(perm.inverse().mapping)
    parts = nondegenerate_partitions(side, dim, levels, cmap)
    return [(p, graph.surrogate(occupant[list(p.cells)])) for p in parts]


def average_surrogate_entanglement(graph, side, dim=1, levels=None, perm=None, cmap=None):
    values = [v for _, v in canonical_surrogates(graph, side, dim, levels, perm, cmap)]
    return float(np.mean(values))
