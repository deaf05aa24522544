"""Greedy recursive feature rearrangement via balanced graph cuts.

Starting from the full feature set, every block at level l is split into
2^P equal parts by a minimum balanced (2^P-)cut of the correlation graph
restricted to the block; the parts become the block's children at level
l + 1. After L levels each block is a single feature, and the block's
position is where that feature lands.
"""

import itertools
import logging
from dataclasses import dataclass, field, replace

import networkx as nx
import numpy as np

from .config import DEFAULT_RESTARTS, EXACT_BISECTION_MAX, EXACT_MULTIWAY_MAX
from .errors import ArgumentError, ShapeError
from .surrogate import build_correlation_graph
from .utils import integer_root, is_power_of_two, log2_exact, parallel_map

logger = logging.getLogger(__name__)

GAIN_TOL = 1e-12
MAX_PASSES = 64
MAX_REFINE_SWEEPS = 16


# ── Types ─────────────────────────────────────────────────────────────


@dataclass(frozen=True)
class CutSolution:
    """Balanced split of a vertex set into equal parts.

    parts are sorted internally and ordered by their smallest vertex. cut is
    the total weight between different parts; objective the mean surrogate
    entanglement of the parts over the whole graph.
    """

    vertices: tuple
    parts: tuple
    cut: float
    objective: float
    restarts: int = 0
    trace: tuple = ()
    exact: bool = False

    def to_json(self):
        return {
            "parts": [list(p) for p in self.parts],
            "cut": self.cut,
            "objective": self.objective,
        }


@dataclass(frozen=True)
class FeaturePermutation:
    """Bijection from source features to target grid cells.

    mapping[i] is the row-major target cell of source feature i.
    """

    dim: int
    side: int
    mapping: tuple
    provenance: tuple = field(default=(), compare=False)

    def __post_init__(self):
        mapping = tuple(int(t) for t in self.mapping)
        if len(mapping) != self.side ** self.dim:
            raise ShapeError(
                f"permutation of {len(mapping)} entries for a {self.side}^{self.dim} grid")
        if sorted(mapping) != list(range(len(mapping))):
            raise ArgumentError("mapping is not a bijection")
        object.__setattr__(self, "mapping", mapping)

    @classmethod
    def identity(cls, side, dim=1):
        return cls(dim=dim, side=side, mapping=tuple(range(side ** dim)))

    @property
    def size(self):
        return len(self.mapping)

    def inverse(self):
        return FeaturePermutation(self.dim, self.side, tuple(np.argsort(self.mapping).tolist()))

    def restricted(self, n_keep):
        """Permutation of the first n_keep features, keeping their relative target order.

        Used to strip trailing padding features; the result is 1D.
        """
        if not 1 <= n_keep <= self.size:
            raise ArgumentError(f"cannot keep {n_keep} of {self.size} features")
        targets = np.asarray(self.mapping[:n_keep])
        ranks = np.argsort(np.argsort(targets))
        return FeaturePermutation(1, n_keep, tuple(ranks.tolist()), self.provenance)

    def to_json(self):
        out = {"P": self.dim, "N": self.side, "pi": list(self.mapping)}
        if self.dim > 1:
            out["layout"] = "row-major"
        if self.provenance:
            out["cuts"] = list(self.provenance)
        return out


# ── Balanced bisection ────────────────────────────────────────────────


def _local_weights(graph, vertices):
    w = graph.weights[np.ix_(vertices, vertices)].copy()
    np.fill_diagonal(w, 0.0)
    return w


def _cut_of(w, side):
    return float(w[np.ix_(side, ~side)].sum())


def _kl_pass(w, side):
    """One Kernighan-Lin pass; returns (new side, gain). gain > 0 means improved."""
    n = len(side)
    ext = np.where(side[None, :] != side[:, None], w, 0.0).sum(axis=1)
    internal = np.where(side[None, :] == side[:, None], w, 0.0).sum(axis=1)
    d = ext - internal
    locked = np.zeros(n, dtype=bool)
    swaps = []
    gains = []
    for _ in range(n // 2):
        a_idx = np.flatnonzero(~side & ~locked)
        b_idx = np.flatnonzero(side & ~locked)
        g = d[a_idx][:, None] + d[b_idx][None, :] - 2.0 * w[np.ix_(a_idx, b_idx)]
        flat = int(np.argmax(g))
        i, j = divmod(flat, len(b_idx))
        a, b = a_idx[i], b_idx[j]
        swaps.append((a, b))
        gains.append(float(g[i, j]))
        locked[a] = locked[b] = True
        # a moves to B and b moves to A
        same_a = ~side & ~locked
        same_b = side & ~locked
        d[same_a] += 2.0 * w[same_a, a] - 2.0 * w[same_a, b]
        d[same_b] += 2.0 * w[same_b, b] - 2.0 * w[same_b, a]
    cumulative = np.cumsum(gains)
    k = int(np.argmax(cumulative))
    best = float(cumulative[k])
    if best <= GAIN_TOL:
        return side, 0.0
    side = side.copy()
    for a, b in swaps[: k + 1]:
        side[a], side[b] = True, False
    return side, best


def _kernighan_lin(w, side):
    """Run passes until none improves; returns (side, cut trace)."""
    trace = [_cut_of(w, side)]
    for _ in range(MAX_PASSES):
        side, gain = _kl_pass(w, side)
        if gain == 0.0:
            break
        trace.append(_cut_of(w, side))
    return side, trace


def _spectral_side(graph, vertices):
    """Split at the median of the Laplacian's second eigenvector."""
    nodes = [int(v) for v in vertices]
    sub = graph.graph.subgraph(nodes)
    lap = nx.laplacian_matrix(sub, nodelist=nodes, weight="weight").toarray()
    _, vecs = np.linalg.eigh(lap)
    order = np.argsort(vecs[:, 1], kind="stable")
    side = np.zeros(len(vertices), dtype=bool)
    side[order[len(vertices) // 2:]] = True
    return side


def _canonical_parts(vertices, labels, k):
    groups = [tuple(sorted(int(vertices[i]) for i in np.flatnonzero(labels == g)))
              for g in range(k)]
    return tuple(sorted(groups, key=lambda g: g[0]))


def _solution(graph, vertices, labels, k, restarts=0, trace=(), exact=False):
    parts = _canonical_parts(vertices, labels, k)
    cut = sum(graph.cut_weight(p, q) for p, q in itertools.combinations(parts, 2))
    objective = float(np.mean([graph.surrogate(p) for p in parts]))
    return CutSolution(vertices=tuple(int(v) for v in vertices), parts=parts, cut=cut,
                       objective=objective, restarts=restarts, trace=tuple(trace),
                       exact=exact)


def _exact_bisection(w):
    n = w.shape[0]
    best, best_side = None, None
    for rest in itertools.combinations(range(1, n), n // 2 - 1):
        side = np.ones(n, dtype=bool)
        side[[0, *rest]] = False
        cut = _cut_of(w, side)
        if best is None or cut < best - GAIN_TOL:
            best, best_side = cut, side
    return best_side


def _check_vertices(graph, vertices, parts):
    vertices = np.asarray(sorted(set(int(v) for v in vertices)), dtype=np.int64)
    if len(vertices) < parts or len(vertices) % parts:
        raise ArgumentError(f"{len(vertices)} vertices cannot split into {parts} equal parts")
    if vertices[0] < 0 or vertices[-1] >= graph.n_vertices:
        raise ArgumentError("vertex out of range for the graph")
    return vertices


def min_balanced_cut(graph, vertices=None, seed=0, restarts=DEFAULT_RESTARTS,
                     exact=False, spectral=False):
    """Minimum balanced cut of the subgraph on vertices.

    Kernighan-Lin from `restarts` seeded random splits (the first may be
    spectral), best kept; exact=True enumerates every split when the block
    has at most EXACT_BISECTION_MAX vertices.
    """
    if vertices is None:
        vertices = range(graph.n_vertices)
    vertices = _check_vertices(graph, vertices, 2)
    n = len(vertices)
    w = _local_weights(graph, vertices)
    if n == 2:
        return _solution(graph, vertices, np.array([0, 1]), 2, exact=True)
    if exact:
        if n <= EXACT_BISECTION_MAX:
            side = _exact_bisection(w)
            return _solution(graph, vertices, side.astype(int), 2, exact=True)
        logger.warning("Exact cut requested for %d vertices; using Kernighan-Lin", n)
    rng = np.random.default_rng(seed)
    best_side, best_cut, best_trace = None, None, ()
    for r in range(max(1, restarts)):
        if r == 0 and spectral:
            side = _spectral_side(graph, vertices)
        else:
            side = np.zeros(n, dtype=bool)
            side[rng.permutation(n)[: n // 2]] = True
        side, trace = _kernighan_lin(w, side)
        logger.debug("KL restart %d: cut trace %s", r, trace)
        if best_cut is None or trace[-1] < best_cut - GAIN_TOL:
            best_side, best_cut, best_trace = side, trace[-1], trace
    return _solution(graph, vertices, best_side.astype(int), 2,
                     restarts=max(1, restarts), trace=best_trace)


# ── Balanced 2^P-cut ──────────────────────────────────────────────────


def _equal_set_partitions(items, k):
    """Every split of items into k unordered blocks of equal size."""
    if k == 1:
        yield [tuple(items)]
        return
    size = len(items) // k
    first, rest = items[0], items[1:]
    for others in itertools.combinations(rest, size - 1):
        block = (first, *others)
        remaining = [v for v in rest if v not in others]
        for tail in _equal_set_partitions(remaining, k - 1):
            yield [block, *tail]


def _multiway_cut(w, labels):
    return float(np.where(labels[:, None] != labels[None, :], w, 0.0).sum() / 2.0)


def _exact_multiway(w, k):
    n = w.shape[0]
    best, best_labels = None, None
    for blocks in _equal_set_partitions(list(range(n)), k):
        labels = np.empty(n, dtype=int)
        for g, block in enumerate(blocks):
            labels[list(block)] = g
        cut = _multiway_cut(w, labels)
        if best is None or cut < best - GAIN_TOL:
            best, best_labels = cut, labels
    return best_labels


def _refine_pairs(w, labels, k):
    """Kernighan-Lin between every pair of parts until no pair improves."""
    for _ in range(MAX_REFINE_SWEEPS):
        improved = False
        for g, h in itertools.combinations(range(k), 2):
            members = np.flatnonzero((labels == g) | (labels == h))
            sub = w[np.ix_(members, members)]
            side = labels[members] == h
            before = _cut_of(sub, side)
            side, trace = _kernighan_lin(sub, side)
            if trace[-1] < before - GAIN_TOL:
                labels = labels.copy()
                labels[members] = np.where(side, h, g)
                improved = True
        if not improved:
            break
    return labels


def min_balanced_pow2_cut(graph, vertices=None, dim=1, seed=0,
                          restarts=DEFAULT_RESTARTS, exact=False, spectral=False):
    """Split vertices into 2^dim equal parts with minimum total cross-part weight.

    Recursive bisection followed by pairwise Kernighan-Lin refinement;
    exact=True enumerates all splits for at most EXACT_MULTIWAY_MAX vertices.
    """
    if dim == 1:
        return min_balanced_cut(graph, vertices, seed, restarts, exact, spectral)
    if vertices is None:
        vertices = range(graph.n_vertices)
    k = 2 ** dim
    vertices = _check_vertices(graph, vertices, k)
    n = len(vertices)
    w = _local_weights(graph, vertices)
    if exact:
        if n <= EXACT_MULTIWAY_MAX:
            return _solution(graph, vertices, _exact_multiway(w, k), k, exact=True)
        logger.warning("Exact %d-way cut requested for %d vertices; using heuristic", k, n)
    rng = np.random.default_rng(seed)
    groups = [vertices]
    for _ in range(dim):
        split = []
        for group in groups:
            sub_seed = int(rng.integers(2 ** 62))
            sol = min_balanced_cut(graph, group, seed=sub_seed,
                                   restarts=restarts, spectral=spectral)
            split.extend(np.asarray(p) for p in sol.parts)
        groups = split
    position = {int(v): i for i, v in enumerate(vertices)}
    labels = np.empty(n, dtype=int)
    for g, group in enumerate(groups):
        labels[[position[int(v)] for v in group]] = g
    before = _multiway_cut(w, labels)
    labels = _refine_pairs(w, labels, k)
    after = _multiway_cut(w, labels)
    return _solution(graph, vertices, labels, k, restarts=restarts, trace=(before, after))


# ── Rearrangement ─────────────────────────────────────────────────────


def _child_offsets(dim):
    """Child multi-indices in {0,1}^dim, row-major."""
    return list(itertools.product((0, 1), repeat=dim))


def _rearrange(graph, side, dim, seed, restarts, exact, spectral, workers):
    depth = log2_exact(side)
    if depth < 1:
        raise ArgumentError("need at least two features per dimension")
    offsets = _child_offsets(dim)
    blocks = [((0,) * dim, tuple(range(graph.n_vertices)))]
    provenance = []
    for level in range(depth):

        def split(item, level=level):
            index, (coords, members) = item
            rng_seed = np.random.SeedSequence([seed, level, index])
            return min_balanced_pow2_cut(graph, members, dim, seed=rng_seed,
                                         restarts=restarts, exact=exact,
                                         spectral=spectral)

        solutions = parallel_map(split, list(enumerate(blocks)), workers)
        children = []
        for (coords, _), sol in zip(blocks, solutions):
            provenance.append({
                "level": level,
                "block": [c + 1 for c in coords],
                "parts": [list(p) for p in sol.parts],
                "cut": sol.cut,
                "objective": sol.objective,
            })
            for offset, part in zip(offsets, sol.parts):
                children.append((tuple(2 * c + o for c, o in zip(coords, offset)), part))
        logger.info("Level %d: split %d blocks, mean cut %.4f", level, len(blocks),
                    float(np.mean([s.cut for s in solutions])))
        blocks = children
    mapping = np.empty(graph.n_vertices, dtype=np.int64)
    shape = (side,) * dim
    for coords, members in blocks:
        mapping[members[0]] = np.ravel_multi_index(coords, shape)
    return FeaturePermutation(dim, side, tuple(mapping.tolist()), tuple(provenance))


def rearrange_1d(ds, seed=0, restarts=DEFAULT_RESTARTS, exact=False, spectral=False,
                 workers=1, graph=None):
    """Feature permutation placing correlated features in common blocks."""
    if not is_power_of_two(ds.N):
        raise ArgumentError(f"{ds.N} features is not a power of two; pad first")
    graph = graph or build_correlation_graph(ds, workers)
    return _rearrange(graph, ds.N, 1, seed, restarts, exact, spectral, workers)


def rearrange_pdim(ds, dim=None, seed=0, restarts=DEFAULT_RESTARTS, exact=False,
                   spectral=False, workers=1, graph=None):
    """Grid rearrangement: every block splits into 2^dim sub-cubes."""
    dim = dim or ds.dim
    side = ds.side if dim == ds.dim else integer_root(ds.N, dim)
    if not is_power_of_two(side):
        raise ArgumentError(f"grid side {side} is not a power of two")
    graph = graph or build_correlation_graph(ds, workers)
    return _rearrange(graph, side, dim, seed, restarts, exact, spectral, workers)


# ── Applying permutations ─────────────────────────────────────────────


def apply_permutation(ds, perm):
    """Dataset whose feature perm.mapping[i] is the input's feature i."""
    if perm.size != ds.N:
        raise ShapeError(f"permutation of {perm.size} features applied to {ds.N}")
    order = np.asarray(perm.inverse().mapping)
    return replace(ds, features=ds.features[:, order, :])


def random_swap_permutation(n_features, k, seed=0, side=None, dim=1):
    """Composition of k seeded uniformly random transpositions of positions."""
    if k < 0:
        raise ArgumentError(f"swap count must be nonnegative, got {k}")
    rng = np.random.default_rng(seed)
    positions = np.arange(n_features)
    for _ in range(k):
        i, j = rng.choice(n_features, size=2, replace=False)
        positions[[i, j]] = positions[[j, i]]
    # positions[t] holds the source feature now at t
    mapping = np.argsort(positions)
    return FeaturePermutation(dim, side or n_features, tuple(mapping.tolist()))


def random_swaps(ds, k, seed=0):
    perm = random_swap_permutation(ds.N, k, seed, side=ds.side, dim=ds.dim)
    return apply_permutation(ds, perm)
