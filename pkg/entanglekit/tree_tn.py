"""Locally connected tensor network on a perfect 2^P-ary tree.

Node layout: levels[0] holds the root core, levels[d] the cores at depth d,
and levels[L] the leaf matrices. An internal core has shape
(R, ..., R, R_parent) with one R per child and R_parent = 1 at the root; a
leaf matrix has shape (D_n, R). Open axes follow tree order, so the axes
below any node are contiguous.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .config import DEFAULT_MEM_BUDGET, SV_TOL
from .errors import ArgumentError, CapacityError, DegenerateInputError, ShapeError
from .partitions import build_compatible_map, nondegenerate_partitions
from .tensor_core import (
    DenseTensor,
    entanglement,
    matricize,
    norm,
    partition_log_dim,
    singular_values,
)
from .utils import integer_root, log2_exact

logger = logging.getLogger(__name__)

BOUND_SLACK = 1e-10


# ── Network type ──────────────────────────────────────────────────────


@dataclass
class TreeTensorNetwork:
    dims: tuple
    side: int
    dim: int
    width: int
    levels: list = field(repr=False)

    def __post_init__(self):
        self.dims = tuple(int(d) for d in self.dims)
        depth = log2_exact(self.side)
        if depth < 1:
            raise ShapeError(f"tree side must be at least 2, got {self.side}")
        if len(self.dims) != self.side ** self.dim:
            raise ShapeError(
                f"{len(self.dims)} leaf dims for a {self.side}^{self.dim} grid")
        if len(self.levels) != depth + 1:
            raise ShapeError(f"expected {depth + 1} levels, got {len(self.levels)}")
        for d, cores in enumerate(self.levels):
            if len(cores) != self.arity ** d:
                raise ShapeError(
                    f"level {d} holds {len(cores)} tensors, expected {self.arity ** d}")
            for j, core in enumerate(cores):
                expected = self.core_shape(d, j)
                if tuple(np.shape(core)) != expected:
                    raise ShapeError(
                        f"tensor ({d}, {j}) has shape {np.shape(core)}, expected {expected}")
        self.levels = [[np.asarray(c, dtype=np.float64) for c in cores] for cores in self.levels]

    @property
    def depth(self):
        return len(self.levels) - 1

    @property
    def arity(self):
        return 2 ** self.dim

    @property
    def n_leaves(self):
        return len(self.dims)

    @property
    def root(self):
        return self.levels[0][0]

    def core_shape(self, depth, index):
        if depth == self.depth:
            return (self.dims[index], self.width)
        parent = 1 if depth == 0 else self.width
        return (self.width,) * self.arity + (parent,)

    def node_tensors(self):
        """All node tensors in breadth-first order, root first."""
        return [core for cores in self.levels for core in cores]

    def n_parameters(self):
        return sum(core.size for core in self.node_tensors())


# ── Construction ──────────────────────────────────────────────────────


def _grid_side(n_leaves, dim):
    side = integer_root(n_leaves, dim)
    if log2_exact(side) < 1:
        raise ArgumentError(f"need at least two leaves per dimension, got side {side}")
    return side


def random_ttn(dims, width, dim=1, seed=0):
    """Network with i.i.d. standard normal entries, deterministic per seed."""
    dims = tuple(int(d) for d in dims)
    if width < 1:
        raise ArgumentError(f"width must be positive, got {width}")
    side = _grid_side(len(dims), dim)
    depth = log2_exact(side)
    arity = 2 ** dim
    rng = np.random.default_rng(seed)
    levels = []
    for d in range(depth):
        parent = 1 if d == 0 else width
        shape = (width,) * arity + (parent,)
        levels.append([rng.standard_normal(shape) for _ in range(arity ** d)])
    levels.append([rng.standard_normal((dims[n], width)) for n in range(len(dims))])
    return TreeTensorNetwork(dims=dims, side=side, dim=dim, width=width, levels=levels)


def scale_in_place(tn, c):
    """Multiply the root core by c; the generated tensor scales by c."""
    tn.levels[0][0] = tn.levels[0][0] * float(c)
    return tn


# ── Contraction ───────────────────────────────────────────────────────


def _merge_frames(frames, core):
    """Contract child frames (rows, r_k) into a core; returns (prod rows, r_parent)."""
    out = core
    for k, frame in enumerate(frames):
        out = np.moveaxis(np.tensordot(frame, out, axes=([1], [k])), 0, k)
    rows = math.prod(f.shape[0] for f in frames)
    return out.reshape(rows, core.shape[-1])


def contract_full(tn, mem_budget=DEFAULT_MEM_BUDGET):
    """Dense tensor generated by the network, contracted leaves to root."""
    total = math.prod(tn.dims)
    if total > mem_budget:
        raise CapacityError(
            f"dense expansion needs {total} entries, budget is {mem_budget}")
    frames = list(tn.levels[-1])
    a = tn.arity
    for d in range(tn.depth - 1, -1, -1):
        frames = [
            _merge_frames(frames[j * a:(j + 1) * a], core)
            for j, core in enumerate(tn.levels[d])
        ]
    return DenseTensor(frames[0].reshape(tn.dims))


def forward(tn, instance):
    """<outer(x^(1), ..., x^(N)), W_TN> computed leaves to root."""
    instance = [np.asarray(x, dtype=np.float64).ravel() for x in instance]
    if len(instance) != tn.n_leaves:
        raise ShapeError(f"expected {tn.n_leaves} vectors, got {len(instance)}")
    for n, x in enumerate(instance):
        if x.size != tn.dims[n]:
            raise ShapeError(f"vector {n} has length {x.size}, expected {tn.dims[n]}")
    vectors = [x @ leaf for x, leaf in zip(instance, tn.levels[-1])]
    a = tn.arity
    for d in range(tn.depth - 1, -1, -1):
        merged = []
        for j, core in enumerate(tn.levels[d]):
            out = core
            for v in vectors[j * a:(j + 1) * a]:
                out = np.tensordot(v, out, axes=([0], [0]))
            merged.append(out)
        vectors = merged
    return float(vectors[0][0])


# ── Hierarchical fitting ──────────────────────────────────────────────


def _resolve_map(tensor, cmap):
    if cmap is None:
        cmap = build_compatible_map(tensor.ndim, 1)
    if cmap.n_axes != tensor.ndim:
        raise ShapeError(
            f"compatible map covers {cmap.n_axes} axes, tensor has {tensor.ndim}")
    if cmap.depth < 1:
        raise ArgumentError("a tensor network needs at least two leaves per dimension")
    return cmap


def _truncate_mode(core, mode, width):
    """Project one mode of core onto its top singular subspace.

    Returns the basis (mode size, r), the projected core and the tail norm.
    """
    size = core.shape[mode]
    unfolding = np.moveaxis(core, mode, 0).reshape(size, -1)
    u, s, _ = np.linalg.svd(unfolding, full_matrices=False)
    r = min(width, u.shape[1])
    basis = u[:, :r]
    tail = float(np.sqrt(np.sum(s[r:] ** 2)))
    projected = np.moveaxis(np.tensordot(basis.T, core, axes=([1], [mode])), 0, mode)
    return basis, projected, tail


def _pad(array, shape):
    out = np.zeros(shape)
    out[tuple(slice(0, n) for n in array.shape)] = array
    return out


def fit_hierarchical(tensor, width, cmap=None, mem_budget=DEFAULT_MEM_BUDGET):
    """Fit a width-R network to a tensor by hierarchical truncated SVDs.

    Bases are truncated leaves to root: each node keeps the top-R left
    singular vectors of its unfolding of the already-projected core, so the
    bases are nested and the projection errors add in squares.

    Returns:
        (network, achieved_error) with achieved_error = ||W_TN - A||.
    """
    if width < 1:
        raise ArgumentError(f"width must be positive, got {width}")
    cmap = _resolve_map(tensor, cmap)
    if norm(tensor) == 0.0:
        raise DegenerateInputError("cannot fit the zero tensor")
    arity = cmap.arity
    depth = cmap.depth
    dims = tensor.dims

    core = np.array(tensor.array)
    levels = [None] * (depth + 1)
    leaves = []
    tails = []
    for n in range(len(dims)):
        basis, core, tail = _truncate_mode(core, n, width)
        leaves.append(basis)
        tails.append(tail)
    levels[depth] = leaves
    ranks = [b.shape[1] for b in leaves]

    for d in range(depth - 1, 0, -1):
        groups = [ranks[j * arity:(j + 1) * arity] for j in range(arity ** d)]
        core = core.reshape(tuple(math.prod(g) for g in groups))
        cores = []
        new_ranks = []
        for j, group in enumerate(groups):
            basis, core, tail = _truncate_mode(core, j, width)
            cores.append(basis.reshape(tuple(group) + (basis.shape[1],)))
            new_ranks.append(basis.shape[1])
            tails.append(tail)
        levels[d] = cores
        ranks = new_ranks
    levels[0] = [core.reshape(tuple(ranks) + (1,))]

    padded = []
    for d, cores in enumerate(levels):
        if d == depth:
            padded.append([_pad(c, (dims[n], width)) for n, c in enumerate(cores)])
        else:
            parent = 1 if d == 0 else width
            padded.append([_pad(c, (width,) * arity + (parent,)) for c in cores])
    tn = TreeTensorNetwork(dims=dims, side=cmap.side, dim=cmap.dim, width=width, levels=padded)

    achieved = norm(contract_full(tn, mem_budget) - tensor)
    logger.debug("Node truncation tails: %s", ", ".join(f"{t:.3g}" for t in tails))
    logger.info("Width-%d fit: error %.6g (relative %.3g)",
                width, achieved, achieved / norm(tensor))
    return tn, achieved


def canonical_tails(tensor, width, cmap=None):
    """Tail norm sqrt(sum_{d>R} sigma_d^2) of every nondegenerate canonical matricization."""
    cmap = _resolve_map(tensor, cmap)
    out = []
    for part in nondegenerate_partitions(cmap.side, cmap.dim, cmap=cmap):
        s = singular_values(matricize(tensor, part.axis_partition()))
        out.append((part, float(np.sqrt(np.sum(s[width:] ** 2)))))
    return out


def grasedyck_constant(n_leaves):
    return math.sqrt(2 * n_leaves - 3)


def tail_bound(tensor, width, cmap=None):
    """sqrt(2N - 3) times the largest canonical tail: the fit error guarantee."""
    tails = canonical_tails(tensor, width, cmap)
    return grasedyck_constant(tensor.ndim) * max(t for _, t in tails)


# ── Fit bounds ────────────────────────────────────────────────────────


@dataclass
class BoundReport:
    partition: object
    lhs: float
    rhs: float
    log_dk: float

    @property
    def holds(self):
        return self.lhs <= self.rhs + BOUND_SLACK

    def to_json(self):
        part = self.partition
        label = part.to_json() if hasattr(part, "to_json") else {"axes": list(part.subset)}
        return {**label, "lhs": self.lhs, "rhs": self.rhs, "holds": self.holds}


def _as_axis_partition(part):
    return part.axis_partition() if hasattr(part, "axis_partition") else part


def necessary_rhs(width, eps_ratio, log_dk):
    """ln R + 2 (eps/||A||) ln D_K + 2 sqrt(2 eps/||A||)."""
    return math.log(width) + 2.0 * eps_ratio * log_dk + 2.0 * math.sqrt(2.0 * eps_ratio)


def check_necessary_bound(tensor, width, eps, part, tol=SV_TOL):
    """Compare QE(A; K) with the entanglement a width-R fit within eps allows."""
    if width < 1:
        raise ArgumentError(f"width must be positive, got {width}")
    a_norm = norm(tensor)
    if eps < 0 or eps > a_norm / 4:
        raise ArgumentError(f"eps must lie in [0, ||A||/4] = [0, {a_norm / 4:.6g}], got {eps}")
    ratio = eps / a_norm if a_norm > 0 else 0.0
    axis_part = _as_axis_partition(part)
    log_dk = partition_log_dim(tensor.dims, axis_part)
    lhs = entanglement(tensor, axis_part, tol)
    return BoundReport(partition=part, lhs=lhs,
                       rhs=necessary_rhs(width, ratio, log_dk), log_dk=log_dk)


def check_necessary_bounds(tensor, width, eps, cmap=None, tol=SV_TOL):
    cmap = _resolve_map(tensor, cmap)
    return [check_necessary_bound(tensor, width, eps, p, tol)
            for p in nondegenerate_partitions(cmap.side, cmap.dim, cmap=cmap)]


@dataclass
class SufficiencyReport:
    threshold: float
    margins: list  # (partition, qe, threshold - qe)
    tail_bound: float
    eps: float
    achieved_error: float = None

    @property
    def holds(self):
        return all(m >= -BOUND_SLACK for _, _, m in self.margins)

    @property
    def tail_holds(self):
        return self.tail_bound <= self.eps

    @property
    def fit_within_eps(self):
        if self.achieved_error is None:
            return None
        return self.achieved_error <= self.eps * (1 + 1e-9)

    def to_json(self):
        return {
            "threshold": self.threshold,
            "holds": self.holds,
            "tail_bound": self.tail_bound,
            "tail_holds": self.tail_holds,
            "eps": self.eps,
            "achieved_error": self.achieved_error,
            "fit_within_eps": self.fit_within_eps,
            "partitions": [
                {**p.to_json(), "entanglement": qe, "margin": m}
                for p, qe, m in self.margins
            ],
        }


def check_sufficient_condition(tensor, width, eps, cmap=None,
                               mem_budget=DEFAULT_MEM_BUDGET, tol=SV_TOL):
    """Entropy-based sufficient condition for a width-R fit within eps.

    When the condition (or its truncated-tail variant) holds, the
    hierarchical fit is run and its error recorded on the report.
    """
    if eps <= 0:
        raise ArgumentError(f"eps must be positive, got {eps}")
    cmap = _resolve_map(tensor, cmap)
    a_norm = norm(tensor)
    partitions = nondegenerate_partitions(cmap.side, cmap.dim, cmap=cmap)
    if a_norm == 0.0:
        margins = [(p, 0.0, math.inf) for p in partitions]
        return SufficiencyReport(threshold=math.inf, margins=margins,
                                 tail_bound=0.0, eps=eps, achieved_error=0.0)
    threshold = (eps ** 2 / ((2 * tensor.ndim - 3) * a_norm ** 2)) * math.log(width)
    margins = []
    for p in partitions:
        qe = entanglement(tensor, p.axis_partition(), tol)
        margins.append((p, qe, threshold - qe))
    report = SufficiencyReport(threshold=threshold, margins=margins,
                               tail_bound=tail_bound(tensor, width, cmap), eps=eps)
    if report.holds or report.tail_holds:
        _, report.achieved_error = fit_hierarchical(tensor, width, cmap, mem_budget)
    else:
        logger.info("Sufficient condition fails on %d of %d partitions",
                    sum(1 for _, _, m in margins if m < -BOUND_SLACK), len(margins))
    return report
