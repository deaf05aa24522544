"""Canonical partitions of [N] and [N]^P, and compatible coordinate maps.

Level l of a side-N grid (N = 2^L) splits every dimension into 2^l dyadic
intervals of length N / 2^l; each cube formed by one interval per dimension
is a canonical block. Grid coordinates reach tensor axes through a Z-order
(Morton) map, under which every tree node owns a contiguous axis range.
"""

import itertools
import logging
from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError
from .tensor_core import AxisPartition
from .utils import log2_exact

logger = logging.getLogger(__name__)


# ── Compatible map ────────────────────────────────────────────────────


@dataclass(frozen=True)
class CompatibleMap:
    """Bijection between grid coordinates [N]^P and tensor axes [N^P] (0-based).

    forward[c_1, ..., c_P] is the axis of the cell; inverse[a] its coordinates.
    """

    side: int
    dim: int
    forward: np.ndarray
    inverse: np.ndarray

    @property
    def depth(self):
        return log2_exact(self.side)

    @property
    def n_axes(self):
        return self.side ** self.dim

    @property
    def arity(self):
        return 2 ** self.dim

    def axis_of(self, coords):
        return int(self.forward[tuple(coords)])

    def cell_of_axis(self):
        """Row-major flat grid index of the cell mapped to each axis."""
        return np.ravel_multi_index(tuple(self.inverse.T), (self.side,) * self.dim)


def _morton(coords, depth):
    """Interleave coordinate bits, most significant level first, dim 0 first."""
    index = 0
    for bit in range(depth - 1, -1, -1):
        for c in coords:
            index = (index << 1) | ((c >> bit) & 1)
    return index


def build_compatible_map(side, dim=1):
    """Z-order map from [side]^dim to [side^dim]; identity when dim == 1."""
    depth = log2_exact(side)
    if dim < 1:
        raise ArgumentError(f"dimension must be positive, got {dim}")
    shape = (side,) * dim
    forward = np.empty(shape, dtype=np.int64)
    inverse = np.empty((side ** dim, dim), dtype=np.int64)
    for coords in itertools.product(range(side), repeat=dim):
        axis = _morton(coords, depth)
        forward[coords] = axis
        inverse[axis] = coords
    forward.setflags(write=False)
    inverse.setflags(write=False)
    return CompatibleMap(side=side, dim=dim, forward=forward, inverse=inverse)


def node_axis_range(cmap, level, index):
    """Axis range owned by the index-th tree node (in axis order) at a level."""
    size = (cmap.side >> level) ** cmap.dim
    return range(index * size, (index + 1) * size)


def check_compatibility(cmap):
    """True when every tree node's axes map back to a cube of the right side."""
    inverse = np.asarray(cmap.inverse)
    if sorted(cmap.forward.ravel().tolist()) != list(range(cmap.n_axes)):
        return False
    for level in range(cmap.depth + 1):
        block_side = cmap.side >> level
        for index in range(2 ** (level * cmap.dim)):
            coords = inverse[list(node_axis_range(cmap, level, index))]
            lo = coords.min(axis=0)
            hi = coords.max(axis=0)
            extent = hi - lo + 1
            if np.any(extent != block_side):
                return False
            if np.any(lo % block_side != 0):
                return False
            if int(np.prod(extent)) != len(coords):
                return False
    return True


# ── Canonical partitions ──────────────────────────────────────────────


@dataclass(frozen=True)
class CanonicalPartition:
    """Canonical block at a level.

    block holds the 1-based block multi-index; axes the 0-based tensor axes
    (through the compatible map); cells the 0-based row-major grid indices.
    For dim 1 axes and cells coincide.
    """

    level: int
    block: tuple
    axes: tuple
    cells: tuple
    n_axes: int

    @property
    def degenerate(self):
        """Level 0 takes every axis, which leaves an empty complement."""
        return len(self.axes) == self.n_axes

    def axis_partition(self):
        return AxisPartition(self.n_axes, self.axes)

    def to_json(self):
        out = {"level": self.level, "block": list(self.block), "axes": list(self.axes)}
        if self.cells != self.axes:
            out["cells"] = list(self.cells)
        return out


def canonical_partitions(side, dim=1, levels=None, cmap=None):
    """All canonical partitions of [side]^dim, level by level.

    Within a level, blocks are listed in row-major order of their block
    multi-index. Level 0 is included (flagged degenerate) unless levels
    excludes it.
    """
    depth = log2_exact(side)
    if depth < 1:
        raise ArgumentError(f"side must be at least 2, got {side}")
    if dim < 1:
        raise ArgumentError(f"dimension must be positive, got {dim}")
    if cmap is None:
        cmap = build_compatible_map(side, dim)
    elif (cmap.side, cmap.dim) != (side, dim):
        raise ArgumentError("compatible map does not match the grid")
    if levels is None:
        levels = range(depth + 1)
    grid_shape = (side,) * dim
    out = []
    for level in levels:
        if not 0 <= level <= depth:
            raise ArgumentError(f"level {level} outside [0, {depth}]")
        width = side >> level
        for block in itertools.product(range(2 ** level), repeat=dim):
            ranges = [range(b * width, (b + 1) * width) for b in block]
            coords = list(itertools.product(*ranges))
            cells = sorted(int(np.ravel_multi_index(c, grid_shape)) for c in coords)
            axes = sorted(cmap.axis_of(c) for c in coords)
            out.append(CanonicalPartition(
                level=level,
                block=tuple(b + 1 for b in block),
                axes=tuple(axes),
                cells=tuple(cells),
                n_axes=cmap.n_axes,
            ))
    return out


def nondegenerate_partitions(side, dim=1, levels=None, cmap=None):
    """Canonical partitions usable for entanglement (level 0 dropped)."""
    return [p for p in canonical_partitions(side, dim, levels, cmap) if not p.degenerate]
