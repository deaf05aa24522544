"""Tests for canonical partitions and compatible maps."""

import numpy as np
import pytest

from entanglekit.errors import ArgumentError
from entanglekit.partitions import (
    CompatibleMap,
    build_compatible_map,
    canonical_partitions,
    check_compatibility,
    node_axis_range,
    nondegenerate_partitions,
)


class TestCanonicalPartitions1D:
    def test_counts_per_level(self):
        parts = canonical_partitions(8)
        counts = [sum(1 for p in parts if p.level == l) for l in range(4)]
        assert counts == [1, 2, 4, 8]

    def test_dyadic_blocks(self):
        parts = canonical_partitions(8, levels=[2])
        assert [p.axes for p in parts] == [(0, 1), (2, 3), (4, 5), (6, 7)]
        assert [p.block for p in parts] == [(1,), (2,), (3,), (4,)]

    def test_level_zero_is_degenerate(self):
        root = canonical_partitions(4, levels=[0])[0]
        assert root.degenerate
        assert root.axes == (0, 1, 2, 3)
        assert all(not p.degenerate for p in nondegenerate_partitions(4))

    def test_axes_and_cells_coincide(self):
        for p in canonical_partitions(8):
            assert p.axes == p.cells
            assert "cells" not in p.to_json()

    @pytest.mark.parametrize("side", [1, 3, 6])
    def test_bad_side(self, side):
        with pytest.raises(ArgumentError):
            canonical_partitions(side)

    def test_level_out_of_range(self):
        with pytest.raises(ArgumentError):
            canonical_partitions(4, levels=[3])


class TestCanonicalPartitions2D:
    def test_quadrants_at_level_one(self):
        parts = canonical_partitions(4, dim=2, levels=[1])
        assert [p.block for p in parts] == [(1, 1), (1, 2), (2, 1), (2, 2)]
        assert parts[0].cells == (0, 1, 4, 5)
        assert parts[3].cells == (10, 11, 14, 15)

    def test_blocks_are_contiguous_axis_ranges(self):
        for p in canonical_partitions(4, dim=2):
            assert p.axes == tuple(range(p.axes[0], p.axes[0] + len(p.axes)))

    def test_singletons_at_deepest_level(self):
        parts = canonical_partitions(4, dim=2, levels=[2])
        assert len(parts) == 16
        assert sorted(c for p in parts for c in p.cells) == list(range(16))

    def test_json_lists_cells_when_they_differ(self):
        part = canonical_partitions(4, dim=2, levels=[1])[1]
        out = part.to_json()
        assert out["cells"] == [2, 3, 6, 7]
        assert out["axes"] == [4, 5, 6, 7]


class TestCompatibleMap:
    def test_identity_in_one_dimension(self):
        cmap = build_compatible_map(8)
        assert list(cmap.forward) == list(range(8))

    def test_morton_order(self):
        cmap = build_compatible_map(4, 2)
        assert cmap.axis_of((0, 1)) == 1
        assert cmap.axis_of((1, 0)) == 2
        assert tuple(cmap.inverse[3]) == (1, 1)
        assert cmap.axis_of((2, 0)) == 8

    def test_bijective(self):
        cmap = build_compatible_map(8, 2)
        assert sorted(cmap.forward.ravel().tolist()) == list(range(64))
        for axis in range(64):
            assert cmap.axis_of(cmap.inverse[axis]) == axis
        assert np.array_equal(cmap.forward.ravel()[cmap.cell_of_axis()], np.arange(64))

    @pytest.mark.parametrize("side,dim", [(2, 1), (8, 1), (4, 2), (8, 2), (4, 3)])
    def test_built_maps_are_compatible(self, side, dim):
        assert check_compatibility(build_compatible_map(side, dim))

    def test_row_major_map_is_not_compatible(self):
        side = 4
        forward = np.arange(16).reshape(4, 4)
        inverse = np.array([divmod(a, side) for a in range(16)])
        cmap = CompatibleMap(side=side, dim=2, forward=forward, inverse=inverse)
        assert not check_compatibility(cmap)

    def test_node_axis_range(self):
        cmap = build_compatible_map(4, 2)
        assert list(node_axis_range(cmap, 1, 2)) == [8, 9, 10, 11]
