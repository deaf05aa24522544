"""Tests for balanced cuts and recursive feature rearrangement."""

import itertools

import numpy as np
import pytest

from entanglekit.errors import ArgumentError, ShapeError
from entanglekit.rearrange import (
    FeaturePermutation,
    apply_permutation,
    min_balanced_cut,
    min_balanced_pow2_cut,
    random_swap_permutation,
    random_swaps,
    rearrange_1d,
    rearrange_pdim,
)
from entanglekit.surrogate import (
    CorrelationGraph,
    average_surrogate_entanglement,
    build_correlation_graph,
)
from entanglekit.synth import grid_quadrants, group_recovery, planted_groups, shuffle_features

from .conftest import random_dataset, random_graph


def brute_force_bisection(graph):
    n = graph.n_vertices
    best = None
    for half in itertools.combinations(range(n), n // 2):
        rest = [v for v in range(n) if v not in half]
        cut = float(graph.weights[np.ix_(half, rest)].sum())
        best = cut if best is None else min(best, cut)
    return best


def planted_pairs_graph(pairs, n, strong=0.9, weak=0.05):
    w = np.full((n, n), weak)
    for a, b in pairs:
        w[a, b] = w[b, a] = strong
    return CorrelationGraph(weights=w)


# ---------------------------------------------------------------------------
# Minimum balanced cut
# ---------------------------------------------------------------------------

class TestMinBalancedCut:
    def test_four_vertex_example(self, four_vertex_graph):
        sol = min_balanced_cut(four_vertex_graph, seed=0)
        assert sol.parts == ((0, 1), (2, 3))
        assert sol.cut == pytest.approx(0.4)

    def test_exact_matches(self, four_vertex_graph):
        sol = min_balanced_cut(four_vertex_graph, exact=True)
        assert sol.exact
        assert sol.parts == ((0, 1), (2, 3))

    def test_uniform_weights(self):
        graph = CorrelationGraph(weights=np.ones((6, 6)))
        sol = min_balanced_cut(graph)
        assert sol.cut == pytest.approx(9.0)
        assert sorted(sol.parts[0] + sol.parts[1]) == list(range(6))

    def test_two_vertices(self, four_vertex_graph):
        sol = min_balanced_cut(four_vertex_graph, vertices=[3, 1])
        assert sol.parts == ((1,), (3,))
        assert sol.cut == pytest.approx(0.1)

    def test_odd_vertex_count(self, rng):
        with pytest.raises(ArgumentError):
            min_balanced_cut(random_graph(rng, 5))

    def test_vertex_out_of_range(self, four_vertex_graph):
        with pytest.raises(ArgumentError):
            min_balanced_cut(four_vertex_graph, vertices=[0, 7])

    def test_negative_weights_are_fine(self):
        w = -np.ones((4, 4))
        w[0, 1] = w[1, 0] = 0.5
        sol = min_balanced_cut(CorrelationGraph(weights=w), exact=True)
        # keeping the positive pair together leaves all four -1 edges cut
        assert sol.cut == pytest.approx(-4.0)
        assert sol.parts == ((0, 1), (2, 3))

    def test_kernighan_lin_near_exact(self):
        rng = np.random.default_rng(99)
        agree = 0
        for i in range(100):
            n = int(rng.choice([4, 6, 8, 10, 12]))
            graph = random_graph(rng, n)
            heuristic = min_balanced_cut(graph, seed=i).cut
            exact = min_balanced_cut(graph, exact=True).cut
            assert heuristic >= exact - 1e-9
            if heuristic <= exact + 1e-9:
                agree += 1
            else:
                assert heuristic <= exact + 0.01 * abs(exact)
        assert agree >= 99

    def test_exact_matches_brute_force(self, rng):
        for _ in range(10):
            graph = random_graph(rng, 8)
            assert min_balanced_cut(graph, exact=True).cut == pytest.approx(
                brute_force_bisection(graph))

    def test_trace_is_monotone(self, rng):
        graph = random_graph(rng, 12)
        sol = min_balanced_cut(graph, seed=3, restarts=1)
        assert all(b < a for a, b in zip(sol.trace, sol.trace[1:]))
        assert sol.trace[-1] == pytest.approx(sol.cut)

    def test_spectral_start(self, rng):
        graph = random_graph(rng, 10)
        sol = min_balanced_cut(graph, spectral=True, restarts=1)
        assert sorted(sol.parts[0] + sol.parts[1]) == list(range(10))

    def test_deterministic(self, rng):
        graph = random_graph(rng, 16)
        assert min_balanced_cut(graph, seed=5) == min_balanced_cut(graph, seed=5)

    def test_objective_is_mean_surrogate(self, four_vertex_graph):
        sol = min_balanced_cut(four_vertex_graph)
        assert sol.objective == pytest.approx(0.4)
        assert sol.to_json()["parts"] == [[0, 1], [2, 3]]


class TestMinBalancedPow2Cut:
    def test_one_dimension_is_bisection(self, rng):
        graph = random_graph(rng, 8)
        assert min_balanced_pow2_cut(graph, dim=1, seed=2) == min_balanced_cut(graph, seed=2)

    def test_planted_pairs_four_way(self):
        graph = planted_pairs_graph([(0, 5), (1, 6), (2, 7), (3, 4)], 8)
        exact = min_balanced_pow2_cut(graph, dim=2, exact=True)
        heuristic = min_balanced_pow2_cut(graph, dim=2, seed=0)
        expected = ((0, 5), (1, 6), (2, 7), (3, 4))
        assert exact.parts == expected
        assert heuristic.parts == expected
        assert heuristic.cut == pytest.approx(exact.cut)

    def test_heuristic_never_beats_exact(self, rng):
        for i in range(10):
            graph = random_graph(rng, 8)
            exact = min_balanced_pow2_cut(graph, dim=2, exact=True)
            heuristic = min_balanced_pow2_cut(graph, dim=2, seed=i)
            assert heuristic.cut >= exact.cut - 1e-9
            assert len(heuristic.parts) == 4
            assert all(len(p) == 2 for p in heuristic.parts)

    def test_refinement_does_not_worsen(self, rng):
        sol = min_balanced_pow2_cut(random_graph(rng, 16), dim=2, seed=1)
        before, after = sol.trace
        assert after <= before + 1e-12
        assert after == pytest.approx(sol.cut)

    def test_indivisible(self, rng):
        with pytest.raises(ArgumentError):
            min_balanced_pow2_cut(random_graph(rng, 6), dim=2)


# ---------------------------------------------------------------------------
# Permutations
# ---------------------------------------------------------------------------

class TestFeaturePermutation:
    def test_inverse(self):
        perm = FeaturePermutation(1, 4, (2, 0, 3, 1))
        inv = perm.inverse()
        assert inv.mapping == (1, 3, 0, 2)
        assert all(perm.mapping[inv.mapping[t]] == t for t in range(4))
        assert inv.inverse() == perm

    def test_not_bijective(self):
        with pytest.raises(ArgumentError):
            FeaturePermutation(1, 4, (0, 0, 1, 2))

    def test_wrong_length(self):
        with pytest.raises(ShapeError):
            FeaturePermutation(2, 4, tuple(range(8)))

    def test_restricted(self):
        perm = FeaturePermutation(1, 8, (7, 0, 5, 2, 1, 3, 4, 6))
        assert perm.restricted(3).mapping == (2, 0, 1)

    def test_json(self):
        perm = FeaturePermutation(2, 2, (3, 2, 1, 0), provenance=({"level": 0},))
        out = perm.to_json()
        assert out == {"P": 2, "N": 2, "pi": [3, 2, 1, 0], "layout": "row-major",
                       "cuts": [{"level": 0}]}


class TestApplyPermutation:
    def test_identity(self, rng):
        ds = random_dataset(rng, 3, 4)
        out = apply_permutation(ds, FeaturePermutation.identity(4))
        assert np.array_equal(out.features, ds.features)

    def test_feature_lands_on_target(self, rng):
        ds = random_dataset(rng, 3, 4)
        perm = FeaturePermutation(1, 4, (2, 0, 3, 1))
        out = apply_permutation(ds, perm)
        for i, t in enumerate(perm.mapping):
            assert np.array_equal(out.features[:, t], ds.features[:, i])

    def test_inverse_round_trip(self, rng):
        ds = random_dataset(rng, 3, 8)
        perm = random_swap_permutation(8, 5, seed=1)
        back = apply_permutation(apply_permutation(ds, perm), perm.inverse())
        assert np.array_equal(back.features, ds.features)

    def test_labels_kept(self, rng):
        ds = random_dataset(rng, 5, 4)
        out = apply_permutation(ds, FeaturePermutation(1, 4, (1, 0, 3, 2)))
        assert np.array_equal(out.labels, ds.labels)

    def test_size_mismatch(self, rng):
        with pytest.raises(ShapeError):
            apply_permutation(random_dataset(rng, 2, 8), FeaturePermutation.identity(4))


class TestRandomSwaps:
    def test_zero_swaps_is_identity(self):
        assert random_swap_permutation(8, 0) == FeaturePermutation.identity(8)

    def test_single_swap_moves_two_features(self):
        perm = random_swap_permutation(16, 1, seed=4)
        assert sum(1 for i, t in enumerate(perm.mapping) if i != t) == 2

    def test_seeded(self, rng):
        ds = random_dataset(rng, 2, 16)
        assert np.array_equal(random_swaps(ds, 10, seed=3).features,
                              random_swaps(ds, 10, seed=3).features)

    def test_negative(self):
        with pytest.raises(ArgumentError):
            random_swap_permutation(8, -1)


# ---------------------------------------------------------------------------
# Rearrangement
# ---------------------------------------------------------------------------

class TestRearrange1D:
    def test_is_bijection_with_provenance(self, pairs_dataset):
        perm = rearrange_1d(pairs_dataset, seed=0)
        assert sorted(perm.mapping) == list(range(16))
        assert len(perm.provenance) == 1 + 2 + 4 + 8
        assert perm.provenance[0]["level"] == 0

    def test_recovers_shuffled_pairs(self, pairs_dataset):
        groups = planted_groups(pairs_dataset)
        for seed in range(10):
            shuffled, shuffle = shuffle_features(pairs_dataset, seed=seed)
            graph = build_correlation_graph(shuffled)
            perm = rearrange_1d(shuffled, seed=seed, graph=graph)
            assert group_recovery(groups, perm, shuffle) == 1.0
            assert average_surrogate_entanglement(graph, 16, perm=perm) <= \
                average_surrogate_entanglement(graph, 16) + 1e-12

    def test_lowers_surrogate(self, pairs_dataset):
        shuffled, _ = shuffle_features(pairs_dataset, seed=1)
        perm = rearrange_1d(shuffled, seed=0)
        graph = build_correlation_graph(shuffled)
        before = average_surrogate_entanglement(graph, 16)
        after = average_surrogate_entanglement(graph, 16, perm=perm)
        assert after <= before + 1e-12

    def test_deterministic(self, pairs_dataset):
        a = rearrange_1d(pairs_dataset, seed=7)
        b = rearrange_1d(pairs_dataset, seed=7, workers=4)
        assert a == b
        assert a.provenance == b.provenance

    def test_exact_small_blocks(self, rng):
        perm = rearrange_1d(random_dataset(rng, 30, 8), exact=True)
        assert sorted(perm.mapping) == list(range(8))

    def test_not_power_of_two(self, rng):
        with pytest.raises(ArgumentError):
            rearrange_1d(random_dataset(rng, 10, 6))


class TestRearrangePDim:
    def test_recovers_quadrants(self):
        ds = grid_quadrants(400, side=4, rho=0.9, seed=3)
        groups = planted_groups(ds)
        for seed in range(10):
            shuffled, shuffle = shuffle_features(ds, seed=seed)
            perm = rearrange_pdim(shuffled, seed=seed)
            assert perm.dim == 2 and perm.side == 4
            assert group_recovery(groups, perm, shuffle) == 1.0
            assert "layout" in perm.to_json()

    def test_provenance_blocks_are_one_based(self):
        ds = grid_quadrants(50, side=4, seed=0)
        perm = rearrange_pdim(ds)
        assert perm.provenance[0]["block"] == [1, 1]
        assert len(perm.provenance) == 1 + 4
        assert all(len(entry["parts"]) == 4 for entry in perm.provenance)

    def test_one_dimension_matches_rearrange_1d(self, pairs_dataset):
        assert rearrange_pdim(pairs_dataset, dim=1, seed=4) == rearrange_1d(pairs_dataset, seed=4)
