"""Tests for multivariate Pearson correlation and surrogate entanglement."""

import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from entanglekit.data_tensor import Dataset
from entanglekit.errors import DegenerateFeatureError, PartitionError, ShapeError
from entanglekit.rearrange import FeaturePermutation
from entanglekit.surrogate import (
    CorrelationGraph,
    average_surrogate_entanglement,
    build_correlation_graph,
    canonical_surrogates,
    constant_features,
    multivariate_pearson,
    psd_sqrt,
    surrogate_entanglement,
)

from .conftest import random_dataset, random_graph


# ---------------------------------------------------------------------------
# Pearson coefficients
# ---------------------------------------------------------------------------

class TestMultivariatePearson:
    def test_self_correlation_is_one(self, rng):
        ds = random_dataset(rng, 40, 4, D=3)
        for n in range(4):
            assert multivariate_pearson(ds, n, n) == pytest.approx(1.0, abs=1e-9)

    def test_scalar_features_match_corrcoef(self, rng):
        x = rng.standard_normal((50, 5))
        x[:, 1] += 0.8 * x[:, 0]
        ds = Dataset(features=x)
        expected = np.corrcoef(x.T)
        for n, k in itertools.combinations(range(5), 2):
            assert multivariate_pearson(ds, n, k) == pytest.approx(expected[n, k], abs=1e-9)

    def test_negated_copy(self, rng):
        x = rng.standard_normal((30, 1, 2))
        ds = Dataset(features=np.concatenate([x, -x], axis=1))
        assert multivariate_pearson(ds, 0, 1) == pytest.approx(-1.0, abs=1e-9)

    def test_symmetric(self, rng):
        ds = random_dataset(rng, 25, 3, D=2)
        assert multivariate_pearson(ds, 0, 2) == pytest.approx(multivariate_pearson(ds, 2, 0))

    def test_constant_feature(self, rng):
        x = rng.standard_normal((10, 2, 2))
        x[:, 1, :] = [0.6, 0.8]
        with pytest.raises(DegenerateFeatureError):
            multivariate_pearson(Dataset(features=x), 0, 1)

    def test_out_of_range(self, rng):
        with pytest.raises(ShapeError):
            multivariate_pearson(random_dataset(rng, 5, 2), 0, 2)

    def test_psd_sqrt(self, rng):
        a = rng.standard_normal((3, 3))
        s = psd_sqrt(a @ a.T)
        assert np.allclose(s @ s, a @ a.T)


# ---------------------------------------------------------------------------
# Correlation graph
# ---------------------------------------------------------------------------

class TestCorrelationGraph:
    def test_matches_pairwise_coefficients(self, rng):
        ds = random_dataset(rng, 30, 6, D=2)
        graph = build_correlation_graph(ds)
        for n, k in itertools.combinations(range(6), 2):
            assert graph.weights[n, k] == pytest.approx(multivariate_pearson(ds, n, k))
        assert np.all(np.diag(graph.weights) == 0.0)

    def test_parallel_build(self, rng):
        ds = random_dataset(rng, 20, 8)
        assert np.allclose(build_correlation_graph(ds, workers=3).weights,
                           build_correlation_graph(ds).weights)

    def test_constant_features_are_masked(self, rng):
        x = rng.standard_normal((20, 4))
        x[:, 2] = 1.0
        graph = build_correlation_graph(Dataset(features=x))
        assert graph.masked == (2,)
        assert np.all(graph.weights[2] == 0.0)

    def test_inexact_constant_is_masked(self, rng):
        x = rng.standard_normal((10, 3, 2))
        x[:, 1, :] = [0.6, 0.8]
        ds = Dataset(features=x)
        assert constant_features(ds) == (1,)
        graph = build_correlation_graph(ds)
        assert graph.masked == (1,)
        assert np.all(graph.weights[1] == 0.0)
        assert np.all(graph.weights[:, 1] == 0.0)

    def test_scalar_constant_one_tenth(self, rng):
        x = rng.standard_normal((30, 4))
        x[:, 0] = 0.1
        ds = Dataset(features=x)
        assert build_correlation_graph(ds).masked == (0,)
        with pytest.raises(DegenerateFeatureError):
            multivariate_pearson(ds, 0, 3)

    def test_rejects_asymmetric_weights(self):
        with pytest.raises(ShapeError):
            CorrelationGraph(weights=np.array([[0.0, 1.0], [0.0, 0.0]]))

    def test_networkx_view(self, four_vertex_graph):
        G = four_vertex_graph.graph
        assert G.number_of_edges() == 6
        assert G[0][1]["weight"] == pytest.approx(0.9)

    def test_cut_weight(self, four_vertex_graph):
        assert four_vertex_graph.cut_weight([0, 1]) == pytest.approx(0.4)
        assert four_vertex_graph.cut_weight([0], [2, 3]) == pytest.approx(0.2)


# ---------------------------------------------------------------------------
# Surrogate entanglement
# ---------------------------------------------------------------------------

class TestSurrogateEntanglement:
    def test_matches_brute_force_sum(self, rng):
        graph = random_graph(rng, 8)
        subset = [0, 3, 5]
        rest = [k for k in range(8) if k not in subset]
        expected = sum(graph.weights[n, k] for n in subset for k in rest)
        assert graph.surrogate(subset) == pytest.approx(expected)
        assert graph.cut_weight(subset) == pytest.approx(expected)

    def test_complement_symmetry(self, rng):
        graph = random_graph(rng, 6)
        assert graph.surrogate([1, 4]) == pytest.approx(graph.surrogate([0, 2, 3, 5]))

    def test_dataset_and_graph_agree(self, rng):
        ds = random_dataset(rng, 25, 4)
        graph = build_correlation_graph(ds)
        assert surrogate_entanglement(ds, [0, 1]) == pytest.approx(
            surrogate_entanglement(graph, [0, 1]))

    @pytest.mark.parametrize("subset", [[], [0, 1, 2, 3], [4]])
    def test_improper_subset(self, four_vertex_graph, subset):
        with pytest.raises(PartitionError):
            four_vertex_graph.surrogate(subset)

    @settings(max_examples=30, deadline=None)
    @given(seed=st.integers(0, 10_000),
           scale=st.floats(0.01, 100.0),
           shift=st.floats(-10.0, 10.0))
    def test_affine_invariance_per_feature(self, seed, scale, shift):
        rng = np.random.default_rng(seed)
        x = rng.standard_normal((20, 4))
        y = x.copy()
        y[:, 1] = scale * y[:, 1] + shift
        a = surrogate_entanglement(Dataset(features=x), [0, 1])
        b = surrogate_entanglement(Dataset(features=y), [0, 1])
        assert a == pytest.approx(b, abs=1e-9)

    @pytest.mark.parametrize("seed", range(20))
    def test_cut_within_block_identity(self, seed):
        """Weight across K and its sibling inside a block, from three surrogates."""
        graph = build_correlation_graph(random_dataset(np.random.default_rng(seed), 10, 8))
        for size in (2, 4, 6, 8):
            for block in itertools.combinations(range(8), size):
                for half in itertools.combinations(block, size // 2):
                    other = [v for v in block if v not in half]
                    direct = graph.cut_weight(half, other)
                    via_se = 0.5 * (graph.surrogate(half) + graph.surrogate(other))
                    if size < 8:
                        via_se -= 0.5 * graph.surrogate(block)
                    assert direct == pytest.approx(via_se, abs=1e-10)


class TestCanonicalSurrogates:
    def test_identity_arrangement(self, four_vertex_graph):
        entries = canonical_surrogates(four_vertex_graph, 4)
        values = [v for _, v in entries]
        # level 1: {0,1} and {2,3}; level 2: singletons
        assert values[:2] == pytest.approx([0.4, 0.4])
        assert values[2:] == pytest.approx([1.1, 1.1, 1.1, 1.1])
        assert average_surrogate_entanglement(four_vertex_graph, 4) == pytest.approx(
            np.mean(values))

    def test_permutation_moves_features(self, four_vertex_graph):
        # feature 1 to cell 2 and feature 2 to cell 1: blocks become {0,2} and {1,3}
        perm = FeaturePermutation(1, 4, (0, 2, 1, 3))
        entries = canonical_surrogates(four_vertex_graph, 4, levels=[1], perm=perm)
        assert [v for _, v in entries] == pytest.approx([2.0, 2.0])

    def test_grid_arrangement(self, rng):
        graph = random_graph(rng, 16)
        entries = canonical_surrogates(graph, 4, dim=2, levels=[1])
        assert len(entries) == 4
        assert entries[0][1] == pytest.approx(graph.surrogate([0, 1, 4, 5]))

    def test_grid_size_mismatch(self, rng):
        with pytest.raises(ShapeError):
            canonical_surrogates(random_graph(rng, 8), 4, dim=2)
