"""Shared test fixtures for the entanglekit test suite."""

from pathlib import Path

import numpy as np
import pytest

from entanglekit.data_tensor import Dataset, embed_dataset
from entanglekit.surrogate import CorrelationGraph
from entanglekit.synth import block_pairs

FIXTURES_DIR = Path(__file__).parent / "fixtures"


def random_dataset(rng, M, N, D=2, labeled=True, dim=1):
    """Random dataset with unit-norm feature vectors and ±1 labels."""
    x = rng.standard_normal((M, N, D))
    x /= np.linalg.norm(x, axis=2, keepdims=True)
    labels = rng.choice([-1.0, 1.0], size=M) if labeled else None
    return Dataset(features=x, labels=labels, dim=dim)


def random_graph(rng, n):
    w = rng.uniform(-1.0, 1.0, size=(n, n))
    return CorrelationGraph(weights=(w + w.T) / 2.0)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def bell_path():
    return FIXTURES_DIR / "bell.csv"


@pytest.fixture
def malformed_path():
    return FIXTURES_DIR / "malformed.csv"


@pytest.fixture
def multiclass_path():
    return FIXTURES_DIR / "multiclass.csv"


@pytest.fixture
def bell_dataset():
    """Two instances whose data tensor is (e1 e1 + e2 e2) / 2."""
    x = np.array([[[1.0, 0.0], [1.0, 0.0]],
                  [[0.0, 1.0], [0.0, 1.0]]])
    return Dataset(features=x, labels=np.ones(2))


@pytest.fixture
def pairs_dataset():
    """Correlated adjacent pairs: N=16, D=1, M=500, rho=0.9."""
    return block_pairs(500, 16, rho=0.9, seed=7)


@pytest.fixture
def swap_series_dataset():
    """Correlated adjacent pairs with room to scramble: N=128, D=1, M=300, rho=0.9.

    128 random swaps leave a 128-feature arrangement far from uniform, so
    the swap counts 0, 8, 32 and 128 stay distinguishable.
    """
    return block_pairs(300, 128, rho=0.9, seed=7)


@pytest.fixture
def embedded_pairs(pairs_dataset):
    return embed_dataset(pairs_dataset)


@pytest.fixture
def four_vertex_graph():
    """w(0,1) = w(2,3) = 0.9, every cross pair 0.1."""
    w = np.full((4, 4), 0.1)
    w[0, 1] = w[1, 0] = 0.9
    w[2, 3] = w[3, 2] = 0.9
    return CorrelationGraph(weights=w)
