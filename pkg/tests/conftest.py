"""Pytest fixtures for pmlaplacian tests."""

import numpy as np
import pytest

from pmlaplacian.lib.linalg import SparseSymMatrix
from pmlaplacian.lib.sbm import Case1Params, Case2Params


@pytest.fixture
def rng():
    """Seeded generator so every test draws the same numbers on every run."""
    return np.random.default_rng(20240611)


@pytest.fixture
def random_layer(rng):
    """Factory for connected random binary layers: a ring plus Bernoulli(density) edges."""

    def make(n, density):
        upper = np.triu(rng.random((n, n)) < density, k=1)
        W = (upper | upper.T).astype(np.float64)
        ring = np.arange(n)
        W[ring, (ring + 1) % n] = 1.0
        W[(ring + 1) % n, ring] = 1.0
        return SparseSymMatrix.from_dense(W)

    return make


@pytest.fixture
def two_block_adjacency():
    """Expected two-block matrix with p_in=0.8, p_out=0.2 and 5 vertices per block."""
    labels = np.repeat([0, 1], 5)
    return np.where(labels[:, None] == labels[None, :], 0.8, 0.2)


@pytest.fixture
def case1_params():
    """Two clusters of 50, one assortative and one weakly assortative layer."""
    return Case1Params(k=2, cluster_size=50, layers=((0.8, 0.2), (0.5, 0.3)), seed=7)


@pytest.fixture
def case2_params():
    """Three clusters of 10 with p_in=0.8, p_out=0.2."""
    return Case2Params(cluster_size=10, p_in=0.8, p_out=0.2, seed=3)


@pytest.fixture(autouse=True)
def _no_thread_cap(monkeypatch):
    """Keep a PML_THREADS value from the developer's shell out of the tests."""
    monkeypatch.delenv("PML_THREADS", raising=False)
