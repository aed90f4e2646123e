"""Unit tests for graphs module."""

import math

import numpy as np
import pytest
import scipy.sparse as sp

from pmlaplacian.lib.errors import DimensionError, IsolatedVertexError, ParameterError
from pmlaplacian.lib.graphs import (
    MultilayerGraph,
    knn_graph,
    largest_component,
    pearson_correlation,
    shift_for,
    shifted_laplacian,
)
from pmlaplacian.lib.linalg import SparseSymMatrix, dense_sym_eig


def edge_set(A):
    """Undirected edge set {(i, j): i < j} of a layer."""
    coo = sp.triu(A.csr, k=1).tocoo()
    return set(zip(coo.row.tolist(), coo.col.tolist()))


class TestShiftFor:
    """Tests for the shift_for function."""

    def test_negative_p(self):
        """Test that p=-10 gives log(11)."""
        assert shift_for(-10) == pytest.approx(2.3978953, abs=1e-7)

    def test_zero_p(self):
        """Test that p=0 gives 1e-6."""
        assert shift_for(0) == 1e-6

    def test_positive_p(self):
        """Test that positive p needs no shift."""
        assert shift_for(2) == 0.0

    def test_minus_one(self):
        """Test that p=-1 gives log 2."""
        assert shift_for(-1) == pytest.approx(math.log(2))


class TestMultilayerGraph:
    """Tests for the MultilayerGraph container."""

    def test_from_matrices(self, two_block_adjacency):
        """Test building from a mix of dense and sparse inputs."""
        G = MultilayerGraph.from_matrices([two_block_adjacency, sp.csr_matrix(two_block_adjacency)])

        assert G.n == two_block_adjacency.shape[0]
        assert G.T == 2

    def test_empty_rejected(self):
        """Test that zero layers are rejected."""
        with pytest.raises(ParameterError):
            MultilayerGraph(())

    def test_size_mismatch(self):
        """Test that layers of different size are rejected."""
        with pytest.raises(DimensionError):
            MultilayerGraph.from_matrices([np.ones((2, 2)), np.ones((3, 3))])

    def test_aggregate(self):
        """Test that aggregate is the mean adjacency."""
        G = MultilayerGraph.from_matrices([[[0, 2], [2, 0]], [[0, 4], [4, 0]]])

        np.testing.assert_allclose(G.aggregate().to_dense(), [[0, 3], [3, 0]])

    def test_subgraph(self):
        """Test that subgraph keeps the induced edges in the given order."""
        W = np.array([[0, 1, 0], [1, 0, 2], [0, 2, 0]])
        G = MultilayerGraph.from_matrices([W])

        np.testing.assert_array_equal(G.subgraph([2, 1]).layers[0].to_dense(), [[0, 2], [2, 0]])

    def test_densities(self):
        """Test that densities exclude the diagonal."""
        G = MultilayerGraph.from_matrices([np.ones((4, 4))])

        assert G.densities() == [1.0]


class TestShiftedLaplacian:
    """Tests for shifted_laplacian and ShiftedLaplacianOp."""

    def test_antisymmetric_vector(self):
        """Test that (1,-1) is an eigenvector with eigenvalue 2."""
        op = shifted_laplacian(SparseSymMatrix.from_dense([[0, 1], [1, 0]]), 0.0)

        np.testing.assert_allclose(op.matvec([1, -1]), [2, -2])

    def test_null_vector(self):
        """Test that the constant vector is in the kernel of a connected graph."""
        op = shifted_laplacian(SparseSymMatrix.from_dense([[0, 1], [1, 0]]), 0.0)

        np.testing.assert_allclose(op.matvec([1, 1]), [0, 0])

    def test_case1_expected_spectrum(self):
        """Test spectrum {0, 0.4, 1 (x98)} of the two-block expected matrix."""
        labels = np.repeat([0, 1], 50)
        W = np.where(labels[:, None] == labels[None, :], 0.8, 0.2)
        op = shifted_laplacian(SparseSymMatrix.from_dense(W), 0.0)
        eigenvalues = dense_sym_eig(op.to_dense()).eigenvalues

        np.testing.assert_allclose(eigenvalues[:2], [0.0, 0.4], atol=1e-12)
        np.testing.assert_allclose(eigenvalues[2:], np.ones(98), atol=1e-12)

    def test_isolated_vertex(self):
        """Test that isolated vertices are listed in the error."""
        W = SparseSymMatrix.from_dense([[0, 1, 0, 0], [1, 0, 0, 0], [0, 0, 0, 0], [0, 0, 0, 0]])

        with pytest.raises(IsolatedVertexError) as exc_info:
            shifted_laplacian(W, 0.1)
        assert exc_info.value.vertices == [2, 3]

    def test_negative_shift(self):
        """Test that a negative shift is rejected."""
        with pytest.raises(ParameterError):
            shifted_laplacian(SparseSymMatrix.from_dense([[0, 1], [1, 0]]), -0.5)

    def test_matches_dense_assembly(self, rng, random_layer):
        """Test agreement with (1+eps)I - D^-1/2 W D^-1/2 assembled densely."""
        W = random_layer(150, 0.08)
        eps = 0.37
        dense = W.to_dense()
        d = 1.0 / np.sqrt(dense.sum(axis=1))
        expected = (1 + eps) * np.eye(150) - d[:, None] * dense * d[None, :]
        op = shifted_laplacian(W, eps)
        x = rng.standard_normal(150)
        X = rng.standard_normal((150, 3))

        np.testing.assert_allclose(op.matvec(x), expected @ x, atol=1e-12)
        np.testing.assert_allclose(op.matvec(X), expected @ X, atol=1e-12)
        np.testing.assert_allclose(op.to_dense(), expected, atol=1e-12)

    def test_rayleigh_quotients_bounded(self, rng, random_layer):
        """Test that Rayleigh quotients lie in [eps, 2+eps]."""
        eps = 0.25
        op = shifted_laplacian(random_layer(120, 0.1), eps)
        for _ in range(100):
            x = rng.standard_normal(120)
            x /= np.linalg.norm(x)
            q = x @ op.matvec(x)
            assert eps - 1e-10 <= q <= 2 + eps + 1e-10

    def test_dimension_mismatch(self):
        """Test that a wrong-size operand raises DimensionError."""
        op = shifted_laplacian(SparseSymMatrix.from_dense([[0, 1], [1, 0]]), 0.0)

        with pytest.raises(DimensionError):
            op.matvec(np.ones(3))


class TestKnnGraph:
    """Tests for the knn_graph function."""

    def test_identical_rows_nearest_is_lowest_index(self):
        """Test that with all correlations tied, k=1 picks the lowest other index."""
        F = np.tile([1.0, 2.0, 3.0], (3, 1))

        assert edge_set(knn_graph(F, 1)) == {(0, 1), (0, 2)}

    def test_identical_rows_k2_triangle(self):
        """Test that three identical rows with k=2 form a triangle."""
        F = np.tile([1.0, 2.0, 3.0], (3, 1))

        assert edge_set(knn_graph(F, 2)) == {(0, 1), (0, 2), (1, 2)}

    def test_anticorrelated_row(self):
        """Test the hand-computed example with an anti-correlated row."""
        F = np.array([[1.0, 2.0, 3.0], [2.0, 4.0, 6.0], [-1.0, -2.0, -3.0]])

        assert edge_set(knn_graph(F, 1)) == {(0, 1), (0, 2)}

    def test_complete_graph(self, rng):
        """Test that k=n-1 yields the complete graph."""
        F = rng.standard_normal((7, 5))
        A = knn_graph(F, 6)

        np.testing.assert_array_equal(A.to_dense(), np.ones((7, 7)) - np.eye(7))

    def test_symmetric_min_degree(self, rng):
        """Test union symmetrization: symmetric, binary and min degree >= k."""
        F = rng.standard_normal((80, 12))
        A = knn_graph(F, 5)
        dense = A.to_dense()

        np.testing.assert_array_equal(dense, dense.T)
        assert set(np.unique(A.values)) == {1.0}
        assert np.count_nonzero(dense, axis=1).min() >= 5
        assert np.all(np.diag(dense) == 0)

    def test_chunking_matches_single_block(self, rng):
        """Test that row chunking gives the same graph as one block."""
        F = rng.standard_normal((30, 4))
        with pytest.MonkeyPatch.context() as mp:
            mp.setattr("pmlaplacian.lib.graphs.KNN_CHUNK", 7)
            chunked = knn_graph(F, 3)
        whole = knn_graph(F, 3)

        assert edge_set(chunked) == edge_set(whole)

    def test_constant_row(self):
        """Test that a zero-variance row is rejected."""
        with pytest.raises(ValueError, match="zero variance"):
            knn_graph(np.array([[1.0, 2.0], [3.0, 3.0], [0.0, 1.0]]), 1)

    def test_k_too_large(self):
        """Test that k >= n is rejected."""
        with pytest.raises(ParameterError):
            knn_graph(np.array([[1.0, 2.0], [2.0, 1.0]]), 2)

    def test_pearson_matches_numpy(self, rng):
        """Test pearson_correlation against numpy.corrcoef."""
        F = rng.standard_normal((10, 6))

        np.testing.assert_allclose(pearson_correlation(F), np.corrcoef(F), atol=1e-12)


class TestLargestComponent:
    """Tests for the largest_component function."""

    def test_keeps_common_component(self):
        """Test restriction to vertices connected in every layer."""
        path = np.zeros((5, 5))
        for i in range(3):
            path[i, i + 1] = path[i + 1, i] = 1
        path[3, 4] = path[4, 3] = 1
        layer2 = np.zeros((5, 5))
        for i, j in [(0, 1), (1, 2), (2, 3), (3, 4)]:
            layer2[i, j] = layer2[j, i] = 1
        layer2[3, 4] = layer2[4, 3] = 0
        layer2[2, 4] = layer2[4, 2] = 1
        G = MultilayerGraph.from_matrices([path, layer2])

        H, kept = largest_component(G)

        assert kept.tolist() == [0, 1, 2, 3, 4]
        assert H.n == 5

    def test_drops_isolated(self):
        """Test that an isolated vertex is removed."""
        W = np.zeros((4, 4))
        W[0, 1] = W[1, 0] = W[1, 2] = W[2, 1] = 1
        G = MultilayerGraph.from_matrices([W, W])

        H, kept = largest_component(G)

        assert kept.tolist() == [0, 1, 2]
        assert H.n == 3

    def test_iterates_to_fixed_point(self):
        """Test that restricting one layer can shrink another further."""
        # layer 1: 0-1-2-3 path and isolated 4; layer 2: 0-1, 2-3-4
        a = np.zeros((5, 5))
        for i, j in [(0, 1), (1, 2), (2, 3)]:
            a[i, j] = a[j, i] = 1
        b = np.zeros((5, 5))
        for i, j in [(0, 1), (2, 3), (3, 4)]:
            b[i, j] = b[j, i] = 1
        G = MultilayerGraph.from_matrices([a, b])

        H, kept = largest_component(G)

        assert kept.tolist() == [2, 3]
        assert H.n == 2
