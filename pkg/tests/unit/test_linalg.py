"""Unit tests for linalg module."""

import numpy as np
import pytest
import scipy.sparse as sp

from pmlaplacian.lib.errors import DimensionError, RankDeficientError, SingularMatrixError
from pmlaplacian.lib.linalg import (
    SparseSymMatrix,
    dense_sym_eig,
    max_principal_angle,
    orthonormalize,
    spmv,
    sym_matrix_function,
    sym_matrix_power,
)


def random_spd(rng, n, cond):
    """Random SPD matrix with log-uniform spectrum in [1, cond]."""
    Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    eigenvalues = np.exp(rng.uniform(0.0, np.log(cond), n))
    eigenvalues[0], eigenvalues[-1] = 1.0, cond
    A = (Q * eigenvalues) @ Q.T
    return 0.5 * (A + A.T)


class TestSparseSymMatrix:
    """Tests for SparseSymMatrix construction and invariants."""

    def test_from_dense_canonical_csr(self):
        """Test that explicit zeros are dropped and indices sorted."""
        A = SparseSymMatrix.from_dense([[0, 2, 0], [2, 0, 1], [0, 1, 0]])

        assert A.n == 3
        assert A.nnz == 4
        assert list(A.row_ptr) == [0, 1, 3, 4]
        assert list(A.col_idx) == [1, 0, 2, 1]
        np.testing.assert_array_equal(A.values, [2, 2, 1, 1])

    def test_rejects_asymmetric(self):
        """Test that an asymmetric matrix is rejected."""
        with pytest.raises(ValueError, match="not symmetric"):
            SparseSymMatrix.from_dense([[0, 1], [0, 0]])

    def test_rejects_negative(self):
        """Test that negative weights are rejected."""
        with pytest.raises(ValueError, match="negative"):
            SparseSymMatrix.from_dense([[0, -1], [-1, 0]])

    def test_rejects_non_square(self):
        """Test that a non-square matrix raises DimensionError."""
        with pytest.raises(DimensionError):
            SparseSymMatrix.from_scipy(sp.csr_matrix(np.ones((2, 3))))

    def test_private_copy(self):
        """Test that mutating the source does not leak into the wrapper."""
        source = sp.csr_matrix(np.array([[0.0, 1.0], [1.0, 0.0]]))
        A = SparseSymMatrix.from_scipy(source)
        source.data[:] = 5.0

        np.testing.assert_array_equal(A.values, [1.0, 1.0])

    def test_degrees(self):
        """Test that degrees are row sums."""
        A = SparseSymMatrix.from_dense([[0, 2, 1], [2, 0, 0], [1, 0, 0]])

        np.testing.assert_array_equal(A.degrees(), [3, 2, 1])


class TestSpmv:
    """Tests for the spmv function."""

    def test_swap(self):
        """Test that the off-diagonal 2x2 swaps coordinates."""
        A = SparseSymMatrix.from_dense([[0, 1], [1, 0]])

        np.testing.assert_array_equal(spmv(A, [1, 0]), [0, 1])

    def test_zero_matrix(self):
        """Test that the zero matrix maps everything to zero."""
        A = SparseSymMatrix.from_dense(np.zeros((4, 4)))

        np.testing.assert_array_equal(spmv(A, [1, 2, 3, 4]), np.zeros(4))

    def test_dimension_mismatch(self):
        """Test that a wrong-length vector raises DimensionError."""
        A = SparseSymMatrix.from_dense(np.eye(3))

        with pytest.raises(DimensionError):
            spmv(A, np.ones(4))

    @pytest.mark.parametrize("n", [5, 50, 200])
    def test_matches_dense(self, rng, n):
        """Test agreement with dense multiplication on random matrices."""
        M = sp.random(n, n, density=0.1, random_state=n).toarray()
        M = M + M.T
        A = SparseSymMatrix.from_dense(M)
        x = rng.standard_normal(n)

        expected = M @ x
        np.testing.assert_allclose(spmv(A, x), expected, rtol=1e-13, atol=1e-13 * np.abs(expected).max())

    def test_block_operand(self, rng):
        """Test that a block of vectors is multiplied column by column."""
        M = np.array([[0.0, 1.0, 2.0], [1.0, 0.0, 0.0], [2.0, 0.0, 0.0]])
        A = SparseSymMatrix.from_dense(M)
        X = rng.standard_normal((3, 2))

        np.testing.assert_allclose(spmv(A, X), M @ X)

    def test_deterministic(self, rng):
        """Test that repeated products are bit-identical."""
        M = sp.random(100, 100, density=0.2, random_state=1)
        A = SparseSymMatrix.from_scipy(M + M.T)
        x = rng.standard_normal(100)

        assert np.array_equal(spmv(A, x), spmv(A, x))


class TestOrthonormalize:
    """Tests for the orthonormalize function."""

    def test_identity_unchanged(self):
        """Test that identity columns are returned unchanged."""
        np.testing.assert_array_equal(orthonormalize(np.eye(3)), np.eye(3))

    def test_two_vectors(self):
        """Test Gram-Schmidt on {(1,0),(1,1)}."""
        Q = orthonormalize(np.array([[1.0, 1.0], [0.0, 1.0]]))

        np.testing.assert_allclose(np.abs(Q), np.eye(2), atol=1e-15)

    def test_duplicated_column(self):
        """Test that a duplicated column signals rank deficiency."""
        V = np.array([[1.0, 1.0], [2.0, 2.0], [3.0, 3.0]])

        with pytest.raises(RankDeficientError) as exc_info:
            orthonormalize(V)
        assert exc_info.value.column == 1

    def test_orthonormal_and_same_span(self, rng):
        """Test orthonormality and span preservation on a random block."""
        V = rng.standard_normal((60, 6))
        Q = orthonormalize(V)

        assert np.abs(Q.T @ Q - np.eye(6)).max() <= 1e-12
        assert max_principal_angle(Q, V) < 1e-10

    def test_idempotent(self, rng):
        """Test that orthonormalizing twice changes nothing."""
        Q = orthonormalize(rng.standard_normal((40, 5)))

        assert np.abs(orthonormalize(Q) - Q).max() <= 1e-14


class TestDenseSymEig:
    """Tests for the dense_sym_eig function."""

    def test_diagonal(self):
        """Test that a diagonal matrix yields sorted values and canonical vectors."""
        eigenvalues, V = dense_sym_eig(np.diag([3.0, 1.0, 2.0]))

        np.testing.assert_allclose(eigenvalues, [1, 2, 3])
        np.testing.assert_allclose(np.abs(V), np.eye(3)[:, [1, 2, 0]])

    def test_swap(self):
        """Test the 2x2 swap matrix."""
        eigenvalues, _ = dense_sym_eig([[0.0, 1.0], [1.0, 0.0]])

        np.testing.assert_allclose(eigenvalues, [-1, 1])

    def test_reconstruction(self, rng):
        """Test that VΛVᵀ reconstructs a random symmetric matrix."""
        M = rng.standard_normal((100, 100))
        A = M + M.T
        eigenvalues, V = dense_sym_eig(A)

        assert np.all(np.diff(eigenvalues) >= 0)
        assert np.abs((V * eigenvalues) @ V.T - A).max() <= 1e-10
        assert np.abs(V.T @ V - np.eye(100)).max() <= 1e-10
        residual = np.linalg.norm(A @ V - V * eigenvalues, axis=0).max()
        assert residual <= 1e-10 * np.linalg.norm(A)

    def test_rejects_asymmetric(self):
        """Test that non-symmetric input raises."""
        with pytest.raises(ValueError, match="not symmetric"):
            dense_sym_eig([[1.0, 2.0], [0.0, 1.0]])


class TestSymMatrixPower:
    """Tests for the sym_matrix_power function."""

    def test_square_root(self):
        """Test diag(1,4)^(1/2) = diag(1,2)."""
        np.testing.assert_allclose(sym_matrix_power(np.diag([1.0, 4.0]), 0.5), np.diag([1.0, 2.0]))

    def test_zero_power_is_identity(self, rng):
        """Test that p=0 yields the identity on an SPD matrix."""
        H = random_spd(rng, 5, 10.0)

        np.testing.assert_array_equal(sym_matrix_power(H, 0), np.eye(5))

    def test_inverse(self):
        """Test diag(2,8)^-1 = diag(0.5,0.125)."""
        np.testing.assert_allclose(
            sym_matrix_power(np.diag([2.0, 8.0]), -1), np.diag([0.5, 0.125]), atol=1e-15
        )

    def test_singular_negative_power(self):
        """Test that a singular matrix with p<0 raises naming lambda_min."""
        with pytest.raises(SingularMatrixError) as exc_info:
            sym_matrix_power(np.diag([0.0, 1.0]), -2)
        assert exc_info.value.lambda_min == pytest.approx(0.0)
        assert "lambda_min" in str(exc_info.value)

    def test_integer_power_of_indefinite(self):
        """Test that positive integer powers accept indefinite matrices."""
        H = np.array([[0.0, 1.0], [1.0, 0.0]])

        np.testing.assert_allclose(sym_matrix_power(H, 3), H, atol=1e-14)

    def test_fractional_power_of_psd(self):
        """Test that a PSD matrix with a zero eigenvalue takes a fractional power."""
        H = np.array([[1.0, -1.0], [-1.0, 1.0]])

        np.testing.assert_allclose(sym_matrix_power(H, 0.5), H / np.sqrt(2), atol=1e-14)

    def test_fractional_power_of_negative_definite(self):
        """Test that a genuinely negative eigenvalue rejects fractional powers."""
        with pytest.raises(SingularMatrixError):
            sym_matrix_power(np.diag([-1.0, 1.0]), 0.5)

    @pytest.mark.parametrize(
        ("p", "cond"),
        [(1, 1e4), (-1, 1e4), (2, 1e3), (-2, 1e3), (5, 10.0), (-5, 10.0), (10, 4.0), (-10, 4.0)],
    )
    def test_power_then_inverse_power_recovers(self, rng, p, cond):
        """Test that (H^p)^(1/p) recovers H."""
        for _ in range(5):
            H = random_spd(rng, 20, cond)
            recovered = sym_matrix_power(sym_matrix_power(H, p), 1.0 / p)

            assert np.linalg.norm(recovered - H) <= 1e-8 * np.linalg.norm(H)


class TestSymMatrixFunction:
    """Tests for sym_matrix_function and max_principal_angle."""

    def test_log_exp_roundtrip(self, rng):
        """Test that exp(log(H)) recovers H."""
        H = random_spd(rng, 8, 50.0)
        recovered = sym_matrix_function(sym_matrix_function(H, np.log), np.exp)

        np.testing.assert_allclose(recovered, H, atol=1e-10)

    def test_principal_angle_orthogonal(self):
        """Test that orthogonal lines meet at pi/2."""
        assert max_principal_angle([1.0, 0.0], [0.0, 1.0]) == pytest.approx(np.pi / 2)

    def test_principal_angle_same_span(self):
        """Test that different bases of one plane give angle zero."""
        U = np.array([[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]])
        V = np.array([[1.0, 1.0], [1.0, -1.0], [0.0, 0.0]])

        assert max_principal_angle(U, V) < 1e-14
