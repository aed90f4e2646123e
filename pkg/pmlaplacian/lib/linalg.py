"""Numeric kernels: sparse symmetric storage, orthonormalization and dense eigen oracles."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np
import numpy.typing as npt
import scipy.linalg
import scipy.sparse as sp

from pmlaplacian.lib.errors import DimensionError, RankDeficientError, SingularMatrixError

DenseSymMatrix = npt.NDArray[np.float64]

SYMMETRY_RTOL = 1e-12
# Eigenvalues at or below this are treated as zero when a negative power is requested.
SINGULAR_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class SparseSymMatrix:
    """Symmetric nonnegative matrix in CSR form; the adjacency of one layer.

    Construct through `from_scipy` or `from_dense`, which enforce the storage
    invariants: exact symmetry, nonnegative values, no explicit zeros and
    sorted column indices within every row.

    Attributes:
        csr: The validated scipy CSR matrix. Treat as read-only.
    """

    csr: sp.csr_matrix

    @classmethod
    def from_scipy(cls, matrix: sp.spmatrix | sp.sparray, check: bool = True) -> SparseSymMatrix:
        """Validate and wrap a scipy sparse matrix.

        Args:
            matrix: Any scipy sparse matrix or array.
            check: Verify symmetry and signs. Generators that are symmetric by
                construction pass False to skip the O(nnz) transpose.

        Returns:
            A SparseSymMatrix holding a private canonical copy.

        Raises:
            DimensionError: If the matrix is not square.
            ValueError: If the matrix has negative or non-finite entries or
                is not exactly symmetric.
        """
        csr = sp.csr_matrix(matrix, dtype=np.float64, copy=True)
        if csr.shape[0] != csr.shape[1]:
            raise DimensionError(f"Adjacency must be square, got shape {csr.shape}")
        csr.sum_duplicates()
        csr.eliminate_zeros()
        csr.sort_indices()
        if not check:
            return cls(csr)
        if not np.all(np.isfinite(csr.data)):
            raise ValueError("Adjacency contains non-finite weights")
        if csr.nnz and csr.data.min() < 0:
            raise ValueError("Adjacency contains negative weights")
        asym = csr - csr.T
        asym.eliminate_zeros()
        if asym.nnz:
            raise ValueError(f"Adjacency is not symmetric ({asym.nnz} mismatched entries)")
        return cls(csr)

    @classmethod
    def from_dense(cls, array: npt.ArrayLike) -> SparseSymMatrix:
        """Validate and wrap a dense array."""
        return cls.from_scipy(sp.csr_matrix(np.asarray(array, dtype=np.float64)))

    @property
    def n(self) -> int:
        return self.csr.shape[0]

    @property
    def nnz(self) -> int:
        return self.csr.nnz

    @property
    def row_ptr(self) -> npt.NDArray[np.int_]:
        return self.csr.indptr

    @property
    def col_idx(self) -> npt.NDArray[np.int_]:
        return self.csr.indices

    @property
    def values(self) -> npt.NDArray[np.float64]:
        return self.csr.data

    def degrees(self) -> npt.NDArray[np.float64]:
        """Row sums (weighted degrees)."""
        return np.asarray(self.csr.sum(axis=1)).ravel()

    def to_dense(self) -> DenseSymMatrix:
        return self.csr.toarray()


class EigenDecomposition(NamedTuple):
    """Eigenvalues in ascending order with orthonormal eigenvectors as columns."""

    eigenvalues: npt.NDArray[np.float64]
    eigenvectors: npt.NDArray[np.float64]


def spmv(A: SparseSymMatrix, x: npt.ArrayLike) -> npt.NDArray[np.float64]:
    """Sparse matrix times a vector (or a block of column vectors).

    The CSR kernel sums each row in ascending column order, so results are
    bit-reproducible across runs.

    Args:
        A: Sparse symmetric matrix.
        x: Vector of length A.n, or an (A.n, m) block.

    Returns:
        The product A @ x.

    Raises:
        DimensionError: If x does not have A.n rows.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim not in (1, 2) or x.shape[0] != A.n:
        raise DimensionError(f"Cannot multiply {A.n}x{A.n} matrix with operand of shape {x.shape}")
    return A.csr @ x


def orthonormalize(V: npt.ArrayLike, tol: float = 1e-12) -> npt.NDArray[np.float64]:
    """Orthonormalize columns by modified Gram-Schmidt with one reorthogonalization pass.

    Args:
        V: (n, m) array of columns, m <= n.
        tol: A column whose norm after projection falls below tol times its
            original norm is considered dependent.

    Returns:
        (n, m) array with orthonormal columns spanning the same space.

    Raises:
        RankDeficientError: On the first dependent column; the caller decides
            how to deflate.
    """
    Q = np.array(V, dtype=np.float64, copy=True)
    if Q.ndim == 1:
        Q = Q[:, None]
    n, m = Q.shape
    if m > n:
        raise RankDeficientError(f"Cannot orthonormalize {m} columns in dimension {n}", n)
    for j in range(m):
        v = Q[:, j]
        original = np.linalg.norm(v)
        for _ in range(2):
            for i in range(j):
                v -= (Q[:, i] @ v) * Q[:, i]
        norm = np.linalg.norm(v)
        if original == 0.0 or norm < tol * original:
            raise RankDeficientError(f"Column {j} is linearly dependent on the previous ones", j)
        Q[:, j] = v / norm
    return Q


def check_symmetric(A: npt.ArrayLike, rtol: float = SYMMETRY_RTOL) -> DenseSymMatrix:
    """Return A as a float array after checking symmetry to rtol relative."""
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionError(f"Expected a square matrix, got shape {A.shape}")
    scale = max(float(np.abs(A).max(initial=0.0)), 1.0)
    asym = float(np.abs(A - A.T).max(initial=0.0))
    if asym > rtol * scale:
        raise ValueError(f"Matrix is not symmetric (max asymmetry {asym:.3e})")
    return A


def dense_sym_eig(A: npt.ArrayLike) -> EigenDecomposition:
    """Full eigendecomposition of a dense symmetric matrix.

    Uses LAPACK's symmetric tridiagonal reduction; it never touches the Krylov
    code path, so it serves as the reference for every spectral test.

    Raises:
        ValueError: If A is not symmetric to within 1e-12 relative.
    """
    A = check_symmetric(A)
    eigenvalues, eigenvectors = scipy.linalg.eigh(0.5 * (A + A.T))
    return EigenDecomposition(eigenvalues, eigenvectors)


def sym_matrix_function(
    H: npt.ArrayLike, f: Callable[[npt.NDArray[np.float64]], npt.NDArray[np.float64]]
) -> DenseSymMatrix:
    """Apply a scalar function to a symmetric matrix through its eigenvalues: V f(Λ) Vᵀ."""
    eigenvalues, V = dense_sym_eig(H)
    result = (V * f(eigenvalues)) @ V.T
    return 0.5 * (result + result.T)


def sym_matrix_power(H: npt.ArrayLike, p: float) -> DenseSymMatrix:
    """Real power of a symmetric matrix via its eigendecomposition.

    Negative and zero powers need a positive definite H. Positive integer
    powers accept any symmetric H; positive non-integer powers accept positive
    semidefinite H, with eigenvalues inside the round-off floor clamped to 0.

    Args:
        H: Symmetric matrix (for Krylov use a small tridiagonal one).
        p: Real exponent.

    Returns:
        V diag(λ^p) Vᵀ.

    Raises:
        SingularMatrixError: If the power is undefined for the spectrum of H.
    """
    eigenvalues, V = dense_sym_eig(H)
    n = len(eigenvalues)
    if n == 0:
        return np.zeros((0, 0))
    lambda_min = float(eigenvalues[0])
    if p == 0:
        if lambda_min <= SINGULAR_TOL:
            raise SingularMatrixError(
                f"Matrix power p=0 needs a positive definite matrix (lambda_min={lambda_min:.3e})",
                lambda_min,
            )
        return np.eye(n)
    if p < 0:
        if lambda_min <= SINGULAR_TOL:
            raise SingularMatrixError(
                f"Matrix power p={p} needs a positive definite matrix (lambda_min={lambda_min:.3e})",
                lambda_min,
            )
        powered = eigenvalues**p
    elif float(p).is_integer():
        powered = eigenvalues ** int(p)
    else:
        floor = n * np.finfo(np.float64).eps * max(float(np.abs(eigenvalues).max()), 1.0)
        if lambda_min < -floor:
            raise SingularMatrixError(
                f"Matrix power p={p} needs a positive semidefinite matrix (lambda_min={lambda_min:.3e})",
                lambda_min,
            )
        powered = np.where(eigenvalues <= floor, 0.0, np.abs(eigenvalues)) ** p
    result = (V * powered) @ V.T
    return 0.5 * (result + result.T)


def max_principal_angle(U: npt.ArrayLike, V: npt.ArrayLike) -> float:
    """Largest principal angle (radians) between the column spans of U and V."""
    U = np.asarray(U, dtype=np.float64)
    V = np.asarray(V, dtype=np.float64)
    if U.ndim == 1:
        U = U[:, None]
    if V.ndim == 1:
        V = V[:, None]
    return float(np.max(scipy.linalg.subspace_angles(U, V)))
