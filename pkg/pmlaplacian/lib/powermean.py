"""Scalar and matrix power means and the power mean Laplacian eigensolver.

For p < 0 the k smallest eigenpairs of the power mean Laplacian L_p are the
k dominant eigenpairs of L_p^p = (1/T) sum_t (L_sym^(t) + eps I)^p. Those are
found by subspace iteration, where every application of L_p^p runs one
Lanczos-based Krylov solve (pksm_apply) per layer and column. Positive p and
p = 0 go through the dense oracle instead.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Any, Callable, Iterator, NamedTuple, Sequence

import numpy as np
import numpy.typing as npt
import scipy.linalg
import scipy.sparse as sp
from scipy.sparse.linalg import LinearOperator, eigsh

from pmlaplacian.constants import (
    DENSE_LIMIT,
    GUARD_VECTORS,
    KRYLOV_MAX_DIM,
    OUTER_MAX_ITER,
    OUTER_TOL,
)
from pmlaplacian.lib.errors import (
    DimensionError,
    DomainError,
    KrylovError,
    ParameterError,
    RankDeficientError,
    SingularMatrixError,
)
from pmlaplacian.lib.graphs import MultilayerGraph, ShiftedLaplacianOp, shift_for, shifted_laplacian
from pmlaplacian.lib.linalg import (
    SINGULAR_TOL,
    check_symmetric,
    dense_sym_eig,
    orthonormalize,
    sym_matrix_function,
    sym_matrix_power,
)
from pmlaplacian.lib.threads import get_worker_count

# A Lanczos residual below this (relative to the diagonal entry) ends the Krylov space.
BREAKDOWN_TOL = 1e-14


def scalar_power_mean(xs: npt.ArrayLike, p: float) -> float:
    """Power mean m_p of nonnegative numbers.

    Args:
        xs: Nonempty vector of nonnegative values.
        p: Exponent; 0 gives the geometric mean, +-inf the max / min.

    Returns:
        ((1/T) sum x_i^p)^(1/p), evaluated with scaling so large |p| does not
        overflow.

    Raises:
        DomainError: If an entry is zero and p <= 0 is finite, or an entry is
            negative.
    """
    x = np.asarray(xs, dtype=np.float64).ravel()
    if x.size == 0:
        raise ParameterError("Power mean of an empty vector")
    if np.any(x < 0) or not np.all(np.isfinite(x)):
        raise DomainError("Power mean needs finite nonnegative entries")
    if p == math.inf:
        return float(x.max())
    if p == -math.inf:
        return float(x.min())
    if p <= 0 and np.any(x == 0):
        raise DomainError(f"Power mean with p={p} is undefined for zero entries")
    if p == 0:
        return float(np.exp(np.mean(np.log(x))))
    scale = x.max() if p > 0 else x.min()
    if scale == 0:
        return 0.0
    return float(scale * np.mean((x / scale) ** p) ** (1.0 / p))


def _sym_log(A: npt.NDArray[np.float64]) -> npt.NDArray[np.float64]:
    eigenvalues = dense_sym_eig(A).eigenvalues
    if eigenvalues[0] <= SINGULAR_TOL:
        raise SingularMatrixError(
            f"Matrix logarithm needs a positive definite matrix (lambda_min={eigenvalues[0]:.3e})",
            float(eigenvalues[0]),
        )
    return sym_matrix_function(A, np.log)


def dense_power_mean(As: Sequence[npt.ArrayLike], p: float) -> npt.NDArray[np.float64]:
    """Matrix power mean M_p(A_1, ..., A_T) = ((1/T) sum A_i^p)^(1/p), densely.

    p = 0 is the log-Euclidean mean exp((1/T) sum log A_i).

    Args:
        As: Symmetric matrices of one size; positive definite when p <= 0.
        p: Finite exponent.

    Returns:
        The symmetric mean matrix.

    Raises:
        SingularMatrixError: If some A_i is not positive definite and p <= 0.
        DimensionError: If the matrices differ in size.
    """
    if not math.isfinite(p):
        raise ParameterError(f"Matrix power means need a finite exponent, got {p}")
    mats = [check_symmetric(A) for A in As]
    if not mats:
        raise ParameterError("Power mean of no matrices")
    if len({A.shape for A in mats}) != 1:
        raise DimensionError(f"Matrices differ in shape: {sorted({A.shape for A in mats})}")
    if p == 0:
        mean_log = sum(_sym_log(A) for A in mats) / len(mats)
        return sym_matrix_function(mean_log, np.exp)
    mean = sum(sym_matrix_power(A, p) for A in mats) / len(mats)
    return sym_matrix_power(mean, 1.0 / p)


@dataclass(frozen=True)
class PowerMeanSolveSpec:
    """Everything that determines one power mean Laplacian eigensolve.

    Attributes:
        p: Finite exponent.
        k: Number of eigenpairs wanted.
        shift: Diagonal shift eps; None uses shift_for(p).
        krylov_tol: Inner Krylov tolerance; None uses outer_tol / 10.
        krylov_max_dim: Largest Krylov space per inner solve.
        outer_tol: Relative residual target of the subspace iteration.
        outer_max_iter: Cap on subspace iterations.
        seed: Seed of the random starting block.
        n_jobs: Threads applying the layers; None uses get_worker_count().
        block_size: Subspace width; None uses k plus guard vectors, capped at n.
    """

    p: float
    k: int = 2
    shift: float | None = None
    krylov_tol: float | None = None
    krylov_max_dim: int = KRYLOV_MAX_DIM
    outer_tol: float = OUTER_TOL
    outer_max_iter: int = OUTER_MAX_ITER
    seed: int = 0
    n_jobs: int | None = None
    block_size: int | None = None

    def __post_init__(self) -> None:
        if not math.isfinite(self.p):
            raise ParameterError(f"Matrix solves need a finite exponent, got p={self.p}")
        if self.k < 1:
            raise ParameterError(f"k must be at least 1, got {self.k}")
        if self.shift is not None and not (self.shift >= 0 and math.isfinite(self.shift)):
            raise ParameterError(f"Shift must be finite and nonnegative, got {self.shift}")
        for name in ("krylov_tol", "outer_tol"):
            value = getattr(self, name)
            if value is not None and not value > 0:
                raise ParameterError(f"{name} must be positive, got {value}")
        if self.krylov_max_dim < 1 or self.outer_max_iter < 1:
            raise ParameterError("Iteration caps must be positive")
        if self.block_size is not None and self.block_size < self.k:
            raise ParameterError(f"block_size {self.block_size} is smaller than k={self.k}")

    @property
    def epsilon(self) -> float:
        return shift_for(self.p) if self.shift is None else self.shift

    @property
    def inner_tol(self) -> float:
        return self.outer_tol / 10 if self.krylov_tol is None else self.krylov_tol


class KrylovResult(NamedTuple):
    """Outcome of one Krylov approximation of A^p y."""

    x: npt.NDArray[np.float64]
    dim: int
    converged: bool
    breakdown: bool


def _matvec_of(A: Any) -> Callable[[npt.NDArray[np.float64]], npt.NDArray[np.float64]]:
    if hasattr(A, "matvec"):
        return A.matvec
    if sp.issparse(A):
        return lambda v: A @ v
    dense = np.asarray(A, dtype=np.float64)
    return lambda v: dense @ v


def pksm_apply(
    A: Any,
    y: npt.ArrayLike,
    p: float,
    tol: float = OUTER_TOL / 10,
    max_dim: int = KRYLOV_MAX_DIM,
) -> KrylovResult:
    """Approximate A^p y in the Krylov space of A and y.

    Lanczos with full reorthogonalization builds the basis V_s and the
    tridiagonal H_s from its recurrence coefficients; the iterate is
    x_s = V_s H_s^p e_1 ||y||. Iteration stops once consecutive iterates
    agree to tol (relative) or the space reaches max_dim.

    Args:
        A: Symmetric positive definite operator: anything with `matvec`, a
            dense array or a scipy sparse matrix.
        y: Nonzero vector.
        p: Exponent; the solver targets p < 0.
        tol: Relative stopping tolerance.
        max_dim: Largest Krylov dimension.

    Returns:
        KrylovResult with the approximation, the dimension used, whether the
        tolerance was met and whether the space became invariant (breakdown,
        in which case the result is exact up to round-off).

    Raises:
        ParameterError: If y is zero.
        KrylovError: If H_s is not positive definite for a negative p.
    """
    matvec = _matvec_of(A)
    y = np.asarray(y, dtype=np.float64)
    norm_y = float(np.linalg.norm(y))
    if norm_y == 0.0:
        raise ParameterError("Krylov solve needs a nonzero right-hand side")
    n = y.shape[0]
    max_dim = min(max_dim, n)

    V = np.zeros((n, max_dim), dtype=np.float64)
    V[:, 0] = y / norm_y
    alphas: list[float] = []
    betas: list[float] = []
    x_prev = None
    x = y
    for s in range(max_dim):
        w = np.asarray(matvec(V[:, s]), dtype=np.float64)
        if s > 0:
            w = w - betas[s - 1] * V[:, s - 1]
        alpha = float(V[:, s] @ w)
        w = w - alpha * V[:, s]
        basis = V[:, : s + 1]
        w -= basis @ (basis.T @ w)
        w -= basis @ (basis.T @ w)
        alphas.append(alpha)

        H = np.diag(alphas) + np.diag(betas, 1) + np.diag(betas, -1)
        try:
            coefficients = sym_matrix_power(H, p)[:, 0]
        except SingularMatrixError as e:
            raise KrylovError(f"Projected matrix lost definiteness at dimension {s + 1}: {e}") from e
        x = basis @ coefficients * norm_y

        beta = float(np.linalg.norm(w))
        if x_prev is not None and np.linalg.norm(x - x_prev) <= tol * np.linalg.norm(x):
            return KrylovResult(x, s + 1, True, False)
        if beta < BREAKDOWN_TOL * max(1.0, abs(alpha)):
            return KrylovResult(x, s + 1, True, True)
        if s + 1 < max_dim:
            betas.append(beta)
            V[:, s + 1] = w / beta
        x_prev = x
    logging.debug(f"Krylov solve stopped at dimension {max_dim} without reaching tol={tol}")
    return KrylovResult(x, max_dim, False, False)


class BlockApplication(NamedTuple):
    """Result of applying L_p^p to a block of vectors."""

    y: npt.NDArray[np.float64]
    krylov_dims: npt.NDArray[np.int64]
    unconverged: int


class PowerMeanOp:
    """Matrix-free x -> (1/T) sum_t (L_sym^(t) + eps I)^p x.

    Attributes:
        laplacians: One shifted Laplacian per layer.
        spec: The solve specification.
    """

    def __init__(self, laplacians: Sequence[ShiftedLaplacianOp], spec: PowerMeanSolveSpec) -> None:
        if not laplacians:
            raise ParameterError("A power mean operator needs at least one layer")
        if len({L.n for L in laplacians}) != 1:
            raise DimensionError("Layer operators differ in size")
        self.laplacians = tuple(laplacians)
        self.spec = spec
        self.workers = min(get_worker_count(spec.n_jobs), len(self.laplacians))
        self._executor: ThreadPoolExecutor | None = None

    @classmethod
    def from_graph(cls, G: MultilayerGraph, spec: PowerMeanSolveSpec) -> PowerMeanOp:
        """Shift every layer's normalized Laplacian by spec.epsilon."""
        eps = spec.epsilon
        return cls([shifted_laplacian(W, eps) for W in G.layers], spec)

    @property
    def n(self) -> int:
        return self.laplacians[0].n

    @property
    def T(self) -> int:
        return len(self.laplacians)

    @contextmanager
    def layer_pool(self) -> Iterator[None]:
        """Share one thread pool across every block application inside the with-block.

        Nested use keeps the outer pool; with a single worker nothing is started.
        """
        if self.workers <= 1 or self._executor is not None:
            yield
            return
        with ThreadPoolExecutor(max_workers=self.workers, thread_name_prefix="layer-solve") as executor:
            self._executor = executor
            try:
                yield
            finally:
                self._executor = None

    def _apply_layer(
        self, L: ShiftedLaplacianOp, X: npt.NDArray[np.float64]
    ) -> tuple[npt.NDArray[np.float64], npt.NDArray[np.int64], int]:
        spec = self.spec
        Y = np.empty_like(X)
        dims = np.zeros(X.shape[1], dtype=np.int64)
        unconverged = 0
        for j in range(X.shape[1]):
            result = pksm_apply(L, X[:, j], spec.p, spec.inner_tol, spec.krylov_max_dim)
            Y[:, j] = result.x
            dims[j] = result.dim
            unconverged += not result.converged
        return Y, dims, unconverged

    def apply_block(self, X: npt.ArrayLike) -> BlockApplication:
        """Apply the operator to every column of X.

        The per-layer solves run on up to `workers` threads; their results are
        summed in layer order, so the output does not depend on scheduling.
        """
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X[:, None]
        if X.shape[0] != self.n:
            raise DimensionError(f"Operator of size {self.n} cannot act on shape {X.shape}")
        if self.workers > 1:
            with self.layer_pool():
                per_layer = list(self._executor.map(lambda L: self._apply_layer(L, X), self.laplacians))
        else:
            per_layer = [self._apply_layer(L, X) for L in self.laplacians]
        total = np.zeros_like(X)
        for Y, _, _ in per_layer:
            total += Y
        dims = np.vstack([d for _, d, _ in per_layer])
        unconverged = sum(u for _, _, u in per_layer)
        return BlockApplication(total / self.T, dims, unconverged)

    def matvec(self, x: npt.ArrayLike) -> npt.NDArray[np.float64]:
        return self.apply_block(np.asarray(x, dtype=np.float64)[:, None]).y[:, 0]

    def to_dense(self) -> npt.NDArray[np.float64]:
        """Dense L_p^p; oracle use on small graphs only."""
        mats = [sym_matrix_power(L.to_dense(), self.spec.p) for L in self.laplacians]
        return sum(mats) / self.T


@dataclass
class EigenSolveResult:
    """The k smallest eigenpairs of L_p with solver diagnostics.

    Attributes:
        eigenvalues: Ascending eigenvalues of L_p.
        eigenvectors: n x k orthonormal eigenvectors.
        outer_iterations: Subspace iterations performed (0 for direct paths).
        krylov_dims: Largest Krylov dimension used per layer.
        converged: Whether every requested pair met outer_tol.
        residuals: Relative residual per returned pair.
        method: 'subspace', 'dense' or 'eigsh'.
    """

    eigenvalues: npt.NDArray[np.float64]
    eigenvectors: npt.NDArray[np.float64]
    outer_iterations: int
    krylov_dims: list[int]
    converged: bool
    residuals: npt.NDArray[np.float64] = field(default_factory=lambda: np.zeros(0))
    method: str = "subspace"


def _orthonormalize_block(Y: npt.NDArray[np.float64], rng: np.random.Generator) -> npt.NDArray[np.float64]:
    """Orthonormalize Y, replacing columns lost to round-off with random ones."""
    Y = Y.copy()
    for _ in range(Y.shape[1] + 1):
        try:
            return orthonormalize(Y)
        except RankDeficientError as e:
            logging.debug(f"Replacing dependent column {e.column} of the subspace block")
            Y[:, e.column] = rng.standard_normal(Y.shape[0])
    raise RankDeficientError("Could not complete the subspace block", Y.shape[1])


def _subspace_iteration(op: PowerMeanOp) -> EigenSolveResult:
    spec = op.spec
    n, k = op.n, spec.k
    b = min(spec.block_size or k + GUARD_VECTORS, n)
    rng = np.random.default_rng(spec.seed)
    X = _orthonormalize_block(rng.standard_normal((n, b)), rng)
    max_dims = np.zeros(op.T, dtype=np.int64)

    converged = False
    iteration = 0
    with op.layer_pool():
        for iteration in range(1, spec.outer_max_iter + 1):
            application = op.apply_block(X)
            max_dims = np.maximum(max_dims, application.krylov_dims.max(axis=1))
            Y = application.y
            G = X.T @ Y
            theta, S = scipy.linalg.eigh(0.5 * (G + G.T))
            order = np.argsort(-theta, kind="stable")
            theta, S = theta[order], S[:, order]
            X_ritz = X @ S
            Y_ritz = Y @ S
            residuals = np.linalg.norm(Y_ritz - X_ritz * theta, axis=0) / np.abs(theta)
            worst = float(residuals[:k].max())
            logging.debug(
                f"Subspace iteration {iteration}: residual={worst:.3e}, "
                f"krylov_dims={application.krylov_dims.max(axis=1).tolist()}"
            )
            if worst <= spec.outer_tol:
                converged = True
                break
            X = _orthonormalize_block(Y_ritz, rng)

    if not converged:
        logging.warning(
            f"Subspace iteration stopped after {iteration} iterations "
            f"with residual {worst:.3e} > {spec.outer_tol:.1e}"
        )
    theta_k = theta[:k]
    if np.any(theta_k <= 0):
        raise KrylovError(f"Non-positive Ritz values {theta_k} for a negative power")
    return EigenSolveResult(
        eigenvalues=theta_k ** (1.0 / spec.p),
        eigenvectors=X_ritz[:, :k],
        outer_iterations=iteration,
        krylov_dims=max_dims.tolist(),
        converged=converged,
        residuals=residuals[:k],
        method="subspace",
    )


def _dense_solve(op: PowerMeanOp) -> EigenSolveResult:
    spec = op.spec
    M = dense_power_mean([L.to_dense() for L in op.laplacians], spec.p)
    eigenvalues, V = dense_sym_eig(M)
    eigenvalues, V = eigenvalues[: spec.k], V[:, : spec.k]
    scale = np.maximum(np.abs(eigenvalues), 1e-300)
    residuals = np.linalg.norm(M @ V - V * eigenvalues, axis=0) / scale
    return EigenSolveResult(eigenvalues, V, 0, [0] * op.T, True, residuals, "dense")


def _arithmetic_eigsh(op: PowerMeanOp) -> EigenSolveResult:
    """Lanczos (ARPACK) on the mean Laplacian; eigenpairs of the largest part of (2+eps)I - L_1."""
    spec = op.spec
    top = 2.0 + spec.epsilon

    def flipped(x):
        total = sum(L.matvec(x) for L in op.laplacians)
        return top * x - total / op.T

    B = LinearOperator((op.n, op.n), matvec=flipped, matmat=flipped, dtype=np.float64)
    v0 = np.random.default_rng(spec.seed).standard_normal(op.n)
    mu, V = eigsh(B, k=spec.k, which="LA", tol=spec.outer_tol, v0=v0, maxiter=spec.outer_max_iter * op.n)
    eigenvalues = top - mu
    order = np.argsort(eigenvalues, kind="stable")
    eigenvalues, V = eigenvalues[order], V[:, order]
    applied = np.column_stack([top * V[:, j] - flipped(V[:, j]) for j in range(spec.k)])
    residuals = np.linalg.norm(applied - V * eigenvalues, axis=0) / np.abs(eigenvalues)
    return EigenSolveResult(eigenvalues, V, 0, [0] * op.T, True, residuals, "eigsh")


def power_mean_eigs(op: PowerMeanOp) -> EigenSolveResult:
    """Compute the k smallest eigenpairs of the power mean Laplacian L_p.

    p < 0 runs matrix-free subspace iteration on L_p^p. p > 0 and p = 0 use
    the dense power mean up to DENSE_LIMIT vertices; above it only p = 1 is
    supported, through ARPACK on the mean Laplacian.

    Raises:
        ParameterError: If k > n, or a dense-only exponent meets a graph larger
            than DENSE_LIMIT.
    """
    spec = op.spec
    if spec.k > op.n:
        raise ParameterError(f"Requested k={spec.k} eigenpairs of an operator of size {op.n}")
    if spec.p < 0:
        return _subspace_iteration(op)
    if op.n <= DENSE_LIMIT:
        return _dense_solve(op)
    if spec.p == 1:
        return _arithmetic_eigsh(op)
    raise ParameterError(
        f"p={spec.p} uses the dense path, which is limited to n <= {DENSE_LIMIT} (got n={op.n})"
    )


def recovery_condition(p: float, eps: float, rhos: npt.ArrayLike) -> bool:
    """Whether the informative eigenvectors sit at the bottom of L_p's spectrum.

    With mu_t = 1 - rho_t the condition reads m_p(mu + eps) < 1 + eps. At
    p = -inf it reduces to some layer being assortative (rho_t > 0), at
    p = +inf to all layers being assortative.

    Args:
        p: Exponent, +-inf allowed.
        eps: Diagonal shift.
        rhos: Per-layer rho_t = (p_in - p_out) / (p_in + (k - 1) p_out).
    """
    mu = 1.0 - np.asarray(rhos, dtype=np.float64)
    if p == -math.inf:
        return bool(mu.min() < 1.0)
    if p == math.inf:
        return bool(mu.max() < 1.0)
    shifted = mu + eps
    if p <= 0 and np.any(shifted == 0):
        # the mean of a vector with a zero entry tends to 0 as p -> 0^- and below
        return True
    return scalar_power_mean(shifted, p) < 1.0 + eps


def dense_power_mean_laplacian(
    G: MultilayerGraph, p: float, eps: float | None = None
) -> npt.NDArray[np.float64]:
    """Dense L_p of a multilayer graph; the oracle for the matrix-free solver."""
    eps = shift_for(p) if eps is None else eps
    return dense_power_mean([shifted_laplacian(W, eps).to_dense() for W in G.layers], p)


def common_eigenbasis(
    mats: Sequence[npt.NDArray[np.float64]], seed: int = 0, rtol: float = 1e-8
) -> npt.NDArray[np.float64]:
    """Orthonormal basis diagonalizing every matrix of a commuting family.

    Raises:
        ParameterError: If two matrices do not commute.
    """
    for i, A in enumerate(mats):
        for B in mats[i + 1 :]:
            gap = np.linalg.norm(A @ B - B @ A)
            if gap > rtol * max(np.linalg.norm(A) * np.linalg.norm(B), 1.0):
                raise ParameterError(f"Matrices do not commute (||AB - BA||_F = {gap:.3e})")
    weights = np.random.default_rng(seed).uniform(1.0, 2.0, len(mats))
    combination = sum(w * A for w, A in zip(weights, mats))
    return dense_sym_eig(combination).eigenvectors


def limit_power_mean_laplacian(
    G: MultilayerGraph, sign: int, eps: float = 0.0
) -> npt.NDArray[np.float64]:
    """The p -> +inf (sign=1) or p -> -inf (sign=-1) limit of L_p for commuting layers.

    On the shared eigenbasis the limit takes the max (resp. min) of the
    per-layer eigenvalues.

    Raises:
        ParameterError: If sign is not +-1 or the layers do not commute.
    """
    if sign not in (1, -1):
        raise ParameterError(f"sign must be 1 or -1, got {sign}")
    mats = [shifted_laplacian(W, eps).to_dense() for W in G.layers]
    V = common_eigenbasis(mats)
    per_layer = np.vstack([np.einsum("ij,ij->j", V, A @ V) for A in mats])
    values = per_layer.max(axis=0) if sign > 0 else per_layer.min(axis=0)
    result = (V * values) @ V.T
    return 0.5 * (result + result.T)
