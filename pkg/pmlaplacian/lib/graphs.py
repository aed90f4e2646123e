"""Multilayer graphs, shifted normalized Laplacians and k-NN graph construction."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import numpy.typing as npt
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components
from scipy.sparse.linalg import LinearOperator

from pmlaplacian.lib.errors import DimensionError, IsolatedVertexError, ParameterError
from pmlaplacian.lib.linalg import SparseSymMatrix

# Shift applied for the log-Euclidean (p = 0) mean.
ZERO_P_SHIFT = 1e-6
# Row block used when forming correlations, bounds the k-NN working set.
KNN_CHUNK = 1024


def shift_for(p: float) -> float:
    """Diagonal shift that makes the layer Laplacians safe for the power p.

    Args:
        p: Power mean exponent (may be +-inf).

    Returns:
        log(1 + |p|) for p < 0, 1e-6 for p = 0 and 0 for p > 0.
    """
    if p < 0:
        return math.log1p(abs(p))
    if p == 0:
        return ZERO_P_SHIFT
    return 0.0


@dataclass(frozen=True)
class MultilayerGraph:
    """T layers over a shared vertex set.

    Attributes:
        layers: Ordered adjacency matrices, all n x n.
    """

    layers: tuple[SparseSymMatrix, ...]

    def __post_init__(self) -> None:
        if not self.layers:
            raise ParameterError("A multilayer graph needs at least one layer")
        sizes = {layer.n for layer in self.layers}
        if len(sizes) != 1:
            raise DimensionError(f"Layers disagree on vertex count: {sorted(sizes)}")

    @classmethod
    def from_matrices(cls, matrices: Sequence) -> MultilayerGraph:
        """Build from scipy sparse matrices, dense arrays or SparseSymMatrix objects."""
        layers = []
        for matrix in matrices:
            if isinstance(matrix, SparseSymMatrix):
                layers.append(matrix)
            elif sp.issparse(matrix):
                layers.append(SparseSymMatrix.from_scipy(matrix))
            else:
                layers.append(SparseSymMatrix.from_dense(matrix))
        return cls(tuple(layers))

    @property
    def n(self) -> int:
        return self.layers[0].n

    @property
    def T(self) -> int:
        return len(self.layers)

    def aggregate(self) -> SparseSymMatrix:
        """Mean adjacency (1/T) sum W^(t)."""
        total = self.layers[0].csr.copy()
        for layer in self.layers[1:]:
            total = total + layer.csr
        return SparseSymMatrix.from_scipy(total / self.T)

    def subgraph(self, indices: npt.ArrayLike) -> MultilayerGraph:
        """Induced multilayer subgraph on the given vertices (in the given order)."""
        idx = np.asarray(indices, dtype=np.int64)
        return MultilayerGraph(
            tuple(SparseSymMatrix.from_scipy(layer.csr[idx][:, idx]) for layer in self.layers)
        )

    def densities(self) -> list[float]:
        """Edge density of every layer, self-loops excluded."""
        pairs = self.n * (self.n - 1)
        result = []
        for layer in self.layers:
            off_diagonal = layer.nnz - int(np.count_nonzero(layer.csr.diagonal()))
            result.append(off_diagonal / pairs if pairs else 0.0)
        return result


@dataclass(frozen=True, eq=False)
class ShiftedLaplacianOp:
    """Matrix-free (1+eps) x - D^-1/2 W D^-1/2 x for one layer.

    Attributes:
        W: The layer adjacency.
        inv_sqrt_deg: Vector of d_i^-1/2, all degrees positive.
        shift: The diagonal shift eps >= 0.
    """

    W: SparseSymMatrix
    inv_sqrt_deg: npt.NDArray[np.float64]
    shift: float
    _scaled: sp.csr_matrix = field(repr=False, compare=False, default=None)

    @property
    def n(self) -> int:
        return self.W.n

    @property
    def tau(self) -> float:
        return 1.0 + self.shift

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n, self.n)

    def matvec(self, x: npt.ArrayLike) -> npt.NDArray[np.float64]:
        """Apply the operator to a vector or an (n, m) block."""
        x = np.asarray(x, dtype=np.float64)
        if x.shape[0] != self.n or x.ndim > 2:
            raise DimensionError(f"Operator of size {self.n} cannot act on shape {x.shape}")
        if x.ndim == 1:
            return self.tau * x - self.inv_sqrt_deg * (self.W.csr @ (self.inv_sqrt_deg * x))
        d = self.inv_sqrt_deg[:, None]
        return self.tau * x - d * (self.W.csr @ (d * x))

    __matmul__ = matvec

    def normalized_adjacency(self) -> sp.csr_matrix:
        """D^-1/2 W D^-1/2 as a sparse matrix."""
        if self._scaled is None:
            D = sp.diags(self.inv_sqrt_deg)
            object.__setattr__(self, "_scaled", sp.csr_matrix(D @ self.W.csr @ D))
        return self._scaled

    def as_linear_operator(self) -> LinearOperator:
        return LinearOperator(self.shape, matvec=self.matvec, matmat=self.matvec, dtype=np.float64)

    def to_dense(self) -> npt.NDArray[np.float64]:
        """Assemble the operator densely; for oracles on small graphs only."""
        dense = self.tau * np.eye(self.n) - self.normalized_adjacency().toarray()
        return 0.5 * (dense + dense.T)


def shifted_laplacian(W: SparseSymMatrix, eps: float) -> ShiftedLaplacianOp:
    """Build the shifted normalized Laplacian of one layer.

    Args:
        W: Layer adjacency.
        eps: Nonnegative diagonal shift.

    Returns:
        A matrix-free ShiftedLaplacianOp.

    Raises:
        IsolatedVertexError: If some vertices have zero degree.
        ParameterError: If eps is negative or not finite.
    """
    if not (eps >= 0 and math.isfinite(eps)):
        raise ParameterError(f"Shift must be finite and nonnegative, got {eps}")
    degrees = W.degrees()
    isolated = np.flatnonzero(degrees <= 0)
    if isolated.size:
        shown = ", ".join(str(v) for v in isolated[:20])
        more = "" if isolated.size <= 20 else f" (+{isolated.size - 20} more)"
        raise IsolatedVertexError(
            f"{isolated.size} isolated vertices: {shown}{more}", isolated.tolist()
        )
    return ShiftedLaplacianOp(W, 1.0 / np.sqrt(degrees), float(eps))


def _standardize_rows(F: npt.ArrayLike) -> npt.NDArray[np.float64]:
    """Center every row and scale it to unit norm, so row dot products are correlations."""
    F = np.asarray(F, dtype=np.float64)
    if F.ndim != 2:
        raise DimensionError(f"Feature matrix must be 2-D, got shape {F.shape}")
    centered = F - F.mean(axis=1, keepdims=True)
    norms = np.linalg.norm(centered, axis=1)
    constant = np.flatnonzero(norms <= 1e-12 * np.maximum(np.abs(F).max(axis=1), 1.0))
    if constant.size:
        raise ValueError(f"Rows with zero variance cannot be correlated: {constant[:20].tolist()}")
    return centered / norms[:, None]


def pearson_correlation(F: npt.ArrayLike) -> npt.NDArray[np.float64]:
    """Pearson correlation between all pairs of rows, rounded to 12 decimals."""
    Z = _standardize_rows(F)
    return np.round(np.clip(Z @ Z.T, -1.0, 1.0), 12)


def knn_graph(F: npt.ArrayLike, k: int) -> SparseSymMatrix:
    """Unweighted k-nearest-neighbour graph under Pearson correlation.

    Each row links to the k rows most correlated with it (ties to the lower
    index); the graph is symmetrized by union.

    Args:
        F: n x d feature matrix, one sample per row.
        k: Neighbours per vertex, 1 <= k < n.

    Returns:
        Symmetric binary adjacency with minimum degree >= k.

    Raises:
        ParameterError: If k is outside [1, n).
        ValueError: If a row is constant.
    """
    F = np.asarray(F, dtype=np.float64)
    n = F.shape[0]
    if not 1 <= k < n:
        raise ParameterError(f"k must satisfy 1 <= k < n={n}, got {k}")
    Z = _standardize_rows(F)

    rows = np.repeat(np.arange(n), k)
    cols = np.empty(n * k, dtype=np.int64)
    for start in range(0, n, KNN_CHUNK):
        stop = min(start + KNN_CHUNK, n)
        C = np.round(np.clip(Z[start:stop] @ Z.T, -1.0, 1.0), 12)
        C[np.arange(stop - start), np.arange(start, stop)] = -np.inf
        nearest = np.argsort(-C, axis=1, kind="stable")[:, :k]
        cols[start * k : stop * k] = nearest.ravel()

    selected = sp.csr_matrix((np.ones(n * k), (rows, cols)), shape=(n, n))
    union = (selected + selected.T).astype(bool).astype(np.float64)
    logging.debug(f"k-NN graph: n={n}, k={k}, edges={union.nnz // 2}")
    return SparseSymMatrix.from_scipy(union)


def largest_component(G: MultilayerGraph) -> tuple[MultilayerGraph, npt.NDArray[np.int64]]:
    """Restrict to vertices inside the largest connected component of every layer.

    Restricting one layer can disconnect another, so the intersection is
    iterated until it stops shrinking.

    Returns:
        The induced subgraph and the kept vertex indices (ascending).

    Raises:
        ValueError: If no vertex survives.
    """
    kept = np.arange(G.n)
    current = G
    while True:
        mask = np.ones(current.n, dtype=bool)
        for layer in current.layers:
            _, labels = connected_components(layer.csr, directed=False)
            sizes = np.bincount(labels)
            mask &= labels == int(np.argmax(sizes))
            mask &= layer.degrees() > 0
        if mask.all():
            break
        if not mask.any():
            raise ValueError("No vertex lies in the largest component of every layer")
        kept = kept[mask]
        current = G.subgraph(kept)
    if kept.size < G.n:
        logging.info(f"Largest common component keeps {kept.size} of {G.n} vertices")
    return current, kept
