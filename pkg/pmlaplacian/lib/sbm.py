"""Stochastic block model generators and their analytic eigenstructure.

Case 1: k equal clusters shared by all layers, per-layer (p_in, p_out).
Case 2: three clusters and three layers; layer t only separates C_t from the
rest. Case 3: per-layer partitions that copy the previous layer with
probability p_tilde, planted-partition edges with mixing mu.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np
import numpy.typing as npt
import scipy.sparse as sp

from pmlaplacian.constants import RESAMPLE_ATTEMPTS
from pmlaplacian.lib.errors import ParameterError, SamplingError
from pmlaplacian.lib.graphs import MultilayerGraph
from pmlaplacian.lib.linalg import SparseSymMatrix
from pmlaplacian.lib.powermean import dense_power_mean, scalar_power_mean


def _check_probability(name: str, value: float) -> None:
    if not 0.0 <= value <= 1.0:
        raise ParameterError(f"{name} must lie in [0, 1], got {value}")


@dataclass(frozen=True)
class Case1Params:
    """k clusters of equal size shared by all layers.

    Attributes:
        k: Number of clusters.
        cluster_size: Vertices per cluster.
        layers: (p_in, p_out) for every layer.
        seed: Sampler seed.
    """

    k: int
    cluster_size: int
    layers: tuple[tuple[float, float], ...]
    seed: int = 0

    def __post_init__(self) -> None:
        if self.k < 1 or self.cluster_size < 1:
            raise ParameterError(f"Need k >= 1 and cluster_size >= 1, got {self.k}, {self.cluster_size}")
        if not self.layers:
            raise ParameterError("Case 1 needs at least one layer")
        for t, (p_in, p_out) in enumerate(self.layers):
            _check_probability(f"p_in of layer {t}", p_in)
            _check_probability(f"p_out of layer {t}", p_out)

    @property
    def n(self) -> int:
        return self.k * self.cluster_size

    @property
    def T(self) -> int:
        return len(self.layers)


@dataclass(frozen=True)
class Case2Params:
    """Three clusters of `cluster_size` vertices and three layers."""

    cluster_size: int
    p_in: float
    p_out: float
    seed: int = 0

    def __post_init__(self) -> None:
        if self.cluster_size < 1:
            raise ParameterError(f"cluster_size must be positive, got {self.cluster_size}")
        if not 0.0 < self.p_out <= self.p_in <= 1.0:
            raise ParameterError(f"Need 0 < p_out <= p_in <= 1, got p_in={self.p_in}, p_out={self.p_out}")

    @property
    def n(self) -> int:
        return 3 * self.cluster_size

    @property
    def alpha(self) -> float:
        return self.p_in + 2 * self.p_out

    @property
    def beta(self) -> float:
        return 2 * self.p_in + self.p_out


@dataclass(frozen=True)
class Case3Params:
    """Layer partitions with interlayer copying and planted-partition edges.

    Attributes:
        n: Vertices.
        T: Layers.
        K: Communities.
        p_tilde: Probability that a vertex keeps its previous-layer label.
        mu: Fraction of edge mass that ignores communities.
        c: Expected degree.
        seed: Sampler seed.
    """

    n: int
    T: int
    K: int
    p_tilde: float
    mu: float
    c: float = 10.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n < 2 or self.T < 1 or self.K < 1:
            raise ParameterError(f"Need n >= 2, T >= 1 and K >= 1, got {self.n}, {self.T}, {self.K}")
        _check_probability("p_tilde", self.p_tilde)
        _check_probability("mu", self.mu)
        if self.c <= 0:
            raise ParameterError(f"Expected degree must be positive, got {self.c}")

    def edge_probabilities(self) -> tuple[float, float]:
        """(p_in, p_out) giving expected degree c with a fraction mu of unstructured edges.

        Raises:
            ParameterError: If a derived probability exceeds 1.
        """
        p_in = self.c * (1 - self.mu + self.mu / self.K) * self.K / self.n
        p_out = self.c * self.mu / self.n
        if p_in > 1 or p_out > 1:
            raise ParameterError(
                f"Derived edge probabilities exceed 1 (p_in={p_in:.4g}, p_out={p_out:.4g}); "
                f"lower c or raise n"
            )
        return p_in, p_out


@dataclass
class GroundTruth:
    """Planted clusters.

    Attributes:
        labels: Consensus label per vertex in [0, k).
        k: Number of clusters.
        layer_labels: Per-layer labels (T x n) when layers differ.
    """

    labels: npt.NDArray[np.int64]
    k: int
    layer_labels: npt.NDArray[np.int64] | None = None


def ground_truth_case1(params: Case1Params) -> GroundTruth:
    return GroundTruth(np.repeat(np.arange(params.k), params.cluster_size), params.k)


def ground_truth_case2(params: Case2Params) -> GroundTruth:
    return GroundTruth(np.repeat(np.arange(3), params.cluster_size), 3)


def chi_vectors(labels: npt.ArrayLike, k: int) -> npt.NDArray[np.float64]:
    """The informative vectors chi_1 = 1 and chi_i = (k-1) 1_{C_i} - 1_{not C_i}, i >= 2."""
    labels = np.asarray(labels)
    columns = [np.ones(labels.size)]
    for i in range(1, k):
        columns.append(np.where(labels == i, k - 1.0, -1.0))
    return np.column_stack(columns)


def case1_rho(params: Case1Params) -> npt.NDArray[np.float64]:
    """rho_t = (p_in - p_out) / (p_in + (k-1) p_out) for every layer."""
    rhos = []
    for t, (p_in, p_out) in enumerate(params.layers):
        denominator = p_in + (params.k - 1) * p_out
        if denominator == 0:
            raise ParameterError(f"Layer {t} has no edges in expectation")
        rhos.append((p_in - p_out) / denominator)
    return np.asarray(rhos)


def expected_adjacency_case1(params: Case1Params, t: int) -> npt.NDArray[np.float64]:
    """Block-constant expected adjacency of layer t, diagonal p_in included."""
    p_in, p_out = params.layers[t]
    labels = ground_truth_case1(params).labels
    return np.where(labels[:, None] == labels[None, :], p_in, p_out)


class Case1Spectrum(NamedTuple):
    """Eigenvalues of an expected Case-1 operator by eigenspace.

    constant belongs to chi_1, informative to chi_2..chi_k, bulk to the
    remaining n - k directions.
    """

    constant: float
    informative: float
    bulk: float

    def full(self, n: int, k: int) -> npt.NDArray[np.float64]:
        values = [self.constant] + [self.informative] * (k - 1) + [self.bulk] * (n - k)
        return np.sort(np.asarray(values))


def case1_expected_spectrum(params: Case1Params, t: int, eps: float) -> Case1Spectrum:
    """Spectrum of L_sym + eps I for expected layer t: eps, 1 - rho_t + eps, 1 + eps."""
    rho = case1_rho(params)[t]
    return Case1Spectrum(eps, 1.0 - rho + eps, 1.0 + eps)


def case1_power_mean_spectrum(params: Case1Params, p: float, eps: float) -> Case1Spectrum:
    """Spectrum of L_p for expected Case-1 layers, from per-eigenspace scalar means."""
    mu = 1.0 - case1_rho(params)
    return Case1Spectrum(eps, scalar_power_mean(mu + eps, p), 1.0 + eps)


def expected_adjacency_case2(params: Case2Params, t: int) -> npt.NDArray[np.float64]:
    """Expected layer t: p_in inside C_t and inside its complement, p_out across."""
    if t not in (0, 1, 2):
        raise ParameterError(f"Case 2 has layers 0, 1, 2; got {t}")
    side = ground_truth_case2(params).labels == t
    return np.where(side[:, None] == side[None, :], params.p_in, params.p_out)


def _case2_reduced_adjacency(params: Case2Params, t: int) -> npt.NDArray[np.float64]:
    side = np.arange(3) == t
    return np.where(side[:, None] == side[None, :], params.p_in, params.p_out)


def case2_reduced_laplacians(params: Case2Params, eps: float) -> list[npt.NDArray[np.float64]]:
    """Cluster-level 3x3 shifted Laplacians tau I - D~^-1/2 W~ D~^-1/2, one per layer.

    The full layer Laplacian equals this matrix on cluster indicator vectors
    and tau on vectors summing to zero within every cluster.
    """
    tau = 1.0 + eps
    result = []
    for t in range(3):
        W = _case2_reduced_adjacency(params, t)
        d = 1.0 / np.sqrt(W.sum(axis=1))
        result.append(tau * np.eye(3) - d[:, None] * W * d[None, :])
    return result


class Case2LayerEigen(NamedTuple):
    """Smallest two eigenpairs of one expected Case-2 layer.

    Eigenvectors have the form s 1_{C_t} + 1_{not C_t} with s = s_plus for the
    smallest eigenvalue and s = s_minus for the second one.
    """

    smallest: float
    second: float
    s_plus: float
    s_minus: float
    delta: float


def case2_layer_eigenpairs(params: Case2Params, eps: float) -> Case2LayerEigen:
    """Closed form of the two smallest eigenpairs of an expected Case-2 layer."""
    alpha, beta = params.alpha, params.beta
    a = params.p_in / alpha
    b = params.p_out / math.sqrt(alpha * beta)
    c = params.p_in / beta
    delta = math.sqrt((a - 2 * c) ** 2 + 8 * b**2)
    tau = 1.0 + eps
    s_plus = math.sqrt(alpha / beta)
    return Case2LayerEigen(
        smallest=eps,
        second=tau - (a + 2 * c - delta) / 2,
        s_plus=s_plus,
        s_minus=-2.0 / s_plus,
        delta=delta,
    )


def case2_layer_vectors(params: Case2Params, t: int, s: float) -> npt.NDArray[np.float64]:
    """Unit vector proportional to s 1_{C_t} + 1_{not C_t}."""
    labels = ground_truth_case2(params).labels
    v = np.where(labels == t, s, 1.0)
    return v / np.linalg.norm(v)


class Case2Spectrum(NamedTuple):
    """Eigenvalues of L_p for the expected Case-2 triple.

    double: eigenvalue of the cluster-difference vectors (multiplicity 2).
    simple: eigenvalue of the constant vector.
    bulk: tau, multiplicity n - 3.
    """

    double: float
    simple: float
    bulk: float


def case2_power_mean_spectrum(params: Case2Params, p: float, eps: float) -> Case2Spectrum:
    """Spectrum of L_p for the expected Case-2 triple via the 3x3 reduced means."""
    reduced = dense_power_mean(case2_reduced_laplacians(params, eps), p)
    ones = np.ones(3) / math.sqrt(3)
    simple = float(ones @ reduced @ ones)
    double = float((np.trace(reduced) - simple) / 2)
    return Case2Spectrum(double, simple, 1.0 + eps)


def _triangle_pairs(linear: npt.NDArray[np.int64]) -> tuple[npt.NDArray[np.int64], npt.NDArray[np.int64]]:
    """Map linear indices of the strict lower triangle (row-major) to (i, j), i > j."""
    i = ((1 + np.sqrt(1 + 8 * linear.astype(np.float64))) // 2).astype(np.int64)
    # float rounding can be off by one near perfect squares
    i -= (i * (i - 1) // 2) > linear
    i += ((i + 1) * i // 2) <= linear
    j = linear - i * (i - 1) // 2
    return i, j


def _bernoulli_positions(total: int, p: float, rng: np.random.Generator) -> npt.NDArray[np.int64]:
    """Positions in [0, total) kept by independent Bernoulli(p) trials, by geometric skipping."""
    if total <= 0 or p <= 0:
        return np.zeros(0, dtype=np.int64)
    if p >= 1:
        return np.arange(total, dtype=np.int64)
    chunks = []
    position = -1
    mean = total * p
    batch = int(mean + 5 * math.sqrt(mean) + 16)
    while True:
        gaps = rng.geometric(p, size=batch)
        positions = position + np.cumsum(gaps)
        inside = positions[positions < total]
        chunks.append(inside)
        if inside.size < positions.size:
            break
        position = int(positions[-1])
    return np.concatenate(chunks)


def sample_planted_partition(
    groups: npt.ArrayLike, p_in: float, p_out: float, rng: np.random.Generator
) -> SparseSymMatrix:
    """Sample a simple undirected graph with block probabilities p_in / p_out.

    Every unordered pair {i, j}, i != j, is an independent Bernoulli trial
    with p_in if groups[i] == groups[j] and p_out otherwise. Block pairs are
    sampled by geometric skipping, so memory is proportional to the edges.

    Args:
        groups: Group label per vertex.
        p_in: Within-group probability.
        p_out: Between-group probability.
        rng: Random generator; consumed in a fixed order.

    Returns:
        Binary symmetric adjacency without self-loops.
    """
    _check_probability("p_in", p_in)
    _check_probability("p_out", p_out)
    groups = np.asarray(groups)
    n = groups.size
    members = [np.flatnonzero(groups == g) for g in np.unique(groups)]
    rows, cols = [], []
    for a, first in enumerate(members):
        m = first.size
        linear = _bernoulli_positions(m * (m - 1) // 2, p_in, rng)
        i, j = _triangle_pairs(linear)
        rows.append(first[i])
        cols.append(first[j])
        for second in members[a + 1 :]:
            linear = _bernoulli_positions(m * second.size, p_out, rng)
            rows.append(first[linear // second.size])
            cols.append(second[linear % second.size])
    r = np.concatenate(rows).astype(np.int32)
    c = np.concatenate(cols).astype(np.int32)
    data = np.ones(2 * r.size, dtype=np.float64)
    matrix = sp.csr_matrix((data, (np.concatenate([r, c]), np.concatenate([c, r]))), shape=(n, n))
    return SparseSymMatrix.from_scipy(matrix, check=False)


def sample_layer(
    groups: npt.ArrayLike,
    p_in: float,
    p_out: float,
    rng: np.random.Generator,
    attempts: int = RESAMPLE_ATTEMPTS,
) -> SparseSymMatrix:
    """Sample a planted-partition layer, redrawing while it has isolated vertices.

    Raises:
        SamplingError: If every one of `attempts` draws had an isolated vertex.
    """
    for attempt in range(1, attempts + 1):
        layer = sample_planted_partition(groups, p_in, p_out, rng)
        if np.all(np.diff(layer.row_ptr) > 0):
            if attempt > 1:
                logging.warning(f"Layer needed {attempt} draws to avoid isolated vertices")
            return layer
    raise SamplingError(
        f"Every one of {attempts} draws (p_in={p_in}, p_out={p_out}) had isolated vertices"
    )


def sample_case1(params: Case1Params) -> tuple[MultilayerGraph, GroundTruth]:
    """Sample every Case-1 layer from one generator seeded with params.seed."""
    rng = np.random.default_rng(params.seed)
    truth = ground_truth_case1(params)
    layers = tuple(sample_layer(truth.labels, p_in, p_out, rng) for p_in, p_out in params.layers)
    return MultilayerGraph(layers), truth


def sample_case2(params: Case2Params) -> tuple[MultilayerGraph, GroundTruth]:
    """Sample the three Case-2 layers; layer t splits C_t from the other two clusters."""
    rng = np.random.default_rng(params.seed)
    truth = ground_truth_case2(params)
    layers = tuple(
        sample_layer(truth.labels == t, params.p_in, params.p_out, rng) for t in range(3)
    )
    return MultilayerGraph(layers), truth


def consensus_labels(layer_labels: npt.ArrayLike, K: int) -> npt.NDArray[np.int64]:
    """Most frequent label of every vertex across layers; ties go to the smaller label."""
    layer_labels = np.asarray(layer_labels, dtype=np.int64)
    n = layer_labels.shape[1]
    counts = np.zeros((n, K), dtype=np.int64)
    for labels in layer_labels:
        np.add.at(counts, (np.arange(n), labels), 1)
    return np.argmax(counts, axis=1)


def sample_case3_partitions(params: Case3Params, rng: np.random.Generator) -> npt.NDArray[np.int64]:
    """T x n labels: uniform first layer, then copy with probability p_tilde or redraw."""
    labels = np.empty((params.T, params.n), dtype=np.int64)
    labels[0] = rng.integers(params.K, size=params.n)
    for t in range(1, params.T):
        keep = rng.random(params.n) < params.p_tilde
        fresh = rng.integers(params.K, size=params.n)
        labels[t] = np.where(keep, labels[t - 1], fresh)
    return labels


def sample_case3(params: Case3Params) -> tuple[MultilayerGraph, GroundTruth]:
    """Sample Case-3 partitions and layers; ground truth is the per-vertex modal label."""
    p_in, p_out = params.edge_probabilities()
    rng = np.random.default_rng(params.seed)
    layer_labels = sample_case3_partitions(params, rng)
    layers = tuple(sample_layer(labels, p_in, p_out, rng) for labels in layer_labels)
    truth = GroundTruth(consensus_labels(layer_labels, params.K), params.K, layer_labels)
    return MultilayerGraph(layers), truth


def expected_graph(matrices: Sequence[npt.ArrayLike]) -> MultilayerGraph:
    """Wrap expected adjacency matrices as a weighted multilayer graph."""
    return MultilayerGraph.from_matrices(matrices)
