"""Spectral clustering with the power mean Laplacian, baselines and scoring."""

from __future__ import annotations

import dataclasses
import itertools
import logging
from dataclasses import dataclass

import numpy as np
import numpy.typing as npt
from sklearn.cluster import KMeans

from pmlaplacian.constants import KMEANS_RESTARTS, MAX_MATCHED_LABELS
from pmlaplacian.lib.errors import DimensionError, ParameterError
from pmlaplacian.lib.graphs import MultilayerGraph
from pmlaplacian.lib.powermean import EigenSolveResult, PowerMeanOp, PowerMeanSolveSpec, power_mean_eigs


@dataclass
class ClusteringResult:
    """Labels plus the spectral data they came from.

    Attributes:
        labels: Cluster index per vertex, in [0, k).
        embedding: n x k eigenvector matrix whose rows were clustered.
        eigenvalues: The k smallest eigenvalues, ascending.
        solve: Solver diagnostics.
        method: Name of the method that produced the result.
        degenerate: True when k-means left a cluster empty.
    """

    labels: npt.NDArray[np.int64]
    embedding: npt.NDArray[np.float64]
    eigenvalues: npt.NDArray[np.float64]
    solve: EigenSolveResult
    method: str = "power_mean"
    degenerate: bool = False

    @property
    def converged(self) -> bool:
        return self.solve.converged

    @property
    def outer_iterations(self) -> int:
        return self.solve.outer_iterations


def kmeans(
    points: npt.ArrayLike, k: int, seed: int = 0, restarts: int = KMEANS_RESTARTS
) -> npt.NDArray[np.int64]:
    """Lloyd k-means from k-means++ seeding, best of `restarts` runs by inertia.

    Args:
        points: n x d array.
        k: Number of clusters, at most n.
        seed: Seed for the seeding and restarts.
        restarts: Independent runs.

    Returns:
        Label per point.

    Raises:
        ParameterError: If k > n or k < 1.
    """
    points = np.asarray(points, dtype=np.float64)
    if points.ndim == 1:
        points = points[:, None]
    n = points.shape[0]
    if not 1 <= k <= n:
        raise ParameterError(f"k-means needs 1 <= k <= n, got k={k}, n={n}")
    model = KMeans(
        n_clusters=k,
        init="k-means++",
        n_init=restarts,
        random_state=seed,
        algorithm="lloyd",
    )
    return model.fit_predict(points).astype(np.int64)


def spectral_cluster(
    G: MultilayerGraph,
    k: int,
    spec: PowerMeanSolveSpec,
    method: str = "power_mean",
) -> ClusteringResult:
    """Cluster the rows of the k smallest eigenvectors of L_p with k-means.

    Args:
        G: Multilayer graph without isolated vertices.
        k: Number of clusters; overrides spec.k.
        spec: Solve specification (p, shift, tolerances, seed).
        method: Label stored on the result.

    Returns:
        ClusteringResult; a non-converged solve still yields labels.
    """
    if spec.k != k:
        spec = dataclasses.replace(spec, k=k)
    solve = power_mean_eigs(PowerMeanOp.from_graph(G, spec))
    labels = kmeans(solve.eigenvectors, k, spec.seed)
    degenerate = np.unique(labels).size < k
    if degenerate:
        logging.warning(f"k-means returned {np.unique(labels).size} non-empty clusters of {k}")
    return ClusteringResult(labels, solve.eigenvectors, solve.eigenvalues, solve, method, degenerate)


def baseline_agg(G: MultilayerGraph, k: int, seed: int = 0) -> ClusteringResult:
    """Spectral clustering of the normalized Laplacian of the mean adjacency."""
    aggregate = MultilayerGraph((G.aggregate(),))
    return spectral_cluster(aggregate, k, PowerMeanSolveSpec(p=1, k=k, shift=0.0, seed=seed), "agg")


def baseline_arithmetic(G: MultilayerGraph, k: int, seed: int = 0) -> ClusteringResult:
    """Spectral clustering with the arithmetic mean Laplacian L_1."""
    return spectral_cluster(G, k, PowerMeanSolveSpec(p=1, k=k, shift=0.0, seed=seed), "arithmetic")


def baseline_single_layer(G: MultilayerGraph, t: int, k: int, seed: int = 0) -> ClusteringResult:
    """Spectral clustering of layer t alone."""
    if not 0 <= t < G.T:
        raise ParameterError(f"Layer {t} does not exist in a graph with {G.T} layers")
    single = MultilayerGraph((G.layers[t],))
    return spectral_cluster(single, k, PowerMeanSolveSpec(p=1, k=k, shift=0.0, seed=seed), f"layer{t}")


def clustering_error(pred: npt.ArrayLike, truth: npt.ArrayLike) -> float:
    """Fraction of misclassified vertices under the best matching of labels.

    Args:
        pred: Predicted labels.
        truth: Reference labels, same length.

    Returns:
        min over label permutations of the mismatch rate, in [0, 1].

    Raises:
        DimensionError: If the lengths differ.
        ParameterError: If either side uses more than 8 distinct labels.
    """
    pred = np.asarray(pred).ravel()
    truth = np.asarray(truth).ravel()
    if pred.shape != truth.shape:
        raise DimensionError(f"Label vectors differ in length: {pred.size} vs {truth.size}")
    if pred.size == 0:
        return 0.0
    pred_values, pred_idx = np.unique(pred, return_inverse=True)
    truth_values, truth_idx = np.unique(truth, return_inverse=True)
    size = max(pred_values.size, truth_values.size)
    if size > MAX_MATCHED_LABELS:
        raise ParameterError(
            f"Exact matching supports at most {MAX_MATCHED_LABELS} labels, got {size}; "
            f"use a Hungarian assignment instead"
        )
    confusion = np.zeros((size, size), dtype=np.int64)
    np.add.at(confusion, (pred_idx, truth_idx), 1)
    permutations = np.array(list(itertools.permutations(range(size))), dtype=np.int64)
    matched = confusion[np.arange(size), permutations].sum(axis=1).max()
    return float(1.0 - matched / pred.size)
