"""Experiment engine behind the pml subcommands."""

from __future__ import annotations

import logging
import sys
import time
from dataclasses import dataclass
from typing import Any, Callable, Sequence

import numpy as np
import numpy.typing as npt

from pmlaplacian.constants import DENSE_LIMIT, GUARD_VECTORS, KRYLOV_MAX_DIM, OUTER_TOL
from pmlaplacian.lib.clustering import (
    ClusteringResult,
    baseline_agg,
    baseline_arithmetic,
    baseline_single_layer,
    clustering_error,
    spectral_cluster,
)
from pmlaplacian.lib.errors import ParameterError, UsageError
from pmlaplacian.lib.graph_io import load_bundle, load_features, load_labels, save_bundle
from pmlaplacian.lib.graphs import MultilayerGraph, knn_graph, largest_component, shift_for
from pmlaplacian.lib.linalg import dense_sym_eig, orthonormalize
from pmlaplacian.lib.powermean import (
    PowerMeanOp,
    PowerMeanSolveSpec,
    dense_power_mean_laplacian,
    power_mean_eigs,
)
from pmlaplacian.lib.results import build_metadata, derive_seed, summarize, write_csv
from pmlaplacian.lib.sbm import (
    Case1Params,
    Case2Params,
    Case3Params,
    GroundTruth,
    chi_vectors,
    expected_adjacency_case2,
    expected_graph,
    ground_truth_case2,
    sample_case1,
    sample_case2,
    sample_case3,
    sample_layer,
)
from pmlaplacian.lib.sweep_manager import SweepJob, SweepManager
from pmlaplacian.lib.threads import describe_threading, get_available_memory, get_worker_count, single_thread

SWEEP_FIELDS = [
    "point",
    "method",
    "p",
    "run",
    "seed",
    "clustering_error",
    "outer_iterations",
    "converged",
    "wall_ms",
    "error",
]
SUMMARY_FIELDS = ["point", "method", "p", "mean", "std", "runs", "failed"]
BENCHMARK_FIELDS = ["n", "p", "run", "wall_ms", "krylov_dims", "outer_iterations", "converged", "error"]
SPECTRUM_FIELDS = ["p", "index", "eigenvalue", "projection", "informative", "method", "error"]
INFORMATIVE_PROJECTION = 0.5


@dataclass
class SweepPoint:
    """One point of a sweep: its CSV columns and how to sample a graph there.

    Attributes:
        params: Parameter columns written into every row of the point.
        sampler: Maps a seed to a sampled graph and its ground truth.
        T: Number of layers the sampler produces.
        k: Number of clusters to look for.
    """

    params: dict[str, Any]
    sampler: Callable[[int], tuple[MultilayerGraph, GroundTruth]]
    T: int
    k: int


def case1_sweep_points(
    k: int, cluster_size: int, p_in: float, p_out: float, points: int
) -> list[SweepPoint]:
    """Layer 1 fixed at (p_in, p_out); layer 2 moves from (p_out, p_in) to (p_in, p_out)."""
    if points < 1:
        raise ParameterError(f"A sweep needs at least one point, got {points}")
    result = []
    for fraction in np.linspace(0.0, 1.0, points):
        layer2 = (float(p_out + fraction * (p_in - p_out)), float(p_in + fraction * (p_out - p_in)))

        def sampler(seed: int, layer2=layer2) -> tuple[MultilayerGraph, GroundTruth]:
            return sample_case1(Case1Params(k, cluster_size, ((p_in, p_out), layer2), seed))

        result.append(SweepPoint({"layer2_p_in": layer2[0], "layer2_p_out": layer2[1]}, sampler, 2, k))
    return result


def case2_points(cluster_size: int, p_in: float, p_out: float) -> list[SweepPoint]:
    def sampler(seed: int) -> tuple[MultilayerGraph, GroundTruth]:
        return sample_case2(Case2Params(cluster_size, p_in, p_out, seed))

    return [SweepPoint({"p_in": p_in, "p_out": p_out}, sampler, 3, 3)]


def case3_grid_points(
    n: int, T: int, K: int, degree: float, p_tilde_grid: Sequence[float], mu_grid: Sequence[float]
) -> list[SweepPoint]:
    """Grid over (p_tilde, mu); all mu values of one p_tilde are adjacent."""
    result = []
    for p_tilde in p_tilde_grid:
        for mu in mu_grid:

            def sampler(seed: int, p_tilde=p_tilde, mu=mu) -> tuple[MultilayerGraph, GroundTruth]:
                return sample_case3(Case3Params(n, T, K, p_tilde, mu, degree, seed))

            result.append(SweepPoint({"p_tilde": p_tilde, "mu": mu}, sampler, T, K))
    return result


def expand_methods(methods: Sequence[str], p_grid: Sequence[float], T: int) -> list[tuple[str, float | None]]:
    """Turn method tokens into (method, p) pairs: power_mean per p, single_layer per layer."""
    expanded: list[tuple[str, float | None]] = []
    for method in methods:
        if method == "power_mean":
            expanded.extend(("power_mean", float(p)) for p in p_grid)
        elif method == "single_layer":
            expanded.extend((f"layer{t}", None) for t in range(T))
        elif method in ("agg", "arithmetic"):
            expanded.append((method, None))
        else:
            raise ParameterError(f"Unknown method {method!r}")
    return expanded


def benchmark_footprint(n: int, T: int, nnz: int, krylov_max_dim: int, block: int) -> int:
    """Bytes the matrix-free solver needs: CSR layers, Krylov bases and subspace blocks."""
    sparse = T * nnz * (8 + 8) * 2
    krylov = T * n * (krylov_max_dim + 1) * 8
    blocks = 6 * n * block * 8
    return sparse + krylov + blocks


class ExperimentRunner:
    """Runs the pml experiments with one set of solver settings.

    Attributes:
        seed: Master seed; every unit of work derives its seed from it.
        workers: Sweep worker threads.
        outer_tol: Relative residual target of the subspace iteration.
        krylov_max_dim: Largest Krylov space per inner solve.
        single_thread: Whether to run with one worker and one BLAS thread.
    """

    def __init__(
        self,
        seed: int = 0,
        jobs: int | None = None,
        single_thread: bool = False,
        outer_tol: float = OUTER_TOL,
        krylov_max_dim: int = KRYLOV_MAX_DIM,
        log_level: int = logging.INFO,
    ) -> None:
        """Initialize the runner.

        Args:
            seed: Master seed.
            jobs: Requested worker threads; None uses one per available CPU.
            single_thread: Force one worker and one BLAS thread.
            outer_tol: Relative residual target of the subspace iteration.
            krylov_max_dim: Largest Krylov space per inner solve.
            log_level: Logging level, kept for the settings dump.
        """
        self.seed = int(seed)
        self.single_thread = bool(single_thread)
        self.workers = 1 if self.single_thread else get_worker_count(jobs)
        self.outer_tol = float(outer_tol)
        self.krylov_max_dim = int(krylov_max_dim)
        self.log_level = log_level
        self._elapsed: dict[tuple[int, float], float] = {}
        self._benchmark_graphs: dict[int, MultilayerGraph] = {}
        self.log_settings_to_debug()

    def log_settings_to_debug(self) -> None:
        """Log all current settings at debug level."""
        output = ""
        for key, value in sorted(vars(self).items()):
            if key.startswith("_"):
                continue
            output += f"  {key}: {value}\n"
        logging.debug("\n\n" + output)

    def solver_settings(self) -> dict[str, Any]:
        return {
            "seed": self.seed,
            "outer_tol": self.outer_tol,
            "krylov_max_dim": self.krylov_max_dim,
            "single_thread": self.single_thread,
        }

    def solve_spec(self, p: float, k: int, seed: int, n_jobs: int | None = None) -> PowerMeanSolveSpec:
        return PowerMeanSolveSpec(
            p=p,
            k=k,
            outer_tol=self.outer_tol,
            krylov_max_dim=self.krylov_max_dim,
            seed=seed,
            n_jobs=self.workers if n_jobs is None else n_jobs,
        )

    def _metadata(self, command: str, workers: int, **settings: Any) -> dict[str, str]:
        resolved = {"command": command, **self.solver_settings(), **settings}
        return build_metadata(resolved, threading=describe_threading(workers))

    def cluster_graph(
        self, G: MultilayerGraph, k: int, method: str, p: float | None, seed: int, n_jobs: int | None = None
    ) -> ClusteringResult:
        """Cluster G with one method token ('power_mean', 'agg', 'arithmetic', 'layer<t>')."""
        if method == "power_mean":
            if p is None:
                raise ParameterError("power_mean needs an exponent")
            return spectral_cluster(G, k, self.solve_spec(p, k, seed, n_jobs))
        if method == "agg":
            return baseline_agg(G, k, seed)
        if method == "arithmetic":
            return baseline_arithmetic(G, k, seed)
        if method.startswith("layer"):
            return baseline_single_layer(G, int(method[len("layer") :]), k, seed)
        raise ParameterError(f"Unknown method {method!r}")

    def generate(self, params: Case1Params | Case2Params | Case3Params, directory: str) -> list[str]:
        """Sample one SBM graph and write it as a bundle.

        Args:
            params: Case parameters; their seed selects the draw.
            directory: Bundle directory, created if missing.

        Returns:
            Paths of the files written.
        """
        if isinstance(params, Case1Params):
            case, (G, truth) = 1, sample_case1(params)
        elif isinstance(params, Case2Params):
            case, (G, truth) = 2, sample_case2(params)
        elif isinstance(params, Case3Params):
            case, (G, truth) = 3, sample_case3(params)
        else:
            raise ParameterError(f"Unsupported parameters {type(params).__name__}")
        extra = {"case": case, "params": {key: _plain(value) for key, value in vars(params).items()}}
        written = save_bundle(G, directory, truth.labels, truth.layer_labels, extra)
        densities = " ".join(f"{d:.4f}" for d in G.densities())
        print(f"Case {case}: n={G.n} T={G.T} densities={densities} -> {directory}")
        logging.info(f"Generated Case-{case} bundle with {len(written)} files in {directory}")
        return written

    def sweep(
        self,
        experiment: str,
        points: list[SweepPoint],
        methods: Sequence[str],
        p_grid: Sequence[float],
        runs: int,
        out: str | None = None,
        summary: bool = False,
        settings: dict[str, Any] | None = None,
    ) -> list[dict[str, Any]]:
        """Cluster `runs` sampled graphs per point with every method.

        Args:
            experiment: Experiment name, part of every derived seed.
            points: Sweep points.
            methods: Method tokens.
            p_grid: Exponents for power_mean.
            runs: Runs per point.
            out: CSV path, None for standard output.
            summary: Write mean and std per (point, method, p) instead of runs.
            settings: Experiment parameters recorded in the metadata header.

        Returns:
            One row per (point, method, p, run), failed jobs included.
        """
        if runs < 1:
            raise ParameterError(f"runs must be positive, got {runs}")
        jobs = []
        for index, point in enumerate(points):
            for method, p in expand_methods(methods, p_grid, point.T):
                for run in range(runs):
                    seed = derive_seed(self.seed, experiment, index, run)
                    jobs.append(SweepJob(index, point.params, method, p, run, seed))

        def runner(job: SweepJob) -> dict[str, Any]:
            point = points[job.point]
            G, truth = point.sampler(job.seed)
            start = time.perf_counter()
            result = self.cluster_graph(G, point.k, job.method, job.p, job.seed, n_jobs=1)
            wall_ms = (time.perf_counter() - start) * 1000.0
            return {
                "clustering_error": clustering_error(result.labels, truth.labels),
                "outer_iterations": result.outer_iterations,
                "converged": result.converged,
                "wall_ms": wall_ms,
            }

        manager = SweepManager(runner, self.workers)
        rows = manager.run(jobs)
        param_keys = list(points[0].params) if points else []
        recorded = dict(settings or {})
        recorded.update(
            experiment=experiment,
            methods=list(methods),
            p_grid=list(p_grid),
            runs=runs,
            point_params=[point.params for point in points],
        )
        meta = self._metadata("sweep", self.workers, **recorded)
        if summary:
            table = summarize(rows, param_keys + ["point", "method", "p"])
            write_csv(out, param_keys + SUMMARY_FIELDS, table, meta)
        else:
            write_csv(out, param_keys + SWEEP_FIELDS, rows, meta)
        return rows

    def _benchmark_graph(self, n: int, p_in: float, p_out: float) -> MultilayerGraph:
        if n not in self._benchmark_graphs:
            rng = np.random.default_rng(derive_seed(self.seed, "benchmark", n))
            groups = np.repeat([0, 1], [n // 2, n - n // 2])
            layers = (sample_layer(groups, p_in, p_out, rng), sample_layer(groups, p_in, p_out, rng))
            self._benchmark_graphs[n] = MultilayerGraph(layers)
            logging.info(f"Benchmark graph n={n}: nnz per layer {[layer.nnz for layer in layers]}")
        return self._benchmark_graphs[n]

    def benchmark(
        self,
        sizes: Sequence[int],
        p_grid: Sequence[float],
        runs: int,
        p_in: float,
        p_out: float,
        timeout: float,
        out: str | None = None,
    ) -> list[dict[str, Any]]:
        """Time the matrix-free eigensolve (k=2) on two-layer SBMs, single-threaded.

        A point whose runs have used up `timeout` seconds, or whose estimated
        footprint exceeds the available memory, records its remaining runs as
        failed instead of running them.

        Returns:
            One row per (n, p, run).
        """
        self._elapsed = {}
        self._benchmark_graphs = {}
        block = 2 + GUARD_VECTORS
        jobs = [
            SweepJob(i, {"n": n}, "power_mean", float(p), run, derive_seed(self.seed, "benchmark", n, run))
            for i, n in enumerate(sizes)
            for p in p_grid
            for run in range(runs)
        ]

        def runner(job: SweepJob) -> dict[str, Any]:
            n = job.params["n"]
            key = (n, job.p)
            if self._elapsed.get(key, 0.0) > timeout:
                raise TimeoutError(f"Point n={n}, p={job.p} exceeded {timeout:g} s")
            expected_nnz = int(n * n * (p_in + p_out) / 2)
            needed = benchmark_footprint(n, 2, expected_nnz, self.krylov_max_dim, block)
            available = get_available_memory()
            if needed > available:
                raise MemoryError(
                    f"Point n={n} needs about {needed / 2**20:.0f} MiB, {available / 2**20:.0f} MiB available"
                )
            G = self._benchmark_graph(n, p_in, p_out)
            op = PowerMeanOp.from_graph(G, self.solve_spec(job.p, 2, job.seed, n_jobs=1))
            start = time.perf_counter()
            result = power_mean_eigs(op)
            wall = time.perf_counter() - start
            self._elapsed[key] = self._elapsed.get(key, 0.0) + wall
            logging.info(f"n={n} p={job.p} run {job.run}: {wall * 1000.0:.1f} ms")
            return {
                "wall_ms": wall * 1000.0,
                "krylov_dims": result.krylov_dims,
                "outer_iterations": result.outer_iterations,
                "converged": result.converged,
            }

        with single_thread():
            manager = SweepManager(runner, 1)
            rows = manager.run(jobs)
            meta = self._metadata(
                "benchmark",
                1,
                sizes=list(sizes),
                p_grid=list(p_grid),
                runs=runs,
                p_in=p_in,
                p_out=p_out,
                timeout=timeout,
            )
        write_csv(out, BENCHMARK_FIELDS, rows, meta)
        return rows

    def load_input(
        self,
        bundle: str | None = None,
        features: Sequence[str] | None = None,
        knn: int | None = None,
        truth: str | None = None,
    ) -> tuple[MultilayerGraph, npt.NDArray[np.int64] | None]:
        """Load a bundle, or build one k-NN layer per feature file.

        Returns:
            The graph and the ground-truth labels if any (from --truth, else the bundle).

        Raises:
            UsageError: If neither or both input kinds are given, or
                features come without a neighbour count.
        """
        if (bundle is None) == (not features):
            raise UsageError("Give exactly one of --bundle or --features")
        labels = None
        if bundle is not None:
            loaded = load_bundle(bundle)
            G, labels = loaded.graph, loaded.ground_truth
        else:
            if knn is None:
                raise UsageError("Feature files need --knn")
            G = MultilayerGraph(tuple(knn_graph(load_features(path), knn) for path in features))
        if truth is not None:
            labels = load_labels(truth)
        if labels is not None and labels.shape != (G.n,):
            raise ParameterError(f"Ground truth has {labels.size} labels for {G.n} vertices")
        return G, labels

    def cluster(
        self,
        G: MultilayerGraph,
        k: int,
        p: float,
        truth: npt.ArrayLike | None = None,
        restrict: bool = False,
        out: str | None = None,
    ) -> tuple[ClusteringResult, float | None]:
        """Cluster G with L_p and write `vertex,label` rows.

        Args:
            G: The graph.
            k: Number of clusters.
            p: Power mean exponent.
            truth: Optional reference labels for the clustering error.
            restrict: Restrict to the largest common component first.
            out: Labels CSV path, None for standard output.

        Returns:
            The clustering and its error against truth (None without truth).
        """
        vertices = np.arange(G.n)
        if restrict:
            G, vertices = largest_component(G)
            if truth is not None:
                truth = np.asarray(truth)[vertices]
        result = spectral_cluster(G, k, self.solve_spec(p, k, self.seed))
        error = None if truth is None else clustering_error(result.labels, truth)
        meta = self._metadata("cluster", self.workers, k=k, p=p, n=G.n, T=G.T, restrict=restrict)
        if error is not None:
            meta["clustering_error"] = repr(error)
        rows = [{"vertex": int(v), "label": int(label)} for v, label in zip(vertices, result.labels)]
        write_csv(out, ["vertex", "label"], rows, meta)
        if error is not None:
            stream = sys.stderr if out in (None, "-") else sys.stdout
            print(f"clustering_error: {error:.4f}", file=stream)
        if not result.converged:
            logging.warning("The eigensolve did not converge; labels come from the last iterate")
        return result, error

    def spectrum(
        self,
        cluster_size: int,
        p_in: float,
        p_out: float,
        p_grid: Sequence[float],
        count: int,
        sampled: bool = False,
        out: str | None = None,
    ) -> list[dict[str, Any]]:
        """Smallest eigenvalues of L_p on a Case-2 graph, flagged informative or not.

        An eigenvector is informative when its projection onto the span of
        the cluster indicators has norm at least 0.5.

        Returns:
            One row per (p, index); a p that fails leaves one row with its error.
        """
        params = Case2Params(cluster_size, p_in, p_out, derive_seed(self.seed, "spectrum"))
        if sampled:
            G, truth = sample_case2(params)
        else:
            G = expected_graph([expected_adjacency_case2(params, t) for t in range(3)])
            truth = ground_truth_case2(params)
        if not 1 <= count <= G.n:
            raise ParameterError(f"count must lie in [1, {G.n}], got {count}")
        Q = orthonormalize(chi_vectors(truth.labels, 3))

        rows: list[dict[str, Any]] = []
        for p in p_grid:
            try:
                if G.n <= DENSE_LIMIT:
                    decomposition = dense_sym_eig(dense_power_mean_laplacian(G, p, shift_for(p)))
                    values = decomposition.eigenvalues[:count]
                    vectors = decomposition.eigenvectors[:, :count]
                    method = "dense"
                else:
                    result = power_mean_eigs(PowerMeanOp.from_graph(G, self.solve_spec(p, count, self.seed)))
                    values, vectors, method = result.eigenvalues, result.eigenvectors, result.method
            except ValueError as e:
                logging.error(f"Spectrum for p={p} failed: {e}")
                rows.append({"p": p, "error": f"{type(e).__name__}: {e}"})
                continue
            projections = np.linalg.norm(Q.T @ vectors, axis=0)
            for index, (value, projection) in enumerate(zip(values, projections)):
                rows.append(
                    {
                        "p": p,
                        "index": index,
                        "eigenvalue": float(value),
                        "projection": float(projection),
                        "informative": bool(projection >= INFORMATIVE_PROJECTION),
                        "method": method,
                        "error": "",
                    }
                )
        meta = self._metadata(
            "spectrum",
            self.workers,
            cluster_size=cluster_size,
            p_in=p_in,
            p_out=p_out,
            p_grid=list(p_grid),
            count=count,
            sampled=sampled,
        )
        write_csv(out, SPECTRUM_FIELDS, rows, meta)
        return rows


def _plain(value: Any) -> Any:
    if isinstance(value, tuple):
        return [_plain(item) for item in value]
    return value
