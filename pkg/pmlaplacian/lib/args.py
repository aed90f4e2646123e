"""Command-line argument parsing for pml."""

from __future__ import annotations

import argparse
import logging
import math

from pmlaplacian.constants import BENCHMARK_P, BENCHMARK_SIZES, P_GRID

METHODS = ("power_mean", "agg", "arithmetic", "single_layer")
EXPERIMENTS = ("case1-sweep", "case2", "case3-grid")


def parse_float_list(value: str | list | tuple | float) -> list[float]:
    """Parse a comma-separated list of numbers.

    Accepts 'inf', '-inf' and already-parsed lists (from a config file).

    Args:
        value: String such as '-10,-1,0,1' or a list/number.

    Returns:
        The numbers as floats, in the given order.

    Raises:
        argparse.ArgumentTypeError: If an entry is not a number.
    """
    if isinstance(value, (list, tuple)):
        items = list(value)
    elif isinstance(value, (int, float)):
        items = [value]
    else:
        items = [item for item in value.split(",") if item.strip()]
    try:
        result = [float(item) for item in items]
    except (TypeError, ValueError):
        raise argparse.ArgumentTypeError(f"Expected a comma-separated list of numbers, got {value!r}")
    if not result or any(math.isnan(x) for x in result):
        raise argparse.ArgumentTypeError(f"Expected a comma-separated list of numbers, got {value!r}")
    return result


def parse_int_list(value: str | list | tuple | int) -> list[int]:
    """Parse a comma-separated list of integers."""
    numbers = parse_float_list(value)
    if any(not x.is_integer() for x in numbers):
        raise argparse.ArgumentTypeError(f"Expected a comma-separated list of integers, got {value!r}")
    return [int(x) for x in numbers]


def parse_method_list(value: str | list | tuple) -> list[str]:
    """Parse and validate method tokens."""
    items = list(value) if isinstance(value, (list, tuple)) else value.split(",")
    methods = [str(item).strip() for item in items if str(item).strip()]
    unknown = sorted(set(methods) - set(METHODS))
    if unknown or not methods:
        raise argparse.ArgumentTypeError(
            f"Unknown method(s) {', '.join(unknown) or '(none)'}; choose from {', '.join(METHODS)}"
        )
    return methods


def parse_layers(value: str | list | tuple) -> list[tuple[float, float]]:
    """Parse Case-1 layer probabilities given as 'p_in:p_out,p_in:p_out'."""
    items = list(value) if isinstance(value, (list, tuple)) else value.split(",")
    layers = []
    for item in items:
        try:
            p_in, p_out = (float(x) for x in str(item).split(":"))
        except ValueError:
            raise argparse.ArgumentTypeError(f"Expected p_in:p_out pairs, got {item!r}")
        layers.append((p_in, p_out))
    return layers


# Default values for CLI args
default_log_level = logging.INFO
default_seed = 0
default_p_grid = list(P_GRID)
default_methods = ["power_mean", "agg", "arithmetic"]
default_runs = 10
default_k = 2
default_cluster_size = 100
default_case1_layers = [(0.1, 0.02), (0.1, 0.02)]
default_p_in = 0.1
default_p_out = 0.02
default_sweep_points = 9
default_case3_n = 100
default_case3_layers = 10
default_case3_communities = 2
default_case3_degree = 10.0
default_p_tilde_grid = [0.5, 0.6, 0.7, 0.8, 0.9, 1.0]
default_mu_grid = [0.0, 0.1, 0.2, 0.3, 0.4, 0.5]
default_p_tilde = 0.8
default_mu = 0.2
default_cluster_p = -10.0
default_benchmark_sizes = list(BENCHMARK_SIZES)
default_benchmark_p = list(BENCHMARK_P)
default_benchmark_p_in = 0.05
default_benchmark_p_out = 0.025
default_benchmark_runs = 10
default_timeout = 600.0
default_spectrum_count = 6


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--config",
        help="Path to an INI config file. Flags given on the command line override its values.",
        default=None,
        required=False,
    )
    parser.add_argument(
        "-l",
        "--log-level",
        help=f"Logging level int value (DEBUG: 10, INFO: 20, WARNING: 30, ERROR: 40, CRITICAL: 50). (default: {default_log_level} )",
        default=default_log_level,
        type=int,
        required=False,
    )
    parser.add_argument(
        "--seed",
        help=f"Master seed; every run derives its own seed from it. (default: {default_seed})",
        type=int,
        default=None,
        required=False,
    )
    parser.add_argument(
        "--out",
        help="Output file (CSV) or directory (generate). Standard output when omitted.",
        default=None,
        required=False,
    )


def _add_solver(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--outer-tol",
        help="Relative residual target of the subspace iteration.",
        type=float,
        default=None,
        required=False,
    )
    parser.add_argument(
        "--krylov-max-dim",
        help="Largest Krylov space per inner solve.",
        type=int,
        default=None,
        required=False,
    )
    parser.add_argument(
        "--jobs",
        help="Worker threads (capped by PML_THREADS). Default: one per available CPU.",
        type=int,
        default=None,
        required=False,
    )
    parser.add_argument(
        "--single-thread",
        action="store_true",
        help="Run with one worker and one BLAS thread.",
        required=False,
    )


def _add_case_params(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--k", help=f"Clusters for Case 1. (default: {default_k})", type=int, default=None)
    parser.add_argument(
        "--cluster-size",
        help=f"Vertices per cluster for Cases 1 and 2. (default: {default_cluster_size})",
        type=int,
        default=None,
    )
    parser.add_argument(
        "--layers",
        help="Case-1 layers as p_in:p_out pairs, e.g. 0.1:0.02,0.02:0.1",
        type=parse_layers,
        default=None,
    )
    parser.add_argument("--p-in", help=f"Case-2 p_in. (default: {default_p_in})", type=float, default=None)
    parser.add_argument("--p-out", help=f"Case-2 p_out. (default: {default_p_out})", type=float, default=None)
    parser.add_argument("--n", help=f"Case-3 vertices. (default: {default_case3_n})", type=int, default=None)
    parser.add_argument("--T", help=f"Case-3 layers. (default: {default_case3_layers})", type=int, default=None)
    parser.add_argument(
        "--K", help=f"Case-3 communities. (default: {default_case3_communities})", type=int, default=None
    )
    parser.add_argument("--degree", help=f"Case-3 expected degree. (default: {default_case3_degree})", type=float, default=None)


def build_parser() -> argparse.ArgumentParser:
    """Build the pml parser with its subcommands."""
    parser = argparse.ArgumentParser(
        prog="pml", description="Spectral clustering of multilayer graphs with the power mean Laplacian."
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    generate = subparsers.add_parser("generate", help="Sample an SBM multilayer graph into a bundle directory")
    _add_common(generate)
    _add_case_params(generate)
    generate.add_argument("--case", help="SBM setting to sample.", choices=["1", "2", "3"], default=None)
    generate.add_argument("--p-tilde", help="Case-3 partition copy probability.", type=float, default=None)
    generate.add_argument("--mu", help="Case-3 mixing.", type=float, default=None)

    sweep = subparsers.add_parser("sweep", help="Clustering error over a grid of SBM parameters")
    _add_common(sweep)
    _add_solver(sweep)
    _add_case_params(sweep)
    sweep.add_argument("--experiment", help="Sweep to run.", choices=EXPERIMENTS, default=None)
    sweep.add_argument("--p", help=f"Exponents for power_mean; write --p=-10,-1 when the list starts with a minus sign. (default: {default_p_grid})", type=parse_float_list, default=None)
    sweep.add_argument(
        "--methods",
        help=f"Comma-separated methods from {', '.join(METHODS)}. (default: {','.join(default_methods)})",
        type=parse_method_list,
        default=None,
    )
    sweep.add_argument("--runs", help=f"Runs per point. (default: {default_runs})", type=int, default=None)
    sweep.add_argument(
        "--points", help=f"Points of the case1-sweep. (default: {default_sweep_points})", type=int, default=None
    )
    sweep.add_argument("--p-tilde", help="Case-3 grid of p_tilde values.", type=parse_float_list, default=None)
    sweep.add_argument("--mu", help="Case-3 grid of mu values.", type=parse_float_list, default=None)
    sweep.add_argument(
        "--summary", action="store_true", help="Write mean and std per (point, method, p) instead of runs."
    )

    benchmark = subparsers.add_parser("benchmark", help="Time the matrix-free solver on two-layer SBMs")
    _add_common(benchmark)
    _add_solver(benchmark)
    benchmark.add_argument(
        "--sizes", help=f"Vertex counts. (default: {default_benchmark_sizes})", type=parse_int_list, default=None
    )
    benchmark.add_argument("--p", help=f"Exponents. (default: {default_benchmark_p})", type=parse_float_list, default=None)
    benchmark.add_argument("--runs", help=f"Timed runs per point. (default: {default_benchmark_runs})", type=int, default=None)
    benchmark.add_argument("--p-in", help=f"(default: {default_benchmark_p_in})", type=float, default=None)
    benchmark.add_argument("--p-out", help=f"(default: {default_benchmark_p_out})", type=float, default=None)
    benchmark.add_argument(
        "--timeout", help=f"Seconds allowed per point. (default: {default_timeout})", type=float, default=None
    )

    cluster = subparsers.add_parser("cluster", help="Cluster a bundle or a set of feature files")
    _add_common(cluster)
    _add_solver(cluster)
    cluster.add_argument("--bundle", help="Multilayer bundle directory.", default=None)
    cluster.add_argument("--features", nargs="+", help="Feature CSV files, one per layer.", default=None)
    cluster.add_argument("--knn", help="Neighbours for feature layers.", type=int, default=None)
    cluster.add_argument("--k", help="Number of clusters.", type=int, default=None)
    cluster.add_argument("--p", help="Power mean exponent. (default: -10)", type=float, default=None)
    cluster.add_argument("--truth", help="Ground-truth labels CSV.", default=None)
    cluster.add_argument(
        "--largest-component",
        action="store_true",
        help="Restrict to vertices connected and non-isolated in every layer.",
    )

    spectrum = subparsers.add_parser("spectrum", help="Smallest eigenvalues of L_p for Case 2 across p")
    _add_common(spectrum)
    _add_solver(spectrum)
    spectrum.add_argument("--p", help=f"Exponents. (default: {default_p_grid})", type=parse_float_list, default=None)
    spectrum.add_argument("--cluster-size", help="Vertices per cluster. (default: 100)", type=int, default=None)
    spectrum.add_argument("--p-in", type=float, default=None)
    spectrum.add_argument("--p-out", type=float, default=None)
    spectrum.add_argument("--sampled", action="store_true", help="Use a sampled graph instead of the expected one.")
    spectrum.add_argument(
        "--count", help=f"Eigenvalues per p. (default: {default_spectrum_count})", type=int, default=None
    )
    return parser


def parse_pml_args(argv: list[str] | None = None) -> argparse.Namespace:
    """Parse command-line arguments for pml.

    Args:
        argv: Argument list; None reads sys.argv.

    Returns:
        Parsed arguments namespace. Options left unset are None so that config
        file values can fill them.
    """
    return build_parser().parse_args(argv)
