"""pml command-line entry point."""

from __future__ import annotations

import argparse
import logging
import sys
from typing import Any, Callable

import numpy as np

from pmlaplacian import VERSION
from pmlaplacian.constants import KRYLOV_MAX_DIM, OUTER_TOL
from pmlaplacian.experiments import (
    ExperimentRunner,
    case1_sweep_points,
    case2_points,
    case3_grid_points,
)
from pmlaplacian.lib import args as defaults
from pmlaplacian.lib.args import (
    EXPERIMENTS,
    parse_float_list,
    parse_int_list,
    parse_layers,
    parse_method_list,
    parse_pml_args,
)
from pmlaplacian.lib.config import load_config, resolve
from pmlaplacian.lib.errors import UsageError
from pmlaplacian.lib.sbm import Case1Params, Case2Params, Case3Params

Config = dict[str, dict[str, Any]]

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2


def pick(
    args: argparse.Namespace,
    config: Config,
    section: str,
    name: str,
    default: Any,
    parse: Callable[[Any], Any] | None = None,
    key: str | None = None,
) -> Any:
    """Resolve one setting: the flag if given, then the config file, then the default.

    Args:
        args: Parsed arguments; a missing attribute or a False switch counts as unset.
        config: Loaded config sections.
        section: Config section to read.
        name: Attribute name on args.
        default: Built-in default.
        parse: Converter applied to config file values.
        key: Option name in the config file when it differs from name.
    """
    flag = getattr(args, name, None)
    if flag is False:
        flag = None
    file_value = config.get(section, {}).get(key or name)
    if flag is None and file_value is not None and parse is not None:
        file_value = parse(file_value)
    return resolve(flag, file_value, default)


def build_runner(args: argparse.Namespace, config: Config) -> ExperimentRunner:
    return ExperimentRunner(
        seed=int(pick(args, config, "experiment", "seed", defaults.default_seed)),
        jobs=pick(args, config, "solver", "jobs", None),
        single_thread=bool(pick(args, config, "solver", "single_thread", False)),
        outer_tol=float(pick(args, config, "solver", "outer_tol", OUTER_TOL)),
        krylov_max_dim=int(pick(args, config, "solver", "krylov_max_dim", KRYLOV_MAX_DIM)),
        log_level=args.log_level,
    )


def cmd_generate(args: argparse.Namespace, config: Config, runner: ExperimentRunner) -> int:
    out = pick(args, config, "experiment", "out", None)
    if out in (None, "-"):
        raise UsageError("generate needs --out DIRECTORY")
    case = str(pick(args, config, "experiment", "case", "1"))
    if case == "1":
        params: Case1Params | Case2Params | Case3Params = Case1Params(
            k=int(pick(args, config, "case1", "k", defaults.default_k)),
            cluster_size=int(pick(args, config, "case1", "cluster_size", defaults.default_cluster_size)),
            layers=tuple(pick(args, config, "case1", "layers", defaults.default_case1_layers, parse_layers)),
            seed=runner.seed,
        )
    elif case == "2":
        params = Case2Params(
            cluster_size=int(pick(args, config, "case2", "cluster_size", defaults.default_cluster_size)),
            p_in=float(pick(args, config, "case2", "p_in", defaults.default_p_in)),
            p_out=float(pick(args, config, "case2", "p_out", defaults.default_p_out)),
            seed=runner.seed,
        )
    elif case == "3":
        params = Case3Params(
            n=int(pick(args, config, "case3", "n", defaults.default_case3_n)),
            T=int(pick(args, config, "case3", "T", defaults.default_case3_layers, key="layers")),
            K=int(pick(args, config, "case3", "K", defaults.default_case3_communities, key="communities")),
            p_tilde=float(pick(args, config, "case3", "p_tilde", defaults.default_p_tilde)),
            mu=float(pick(args, config, "case3", "mu", defaults.default_mu)),
            c=float(pick(args, config, "case3", "degree", defaults.default_case3_degree)),
            seed=runner.seed,
        )
    else:
        raise UsageError(f"Unknown case {case!r}; choose 1, 2 or 3")
    runner.generate(params, out)
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace, config: Config, runner: ExperimentRunner) -> int:
    experiment = pick(args, config, "experiment", "experiment", "case1-sweep")
    if experiment not in EXPERIMENTS:
        raise UsageError(f"Unknown experiment {experiment!r}; choose from {', '.join(EXPERIMENTS)}")
    p_grid = pick(args, config, "experiment", "p", defaults.default_p_grid, parse_float_list)
    methods = pick(args, config, "experiment", "methods", defaults.default_methods, parse_method_list)
    runs = int(pick(args, config, "experiment", "runs", defaults.default_runs))

    if experiment == "case1-sweep":
        settings = {
            "k": int(pick(args, config, "case1", "k", defaults.default_k)),
            "cluster_size": int(pick(args, config, "case1", "cluster_size", defaults.default_cluster_size)),
            "p_in": float(pick(args, config, "case1", "p_in", defaults.default_p_in)),
            "p_out": float(pick(args, config, "case1", "p_out", defaults.default_p_out)),
            "points": int(pick(args, config, "case1", "points", defaults.default_sweep_points)),
        }
        points = case1_sweep_points(**settings)
    elif experiment == "case2":
        settings = {
            "cluster_size": int(pick(args, config, "case2", "cluster_size", defaults.default_cluster_size)),
            "p_in": float(pick(args, config, "case2", "p_in", defaults.default_p_in)),
            "p_out": float(pick(args, config, "case2", "p_out", defaults.default_p_out)),
        }
        points = case2_points(**settings)
    else:
        settings = {
            "n": int(pick(args, config, "case3", "n", defaults.default_case3_n)),
            "T": int(pick(args, config, "case3", "T", defaults.default_case3_layers, key="layers")),
            "K": int(pick(args, config, "case3", "K", defaults.default_case3_communities, key="communities")),
            "degree": float(pick(args, config, "case3", "degree", defaults.default_case3_degree)),
            "p_tilde_grid": pick(args, config, "case3", "p_tilde", defaults.default_p_tilde_grid, parse_float_list),
            "mu_grid": pick(args, config, "case3", "mu", defaults.default_mu_grid, parse_float_list),
        }
        points = case3_grid_points(**settings)

    rows = runner.sweep(
        experiment,
        points,
        methods,
        p_grid,
        runs,
        out=pick(args, config, "experiment", "out", None),
        summary=bool(pick(args, config, "experiment", "summary", False)),
        settings=settings,
    )
    return EXIT_FAILURE if any(row["error"] for row in rows) else EXIT_OK


def cmd_benchmark(args: argparse.Namespace, config: Config, runner: ExperimentRunner) -> int:
    rows = runner.benchmark(
        sizes=pick(args, config, "benchmark", "sizes", defaults.default_benchmark_sizes, parse_int_list),
        p_grid=pick(args, config, "benchmark", "p", defaults.default_benchmark_p, parse_float_list),
        runs=int(pick(args, config, "benchmark", "runs", defaults.default_benchmark_runs)),
        p_in=float(pick(args, config, "benchmark", "p_in", defaults.default_benchmark_p_in)),
        p_out=float(pick(args, config, "benchmark", "p_out", defaults.default_benchmark_p_out)),
        timeout=float(pick(args, config, "benchmark", "timeout", defaults.default_timeout)),
        out=pick(args, config, "experiment", "out", None),
    )
    return EXIT_FAILURE if any(row["error"] for row in rows) else EXIT_OK


def cmd_cluster(args: argparse.Namespace, config: Config, runner: ExperimentRunner) -> int:
    G, truth = runner.load_input(args.bundle, args.features, args.knn, args.truth)
    if args.k is not None:
        k = args.k
    elif truth is not None:
        k = int(np.unique(truth).size)
    else:
        k = int(pick(args, config, "experiment", "k", defaults.default_k))
    p_values = pick(args, config, "experiment", "p", defaults.default_cluster_p, parse_float_list)
    if isinstance(p_values, list):
        if len(p_values) != 1:
            raise UsageError(f"cluster takes a single p, got {p_values} from the config file")
        p_values = p_values[0]
    p = float(p_values)
    runner.cluster(
        G,
        k,
        p,
        truth=truth,
        restrict=args.largest_component,
        out=pick(args, config, "experiment", "out", None),
    )
    return EXIT_OK


def cmd_spectrum(args: argparse.Namespace, config: Config, runner: ExperimentRunner) -> int:
    rows = runner.spectrum(
        cluster_size=int(pick(args, config, "case2", "cluster_size", defaults.default_cluster_size)),
        p_in=float(pick(args, config, "case2", "p_in", defaults.default_p_in)),
        p_out=float(pick(args, config, "case2", "p_out", defaults.default_p_out)),
        p_grid=pick(args, config, "experiment", "p", defaults.default_p_grid, parse_float_list),
        count=int(pick(args, config, "experiment", "count", defaults.default_spectrum_count)),
        sampled=bool(pick(args, config, "case2", "sampled", False)),
        out=pick(args, config, "experiment", "out", None),
    )
    return EXIT_FAILURE if any(row["error"] for row in rows) else EXIT_OK


COMMANDS: dict[str, Callable[[argparse.Namespace, Config, ExperimentRunner], int]] = {
    "generate": cmd_generate,
    "sweep": cmd_sweep,
    "benchmark": cmd_benchmark,
    "cluster": cmd_cluster,
    "spectrum": cmd_spectrum,
}


def main(argv: list[str] | None = None) -> int:
    """Main entry point for pml.

    Args:
        argv: Argument list; None reads sys.argv.

    Returns:
        0 on success, 1 when a run failed or produced failed rows, 2 on usage errors.
    """
    args = parse_pml_args(argv)
    logging.basicConfig(
        format="[%(asctime)s] %(levelname)s: %(message)s",
        datefmt="%Y-%m-%d %H:%M:%S",
        level=int(args.log_level),
    )
    logging.debug(f"pml {VERSION}: {args.command}")

    try:
        config = load_config(args.config)
        runner = build_runner(args, config)
        return COMMANDS[args.command](args, config, runner)
    except (UsageError, argparse.ArgumentTypeError) as e:
        logging.error(f"{e}")
        return EXIT_USAGE
    except (ValueError, OSError, RuntimeError) as e:
        logging.error(f"{type(e).__name__}: {e}")
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
