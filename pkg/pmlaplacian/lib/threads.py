"""Worker-count, CPU affinity and BLAS thread-pool introspection."""

from __future__ import annotations

import logging
import os
from contextlib import contextmanager
from typing import Iterator

import psutil
from threadpoolctl import threadpool_info, threadpool_limits

THREADS_ENV = "PML_THREADS"


def get_cpu_count() -> int:
    """Get the number of CPUs this process may run on.

    Returns:
        Size of the CPU affinity set where the platform reports one,
        otherwise the logical CPU count.
    """
    try:
        return max(1, len(psutil.Process().cpu_affinity()))
    except (AttributeError, psutil.Error, OSError):
        return psutil.cpu_count(logical=True) or 1


def get_thread_cap() -> int | None:
    """Read the PML_THREADS cap.

    Returns:
        The cap as a positive integer, or None if unset or invalid.
    """
    raw = os.environ.get(THREADS_ENV)
    if raw is None or raw.strip() == "":
        return None
    try:
        value = int(raw)
    except ValueError:
        logging.warning(f"Ignoring {THREADS_ENV}={raw!r}: not an integer")
        return None
    if value < 1:
        logging.warning(f"Ignoring {THREADS_ENV}={raw!r}: must be at least 1")
        return None
    return value


def get_worker_count(requested: int | None = None) -> int:
    """Resolve how many worker threads to use.

    Args:
        requested: Explicit worker count, or None for one per available CPU.

    Returns:
        The worker count, capped by PML_THREADS when set.
    """
    workers = requested if requested and requested > 0 else get_cpu_count()
    cap = get_thread_cap()
    if cap is not None:
        workers = min(workers, cap)
    return max(1, workers)


def get_blas_threads() -> dict[str, int]:
    """Map each loaded native thread pool (openblas, mkl, openmp...) to its thread count."""
    pools: dict[str, int] = {}
    for module in threadpool_info():
        name = module.get("internal_api") or module.get("prefix", "unknown")
        pools[name] = max(pools.get(name, 0), int(module.get("num_threads", 0)))
    return pools


def describe_threading(workers: int) -> str:
    """One-line summary of the threading setup for result metadata.

    Args:
        workers: Worker threads the caller will use.

    Returns:
        A string such as 'workers=1 affinity=8 blas=openblas:1'.
    """
    blas = ",".join(f"{name}:{count}" for name, count in sorted(get_blas_threads().items()))
    return f"workers={workers} affinity={get_cpu_count()} blas={blas or 'none'}"


@contextmanager
def single_thread() -> Iterator[None]:
    """Limit every native thread pool to one thread for the duration of the block."""
    with threadpool_limits(limits=1):
        logging.debug(f"Single-thread mode: {get_blas_threads()}")
        yield


def get_available_memory() -> int:
    """Bytes of memory available to new allocations."""
    return int(psutil.virtual_memory().available)
