"""Job queue running sweep and benchmark points on worker threads."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from queue import Queue
from threading import Lock, Thread
from typing import Any, Callable

from pmlaplacian.lib.threads import get_worker_count


@dataclass(frozen=True)
class SweepJob:
    """One (sweep point, method, p, run) unit of work.

    Attributes:
        point: Index of the sweep point.
        params: Parameters of the point, copied into the result row.
        method: Method token ('power_mean', 'agg', 'arithmetic', 'layer<t>').
        p: Exponent for power mean methods, None otherwise.
        run: Run index within the point.
        seed: Seed derived from the master seed, point and run.
    """

    point: int
    params: dict[str, Any] = field(hash=False)
    method: str
    p: float | None
    run: int
    seed: int

    @property
    def sort_key(self) -> tuple:
        return (self.point, self.method, -1e300 if self.p is None else self.p, self.run)


class SweepManager:
    """Runs queued jobs on worker threads, collecting one row per job.

    A failing job does not stop the sweep: the exception is logged and the
    job's row is recorded with the message in its 'error' column.

    Attributes:
        job_queue: Queue holding pending jobs.
        rows: Finished rows, one per job.
        errors: Rows of failed jobs.
    """

    def __init__(self, runner: Callable[[SweepJob], dict[str, Any]], workers: int | None = None) -> None:
        """Initialize the manager.

        Args:
            runner: Callable turning a job into a result row.
            workers: Worker threads; None resolves through get_worker_count().
        """
        self.runner = runner
        self.workers = get_worker_count(workers)
        self.job_queue: Queue = Queue()
        self.rows: list[dict[str, Any]] = []
        self._keys: list[tuple] = []
        self.errors: list[dict[str, Any]] = []
        self._lock = Lock()
        self._worker_threads: list[Thread] = []

    def start(self) -> None:
        """Start the worker threads."""
        for i in range(self.workers):
            thread = Thread(target=self._process_queue, name=f"sweep-worker-{i}", daemon=True)
            thread.start()
            self._worker_threads.append(thread)
        logging.debug(f"Sweep queue started with {self.workers} workers")

    def queue_job(self, job: SweepJob) -> None:
        self.job_queue.put(job)

    def _base_row(self, job: SweepJob) -> dict[str, Any]:
        row = dict(job.params)
        row.update(
            point=job.point,
            method=job.method,
            p="" if job.p is None else job.p,
            run=job.run,
            seed=job.seed,
            error="",
        )
        return row

    def _process_queue(self) -> None:
        """Worker loop: take a job, run it, record its row."""
        while True:
            job = self.job_queue.get()
            row = self._base_row(job)
            start = time.perf_counter()
            try:
                row.update(self.runner(job))
            except Exception as e:
                logging.error(f"Error in sweep point {job.point} ({job.method}, p={job.p}, run {job.run}): {e}")
                row["error"] = f"{type(e).__name__}: {e}"
            finally:
                row.setdefault("wall_ms", (time.perf_counter() - start) * 1000.0)
                with self._lock:
                    self.rows.append(row)
                    self._keys.append(job.sort_key)
                    if row["error"]:
                        self.errors.append(row)
                self.job_queue.task_done()

    def run(self, jobs: list[SweepJob]) -> list[dict[str, Any]]:
        """Queue every job, wait for all of them and return rows in job order.

        Args:
            jobs: Jobs to run.

        Returns:
            One row per job sorted by (point, method, p, run), so the output
            does not depend on the number of workers.
        """
        if not self._worker_threads:
            self.start()
        logging.info(f"Running {len(jobs)} jobs on {self.workers} workers")
        for job in jobs:
            self.queue_job(job)
        self.job_queue.join()
        with self._lock:
            rows = [row for _, row in sorted(zip(self._keys, self.rows), key=lambda pair: pair[0])]
        if self.errors:
            logging.warning(f"{len(self.errors)} of {len(jobs)} jobs failed")
        return rows
