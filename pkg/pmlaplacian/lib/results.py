"""CSV result files with a reproducibility header, seeds and summaries."""

from __future__ import annotations

import csv
import hashlib
import json
import os
import sys
from collections import defaultdict
from typing import Any, Iterable, Sequence, TextIO

import numpy as np

from pmlaplacian.version import __version__

METADATA_PREFIX = "# "


def derive_seed(master: int, *parts: Any) -> int:
    """Seed for one unit of work, derived from the master seed and its coordinates.

    The same (master, parts) always gives the same 32-bit seed, whatever order
    the work is scheduled in.
    """
    key = "|".join(str(part) for part in (master, *parts))
    return int.from_bytes(hashlib.sha256(key.encode("utf-8")).digest()[:4], "big")


def config_hash(settings: dict[str, Any]) -> str:
    """Short sha256 of the canonical JSON form of the settings."""
    canonical = json.dumps(settings, sort_keys=True, default=str, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]


def build_metadata(settings: dict[str, Any], **extra: Any) -> dict[str, str]:
    """Header entries that make a result file reproducible.

    Args:
        settings: Resolved experiment settings (must include the seed).
        **extra: Additional entries such as the threading description.
    """
    meta = {
        "version": __version__,
        "config_hash": config_hash(settings),
        "seed": str(settings.get("seed", "")),
        "settings": json.dumps(settings, sort_keys=True, default=str),
    }
    meta.update({key: str(value) for key, value in extra.items()})
    return meta


def _write(handle: TextIO, fieldnames: Sequence[str], rows: Iterable[dict], meta: dict[str, str]) -> None:
    for key, value in meta.items():
        handle.write(f"{METADATA_PREFIX}{key}: {value}\n")
    writer = csv.DictWriter(handle, fieldnames=list(fieldnames), extrasaction="ignore", lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({key: _format(row.get(key, "")) for key in fieldnames})


def _format(value: Any) -> Any:
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (list, tuple)):
        return " ".join(str(v) for v in value)
    return value


def write_csv(
    path: str | None,
    fieldnames: Sequence[str],
    rows: Iterable[dict],
    meta: dict[str, str] | None = None,
) -> None:
    """Write rows as UTF-8 CSV preceded by '# key: value' metadata lines.

    Args:
        path: Output file, or None / '-' for standard output.
        fieldnames: Column order.
        rows: Dicts keyed by column name; missing keys become empty cells.
        meta: Metadata entries written before the header row.
    """
    meta = meta or {}
    if path in (None, "-"):
        _write(sys.stdout, fieldnames, rows, meta)
        return
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as handle:
        _write(handle, fieldnames, rows, meta)


def read_csv(path: str) -> tuple[dict[str, str], list[dict[str, str]]]:
    """Read a file written by write_csv.

    Returns:
        (metadata, rows) with every cell as a string.
    """
    meta: dict[str, str] = {}
    with open(path, encoding="utf-8", newline="") as handle:
        lines = handle.read().splitlines()
    body_start = 0
    for body_start, line in enumerate(lines):
        if not line.startswith(METADATA_PREFIX):
            break
        key, _, value = line[len(METADATA_PREFIX) :].partition(": ")
        meta[key] = value
    else:
        body_start = len(lines)
    rows = list(csv.DictReader(lines[body_start:]))
    return meta, rows


def summarize(
    rows: Iterable[dict[str, Any]], group_keys: Sequence[str], value_key: str = "clustering_error"
) -> list[dict[str, Any]]:
    """Mean and standard deviation of value_key per group.

    Rows with a non-empty 'error' cell are counted as failures and left out of
    the statistics.

    Returns:
        One dict per group (in first-seen order) with the group keys, 'mean',
        'std', 'runs' and 'failed'.
    """
    values: dict[tuple, list[float]] = defaultdict(list)
    failed: dict[tuple, int] = defaultdict(int)
    order: list[tuple] = []
    for row in rows:
        key = tuple(row.get(k, "") for k in group_keys)
        if key not in values and key not in failed:
            order.append(key)
        if row.get("error"):
            failed[key] += 1
            continue
        values[key].append(float(row[value_key]))

    summary = []
    for key in order:
        data = np.asarray(values.get(key, []), dtype=np.float64)
        entry: dict[str, Any] = dict(zip(group_keys, key))
        entry["mean"] = float(data.mean()) if data.size else float("nan")
        entry["std"] = float(data.std(ddof=1)) if data.size > 1 else 0.0
        entry["runs"] = int(data.size)
        entry["failed"] = failed.get(key, 0)
        summary.append(entry)
    return summary
