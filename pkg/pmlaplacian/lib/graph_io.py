"""File formats: Matrix Market layers, multilayer bundles, feature and label CSVs."""

from __future__ import annotations

import csv
import json
import logging
import os
from typing import NamedTuple

import numpy as np
import numpy.typing as npt
import scipy.io
import scipy.sparse as sp

from pmlaplacian.constants import LAYER_FILE_PATTERN, META_FILE
from pmlaplacian.lib.errors import MatrixMarketError
from pmlaplacian.lib.graphs import MultilayerGraph
from pmlaplacian.lib.linalg import SparseSymMatrix

SUPPORTED_FIELDS = ("real", "integer", "pattern")
SUPPORTED_SYMMETRIES = ("symmetric", "general")


class Bundle(NamedTuple):
    """A loaded multilayer bundle."""

    graph: MultilayerGraph
    ground_truth: npt.NDArray[np.int64] | None
    layer_labels: npt.NDArray[np.int64] | None
    meta: dict


def _parse_header(line: str) -> tuple[str, str]:
    tokens = line.strip().split()
    if len(tokens) != 5 or tokens[0] != "%%MatrixMarket":
        raise MatrixMarketError("expected '%%MatrixMarket matrix coordinate <field> <symmetry>'", 1)
    _, obj, fmt, fld, symmetry = (t.lower() for t in tokens)
    if obj != "matrix" or fmt != "coordinate":
        raise MatrixMarketError(f"only 'matrix coordinate' is supported, got '{obj} {fmt}'", 1)
    if fld not in SUPPORTED_FIELDS:
        raise MatrixMarketError(f"unsupported field '{fld}'", 1)
    if symmetry not in SUPPORTED_SYMMETRIES:
        raise MatrixMarketError(f"unsupported symmetry '{symmetry}'", 1)
    return fld, symmetry


def load_layer(path: str) -> SparseSymMatrix:
    """Read one layer from a Matrix Market coordinate file.

    Accepts `symmetric` files (either triangle) and `general` files whose
    entries are exactly symmetric. Coordinates are 1-indexed.

    Args:
        path: Path to the .mtx file.

    Returns:
        The layer adjacency.

    Raises:
        MatrixMarketError: On a malformed header or entry, out-of-range or
            duplicate coordinates, negative weights or asymmetry; the message
            names the offending line.
    """
    with open(path, encoding="utf-8") as f:
        lines = f.read().splitlines()
    if not lines:
        raise MatrixMarketError("empty file", 1)
    fld, symmetry = _parse_header(lines[0])

    size_line = None
    rows = 0
    entries: dict[tuple[int, int], tuple[float, int]] = {}
    expected = 0
    for number, raw in enumerate(lines[1:], start=2):
        line = raw.strip()
        if not line or line.startswith("%"):
            continue
        tokens = line.split()
        if size_line is None:
            try:
                rows, cols, expected = (int(t) for t in tokens)
            except ValueError:
                raise MatrixMarketError(f"bad size line '{line}'", number) from None
            if rows != cols:
                raise MatrixMarketError(f"matrix must be square, got {rows}x{cols}", number)
            size_line = number
            continue
        want = 2 if fld == "pattern" else 3
        if len(tokens) != want:
            raise MatrixMarketError(f"expected {want} fields, got {len(tokens)}", number)
        try:
            i, j = int(tokens[0]), int(tokens[1])
            value = 1.0 if fld == "pattern" else float(tokens[2])
        except ValueError:
            raise MatrixMarketError(f"cannot parse entry '{line}'", number) from None
        if not (1 <= i <= rows and 1 <= j <= rows):
            raise MatrixMarketError(f"coordinate ({i}, {j}) outside 1..{rows}", number)
        if not np.isfinite(value) or value < 0:
            raise MatrixMarketError(f"negative or non-finite weight {value}", number)
        key = (max(i, j), min(i, j)) if symmetry == "symmetric" else (i, j)
        if key in entries:
            raise MatrixMarketError(f"duplicate entry ({i}, {j})", number)
        entries[key] = (value, number)

    if size_line is None:
        raise MatrixMarketError("missing size line", len(lines))
    if len(entries) != expected:
        raise MatrixMarketError(f"declared {expected} entries, found {len(entries)}", len(lines))

    if symmetry == "general":
        for (i, j), (value, number) in entries.items():
            mirror = entries.get((j, i))
            if mirror is None or mirror[0] != value:
                raise MatrixMarketError(f"entry ({i}, {j}) has no equal mirror entry ({j}, {i})", number)
        triplets = [(i, j, v) for (i, j), (v, _) in entries.items()]
    else:
        triplets = [(i, j, v) for (i, j), (v, _) in entries.items()]
        triplets += [(j, i, v) for (i, j), (v, _) in entries.items() if i != j]

    if triplets:
        r, c, v = zip(*triplets)
        matrix = sp.csr_matrix(
            (np.asarray(v, dtype=np.float64), (np.asarray(r) - 1, np.asarray(c) - 1)),
            shape=(rows, rows),
        )
    else:
        matrix = sp.csr_matrix((rows, rows), dtype=np.float64)
    return SparseSymMatrix.from_scipy(matrix)


def save_layer(A: SparseSymMatrix, path: str) -> None:
    """Write one layer as a symmetric real Matrix Market file (lower triangle)."""
    lower = sp.tril(A.csr, format="coo")
    scipy.io.mmwrite(path, lower, field="real", precision=17, symmetry="symmetric")


def save_bundle(
    G: MultilayerGraph,
    directory: str,
    ground_truth: npt.ArrayLike | None = None,
    layer_labels: npt.ArrayLike | None = None,
    extra: dict | None = None,
) -> list[str]:
    """Write a multilayer bundle: one .mtx per layer plus meta.json.

    Args:
        G: The graph.
        directory: Target directory, created if missing.
        ground_truth: Optional consensus labels, length n.
        layer_labels: Optional per-layer labels, shape (T, n).
        extra: Additional JSON-serializable metadata (generator parameters).

    Returns:
        Paths of the files written.
    """
    os.makedirs(directory, exist_ok=True)
    written = []
    for t, layer in enumerate(G.layers):
        path = os.path.join(directory, LAYER_FILE_PATTERN.format(t))
        save_layer(layer, path)
        written.append(path)
    meta: dict = dict(extra or {})
    meta.update({"n": G.n, "T": G.T})
    if ground_truth is not None:
        meta["ground_truth"] = [int(v) for v in np.asarray(ground_truth)]
    if layer_labels is not None:
        meta["layer_labels"] = np.asarray(layer_labels, dtype=np.int64).tolist()
    meta_path = os.path.join(directory, META_FILE)
    with open(meta_path, "w", encoding="utf-8") as f:
        json.dump(meta, f, sort_keys=True, indent=2)
        f.write("\n")
    written.append(meta_path)
    logging.debug(f"Wrote bundle with {G.T} layers to {directory}")
    return written


def load_bundle(directory: str) -> Bundle:
    """Read a multilayer bundle written by save_bundle.

    Raises:
        FileNotFoundError: If meta.json or a layer file is missing.
        ValueError: If the metadata disagrees with the layers.
    """
    with open(os.path.join(directory, META_FILE), encoding="utf-8") as f:
        meta = json.load(f)
    T = int(meta["T"])
    layers = tuple(
        load_layer(os.path.join(directory, LAYER_FILE_PATTERN.format(t))) for t in range(T)
    )
    G = MultilayerGraph(layers)
    if G.n != int(meta["n"]):
        raise ValueError(f"meta.json declares n={meta['n']} but layers have n={G.n}")
    truth = meta.get("ground_truth")
    if truth is not None:
        truth = np.asarray(truth, dtype=np.int64)
        if truth.shape != (G.n,):
            raise ValueError(f"ground_truth has length {truth.size}, expected {G.n}")
    layer_labels = meta.get("layer_labels")
    if layer_labels is not None:
        layer_labels = np.asarray(layer_labels, dtype=np.int64)
    return Bundle(G, truth, layer_labels, meta)


def load_features(path: str) -> npt.NDArray[np.float64]:
    """Read a feature CSV (header row, one sample per line) into an n x d array."""
    return np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2, dtype=np.float64)


def load_labels(path: str) -> npt.NDArray[np.int64]:
    """Read integer labels from a CSV with a header.

    Uses the column named `label` when present, otherwise the last column.
    """
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        header = next(reader)
        column = header.index("label") if "label" in header else len(header) - 1
        return np.asarray([int(row[column]) for row in reader if row], dtype=np.int64)


def save_labels(labels: npt.ArrayLike, path: str) -> None:
    """Write labels as a `vertex,label` CSV."""
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(["vertex", "label"])
        for vertex, label in enumerate(np.asarray(labels)):
            writer.writerow([vertex, int(label)])
