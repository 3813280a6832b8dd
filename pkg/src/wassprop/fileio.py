"""Plain-text formats: label tables, hypergraph and graph files, quantile
field CSVs, categorical tables, and metric traces.

Label files are CSV with header `vertex,kind,params`.  kind "hist" encodes a
histogram as `b1:m1;b2:m2;...` (bin:mass pairs); kind "gauss" encodes a
diagonal Gaussian as `mu1,...,mub|sd1,...,sdb`.  Hypergraph files hold one
hyperedge per line as whitespace-separated 0-based vertex indices; graph
files hold lines `i j w`.  All floats are written with `.` decimals via repr
(shortest round-trip) and all files use `\n` line endings.
"""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .errors import InputError
from .experiments import CategoricalTable
from .hypergraph import Hypergraph, WeightedGraph
from .labels import (
    DiagGaussianLabel,
    QuantileGrid,
    QuantileLabel,
    quantile_from_histogram,
)
from .tikhonov import QuantileField

LABELS_HEADER = ["vertex", "kind", "params"]


def format_float(x: float) -> str:
    return repr(float(x))


def gauss_params(label: DiagGaussianLabel) -> str:
    mu = ",".join(format_float(v) for v in label.mean)
    sd = ",".join(format_float(v) for v in label.std)
    return f"{mu}|{sd}"


def parse_gauss_params(text: str) -> DiagGaussianLabel:
    parts = text.split("|")
    if len(parts) != 2:
        raise InputError(f"gauss params need one '|', got {text!r}")
    try:
        mean = [float(v) for v in parts[0].split(",")]
        std = [float(v) for v in parts[1].split(",")]
    except ValueError as exc:
        raise InputError(f"bad gauss params {text!r}: {exc}") from None
    return DiagGaussianLabel(mean, std)


def hist_params(bins: Sequence[float], masses: Sequence[float]) -> str:
    if len(bins) != len(masses):
        raise InputError("bins and masses must have equal length")
    return ";".join(
        f"{format_float(b)}:{format_float(m)}" for b, m in zip(bins, masses)
    )


def parse_hist_params(text: str) -> Tuple[List[float], List[float]]:
    bins: List[float] = []
    masses: List[float] = []
    for pair in text.split(";"):
        pieces = pair.split(":")
        if len(pieces) != 2:
            raise InputError(f"hist pair must be 'bin:mass', got {pair!r}")
        try:
            bins.append(float(pieces[0]))
            masses.append(float(pieces[1]))
        except ValueError as exc:
            raise InputError(f"bad hist pair {pair!r}: {exc}") from None
    return bins, masses


def label_params(label) -> str:
    """Serialized params column: gauss form for Gaussians, semicolon-joined
    quantile samples for quantile labels."""
    if isinstance(label, DiagGaussianLabel):
        return gauss_params(label)
    if isinstance(label, QuantileLabel):
        return ";".join(format_float(v) for v in label.values)
    raise InputError(f"cannot serialize label of type {type(label).__name__}")


def read_labels(path, grid: Optional[QuantileGrid] = None):
    """Parse a labels CSV into (kind, {vertex: label}).

    All rows must share one kind; hist rows are resampled onto `grid`
    (required for hist files).
    """
    rows = []
    with open(Path(path), newline="") as fh:
        for row in csv.reader(fh):
            if not row:
                continue
            if row[0].strip() == "vertex":
                continue
            if len(row) != 3:
                raise InputError(f"labels row needs 3 columns, got {row!r}")
            rows.append([field.strip() for field in row])
    if not rows:
        raise InputError(f"no label rows found in {path}")
    kinds = {row[1] for row in rows}
    if not kinds <= {"hist", "gauss"}:
        raise InputError(f"unknown label kind(s) {sorted(kinds - {'hist', 'gauss'})}")
    if len(kinds) != 1:
        raise InputError("labels file mixes hist and gauss rows")
    kind = kinds.pop()
    if kind == "hist" and grid is None:
        raise InputError("hist labels require a quantile grid")
    out: Dict[int, object] = {}
    for vertex_text, _, params in rows:
        try:
            vertex = int(vertex_text)
        except ValueError:
            raise InputError(f"bad vertex index {vertex_text!r}") from None
        if vertex in out:
            raise InputError(f"duplicate label for vertex {vertex}")
        if kind == "hist":
            bins, masses = parse_hist_params(params)
            out[vertex] = quantile_from_histogram(bins, masses, grid)
        else:
            out[vertex] = parse_gauss_params(params)
    return kind, out


def write_gauss_labels(path, labels: Mapping[int, DiagGaussianLabel]) -> None:
    with open(Path(path), "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(LABELS_HEADER)
        for v in sorted(labels):
            writer.writerow([v, "gauss", gauss_params(labels[v])])


def write_hist_labels(
    path, hists: Mapping[int, Tuple[Sequence[float], Sequence[float]]]
) -> None:
    with open(Path(path), "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(LABELS_HEADER)
        for v in sorted(hists):
            bins, masses = hists[v]
            writer.writerow([v, "hist", hist_params(bins, masses)])


def _data_lines(path) -> List[List[str]]:
    lines = []
    with open(Path(path)) as fh:
        for raw in fh:
            text = raw.strip()
            if not text or text.startswith("#"):
                continue
            lines.append(text.split())
    return lines


def read_hypergraph(path, n: Optional[int] = None) -> Hypergraph:
    """One hyperedge per line; `#` comments and blank lines ignored; the
    vertex count defaults to one past the largest index seen."""
    edges: List[Tuple[int, ...]] = []
    for fields in _data_lines(path):
        try:
            edges.append(tuple(int(v) for v in fields))
        except ValueError:
            raise InputError(f"bad hyperedge line {' '.join(fields)!r}") from None
    if n is None:
        if not edges:
            raise InputError("cannot infer vertex count from an empty hypergraph file")
        n = max(max(e) for e in edges) + 1
    return Hypergraph(n, edges)


def write_hypergraph(path, h: Hypergraph) -> None:
    with open(Path(path), "w") as fh:
        for e in h.edges:
            fh.write(" ".join(str(v) for v in e) + "\n")


def read_graph(path, n: Optional[int] = None) -> WeightedGraph:
    """Lines `i j w`; `#` comments ignored; duplicate pairs rejected."""
    weights: Dict[Tuple[int, int], float] = {}
    for fields in _data_lines(path):
        if len(fields) != 3:
            raise InputError(f"graph line needs 'i j w', got {' '.join(fields)!r}")
        try:
            i, j, w = int(fields[0]), int(fields[1]), float(fields[2])
        except ValueError:
            raise InputError(f"bad graph line {' '.join(fields)!r}") from None
        key = (min(i, j), max(i, j))
        if key in weights:
            raise InputError(f"duplicate edge {key} in graph file")
        weights[key] = w
    if n is None:
        if not weights:
            raise InputError("cannot infer vertex count from an empty graph file")
        n = max(max(k) for k in weights) + 1
    return WeightedGraph(n, weights)


def write_graph(path, g: WeightedGraph) -> None:
    with open(Path(path), "w") as fh:
        for (i, j), w in sorted(g.edges.items()):
            fh.write(f"{i} {j} {format_float(w)}\n")


def write_field(path, field: QuantileField) -> None:
    """CSV rows `vertex,s_1,...,s_S` of quantile samples."""
    S = field.grid.size
    with open(Path(path), "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["vertex"] + [f"s_{j}" for j in range(1, S + 1)])
        for v in range(field.n):
            writer.writerow([v] + [format_float(x) for x in field.values[v]])


def read_field(path, grid: QuantileGrid) -> QuantileField:
    rows: List[List[float]] = []
    with open(Path(path), newline="") as fh:
        for row in csv.reader(fh):
            if not row or row[0] == "vertex":
                continue
            rows.append([float(x) for x in row[1:]])
    values = np.array(rows)
    if values.ndim != 2 or values.shape[1] != grid.size:
        raise InputError(
            f"field file width {values.shape[-1] if rows else 0} does not match grid size {grid.size}"
        )
    return QuantileField(grid, values)


def read_categorical_csv(path, class_column: str = "class") -> CategoricalTable:
    """CSV with header; the named class column is split out, every other
    column is a categorical feature."""
    with open(Path(path), newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise InputError(f"{path} is empty") from None
        header = [h.strip() for h in header]
        if class_column not in header:
            raise InputError(f"class column {class_column!r} not found in header {header}")
        class_idx = header.index(class_column)
        feature_names = tuple(h for i, h in enumerate(header) if i != class_idx)
        rows: List[Tuple[str, ...]] = []
        classes: List[str] = []
        for row in reader:
            if not row:
                continue
            if len(row) != len(header):
                raise InputError(f"row {row!r} does not match header width {len(header)}")
            classes.append(row[class_idx].strip())
            rows.append(tuple(v.strip() for i, v in enumerate(row) if i != class_idx))
    return CategoricalTable(feature_names, tuple(rows), tuple(classes))


def write_truth(path, classes: Sequence[int]) -> None:
    with open(Path(path), "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["vertex", "class"])
        for v, c in enumerate(classes):
            writer.writerow([v, int(c)])


def read_truth(path) -> np.ndarray:
    values: Dict[int, int] = {}
    with open(Path(path), newline="") as fh:
        for row in csv.reader(fh):
            if not row or row[0] == "vertex":
                continue
            values[int(row[0])] = int(row[1])
    if not values:
        raise InputError(f"no truth rows found in {path}")
    n = max(values) + 1
    if sorted(values) != list(range(n)):
        raise InputError("truth file must cover vertices 0..n-1")
    return np.array([values[v] for v in range(n)], dtype=np.intp)


def write_trace(path, losses: Sequence[float]) -> None:
    with open(Path(path), "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["iter", "loss"])
        for t, loss in enumerate(losses):
            writer.writerow([t, format_float(loss)])


def write_incidence(path, h: Hypergraph) -> None:
    """0/1 vertex-by-hyperedge incidence matrix, for external baselines."""
    m = len(h.edges)
    matrix = np.zeros((h.n, m), dtype=int)
    for j, e in enumerate(h.edges):
        matrix[list(e), j] = 1
    with open(Path(path), "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["vertex"] + [f"edge_{j}" for j in range(m)])
        for v in range(h.n):
            writer.writerow([v] + matrix[v].tolist())
