"""CSV/JSON formats for series tables, coefficients, labels and run metadata.

Series tables have a header ``time,<id_1>,...,<id_N>`` and one row per time
point. ``NA`` (case-sensitive) is the only missing-value token. Reals are
written in scientific notation with 17 significant digits, so files
round-trip exactly.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import FormatError

NA = "NA"
_FLOAT_FMT = "{:.16e}"


@dataclass(frozen=True)
class SeriesTable:
    x: np.ndarray
    Y: np.ndarray
    mask: np.ndarray
    series_ids: tuple

    @property
    def n_series(self) -> int:
        return self.Y.shape[1]

    @property
    def n_points(self) -> int:
        return self.x.size


def format_real(value: float) -> str:
    return _FLOAT_FMT.format(float(value))


def _parse_real(token: str, row: int, col: int) -> float:
    # float() accepts things like "nan", "inf" and " 1"; only plain finite numbers are valid
    if token != token.strip() or token == "":
        raise FormatError(f"malformed cell {token!r}", row, col)
    try:
        value = float(token)
    except ValueError:
        raise FormatError(f"malformed cell {token!r}", row, col) from None
    if not math.isfinite(value):
        raise FormatError(f"non-finite cell {token!r}", row, col)
    return value


def _read_rows(path) -> list[list[str]]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh)]
    while rows and not rows[-1]:
        rows.pop()
    return rows


def read_series_csv(path) -> SeriesTable:
    """Parse a series table.

    Raises ``FormatError`` on malformed cells, ragged rows or a time column
    that is not strictly increasing. Row numbers in messages are 1-based
    file lines; column numbers are 1-based.
    """
    rows = _read_rows(path)
    if not rows:
        raise FormatError("empty file")
    header = rows[0]
    if len(header) < 2 or header[0].strip() != "time":
        raise FormatError("header must start with 'time' followed by series ids", 1)
    width = len(header)
    body = rows[1:]
    if not body:
        raise FormatError("no data rows")
    x = np.empty(len(body))
    Y = np.zeros((len(body), width - 1))
    mask = np.zeros((len(body), width - 1), dtype=bool)
    for i, row in enumerate(body):
        line = i + 2
        if len(row) != width:
            raise FormatError(f"expected {width} cells, found {len(row)}", line)
        if row[0] == NA:
            raise FormatError("time value may not be missing", line, 1)
        x[i] = _parse_real(row[0], line, 1)
        for j, token in enumerate(row[1:]):
            if token == NA:
                mask[i, j] = True
            else:
                Y[i, j] = _parse_real(token, line, j + 2)
    if np.any(np.diff(x) <= 0):
        bad = int(np.argmax(np.diff(x) <= 0))
        raise FormatError(f"time column not strictly increasing ({x[bad]} then {x[bad + 1]})", bad + 3, 1)
    Y[mask] = np.nan
    return SeriesTable(x, Y, mask, tuple(h.strip() for h in header[1:]))


def write_series_csv(path, x, Y, mask=None, series_ids=None) -> Path:
    x = np.asarray(x, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    if mask is None:
        mask = np.isnan(Y)
    if series_ids is None:
        series_ids = [f"s{i}" for i in range(Y.shape[1])]
    if Y.shape != (x.size, len(series_ids)):
        raise ValueError(f"Y shape {Y.shape} does not match {x.size} times x {len(series_ids)} series")
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["time", *series_ids])
        for i in range(x.size):
            w.writerow([format_real(x[i])] + [NA if mask[i, j] else format_real(Y[i, j])
                                              for j in range(Y.shape[1])])
    return path


def write_labels_csv(path, series_ids: Sequence[str], labels, column: str = "cluster") -> Path:
    labels = np.asarray(labels)
    if len(series_ids) != labels.size:
        raise ValueError(f"{len(series_ids)} ids for {labels.size} labels")
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["series_id", column])
        for sid, lab in zip(series_ids, labels):
            w.writerow([sid, int(lab)])
    return path


def read_labels_csv(path, column: str | int | None = None):
    """Return ``(series_ids, labels)`` from a two-or-more column label file.

    ``column`` selects the label column by header name or 0-based index;
    by default the second column is used. Labels may be integers or
    arbitrary strings; strings are mapped to integers in order of first
    appearance.
    """
    rows = _read_rows(path)
    if len(rows) < 2:
        raise FormatError("label file needs a header and at least one row")
    header = [h.strip() for h in rows[0]]
    if column is None:
        idx = 1
    elif isinstance(column, int):
        idx = column
    else:
        if column not in header:
            raise FormatError(f"no column named {column!r} in {header}")
        idx = header.index(column)
    if idx >= len(header):
        raise FormatError(f"column {idx} out of range for header {header}")
    ids, raw = [], []
    for i, row in enumerate(rows[1:]):
        if len(row) != len(header):
            raise FormatError(f"expected {len(header)} cells, found {len(row)}", i + 2)
        ids.append(row[0])
        raw.append(row[idx])
    try:
        labels = np.array([int(t) for t in raw], dtype=np.int64)
    except ValueError:
        codes: dict[str, int] = {}
        labels = np.array([codes.setdefault(t, len(codes)) for t in raw], dtype=np.int64)
    return ids, labels


def write_matrix_csv(path, matrix, row_name: str, col_names: Sequence[str]) -> Path:
    """Write ``matrix`` with a leading index column ``row_name`` (0-based row index)."""
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.ndim != 2 or matrix.shape[1] != len(col_names):
        raise ValueError(f"matrix shape {matrix.shape} does not match {len(col_names)} column names")
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([row_name, *col_names])
        for i, row in enumerate(matrix):
            w.writerow([i] + [format_real(v) for v in row])
    return path


def read_matrix_csv(path):
    """Inverse of ``write_matrix_csv``; returns ``(matrix, column_names)``."""
    rows = _read_rows(path)
    if len(rows) < 2:
        raise FormatError("matrix file needs a header and at least one row")
    header = rows[0]
    out = np.empty((len(rows) - 1, len(header) - 1))
    for i, row in enumerate(rows[1:]):
        if len(row) != len(header):
            raise FormatError(f"expected {len(header)} cells, found {len(row)}", i + 2)
        for j, token in enumerate(row[1:]):
            out[i, j] = _parse_real(token, i + 2, j + 2)
    return out, tuple(h.strip() for h in header[1:])


def write_coefficients_csv(path, coefficients, series_ids) -> Path:
    """``n_basis`` rows (coefficient index) by ``N`` series columns."""
    return write_matrix_csv(path, coefficients, "coef_index", list(series_ids))


def write_json(path, payload: dict) -> Path:
    path = Path(path)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(_jsonable(payload), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def read_json(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, Path):
        return str(obj)
    return obj


def write_results(outdir, partition, fits, series_ids: Sequence[str] | None = None,
                  lambdas: dict | None = None, extra_metadata: dict | None = None,
                  prefix: str = "") -> dict:
    """Write labels, centroids, coefficients and run metadata into ``outdir``.

    ``fits`` is either a sequence of ``SplineFit`` (one per series, in the
    order of ``series_ids``) or a ``CoefficientMatrix``; in the latter case
    per-series lambdas come from ``lambdas`` when known. Returns a mapping
    from artifact name to written path.
    """
    outdir = Path(outdir)
    try:
        outdir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {outdir}: {exc}") from exc
    if hasattr(fits, "values") and hasattr(fits, "series_ids"):
        coefs = fits.values
        series_ids = list(series_ids if series_ids is not None else fits.series_ids)
        lam_map = {sid: (lambdas or {}).get(sid) for sid in series_ids}
    else:
        fits = list(fits)
        if series_ids is None:
            raise ValueError("series_ids required when passing fits")
        series_ids = list(series_ids)
        if len(fits) != len(series_ids):
            raise ValueError(f"{len(fits)} fits for {len(series_ids)} series ids")
        coefs = np.column_stack([f.coefficients for f in fits])
        lam_map = {sid: f.lam for sid, f in zip(series_ids, fits)}
    if coefs.shape[1] != len(series_ids) or len(series_ids) != partition.labels.size:
        raise ValueError("partition, coefficients and series ids disagree in length")
    if coefs.shape[0] != partition.centroids.shape[0]:
        raise ValueError("centroid and coefficient dimensions disagree")
    paths = {
        "labels": write_labels_csv(outdir / f"{prefix}labels.csv", series_ids, partition.labels),
        "centroids": write_matrix_csv(outdir / f"{prefix}centroids.csv", partition.centroids,
                                      "coef_index", [f"cluster_{k}" for k in range(partition.k)]),
        "coefficients": write_coefficients_csv(outdir / f"{prefix}coefficients.csv", coefs, series_ids),
    }
    restarts = partition.restart_objectives
    meta = {
        "seed": partition.seed,
        "k": partition.k,
        "distance": partition.distance,
        "restarts": None if restarts is None else int(len(restarts)),
        "objective": partition.objective,
        "best_restart": partition.restart_index,
        "n_iterations": partition.n_iterations,
        "lambdas": lam_map,
    }
    if extra_metadata:
        meta.update(extra_metadata)
    paths["metadata"] = write_json(outdir / f"{prefix}run.json", meta)
    return paths
