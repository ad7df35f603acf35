"""Deterministic file emitters: heatmap/trace CSV, report JSON, state dumps.

All numbers are rendered with ``%.12g`` so repeated runs with the same
configuration are byte-identical; no timestamps or environment data ever
enter an artifact.
"""

import json
import os

import numpy as np

FLOAT_FMT = "%.12g"


def fmt(value) -> str:
    return FLOAT_FMT % float(value)


def write_heatmap_csv(path, row_label, row_values, col_label, col_values, magnitudes):
    """Matrix of magnitudes with a header row of column indices.

    ``magnitudes`` is (n_rows, n_cols) real; the top-left cell names the
    axes, e.g. ``t\\j``.
    """
    mat = np.asarray(magnitudes, dtype=float)
    if mat.shape != (len(row_values), len(col_values)):
        raise ValueError(
            f"shape mismatch: {mat.shape} vs ({len(row_values)}, {len(col_values)})"
        )
    lines = [f"{row_label}\\{col_label}," + ",".join(fmt(v) for v in col_values)]
    for rv, row in zip(row_values, mat):
        lines.append(fmt(rv) + "," + ",".join(fmt(v) for v in row))
    _write_text(path, "\n".join(lines) + "\n")


def write_trace_csv(path, header, columns):
    """Column-oriented trace: ``header`` names, ``columns`` equal-length arrays."""
    cols = [np.asarray(c, dtype=float) for c in columns]
    if len(cols) != len(header):
        raise ValueError("one header entry per column required")
    n = len(cols[0])
    if any(len(c) != n for c in cols):
        raise ValueError("columns must have equal length")
    lines = [",".join(header)]
    for i in range(n):
        lines.append(",".join(fmt(c[i]) for c in cols))
    _write_text(path, "\n".join(lines) + "\n")


def write_report_json(path, payload: dict):
    """Canonical JSON: sorted keys, fixed indentation, trailing newline."""
    _write_text(path, json.dumps(_plain(payload), sort_keys=True, indent=2) + "\n")


def write_heatmap(base, row_label, row_values, col_label, col_values, magnitudes, fmt="csv"):
    """Heatmap in the requested format; returns the path written."""
    if fmt == "csv":
        path = base + ".csv"
        write_heatmap_csv(path, row_label, row_values, col_label, col_values, magnitudes)
    elif fmt == "json":
        path = base + ".json"
        write_report_json(
            path,
            {
                "row_label": row_label,
                "rows": np.asarray(row_values, dtype=float),
                "col_label": col_label,
                "cols": np.asarray(col_values, dtype=float),
                "values": np.asarray(magnitudes, dtype=float),
            },
        )
    else:
        raise ValueError(f"unknown output format {fmt!r}")
    return path


def write_trace(base, header, columns, fmt="csv"):
    """Trace in the requested format; returns the path written."""
    if fmt == "csv":
        path = base + ".csv"
        write_trace_csv(path, header, columns)
    elif fmt == "json":
        path = base + ".json"
        write_report_json(
            path,
            {
                "header": list(header),
                "columns": [np.asarray(c, dtype=float) for c in columns],
            },
        )
    else:
        raise ValueError(f"unknown output format {fmt!r}")
    return path


def write_state_csv(path, matrix):
    """Complex matrix as rows of re,im adjacent pairs (N rows x 2N columns)."""
    c = np.asarray(matrix)
    lines = []
    for row in c:
        cells = []
        for z in row:
            cells.append(fmt(z.real))
            cells.append(fmt(z.imag))
        lines.append(",".join(cells))
    _write_text(path, "\n".join(lines) + "\n")


def _plain(obj):
    """Recursively convert numpy scalars/arrays so json can serialize them."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    return obj


def _write_text(path, text: str):
    with open(path, "w", newline="\n") as fh:
        fh.write(text)


class OutputTracker:
    """Records files as they are written so a failed run can remove them."""

    def __init__(self):
        self.paths = []

    def register(self, path):
        self.paths.append(path)
        return path

    def cleanup(self):
        for p in self.paths:
            if os.path.exists(p):
                os.remove(p)
        self.paths = []
