"""Deterministic result writers and a small dataset loader.

JSON output is key-sorted and whitespace-free so identical payloads produce
identical bytes.  CSV output uses a header row, comma separation, and
17-significant-digit floats, which round-trip binary64 exactly.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np


def format_float(x: float) -> str:
    """Shortest fixed-rule decimal rendering that round-trips a float."""
    return "%.17g" % float(x)


def dump_json(obj) -> str:
    """Canonical JSON text: sorted keys, no whitespace, trailing newline."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False) + "\n"


def write_json(path, obj) -> None:
    Path(path).write_text(dump_json(obj), encoding="utf-8")


def _format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format_float(value)
    return str(value)


def write_csv(path, rows: Sequence[Mapping], columns: Sequence[str] | None = None) -> None:
    """Write mapping rows under a header; column order comes from the first
    row unless given explicitly."""
    if columns is None:
        if not rows:
            raise ValueError("cannot infer columns from an empty table")
        columns = list(rows[0])
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_format_cell(row.get(col)) for col in columns])


def read_two_column_csv(path) -> tuple[np.ndarray, np.ndarray]:
    """Load a (x, y) dataset from a comma-separated file.

    A single non-numeric leading row is treated as a header; every other row
    must hold exactly two numbers.
    """
    xs: list[float] = []
    ys: list[float] = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        for index, row in enumerate(csv.reader(fh)):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != 2:
                raise ValueError(
                    f"row {index + 1} of {path} has {len(row)} fields, expected 2"
                )
            try:
                x, y = float(row[0]), float(row[1])
            except ValueError:
                if index == 0:
                    continue  # header row
                raise ValueError(
                    f"row {index + 1} of {path} is not numeric: {row!r}"
                ) from None
            xs.append(x)
            ys.append(y)
    if not xs:
        raise ValueError(f"no data rows in {path}")
    return np.asarray(xs, dtype=float), np.asarray(ys, dtype=float)
