"""CSV ingestion with explicit missing values and per-column type tags."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .errors import EstimationError

DEFAULT_MISSING = ("", "?", "NA")


@dataclass
class Dataset:
    """Rectangular table; real columns are float arrays with NaN for missing,
    categorical columns are lists of strings with ``None`` for missing."""

    names: list
    kinds: dict
    columns: dict
    n_rows: int

    def column(self, name: str):
        if name not in self.columns:
            raise EstimationError("unknown-column", name)
        return self.columns[name]


def _parse_float(text: str):
    try:
        value = float(text)
    except ValueError:
        return None
    return value


def load_csv(path, missing_markers=DEFAULT_MISSING, type_overrides=None, delimiter=",") -> Dataset:
    """Read a headed CSV file.

    A column is categorical when any present cell fails to parse as a
    number, or when ``type_overrides`` says so.
    """
    type_overrides = type_overrides or {}
    missing = set(missing_markers)
    with open(path, newline="") as fh:
        reader = csv.reader(fh, delimiter=delimiter)
        try:
            header = next(reader)
        except StopIteration:
            raise EstimationError("empty-file", str(path)) from None
        header = [h.strip() for h in header]
        seen = set()
        for h in header:
            if h in seen:
                raise EstimationError("duplicate-header", h)
            seen.add(h)
        raw_rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise EstimationError(
                    "ragged-row", f"row {lineno} has {len(row)} cells, expected {len(header)}"
                )
            raw_rows.append([cell.strip() for cell in row])

    for name, kind in type_overrides.items():
        if name not in seen:
            raise EstimationError("unknown-column", name)
        if kind not in ("real", "categorical"):
            raise EstimationError("bad-type", f"{name}: {kind}")

    columns = {}
    kinds = {}
    for j, name in enumerate(header):
        cells = [row[j] for row in raw_rows]
        present = [c for c in cells if c not in missing]
        kind = type_overrides.get(name)
        if kind is None:
            kind = "real" if all(_parse_float(c) is not None for c in present) else "categorical"
        if kind == "real":
            values = []
            for i, c in enumerate(cells):
                if c in missing:
                    values.append(math.nan)
                    continue
                v = _parse_float(c)
                if v is None:
                    raise EstimationError("bad-cell", f"column {name!r} row {i + 2}: {c!r} is not numeric")
                values.append(v)
            columns[name] = np.array(values, dtype=np.float64)
        else:
            columns[name] = [None if c in missing else c for c in cells]
        kinds[name] = kind
    return Dataset(header, kinds, columns, len(raw_rows))
