"""Raw dependency estimators on finite samples.

Every estimator works on the pairwise-complete part of a
:class:`PairedSample`: a pair takes part only when both coordinates are
present.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import EstimationError

__all__ = [
    "PairedSample",
    "ContingencyTable",
    "build_contingency",
    "pearson_r2",
    "mutual_information",
    "gini_gain",
    "is_missing",
]


def is_missing(value) -> bool:
    """True for ``None`` and float NaN."""
    if value is None:
        return True
    try:
        return isinstance(value, (float, np.floating)) and math.isnan(value)
    except TypeError:
        return False


@dataclass(frozen=True)
class PairedSample:
    """Aligned observation pairs with a pairwise-complete mask.

    Use :meth:`from_values` to build one from raw sequences where missing
    entries are ``None`` or NaN.
    """

    xs: np.ndarray
    ys: np.ndarray
    present: np.ndarray
    n: int = field(init=False)

    def __post_init__(self):
        xs = np.asarray(self.xs)
        ys = np.asarray(self.ys)
        present = np.asarray(self.present, dtype=bool)
        if not (len(xs) == len(ys) == len(present)):
            raise EstimationError(
                "length-mismatch",
                f"xs={len(xs)}, ys={len(ys)}, present={len(present)}",
            )
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ys", ys)
        object.__setattr__(self, "present", present)
        object.__setattr__(self, "n", int(present.sum()))

    @classmethod
    def from_values(cls, xs, ys) -> PairedSample:
        xs = list(xs) if not isinstance(xs, np.ndarray) else xs
        ys = list(ys) if not isinstance(ys, np.ndarray) else ys
        if len(xs) != len(ys):
            raise EstimationError("length-mismatch", f"xs={len(xs)}, ys={len(ys)}")
        present = np.array(
            [not (is_missing(a) or is_missing(b)) for a, b in zip(xs, ys)], dtype=bool
        )
        return cls(_as_array(xs), _as_array(ys), present)

    @classmethod
    def complete(cls, xs, ys) -> PairedSample:
        """Sample with every pair present (no missing-value scan)."""
        xs = np.asarray(xs)
        ys = np.asarray(ys)
        return cls(xs, ys, np.ones(len(xs), dtype=bool))

    @property
    def x(self) -> np.ndarray:
        """Present x values."""
        return self.xs[self.present]

    @property
    def y(self) -> np.ndarray:
        """Present y values."""
        return self.ys[self.present]

    def with_y(self, new_y) -> PairedSample:
        """Complete sample made of the present x values and ``new_y``."""
        return PairedSample.complete(self.x, new_y)


def _as_array(values) -> np.ndarray:
    if isinstance(values, np.ndarray):
        return values
    if all(isinstance(v, (int, float, np.integer, np.floating)) or v is None for v in values):
        return np.array([np.nan if v is None else float(v) for v in values])
    return np.array(values, dtype=object)


@dataclass(frozen=True)
class ContingencyTable:
    """r x c table of counts n_ij with marginals.

    Empty rows and columns never appear; ``row_labels`` and ``col_labels``
    keep the first-appearance order of the categories.
    """

    counts: np.ndarray
    row_labels: tuple = ()
    col_labels: tuple = ()

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=np.int64)
        if counts.ndim != 2:
            raise EstimationError("bad-table", "counts must be two-dimensional")
        if (counts < 0).any():
            raise EstimationError("bad-table", "negative count")
        counts.setflags(write=False)
        object.__setattr__(self, "counts", counts)

    @classmethod
    def from_counts(cls, counts, row_labels=None, col_labels=None) -> ContingencyTable:
        """Build a table, dropping all-zero rows and columns."""
        counts = np.asarray(counts, dtype=np.int64)
        keep_r = counts.sum(axis=1) > 0
        keep_c = counts.sum(axis=0) > 0
        if row_labels is None:
            row_labels = range(counts.shape[0])
        if col_labels is None:
            col_labels = range(counts.shape[1])
        rows = tuple(lab for lab, k in zip(row_labels, keep_r) if k)
        cols = tuple(lab for lab, k in zip(col_labels, keep_c) if k)
        return cls(counts[keep_r][:, keep_c], rows, cols)

    @property
    def n(self) -> int:
        return int(self.counts.sum())

    @property
    def row_marginals(self) -> np.ndarray:
        return self.counts.sum(axis=1)

    @property
    def col_marginals(self) -> np.ndarray:
        return self.counts.sum(axis=0)

    @property
    def shape(self) -> tuple[int, int]:
        return self.counts.shape


def build_contingency(sample: PairedSample) -> ContingencyTable:
    """Tally the present pairs of a categorical sample."""
    if sample.n == 0:
        raise EstimationError("empty-sample")
    rows: dict = {}
    cols: dict = {}
    xi = np.empty(sample.n, dtype=np.int64)
    yi = np.empty(sample.n, dtype=np.int64)
    for k, (a, b) in enumerate(zip(sample.x.tolist(), sample.y.tolist())):
        xi[k] = rows.setdefault(a, len(rows))
        yi[k] = cols.setdefault(b, len(cols))
    counts = np.bincount(xi * len(cols) + yi, minlength=len(rows) * len(cols))
    return ContingencyTable(
        counts.reshape(len(rows), len(cols)), tuple(rows), tuple(cols)
    )


def pearson_r2(sample: PairedSample) -> float:
    """Squared Pearson correlation over present pairs."""
    if sample.n < 3:
        raise EstimationError("sample-too-small", f"n={sample.n} < 3")
    x = np.asarray(sample.x, dtype=np.float64)
    y = np.asarray(sample.y, dtype=np.float64)
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = float(dx @ dx)
    syy = float(dy @ dy)
    if sxx <= 0.0 or syy <= 0.0:
        raise EstimationError("degenerate-variance")
    sxy = float(dx @ dy)
    return min(1.0, sxy * sxy / (sxx * syy))


def mutual_information(table: ContingencyTable) -> float:
    """Mutual information of a contingency table, in bits."""
    counts = table.counts.astype(np.float64)
    n = counts.sum()
    nz = counts > 0
    outer = np.outer(table.row_marginals, table.col_marginals).astype(np.float64)
    nij = counts[nz]
    mi = float(np.sum(nij / n * np.log2(nij * n / outer[nz])))
    return max(mi, 0.0)


def gini_gain(table: ContingencyTable) -> float:
    """Reduction of the Gini impurity of Y after conditioning on X."""
    counts = table.counts.astype(np.float64)
    n = counts.sum()
    ni = counts.sum(axis=1)
    nj = counts.sum(axis=0)
    prior = 1.0 - np.sum((nj / n) ** 2)
    conditional = np.sum(ni / n * (1.0 - np.sum((counts / ni[:, None]) ** 2, axis=1)))
    return max(float(prior - conditional), 0.0)
