"""Maximal information coefficient.

MIC is the largest normalized mutual information over r x c grids with
``r * c <= B(n)`` laid on the scatter plot of two real variables. The
search equipartitions one axis into mass-balanced rows and optimizes the
cut points of the other axis by dynamic programming, in both
orientations.

Two search modes share the grid family:

``exhaustive_equipartition``
    every boundary between consecutive distinct values is a cut candidate;
    the dynamic program is exact over that family.
``approx``
    candidates are first merged into clumps (runs of points falling in
    the same row) and, when there are more than ``clump_factor * k``
    clumps, into mass-balanced superclumps. Restricting candidates can only
    lower the result, so ``approx <= exhaustive_equipartition``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator

import numpy as np

from .errors import EstimationError
from .measures import ContingencyTable, PairedSample, mutual_information

__all__ = [
    "Grid",
    "MicConfig",
    "grid_budget",
    "equipartition",
    "bin_sample",
    "normalized_mi",
    "mic",
    "search_grids",
]

MODES = ("approx", "exhaustive_equipartition")


@dataclass(frozen=True)
class Grid:
    x_cuts: tuple[float, ...]
    y_cuts: tuple[float, ...]

    def __post_init__(self):
        for cuts in (self.x_cuts, self.y_cuts):
            if any(b <= a for a, b in zip(cuts, cuts[1:])):
                raise EstimationError("bad-grid", "cut points must be strictly increasing")

    @property
    def rows(self) -> int:
        return len(self.x_cuts) + 1

    @property
    def cols(self) -> int:
        return len(self.y_cuts) + 1


@dataclass(frozen=True)
class MicConfig:
    alpha_exponent: float = 0.6
    search_mode: str = "approx"
    clump_factor: int = 15

    def __post_init__(self):
        if not 0.0 < self.alpha_exponent <= 1.0:
            raise EstimationError("bad-config", "alpha_exponent must be in (0, 1]")
        if self.search_mode not in MODES:
            raise EstimationError("bad-config", f"unknown search mode {self.search_mode!r}")


def grid_budget(n: int, alpha_exponent: float = 0.6) -> int:
    """Largest admissible r*c for a sample of size n (never below 4)."""
    return max(int(math.floor(n**alpha_exponent + 1e-12)), 4)


def _tie_groups(sorted_values: np.ndarray) -> np.ndarray:
    """Start offsets of runs of equal values, plus a final ``len`` sentinel."""
    change = np.flatnonzero(sorted_values[1:] != sorted_values[:-1]) + 1
    return np.concatenate(([0], change, [len(sorted_values)]))


def _greedy_sizes(group_sizes, k: int) -> list[int]:
    """Bin sizes from packing consecutive groups toward equal mass."""
    n = sum(group_sizes)
    sizes = [0]
    assigned = 0
    desired = n / k
    for group in group_sizes:
        size = sizes[-1]
        if (
            size > 0
            and len(sizes) < k
            and abs(size + group - desired) >= abs(size - desired)
        ):
            assigned += size
            sizes.append(0)
            desired = (n - assigned) / (k - len(sizes) + 1)
        sizes[-1] += group
    return sizes


@lru_cache(maxsize=4096)
def _distinct_sizes(n: int, k: int) -> tuple[int, ...]:
    return tuple(_greedy_sizes([1] * n, k))


def equipartition(values, k: int) -> np.ndarray:
    """Label each value with one of at most ``k`` mass-balanced bins.

    Equal values always share a bin, so fewer than ``k`` bins come out
    when ties are heavy. Labels are increasing with the value.
    """
    values = np.asarray(values, dtype=np.float64)
    n = len(values)
    order = np.argsort(values, kind="stable")
    bounds = _tie_groups(values[order])
    if len(bounds) == n + 1:
        sizes = _distinct_sizes(n, k)
    else:
        sizes = _greedy_sizes(np.diff(bounds).tolist(), k)
    labels = np.empty(n, dtype=np.int64)
    labels[order] = np.repeat(np.arange(len(sizes)), sizes)
    return labels


def bin_sample(sample: PairedSample, grid: Grid) -> ContingencyTable:
    x = np.asarray(sample.x, dtype=np.float64)
    y = np.asarray(sample.y, dtype=np.float64)
    xi = np.searchsorted(np.asarray(grid.x_cuts, dtype=np.float64), x, side="right")
    yi = np.searchsorted(np.asarray(grid.y_cuts, dtype=np.float64), y, side="right")
    counts = np.bincount(xi * grid.cols + yi, minlength=grid.rows * grid.cols)
    return ContingencyTable.from_counts(counts.reshape(grid.rows, grid.cols))


def normalized_mi(sample: PairedSample, grid: Grid) -> float:
    """MI of the binned sample divided by log2 of the smaller grid side."""
    if min(grid.rows, grid.cols) < 2:
        raise EstimationError("degenerate-grid", f"{grid.rows}x{grid.cols}")
    if sample.n < 2:
        raise EstimationError("sample-too-small", f"n={sample.n} < 2")
    table = bin_sample(sample, grid)
    return mutual_information(table) / math.log2(min(grid.rows, grid.cols))


@lru_cache(maxsize=64)
def _xlogx_table(n: int) -> np.ndarray:
    """``v * log2(v)`` for the integers 0..n (0 at v = 0)."""
    v = np.arange(n + 1, dtype=np.float64)
    out = np.zeros(n + 1)
    out[1:] = v[1:] * np.log2(v[1:])
    out.setflags(write=False)
    return out


def _entropy(counts: np.ndarray) -> float:
    n = counts.sum()
    p = counts[counts > 0] / n
    return float(-(p * np.log2(p)).sum())


def _blocks(sorted_vals: np.ndarray, labels: np.ndarray, n_rows: int, mode: str, max_cols: int, clump_factor: int):
    """Row-count matrix of the cut-candidate blocks along the optimized axis.

    Returns ``(block_counts, block_stops)``: one row of per-row counts per
    block, and the exclusive end offset of each block in sorted order.
    """
    bounds = _tie_groups(sorted_vals)
    n_groups = len(bounds) - 1
    per_point = np.zeros((len(sorted_vals), n_rows), dtype=np.int64)
    per_point[np.arange(len(sorted_vals)), labels] = 1
    cum = np.vstack([np.zeros(n_rows, dtype=np.int64), np.cumsum(per_point, axis=0)])
    group_counts = cum[bounds[1:]] - cum[bounds[:-1]]
    stops = bounds[1:]
    if mode == "exhaustive_equipartition":
        return group_counts, stops

    # Clumps: merge adjacent groups that sit entirely in the same row.
    pure_row = np.where(
        (group_counts > 0).sum(axis=1) == 1, group_counts.argmax(axis=1), -1
    )
    keep = np.ones(n_groups, dtype=bool)
    keep[:-1] = ~((pure_row[:-1] >= 0) & (pure_row[:-1] == pure_row[1:]))
    clump_stops = stops[keep]
    limit = clump_factor * max_cols
    if len(clump_stops) > limit:
        # Superclumps: mass-balanced subset of clump boundaries.
        n = len(sorted_vals)
        targets = n * np.arange(1, limit) / limit
        idx = np.searchsorted(clump_stops, targets, side="left")
        idx = np.clip(idx, 0, len(clump_stops) - 1)
        chosen = np.unique(np.append(clump_stops[idx], n))
        clump_stops = chosen
    starts = np.concatenate(([0], clump_stops[:-1]))
    return cum[clump_stops] - cum[starts], clump_stops


def _optimize_axis(block_counts: np.ndarray, max_cols: int) -> tuple[np.ndarray, list]:
    """Best column partitions with exactly l columns, for l = 1..max_cols.

    Returns ``(best, back)`` where ``best[l]`` is the maximal
    ``sum_col sum_row n log n - n_col log n_col`` (``-inf`` if unreachable)
    and ``back`` holds argmax tables for recovering the cut blocks.
    """
    m = block_counts.shape[0]
    cum = np.vstack(
        [np.zeros(block_counts.shape[1], dtype=np.int64), np.cumsum(block_counts, axis=0)]
    )
    lookup = _xlogx_table(int(cum[-1].sum()))
    # diff[s, t] = counts of the column made of blocks s..t-1
    diff = np.abs(cum[None, :, :] - cum[:, None, :])
    tot = diff.sum(axis=2)
    w = lookup[diff].sum(axis=2) - lookup[tot]
    valid = np.triu(np.ones((m + 1, m + 1), dtype=bool), k=1)
    w = np.where(valid, w, -np.inf)

    best = np.full(max_cols + 1, -np.inf)
    back = [None, None]
    f = w[0].copy()
    best[1] = f[m]
    for l in range(2, min(max_cols, m) + 1):
        cand = f[:, None] + w
        arg = cand.argmax(axis=0)
        f = cand[arg, np.arange(m + 1)]
        back.append(arg)
        best[l] = f[m]
    return best, back


def _cuts_from_back(back: list, l: int, m: int) -> list[int]:
    """Block indices ending each of the first l-1 columns."""
    ends = []
    t = m
    for level in range(l, 1, -1):
        s = int(back[level][t])
        ends.append(s)
        t = s
    return sorted(ends)


def _midpoint_cuts(sorted_vals: np.ndarray, stops: np.ndarray, block_ends: list[int]) -> tuple:
    cuts = []
    for b in block_ends:
        pos = stops[b - 1]
        cuts.append(0.5 * (sorted_vals[pos - 1] + sorted_vals[pos]))
    return tuple(cuts)


def _equipartition_cuts(values: np.ndarray, labels: np.ndarray) -> tuple:
    cuts = []
    for row in range(1, labels.max() + 1):
        lo = values[labels == row - 1].max()
        hi = values[labels == row].min()
        cuts.append(0.5 * (lo + hi))
    return tuple(cuts)


def _search(sample: PairedSample, config: MicConfig, want_grids: bool):
    if sample.n < 4:
        raise EstimationError("sample-too-small", f"n={sample.n} < 4")
    x = np.asarray(sample.x, dtype=np.float64)
    y = np.asarray(sample.y, dtype=np.float64)
    n = len(x)
    budget = grid_budget(n, config.alpha_exponent)

    for swap in (False, True):
        opt_vals, part_vals = (y, x) if swap else (x, y)
        order = np.argsort(opt_vals, kind="stable")
        sorted_opt = opt_vals[order]
        for rows in range(2, budget // 2 + 1):
            max_cols = budget // rows
            if max_cols < 2:
                continue
            labels = equipartition(part_vals, rows)
            n_rows = int(labels.max()) + 1
            if n_rows < 2:
                continue
            blocks, stops = _blocks(
                sorted_opt, labels[order], n_rows, config.search_mode, max_cols, config.clump_factor
            )
            best, back = _optimize_axis(blocks, max_cols)
            h_rows = _entropy(np.bincount(labels))
            for l in range(2, max_cols + 1):
                if not np.isfinite(best[l]):
                    continue
                score = (h_rows + best[l] / n) / math.log2(min(l, n_rows))
                score = min(max(score, 0.0), 1.0)
                if want_grids:
                    opt_cuts = _midpoint_cuts(
                        sorted_opt, stops, _cuts_from_back(back, l, len(stops))
                    )
                    part_cuts = _equipartition_cuts(part_vals, labels)
                    grid = Grid(part_cuts, opt_cuts) if swap else Grid(opt_cuts, part_cuts)
                    yield score, grid
                else:
                    yield score, None


def search_grids(sample: PairedSample, config: MicConfig | None = None) -> Iterator[tuple[float, Grid]]:
    """Yield ``(score, grid)`` for the optimum found at every visited grid size."""
    yield from _search(sample, config or MicConfig(), want_grids=True)


def mic(sample: PairedSample, config: MicConfig | None = None) -> float:
    """Maximal information coefficient of a real-valued paired sample."""
    best = 0.0
    for score, _ in _search(sample, config or MicConfig(), want_grids=False):
        if score > best:
            best = score
    return best
