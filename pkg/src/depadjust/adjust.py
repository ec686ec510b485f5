"""Chance adjustments of dependency estimates.

Given the null model of an estimator at the sample's size and marginals:

quantification
    ``(raw - E0) / (max - E0)``: zero on average under independence,
    1 at the maximum.
standardized
    ``(raw - E0) / sd0``.
ranking at level alpha
    ``raw - q0(1 - alpha)``; small alpha penalizes weak (small-n,
    many-category) estimates harder.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import EstimationError
from .measures import (
    ContingencyTable,
    PairedSample,
    build_contingency,
    gini_gain,
    mutual_information,
    pearson_r2,
)
from .mic import MicConfig, mic
from .nulls import (
    DEFAULT_PERMUTATIONS,
    NullModel,
    cantelli_quantile,
    gini_null_moments,
    permutation_null,
    r2_null,
)

__all__ = [
    "AdjustedScore",
    "adjust_quantification",
    "standardize",
    "adjust_ranking",
    "ar2",
    "sr2",
    "ar2_alpha",
    "amic",
    "smic",
    "amic_alpha",
    "mic_null",
    "sgini",
    "agini_alpha",
    "score",
    "raw_score",
    "MEASURES",
    "SCHEMES",
]

SCHEMES = ("raw", "quantification", "standardized", "ranking_alpha")
MEASURES = ("r2", "mic", "gini", "mi")


@dataclass(frozen=True, eq=False)
class AdjustedScore:
    raw: float
    adjusted: float
    scheme: str
    null: NullModel | None = None
    alpha: float | None = None
    max_value: float | None = None
    measure: str | None = None

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise EstimationError("bad-scheme", self.scheme)
        if self.scheme == "ranking_alpha" and self.alpha is None:
            raise EstimationError("bad-alpha", "ranking adjustment needs alpha")

    def to_dict(self) -> dict:
        out = {
            "measure": self.measure,
            "scheme": self.scheme,
            "raw": float(self.raw),
            "adjusted": float(self.adjusted),
        }
        if self.alpha is not None:
            out["alpha"] = self.alpha
        if self.max_value is not None:
            out["max_value"] = self.max_value
        if self.null is not None:
            out["null"] = self.null.describe()
        return out


def adjust_quantification(raw: float, null: NullModel, max_value: float = 1.0, measure=None) -> AdjustedScore:
    if not max_value > null.mean:
        raise EstimationError(
            "degenerate-normalizer", f"max {max_value} <= null mean {null.mean}"
        )
    adjusted = (raw - null.mean) / (max_value - null.mean)
    return AdjustedScore(raw, adjusted, "quantification", null, max_value=max_value, measure=measure)


def standardize(raw: float, null: NullModel, measure=None) -> AdjustedScore:
    if not null.variance > 0.0:
        raise EstimationError("degenerate-null-variance")
    return AdjustedScore(raw, (raw - null.mean) / math.sqrt(null.variance), "standardized", null, measure=measure)


def adjust_ranking(raw: float, null: NullModel, alpha: float, measure=None) -> AdjustedScore:
    if not 0.0 < alpha <= 1.0:
        raise EstimationError("bad-alpha", f"alpha={alpha} not in (0, 1]")
    if null.kind == "analytic_gini_moments":
        q = cantelli_quantile(null, alpha)
    else:
        q = null.quantile(1.0 - alpha)
    return AdjustedScore(raw, raw - q, "ranking_alpha", null, alpha=alpha, measure=measure)


def ar2(sample: PairedSample) -> AdjustedScore:
    return adjust_quantification(pearson_r2(sample), r2_null(sample.n), 1.0, measure="r2")


def sr2(sample: PairedSample) -> AdjustedScore:
    return standardize(pearson_r2(sample), r2_null(sample.n), measure="r2")


def ar2_alpha(sample: PairedSample, alpha: float) -> AdjustedScore:
    return adjust_ranking(pearson_r2(sample), r2_null(sample.n), alpha, measure="r2")


def mic_null(sample: PairedSample, S: int = DEFAULT_PERMUTATIONS, seed: int = 0, config: MicConfig | None = None) -> NullModel:
    config = config or MicConfig()
    return permutation_null(sample, lambda s: mic(s, config), S, seed)


def amic(sample, S=DEFAULT_PERMUTATIONS, seed=0, config=None, null=None) -> AdjustedScore:
    """Pass ``null`` to reuse one permutation batch across MIC adjustments."""
    null = null or mic_null(sample, S, seed, config)
    return adjust_quantification(mic(sample, config), null, 1.0, measure="mic")


def smic(sample, S=DEFAULT_PERMUTATIONS, seed=0, config=None, null=None) -> AdjustedScore:
    null = null or mic_null(sample, S, seed, config)
    return standardize(mic(sample, config), null, measure="mic")


def amic_alpha(sample, alpha, S=DEFAULT_PERMUTATIONS, seed=0, config=None, null=None) -> AdjustedScore:
    null = null or mic_null(sample, S, seed, config)
    return adjust_ranking(mic(sample, config), null, alpha, measure="mic")


def sgini(table: ContingencyTable) -> AdjustedScore:
    return standardize(gini_gain(table), gini_null_moments(table), measure="gini")


def agini_alpha(table: ContingencyTable, alpha: float) -> AdjustedScore:
    return adjust_ranking(gini_gain(table), gini_null_moments(table), alpha, measure="gini")


def _entropy(counts) -> float:
    p = counts[counts > 0] / counts.sum()
    return float(-(p * np.log2(p)).sum())


def raw_score(sample: PairedSample, measure: str, config) -> float:
    if measure == "r2":
        return pearson_r2(sample)
    if measure == "mic":
        return mic(sample, config)
    table = build_contingency(sample)
    return gini_gain(table) if measure == "gini" else mutual_information(table)


def score(
    sample: PairedSample,
    measure: str,
    scheme: str = "raw",
    alpha: float | None = None,
    permutations: int = DEFAULT_PERMUTATIONS,
    seed: int = 0,
    config: MicConfig | None = None,
) -> AdjustedScore:
    """Score a sample with any measure/scheme pair.

    r^2 and Gini gain use their analytic nulls; MIC and MI use a
    permutation null of ``permutations`` draws seeded by ``seed``.
    """
    if measure not in MEASURES:
        raise EstimationError("bad-measure", f"unknown measure {measure!r}")
    if scheme not in SCHEMES:
        raise EstimationError("bad-scheme", f"unknown scheme {scheme!r}")
    raw = raw_score(sample, measure, config)
    if scheme == "raw":
        return AdjustedScore(raw, raw, "raw", measure=measure)

    if measure == "r2":
        null = r2_null(sample.n)
    elif measure == "gini":
        null = gini_null_moments(build_contingency(sample))
    else:
        null = permutation_null(sample, lambda s: raw_score(s, measure, config), permutations, seed)

    if scheme == "quantification":
        if measure == "gini":
            table = build_contingency(sample)
            max_value = 1.0 - float(((table.col_marginals / table.n) ** 2).sum())
        elif measure == "mi":
            table = build_contingency(sample)
            # MI cannot exceed the smaller marginal entropy
            max_value = min(_entropy(table.row_marginals), _entropy(table.col_marginals))
        else:
            max_value = 1.0
        return adjust_quantification(raw, null, max_value, measure=measure)
    if scheme == "standardized":
        return standardize(raw, null, measure=measure)
    if alpha is None:
        raise EstimationError("bad-alpha", "ranking adjustment needs alpha")
    return adjust_ranking(raw, null, alpha, measure=measure)
