"""Simulation harness for the quantification and ranking bias experiments.

All experiments are reproducible from an integer seed: trial ``t`` draws
from substream ``t``, so trials can be evaluated in any order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import rng as _rng
from .adjust import (
    AdjustedScore,
    adjust_quantification,
    adjust_ranking,
    raw_score,
    score,
    standardize,
)
from .errors import EstimationError
from .measures import ContingencyTable, PairedSample, gini_gain, is_missing
from .mic import MicConfig
from .nulls import permutation_null
from .synth import RelationSpec, gen_relationship

__all__ = [
    "Scorer",
    "SelectionTrialConfig",
    "RankResult",
    "selection_experiment",
    "gini_inflation_experiment",
    "noise_sweep",
    "RankedVariable",
    "RankReport",
    "rank_against_target",
    "codes_table",
]

_SCHEME_ALIASES = {
    "raw": "raw",
    "quant": "quantification",
    "quantification": "quantification",
    "std": "standardized",
    "standardized": "standardized",
    "alpha": "ranking_alpha",
    "ranking_alpha": "ranking_alpha",
}


@dataclass(frozen=True)
class Scorer:
    """A measure plus an adjustment scheme, e.g. ``Scorer("r2", "standardized")``."""

    measure: str
    scheme: str = "raw"
    alpha: float | None = None
    permutations: int = 30
    mic_config: MicConfig | None = None

    def __post_init__(self):
        scheme = _SCHEME_ALIASES.get(self.scheme)
        if scheme is None:
            raise EstimationError("bad-scheme", f"unknown scheme {self.scheme!r}")
        object.__setattr__(self, "scheme", scheme)
        if scheme == "ranking_alpha" and self.alpha is None:
            raise EstimationError("bad-alpha", "ranking adjustment needs alpha")

    @classmethod
    def parse(cls, text: str, permutations: int = 30) -> Scorer:
        """Parse ``measure[:scheme[=alpha]]``, e.g. ``r2:alpha=0.05`` or ``mic:std``."""
        measure, _, rest = text.partition(":")
        scheme, _, alpha = (rest or "raw").partition("=")
        return cls(measure, scheme, float(alpha) if alpha else None, permutations)

    @property
    def label(self) -> str:
        prefix = {"raw": "", "quantification": "A", "standardized": "S", "ranking_alpha": "A"}
        name = {"r2": "r2", "mic": "MIC", "gini": "Gini", "mi": "MI"}.get(self.measure, self.measure)
        text = prefix[self.scheme] + name
        if self.scheme == "ranking_alpha":
            text += f"(alpha={self.alpha:g})"
        return text

    def score(self, sample: PairedSample, seed: int = 0) -> AdjustedScore:
        return score(
            sample,
            self.measure,
            self.scheme,
            alpha=self.alpha,
            permutations=self.permutations,
            seed=seed,
            config=self.mic_config,
        )

    def __call__(self, sample: PairedSample, seed: int = 0) -> float:
        return self.score(sample, seed).adjusted


@dataclass
class SelectionTrialConfig:
    """Candidates are ``(generator, label)`` pairs.

    A generator is either a :class:`RelationSpec` or a callable taking a
    ``numpy.random.Generator`` and returning a :class:`PairedSample`.
    """

    candidates: Sequence[tuple[object, str]]
    scorer: Callable
    trials: int = 10_000
    seed: int = 0
    tie_rule: str = "uniform_random"

    def __post_init__(self):
        if len(self.candidates) < 2:
            raise EstimationError("bad-config", "need at least two candidates")
        if self.trials < 1:
            raise EstimationError("bad-config", "trials must be >= 1")
        if self.tie_rule != "uniform_random":
            raise EstimationError("bad-config", f"unknown tie rule {self.tie_rule!r}")


@dataclass
class RankResult:
    labels: list[str]
    wins: np.ndarray
    trials: int
    mean_scores: np.ndarray
    score_stderr: np.ndarray

    @property
    def probabilities(self) -> np.ndarray:
        return self.wins / self.trials

    @property
    def stderr(self) -> np.ndarray:
        """Binomial standard errors of the selection probabilities."""
        p = self.probabilities
        return np.sqrt(p * (1.0 - p) / self.trials)

    def rows(self) -> list[dict]:
        return [
            {
                "candidate": lab,
                "wins": int(w),
                "probability": float(p),
                "prob_stderr": float(se),
                "mean_score": float(m),
                "score_stderr": float(s),
            }
            for lab, w, p, se, m, s in zip(
                self.labels, self.wins, self.probabilities, self.stderr,
                self.mean_scores, self.score_stderr,
            )
        ]


def _draw(generator, rng: np.random.Generator) -> PairedSample:
    if isinstance(generator, RelationSpec):
        return gen_relationship(generator, rng=rng)
    return generator(rng)


def _call_scorer(scorer, sample, seed):
    if isinstance(scorer, Scorer):
        return scorer(sample, seed)
    return float(scorer(sample))


def selection_experiment(config: SelectionTrialConfig) -> RankResult:
    """Probability of each candidate attaining the maximal score."""
    k = len(config.candidates)
    wins = np.zeros(k, dtype=np.int64)
    scores = np.empty((config.trials, k))
    for t in range(config.trials):
        rng = _rng.substream(config.seed, t, _rng.TRIAL)
        perm_seed = int(rng.integers(2**62))
        for j, (gen, _) in enumerate(config.candidates):
            scores[t, j] = _call_scorer(config.scorer, _draw(gen, rng), perm_seed)
        row = scores[t]
        best = np.flatnonzero(row == row.max())
        winner = best[0] if len(best) == 1 else best[rng.integers(len(best))]
        wins[winner] += 1
    sd = scores.std(axis=0, ddof=1) if config.trials > 1 else np.zeros(k)
    return RankResult(
        [lab for _, lab in config.candidates],
        wins,
        config.trials,
        scores.mean(axis=0),
        sd / math.sqrt(config.trials),
    )


def codes_table(x_codes, y_codes) -> ContingencyTable:
    """Contingency table of non-negative integer codes."""
    x_codes = np.asarray(x_codes, dtype=np.int64)
    y_codes = np.asarray(y_codes, dtype=np.int64)
    r = int(x_codes.max()) + 1
    c = int(y_codes.max()) + 1
    counts = np.bincount(x_codes * c + y_codes, minlength=r * c).reshape(r, c)
    return ContingencyTable.from_counts(counts)


def gini_inflation_experiment(
    n: int = 100,
    trials: int = 10_000,
    seed: int = 0,
    x1_categories: int = 2,
    x2_categories: int = 3,
    y_categories: int = 2,
) -> float:
    """P(Gini(X2, Y) > Gini(X1, Y)) for X1, X2, Y independent uniform; ties count 1/2."""
    if n < 4:
        raise EstimationError("sample-too-small", f"n={n} < 4")
    total = 0.0
    for t in range(trials):
        rng = _rng.substream(seed, t, _rng.TRIAL)
        y = rng.integers(0, y_categories, size=n)
        x1 = rng.integers(0, x1_categories, size=n)
        x2 = rng.integers(0, x2_categories, size=n)
        g1 = gini_gain(codes_table(x1, y))
        g2 = gini_gain(codes_table(x2, y))
        if g2 > g1:
            total += 1.0
        elif g2 == g1:
            total += 0.5
    return total / trials


def noise_sweep(
    shapes: Sequence[str],
    ns: Sequence[int],
    noise_levels: Sequence[float],
    scorers: Sequence[Scorer],
    trials: int = 2000,
    seed: int = 0,
) -> list[dict]:
    """Mean score and standard error per (shape, n, noise, scorer) cell.

    Every cell reuses the trial substreams, so cells differ only in the
    quantity being varied.
    """
    rows = []
    for shape in shapes:
        for n in ns:
            for noise in noise_levels:
                spec = RelationSpec(shape, int(n), float(noise), seed)
                values = np.empty((trials, len(scorers)))
                for t in range(trials):
                    rng = _rng.substream(seed, t, _rng.TRIAL)
                    perm_seed = int(rng.integers(2**62))
                    sample = gen_relationship(spec, rng=rng)
                    values[t] = _score_many(sample, scorers, perm_seed)
                means = values.mean(axis=0)
                se = values.std(axis=0, ddof=1) / math.sqrt(trials) if trials > 1 else np.zeros(len(scorers))
                for s, m, e in zip(scorers, means, se):
                    rows.append(
                        {
                            "shape": shape,
                            "n": int(n),
                            "noise": float(noise),
                            "measure": s.label,
                            "mean": float(m),
                            "stderr": float(e),
                            "trials": trials,
                        }
                    )
    return rows


def _score_many(sample: PairedSample, scorers: Sequence[Scorer], seed: int) -> list[float]:
    """Score with several scorers, sharing one permutation null per measure."""
    out = []
    nulls: dict = {}
    raws: dict = {}
    for s in scorers:
        if s.measure not in ("mic", "mi") or s.scheme == "raw":
            out.append(s(sample, seed))
            continue
        key = (s.measure, s.permutations, s.mic_config)
        if key not in nulls:
            raws[key] = raw_score(sample, s.measure, s.mic_config)
            nulls[key] = permutation_null(
                sample, lambda smp, s=s: raw_score(smp, s.measure, s.mic_config), s.permutations, seed
            )
        raw, null = raws[key], nulls[key]
        if s.scheme == "quantification":
            out.append(adjust_quantification(raw, null, 1.0).adjusted)
        elif s.scheme == "standardized":
            out.append(standardize(raw, null).adjusted)
        else:
            out.append(adjust_ranking(raw, null, s.alpha).adjusted)
    return out


@dataclass
class RankedVariable:
    variable: str
    score: float
    raw: float
    n_used: int


@dataclass
class RankReport:
    target: str
    scorer: str
    ranked: list[RankedVariable]
    skipped: list[tuple[str, str]] = field(default_factory=list)
    top_k: int = 1

    @property
    def mean_n_top(self) -> float:
        top = self.ranked[: self.top_k]
        return float(np.mean([r.n_used for r in top])) if top else math.nan


def _column_kind(values) -> str:
    if isinstance(values, np.ndarray) and values.dtype.kind in "fiu":
        return "real"
    for v in values:
        if is_missing(v):
            continue
        if isinstance(v, (bool, np.bool_)) or not isinstance(v, (int, float, np.integer, np.floating)):
            return "categorical"
    return "real"


def rank_against_target(
    columns: dict,
    target: str,
    scorer: Scorer,
    min_n: int = 10,
    seed: int = 0,
    top_k: int = 1,
    kinds: dict | None = None,
) -> RankReport:
    """Rank every column by its dependency with ``target`` on pairwise-complete rows.

    ``columns`` maps names to value arrays (missing as NaN or None);
    ``kinds`` optionally maps names to ``"real"``/``"categorical"``;
    unlisted columns are real when every present value is numeric.
    Pairs with fewer than ``min_n`` complete rows are skipped.
    """
    if target not in columns:
        raise EstimationError("unknown-column", target)
    if min_n < 4:
        raise EstimationError("bad-config", f"min_n={min_n} < 4")
    kinds = {name: (kinds or {}).get(name) or _column_kind(v) for name, v in columns.items()}
    need_real = scorer.measure in ("r2", "mic")
    if need_real and kinds[target] != "real":
        raise EstimationError("incompatible-type", f"target {target!r} is not real-valued")
    ranked = []
    skipped = []
    for name, values in columns.items():
        if name == target:
            continue
        if need_real and kinds[name] != "real":
            skipped.append((name, "categorical"))
            continue
        sample = PairedSample.from_values(values, columns[target])
        if sample.n < min_n:
            skipped.append((name, f"n={sample.n} < {min_n}"))
            continue
        try:
            result = scorer.score(sample, seed)
        except EstimationError as exc:
            skipped.append((name, exc.code))
            continue
        ranked.append(RankedVariable(name, float(result.adjusted), float(result.raw), sample.n))
    if not ranked:
        raise EstimationError("no-eligible-pairs", f"no column has >= {min_n} complete pairs with {target!r}")
    ranked.sort(key=lambda r: -r.score)  # stable: ties keep column order
    return RankReport(target, scorer.label, ranked, skipped, top_k)
