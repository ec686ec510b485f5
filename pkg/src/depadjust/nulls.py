"""Distributions of dependency estimators under independence.

Three kinds of null model:

* ``analytic_beta_r2``: r^2 of n independent pairs is Beta(1/2, (n-2)/2).
* ``analytic_gini_moments``: mean and variance of Gini gain under the
  multinomial model; quantiles come from the Cantelli upper bound.
* ``empirical_permutation``: Monte Carlo permutations of one side of the
  sample, for any estimator (MIC in particular).
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np

from . import rng as _rng
from .errors import EstimationError
from .measures import ContingencyTable, PairedSample
from .special import betaincinv

__all__ = [
    "NullModel",
    "r2_null",
    "gini_null_moments",
    "gini_moments",
    "cantelli_quantile",
    "permutation_null",
    "DEFAULT_PERMUTATIONS",
]

DEFAULT_PERMUTATIONS = 1000

KINDS = ("analytic_beta_r2", "analytic_gini_moments", "empirical_permutation")


@dataclass(frozen=True, eq=False)
class NullModel:
    """Mean, variance and quantiles of an estimator under the null.

    For the empirical kind ``values`` holds the sorted permutation values,
    ``mean`` their average and ``variance`` their unbiased variance.
    """

    kind: str
    mean: float
    variance: float
    n: int
    permutations: int | None = None
    seed: int | None = None
    values: np.ndarray | None = None
    beta_params: tuple[float, float] | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise EstimationError("bad-null", f"unknown kind {self.kind!r}")
        if not self.variance >= 0.0:
            raise EstimationError("bad-null", f"negative variance {self.variance}")

    @property
    def sd(self) -> float:
        return math.sqrt(self.variance)

    def quantile(self, p: float) -> float:
        """p-quantile of the null (an upper bound for the Gini kind)."""
        if not 0.0 <= p <= 1.0:
            raise EstimationError("bad-probability", f"p={p}")
        if self.kind == "analytic_beta_r2":
            a, b = self.beta_params
            return _beta_quantile(a, b, round(p, 15))
        if self.kind == "analytic_gini_moments":
            if p == 1.0:
                return math.inf
            return self.mean + math.sqrt(p / (1.0 - p) * self.variance)
        s = len(self.values)
        rank = min(max(math.ceil(p * s - 1e-9), 1), s)
        return float(self.values[rank - 1])

    def describe(self) -> dict:
        """JSON-ready provenance record."""
        out = {
            "kind": self.kind,
            "n": self.n,
            "mean": self.mean,
            "sd": self.sd,
        }
        if self.kind == "empirical_permutation":
            out["permutations"] = self.permutations
            out["seed"] = self.seed
        return out


@lru_cache(maxsize=1024)
def _beta_quantile(a: float, b: float, p: float) -> float:
    return betaincinv(a, b, p)


@lru_cache(maxsize=1024)
def r2_null(n: int) -> NullModel:
    """Beta(1/2, (n-2)/2) null of squared Pearson correlation."""
    if n < 4:
        raise EstimationError("sample-too-small", f"n={n} < 4")
    mean = 1.0 / (n - 1)
    variance = 2.0 * (n - 2) / ((n - 1) ** 2 * (n + 1))
    return NullModel("analytic_beta_r2", mean, variance, n, beta_params=(0.5, (n - 2) / 2.0))


def gini_moments(row_marginals, col_marginals) -> tuple[float, float]:
    """Null mean and variance of Gini gain from the table marginals."""
    ni = np.asarray(row_marginals, dtype=np.float64)
    nj = np.asarray(col_marginals, dtype=np.float64)
    if (ni <= 0).any():
        raise EstimationError("empty-category", "row marginal of zero")
    n = nj.sum()
    r = len(ni)
    q = nj / n
    s2 = float(np.sum(q**2))
    s3 = float(np.sum(q**3))
    mean = (r - 1) / n * (1.0 - s2)
    variance = (
        (r - 1) * (2 * s2 + 2 * s2**2 - 4 * s3)
        + (float(np.sum(1.0 / ni)) - 2 * r / n + 1 / n) * (-2 * s2 - 6 * s2**2 + 8 * s3)
    ) / n**2
    # cancellation can leave a tiny negative when the true value is 0
    return mean, max(variance, 0.0)


def gini_null_moments(table: ContingencyTable) -> NullModel:
    mean, variance = gini_moments(table.row_marginals, table.col_marginals)
    return NullModel("analytic_gini_moments", mean, variance, table.n)


def cantelli_quantile(model: NullModel, alpha: float) -> float:
    """Distribution-free upper bound on the (1 - alpha)-quantile."""
    if not 0.0 < alpha <= 1.0:
        raise EstimationError("bad-alpha", f"alpha={alpha} not in (0, 1]")
    if not (math.isfinite(model.mean) and math.isfinite(model.variance)):
        raise EstimationError("bad-null", "non-finite moments")
    return model.mean + math.sqrt((1.0 - alpha) / alpha * model.variance)


def permutation_null(
    sample: PairedSample,
    estimator: Callable[[PairedSample], float],
    S: int = DEFAULT_PERMUTATIONS,
    seed: int = 0,
    workers: int = 1,
) -> NullModel:
    """Monte Carlo null of ``estimator`` by permuting the y side.

    Permutation ``s`` draws from its own substream, so the result is the
    same for any ``workers``.
    """
    if S < 2:
        raise EstimationError("insufficient-permutations", f"S={S} < 2")
    x = sample.x
    y = sample.y
    n = len(x)

    def one(s):
        perm = _rng.substream(seed, s, _rng.PERMUTATION).permutation(n)
        return float(estimator(PairedSample.complete(x, y[perm])))

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            values = np.array(list(pool.map(one, range(S))))
    else:
        values = np.array([one(s) for s in range(S)])
    values.sort()
    values.setflags(write=False)
    mean = math.fsum(values) / S
    variance = math.fsum((values - mean) ** 2) / (S - 1)
    return NullModel(
        "empirical_permutation",
        mean,
        variance,
        n,
        permutations=S,
        seed=seed,
        values=values,
    )
