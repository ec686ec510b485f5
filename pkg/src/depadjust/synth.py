"""Synthetic samples for the bias experiments.

Noise follows a substitution model: a fraction of the points of a
noiseless relationship on [0, 1] x [0, 1] get their y coordinate replaced
by an independent uniform draw.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import rng as _rng
from .errors import EstimationError
from .measures import PairedSample

SHAPES = ("linear", "quadratic", "cubic", "fourth_root", "independent")


def _linear(x):
    return x


def _quadratic(x):
    return (2.0 * x - 1.0) ** 2


def _cubic(x):
    return ((2.0 * x - 1.0) ** 3 + 1.0) / 2.0


def _fourth_root(x):
    return x**0.25


FUNCTIONS = {
    "linear": _linear,
    "quadratic": _quadratic,
    "cubic": _cubic,
    "fourth_root": _fourth_root,
}


@dataclass(frozen=True)
class RelationSpec:
    shape: str = "linear"
    n: int = 30
    noise_fraction: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.shape not in SHAPES:
            raise EstimationError("bad-spec", f"unknown shape {self.shape!r}")
        if self.n < 4:
            raise EstimationError("bad-spec", f"n={self.n} < 4")
        if not 0.0 <= self.noise_fraction <= 1.0:
            raise EstimationError("bad-spec", f"noise_fraction={self.noise_fraction}")

    @property
    def n_noisy(self) -> int:
        """Number of points whose y is replaced (round half up)."""
        return int(math.floor(self.noise_fraction * self.n + 0.5))


def gen_relationship(spec: RelationSpec, rng: np.random.Generator | None = None, stream: int = 0) -> PairedSample:
    """Draw one sample; ``rng`` overrides the ``(spec.seed, stream)`` substream."""
    if rng is None:
        rng = _rng.substream(spec.seed, stream, _rng.SAMPLE)
    n = spec.n
    x = rng.random(n)
    if spec.shape == "independent":
        return PairedSample.complete(x, rng.random(n))
    y = np.array(FUNCTIONS[spec.shape](x), dtype=np.float64)
    k = spec.n_noisy
    if k:
        idx = rng.choice(n, size=k, replace=False)
        y[idx] = rng.random(k)
    return PairedSample.complete(x, y)


def gen_categorical_independent(
    n: int, x_categories: int, y_categories: int, seed: int = 0, rng: np.random.Generator | None = None
) -> PairedSample:
    """Independent uniform categorical X and Y, labelled 0..k-1."""
    if n < 2 or x_categories < 1 or y_categories < 1:
        raise EstimationError("bad-spec", "need n >= 2 and at least one category per side")
    if rng is None:
        rng = _rng.substream(seed, 0, _rng.SAMPLE)
    x = rng.integers(0, x_categories, size=n)
    y = rng.integers(0, y_categories, size=n)
    return PairedSample.complete(x, y)


def gen_missingness_suite(n_values, relation: RelationSpec) -> list[PairedSample]:
    """One sample per size in ``n_values``; sample i uses substream i of ``relation.seed``."""
    return [
        gen_relationship(replace(relation, n=int(n)), stream=i)
        for i, n in enumerate(n_values)
    ]


MONKS2_CARDINALITIES = (3, 3, 2, 3, 4, 2)


def gen_monks2_like(
    n: int, seed: int = 0, noise_features: int = 0, noise_categories: int = 12
) -> dict:
    """Categorical classification task shaped like MONK's problem 2.

    Six attributes with cardinalities 3, 3, 2, 3, 4, 2; the class is "yes"
    when exactly two attributes take their first value. Optional extra
    attributes are uniform noise with ``noise_categories`` levels.
    Returns a column mapping with target column ``"class"``.
    """
    if n < 2:
        raise EstimationError("bad-spec", f"n={n} < 2")
    rng = _rng.substream(seed, 0, _rng.SAMPLE)
    attrs = [rng.integers(0, c, size=n) for c in MONKS2_CARDINALITIES]
    columns = {f"a{i + 1}": [f"v{v}" for v in a] for i, a in enumerate(attrs)}
    for j in range(noise_features):
        columns[f"noise{j + 1}"] = [f"c{v}" for v in rng.integers(0, noise_categories, size=n)]
    first = sum((a == 0).astype(int) for a in attrs)
    columns["class"] = ["yes" if c == 2 else "no" for c in first]
    return columns
