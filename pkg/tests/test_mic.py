import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from depadjust.errors import EstimationError
from depadjust.measures import PairedSample
from depadjust.mic import (
    Grid,
    MicConfig,
    bin_sample,
    equipartition,
    grid_budget,
    mic,
    normalized_mi,
    search_grids,
)
from oracles import brute_force_mic

EXHAUSTIVE = MicConfig(search_mode="exhaustive_equipartition")


def _sample(n, seed, shape="independent"):
    rng = np.random.default_rng(seed)
    x = rng.random(n)
    y = rng.random(n) if shape == "independent" else (2 * x - 1) ** 2
    return PairedSample.complete(x, y)


@pytest.mark.parametrize("n, expected", [(4, 4), (10, 4), (20, 6), (80, 13), (100, 15), (1000, 63)])
def test_grid_budget(n, expected):
    assert grid_budget(n) == expected


def test_config_validation():
    with pytest.raises(EstimationError):
        MicConfig(search_mode="magic")


class TestEquipartition:
    def test_balanced(self):
        labels = equipartition(np.arange(12.0), 3)
        np.testing.assert_array_equal(np.bincount(labels), [4, 4, 4])

    def test_monotone_labels(self):
        v = np.random.default_rng(1).random(30)
        labels = equipartition(v, 4)
        order = np.argsort(v)
        assert np.all(np.diff(labels[order]) >= 0)

    def test_ties_share_bin(self):
        v = np.array([0, 0, 0, 0, 0, 1, 2, 3], dtype=float)
        labels = equipartition(v, 4)
        assert len(set(labels[:5])) == 1

    @given(st.lists(st.integers(0, 6), min_size=4, max_size=40), st.integers(2, 6))
    def test_ties_never_split(self, values, k):
        v = np.array(values, dtype=float)
        labels = equipartition(v, k)
        assert labels.max() + 1 <= k
        for u in np.unique(v):
            assert len(set(labels[v == u])) == 1


class TestScores:
    def test_noiseless_functions(self):
        x = np.linspace(0, 1, 60)
        for y in (x, (2 * x - 1) ** 2, np.sin(6 * x)):
            assert mic(PairedSample.complete(x, y)) == pytest.approx(1.0)

    def test_bounded(self):
        for seed in range(10):
            v = mic(_sample(30, seed))
            assert 0.0 <= v <= 1.0

    def test_symmetric(self):
        s = _sample(40, 3)
        swapped = PairedSample.complete(s.y, s.x)
        assert mic(s) == pytest.approx(mic(swapped), abs=1e-12)

    def test_too_small(self):
        with pytest.raises(EstimationError) as err:
            mic(PairedSample.complete([1.0, 2.0, 3.0], [1.0, 2.0, 3.0]))
        assert err.value.code == "sample-too-small"

    def test_monotone_transform_invariance(self):
        for seed in range(5):
            s = _sample(50, seed)
            t = PairedSample.complete(np.exp(3 * s.x), s.y**3)
            assert mic(t) == pytest.approx(mic(s), abs=1e-12)

    def test_approx_never_exceeds_exhaustive(self):
        for seed in range(20):
            s = _sample(70, seed)
            assert mic(s) <= mic(s, EXHAUSTIVE) + 1e-12

    @pytest.mark.parametrize("seed", range(8))
    def test_exhaustive_matches_brute_force(self, seed):
        rng = np.random.default_rng(100 + seed)
        n = int(rng.integers(8, 22))
        x = rng.random(n)
        y = rng.random(n) if seed % 2 else x**2 + 0.2 * rng.random(n)
        got = mic(PairedSample.complete(x, y), EXHAUSTIVE)
        assert got == pytest.approx(brute_force_mic(x, y), abs=1e-12)

    def test_independent_mean_small_n(self):
        # loose band around the large-trial mean (about 0.36)
        values = [mic(_sample(20, 1000 + s)) for s in range(300)]
        assert 0.30 < np.mean(values) < 0.42


class TestGrids:
    def test_search_grids_reproduce_scores(self):
        s = _sample(40, 7, shape="quadratic")
        for score, grid in search_grids(s):
            assert normalized_mi(s, grid) == pytest.approx(score, abs=1e-9)

    def test_best_grid_equals_mic(self):
        s = _sample(35, 2)
        assert max(score for score, _ in search_grids(s)) == pytest.approx(mic(s))

    def test_bin_sample(self):
        s = PairedSample.complete([0.1, 0.2, 0.8, 0.9], [0.1, 0.9, 0.1, 0.9])
        t = bin_sample(s, Grid((0.5,), (0.5,)))
        np.testing.assert_array_equal(t.counts, [[1, 1], [1, 1]])

    def test_degenerate_grid(self):
        s = _sample(10, 0)
        with pytest.raises(EstimationError) as err:
            normalized_mi(s, Grid((), (0.5,)))
        assert err.value.code == "degenerate-grid"


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.integers(6, 16))
def test_exhaustive_equals_brute_force_property(seed, n):
    rng = np.random.default_rng(seed)
    x = np.round(rng.random(n) * 5) / 5
    y = rng.random(n)
    got = mic(PairedSample.complete(x, y), EXHAUSTIVE)
    assert math.isclose(got, brute_force_mic(x, y), abs_tol=1e-12)
