import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from depadjust import rng as drng
from depadjust.errors import EstimationError
from depadjust.measures import ContingencyTable, PairedSample, pearson_r2
from depadjust.mic import mic
from depadjust.nulls import (
    NullModel,
    cantelli_quantile,
    gini_moments,
    gini_null_moments,
    permutation_null,
    r2_null,
)
from oracles import gini_moments_literal


class TestR2Null:
    @pytest.mark.parametrize("n", [4, 10, 30, 100])
    def test_moments_match_beta(self, n):
        model = r2_null(n)
        beta = stats.beta(0.5, (n - 2) / 2)
        assert model.mean == pytest.approx(beta.mean(), rel=1e-12)
        assert model.variance == pytest.approx(beta.var(), rel=1e-12)

    def test_closed_form_n30(self):
        model = r2_null(30)
        assert model.mean == pytest.approx(1 / 29)
        assert model.variance == pytest.approx(56 / 26071)

    @pytest.mark.parametrize("p", [0.05, 0.5, 0.6, 0.95, 0.99])
    def test_quantiles_match_scipy(self, p):
        for n in (10, 30, 100):
            got = r2_null(n).quantile(p)
            assert got == pytest.approx(stats.beta(0.5, (n - 2) / 2).ppf(p), abs=1e-9)

    def test_too_small(self):
        with pytest.raises(EstimationError) as err:
            r2_null(3)
        assert err.value.code == "sample-too-small"

    def test_matches_simulation(self):
        rng = np.random.default_rng(3)
        n = 12
        values = [
            pearson_r2(PairedSample.complete(rng.normal(size=n), rng.normal(size=n)))
            for _ in range(20000)
        ]
        model = r2_null(n)
        se = np.std(values, ddof=1) / math.sqrt(len(values))
        assert abs(np.mean(values) - model.mean) < 4 * se


class TestGiniMoments:
    def test_binary_example(self):
        mean, var = gini_moments([50, 50], [50, 50])
        assert mean == pytest.approx(0.005)
        assert var == pytest.approx(4.95e-5, rel=1e-9)

    def test_ternary_example(self):
        mean, var = gini_moments([34, 33, 33], [50, 50])
        assert mean == pytest.approx(0.01)
        assert var == pytest.approx(9.7999e-5, rel=1e-4)

    @settings(max_examples=200)
    @given(
        st.lists(st.integers(1, 60), min_size=2, max_size=6),
        st.lists(st.integers(1, 60), min_size=2, max_size=5),
    )
    def test_literal_formula(self, rows, cols):
        total = sum(rows)
        # rescale column marginals to the same total
        cols = np.maximum(1, np.round(np.array(cols) / sum(cols) * total)).astype(int)
        cols[-1] += total - cols.sum()
        if cols[-1] < 1:
            return
        mean, var = gini_moments(rows, cols)
        lm, lv = gini_moments_literal(rows, cols)
        assert mean == pytest.approx(lm, abs=1e-12)
        assert var == pytest.approx(max(lv, 0.0), abs=1e-12)

    def test_empty_row(self):
        with pytest.raises(EstimationError) as err:
            gini_moments([0, 5], [3, 2])
        assert err.value.code == "empty-category"

    def test_from_table(self):
        t = ContingencyTable.from_counts([[30, 20], [20, 30]])
        model = gini_null_moments(t)
        assert model.kind == "analytic_gini_moments"
        assert model.n == 100


class TestCantelli:
    def test_paper_penalties(self):
        binary = NullModel("analytic_gini_moments", *gini_moments([50, 50], [50, 50]), 100)
        ternary = NullModel("analytic_gini_moments", *gini_moments([34, 33, 33], [50, 50]), 100)
        assert round(cantelli_quantile(binary, 0.05), 3) == 0.036
        assert round(cantelli_quantile(ternary, 0.05), 3) == 0.053

    @pytest.mark.parametrize("alpha", [0.0, -0.1, 1.5])
    def test_bad_alpha(self, alpha):
        model = r2_null(10)
        with pytest.raises(EstimationError) as err:
            cantelli_quantile(model, alpha)
        assert err.value.code == "bad-alpha"

    @given(st.floats(0.001, 0.5), st.floats(0.001, 0.5))
    def test_decreasing_in_alpha(self, a1, a2):
        model = r2_null(20)
        lo, hi = sorted((a1, a2))
        assert cantelli_quantile(model, lo) >= cantelli_quantile(model, hi)

    def test_bounds_true_quantile(self):
        for n in (10, 50):
            model = r2_null(n)
            for alpha in (0.01, 0.05, 0.2):
                assert cantelli_quantile(model, alpha) >= model.quantile(1 - alpha)


class TestPermutationNull:
    def _sample(self, n=25, seed=0):
        rng = np.random.default_rng(seed)
        return PairedSample.complete(rng.random(n), rng.random(n))

    def test_statistics(self):
        model = permutation_null(self._sample(), pearson_r2, S=200, seed=4)
        v = np.asarray(model.values)
        assert np.all(np.diff(v) >= 0)
        assert model.mean == pytest.approx(v.mean(), abs=1e-14)
        assert model.variance == pytest.approx(v.var(ddof=1), abs=1e-14)
        assert model.permutations == 200
        with pytest.raises(ValueError):
            model.values[0] = 1.0

    def test_quantile_rank(self):
        values = np.arange(1.0, 11.0)
        model = NullModel("empirical_permutation", 5.5, 1.0, 10, 10, 0, values)
        assert model.quantile(0.95) == 10.0
        assert model.quantile(0.9) == 9.0
        assert model.quantile(0.5) == 5.0
        assert model.quantile(0.0) == 1.0

    def test_deterministic_and_worker_invariant(self):
        s = self._sample()
        a = permutation_null(s, mic, S=40, seed=9)
        b = permutation_null(s, mic, S=40, seed=9, workers=4)
        np.testing.assert_array_equal(a.values, b.values)
        c = permutation_null(s, mic, S=40, seed=10)
        assert not np.array_equal(a.values, c.values)

    def test_prefix_stable(self):
        # permutation s depends only on (seed, s)
        s = self._sample()
        small = permutation_null(s, pearson_r2, S=20, seed=1)
        big = permutation_null(s, pearson_r2, S=40, seed=1)
        assert set(small.values) <= set(big.values)

    def test_r2_permutation_agrees_with_beta(self):
        s = self._sample(n=30, seed=2)
        model = permutation_null(s, pearson_r2, S=3000, seed=0)
        se = model.sd / math.sqrt(3000)
        assert abs(model.mean - r2_null(30).mean) < 4 * se

    def test_insufficient(self):
        with pytest.raises(EstimationError) as err:
            permutation_null(self._sample(), pearson_r2, S=1)
        assert err.value.code == "insufficient-permutations"


def test_substreams_independent_of_order():
    a = drng.substream(5, 3, drng.TRIAL).random(4)
    drng.substream(5, 2, drng.TRIAL).random(100)
    b = drng.substream(5, 3, drng.TRIAL).random(4)
    np.testing.assert_array_equal(a, b)
    c = drng.substream(5, 3, drng.TREE).random(4)
    assert not np.array_equal(a, c)
