import math

import numpy as np
import pytest
import scipy.stats as sst

from incite.errors import DegenerateStatisticWarning
from incite.stats import (
    group_summary,
    linreg,
    one_way_anova,
    tukey_hsd,
)


class TestLinreg:
    def test_matches_scipy(self, rng):
        for _ in range(30):
            n = int(rng.integers(3, 60))
            x = rng.normal(0.0, 3.0, size=n)
            y = 1.7 * x + rng.normal(0.0, 2.0, size=n)
            if np.unique(x).size < 2:
                continue
            ours = linreg(x, y)
            oracle = sst.linregress(x, y)
            assert ours.slope == pytest.approx(oracle.slope, rel=1e-9)
            assert ours.intercept == pytest.approx(oracle.intercept, rel=1e-9)
            assert ours.p_value == pytest.approx(oracle.pvalue, abs=1e-9)
            assert ours.r_squared == pytest.approx(oracle.rvalue**2, abs=1e-9)
            assert ours.n == n

    def test_perfect_fit(self):
        x = [1.0, 2.0, 3.0, 4.0]
        y = [2.0, 4.0, 6.0, 8.0]
        result = linreg(x, y)
        assert result.slope == pytest.approx(2.0)
        assert result.t_stat == math.inf
        assert result.p_value == 0.0
        assert result.r_squared == pytest.approx(1.0)

    def test_flat_perfect_fit(self):
        result = linreg([1.0, 2.0, 3.0], [5.0, 5.0, 5.0])
        assert result.slope == pytest.approx(0.0)
        assert result.p_value == 1.0

    def test_validation(self):
        with pytest.raises(ValueError):
            linreg([1.0, 2.0], [1.0, 2.0])
        with pytest.raises(ValueError):
            linreg([3.0, 3.0, 3.0], [1.0, 2.0, 3.0])
        with pytest.raises(ValueError):
            linreg([1.0, 2.0, math.nan], [1.0, 2.0, 3.0])


class TestAnova:
    def test_hand_case(self):
        result = one_way_anova([[1, 2, 3], [2, 3, 4], [3, 4, 5]])
        assert result.f_stat == pytest.approx(3.0, abs=1e-12)
        assert result.df_between == 2 and result.df_within == 6
        assert not result.degenerate

    def test_matches_scipy(self, rng):
        for _ in range(30):
            k = int(rng.integers(2, 6))
            groups = [rng.normal(rng.normal(), 1.0, size=int(rng.integers(2, 20)))
                      for _ in range(k)]
            ours = one_way_anova(groups)
            oracle = sst.f_oneway(*groups)
            assert ours.f_stat == pytest.approx(float(oracle.statistic), rel=1e-9)
            assert ours.p_value == pytest.approx(float(oracle.pvalue), abs=1e-9)

    def test_degenerate_identical(self):
        with pytest.warns(DegenerateStatisticWarning):
            result = one_way_anova([[1.0, 1.0], [1.0, 1.0]])
        assert result.f_stat == 0.0 and result.p_value == 1.0
        assert result.degenerate

    def test_degenerate_separated(self):
        with pytest.warns(DegenerateStatisticWarning):
            result = one_way_anova([[1.0, 1.0], [2.0, 2.0]])
        assert result.f_stat == math.inf and result.p_value == 0.0
        assert result.degenerate

    def test_validation(self):
        with pytest.raises(ValueError):
            one_way_anova([[1.0, 2.0]])
        with pytest.raises(ValueError):
            one_way_anova([[1.0], [2.0, 3.0]])


class TestTukey:
    def test_significance_matches_scipy(self, rng):
        agree = 0
        total = 0
        for _ in range(25):
            k = int(rng.integers(3, 6))
            groups = [
                rng.normal(float(j), 1.0, size=int(rng.integers(4, 12)))
                for j in range(k)
            ]
            ours = tukey_hsd(groups, alpha=0.05)
            oracle = sst.tukey_hsd(*groups)
            for row in ours:
                i, j = row.group_a, row.group_b
                p = float(oracle.pvalue[i, j])
                total += 1
                # skip decisions too close to the threshold to be stable
                if abs(p - 0.05) < 5e-3:
                    agree += 1
                    continue
                assert row.significant == (p < 0.05), (row, p)
                agree += 1
        assert total > 0 and agree == total

    def test_pairs_are_ordered_indices(self):
        rows = tukey_hsd([[1.0, 2.0], [2.0, 3.0], [9.0, 10.0]])
        assert [(r.group_a, r.group_b) for r in rows] == [(0, 1), (0, 2), (1, 2)]

    def test_mean_diff_sign(self):
        rows = tukey_hsd([[1.0, 2.0], [8.0, 9.0]])
        assert rows[0].mean_diff == pytest.approx(-7.0)
        assert rows[0].significant

    def test_critical_matches_scipy_ppf(self):
        groups = [[1.0, 2.0, 3.0], [2.0, 3.0, 4.0], [3.0, 4.0, 5.0]]
        rows = tukey_hsd(groups, alpha=0.05)
        df = sum(len(g) for g in groups) - len(groups)
        oracle = float(sst.studentized_range.ppf(0.95, len(groups), df))
        assert rows[0].q_critical == pytest.approx(oracle, abs=5e-3)

    def test_zero_variance_infinite_q(self):
        import warnings

        with warnings.catch_warnings():
            warnings.simplefilter("ignore", DegenerateStatisticWarning)
            rows = tukey_hsd([[1.0, 1.0], [2.0, 2.0]])
        assert rows[0].q_stat == math.inf
        assert rows[0].significant


class TestGroupSummary:
    def test_deterministic(self):
        values = list(np.random.default_rng(7).normal(size=40))
        a = group_summary(values, n_bootstrap=500, seed=42)
        b = group_summary(values, n_bootstrap=500, seed=42)
        assert a == b

    def test_order_invariant(self):
        values = [5.0, 1.0, 3.0, 2.0, 4.0, 9.0, 7.0]
        shuffled = [9.0, 7.0, 5.0, 4.0, 3.0, 2.0, 1.0]
        assert group_summary(values, seed=3) == group_summary(shuffled, seed=3)

    def test_covers_median(self, rng):
        values = rng.normal(10.0, 2.0, size=400)
        summary = group_summary(values, n_bootstrap=1000, seed=1)
        assert summary.n == 400
        assert summary.median == pytest.approx(float(np.median(values)))
        assert summary.ci_low <= summary.median <= summary.ci_high
        # for n = 400 the CI should be tight around the true median
        assert summary.ci_high - summary.ci_low < 1.0

    def test_single_value(self):
        summary = group_summary([3.0], n_bootstrap=100, seed=0)
        assert summary.median == 3.0
        assert summary.ci_low == 3.0 and summary.ci_high == 3.0

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            group_summary([])
