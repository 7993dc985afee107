"""Authored distribution kernels checked against scipy as an independent
high-precision oracle. The package itself never imports scipy.stats; tests
do, deliberately, so the two routes stay independent."""

import math

import numpy as np
import pytest
import scipy.special as sps
import scipy.stats as sst
from hypothesis import given, settings
from hypothesis import strategies as st

from incite._dist import (
    chi_square_sf,
    f_sf,
    regularized_incomplete_beta,
    regularized_lower_gamma,
    regularized_upper_gamma,
    student_t_sf,
    student_t_two_sided,
    studentized_range_cdf,
    studentized_range_critical,
)

GAMMA_S = [0.5, 1.0, 2.5, 5.0, 17.0, 50.0, 120.0]
GAMMA_X = [1e-6, 0.1, 0.5, 1.0, 3.0, 10.0, 40.0, 200.0]


class TestIncompleteGamma:
    @pytest.mark.parametrize("s", GAMMA_S)
    @pytest.mark.parametrize("x", GAMMA_X)
    def test_lower_matches_scipy(self, s, x):
        assert regularized_lower_gamma(s, x) == pytest.approx(
            float(sps.gammainc(s, x)), abs=1e-10
        )

    @pytest.mark.parametrize("s", GAMMA_S)
    @pytest.mark.parametrize("x", GAMMA_X)
    def test_upper_matches_scipy(self, s, x):
        assert regularized_upper_gamma(s, x) == pytest.approx(
            float(sps.gammaincc(s, x)), abs=1e-10
        )

    def test_complement(self):
        for s in GAMMA_S:
            for x in GAMMA_X:
                total = regularized_lower_gamma(s, x) + regularized_upper_gamma(s, x)
                assert total == pytest.approx(1.0, abs=1e-12)

    def test_edges(self):
        assert regularized_lower_gamma(2.0, 0.0) == 0.0
        assert regularized_upper_gamma(2.0, 0.0) == 1.0


class TestIncompleteBeta:
    @pytest.mark.parametrize("a", [0.5, 1.0, 2.0, 7.5, 30.0])
    @pytest.mark.parametrize("b", [0.5, 1.0, 3.0, 12.0, 80.0])
    @pytest.mark.parametrize("x", [0.0, 1e-5, 0.1, 0.37, 0.5, 0.73, 0.99, 1.0])
    def test_matches_scipy(self, a, b, x):
        assert regularized_incomplete_beta(a, b, x) == pytest.approx(
            float(sps.betainc(a, b, x)), abs=1e-10
        )


class TestTailFunctions:
    @pytest.mark.parametrize("df", [1, 2, 3, 5, 10, 30, 100])
    @pytest.mark.parametrize("x", [1e-4, 0.5, 1.0, 3.84, 10.0, 30.0, 87.56, 150.0])
    def test_chi_square_sf(self, df, x):
        assert chi_square_sf(x, df) == pytest.approx(
            float(sst.chi2.sf(x, df)), abs=1e-6
        )

    @pytest.mark.parametrize("df", [1, 2, 5, 12, 30, 200])
    @pytest.mark.parametrize("t", [0.0, 0.3, 1.0, 2.5, 6.0, 15.0])
    def test_student_t(self, df, t):
        assert student_t_two_sided(t, df) == pytest.approx(
            float(2 * sst.t.sf(abs(t), df)), abs=1e-6
        )
        assert student_t_two_sided(-t, df) == student_t_two_sided(t, df)
        assert student_t_sf(t, df) == pytest.approx(
            float(sst.t.sf(t, df)), abs=1e-6
        )

    @pytest.mark.parametrize("df1", [1, 2, 4, 10, 30])
    @pytest.mark.parametrize("df2", [1, 3, 8, 20, 120])
    @pytest.mark.parametrize("f", [0.0, 0.2, 1.0, 3.0, 9.5, 40.0])
    def test_f_sf(self, df1, df2, f):
        assert f_sf(f, df1, df2) == pytest.approx(
            float(sst.f.sf(f, df1, df2)), abs=1e-6
        )

    def test_rejects_bad_args(self):
        with pytest.raises(ValueError):
            chi_square_sf(-1.0, 2)
        with pytest.raises(ValueError):
            chi_square_sf(1.0, 0)
        with pytest.raises(ValueError):
            f_sf(1.0, 0, 3)


class TestStudentizedRange:
    @pytest.mark.parametrize("k", [2, 3, 5, 10])
    @pytest.mark.parametrize("df", [3, 6, 10, 30, 120])
    @pytest.mark.parametrize("q", [0.5, 2.0, 3.5, 5.0])
    def test_cdf_matches_scipy(self, k, df, q):
        assert studentized_range_cdf(q, k, df) == pytest.approx(
            float(sst.studentized_range.cdf(q, k, df)), abs=2e-5
        )

    @pytest.mark.parametrize(
        "alpha,k,df,table",
        [
            # classic table values
            (0.05, 3, 6, 4.339),
            (0.05, 2, 10, 3.151),
            (0.05, 4, 20, 3.958),
            (0.01, 3, 12, 5.046),
        ],
    )
    def test_critical_against_tables(self, alpha, k, df, table):
        assert studentized_range_critical(alpha, k, df) == pytest.approx(
            table, abs=0.01
        )

    def test_critical_matches_scipy_ppf(self):
        for alpha, k, df in [(0.05, 3, 6), (0.05, 5, 40), (0.10, 4, 15)]:
            ours = studentized_range_critical(alpha, k, df)
            oracle = float(sst.studentized_range.ppf(1 - alpha, k, df))
            assert ours == pytest.approx(oracle, abs=5e-3)

    def test_inverse_consistency(self):
        q = studentized_range_critical(0.05, 3, 6)
        assert studentized_range_cdf(q, 3, 6) == pytest.approx(0.95, abs=1e-6)

    def test_cdf_monotone(self):
        values = [studentized_range_cdf(q, 4, 12) for q in np.linspace(0.1, 8, 25)]
        assert all(b >= a for a, b in zip(values, values[1:]))


class TestProperties:
    @given(
        st.floats(0.0, 500.0),
        st.integers(1, 200),
    )
    @settings(max_examples=200, deadline=None)
    def test_chi_square_sf_in_unit_interval(self, x, df):
        p = chi_square_sf(x, df)
        assert 0.0 <= p <= 1.0

    @given(
        st.floats(-50.0, 50.0),
        st.integers(1, 200),
    )
    @settings(max_examples=200, deadline=None)
    def test_t_two_sided_in_unit_interval(self, t, df):
        p = student_t_two_sided(t, df)
        assert 0.0 <= p <= 1.0 + 1e-12
