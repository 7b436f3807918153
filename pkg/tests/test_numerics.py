import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, special, stats

from modeleval.numerics import (
    DistParams,
    betainc,
    binomial_pmf,
    binomial_two_sided_p,
    chi2_cdf,
    chi2_quantile,
    chi2_sf,
    f_cdf,
    f_quantile,
    f_sf,
    gammainc_lower,
    gammainc_upper,
    normal_cdf,
    normal_quantile,
    normal_sf,
    t_cdf,
    t_quantile,
    t_sf,
)


class TestIncompleteFunctions:
    @pytest.mark.parametrize("a", [0.5, 1.0, 2.5, 10.0, 60.0])
    @pytest.mark.parametrize("x", [0.01, 0.7, 3.0, 12.0, 80.0])
    def test_gamma_against_scipy(self, a, x):
        assert gammainc_lower(a, x) == pytest.approx(special.gammainc(a, x), rel=1e-12, abs=1e-300)
        assert gammainc_upper(a, x) == pytest.approx(special.gammaincc(a, x), rel=1e-10, abs=1e-300)

    @pytest.mark.parametrize("a, b", [(0.5, 0.5), (2.0, 5.0), (30.0, 0.5), (100.0, 120.0)])
    @pytest.mark.parametrize("x", [0.001, 0.3, 0.5, 0.9, 0.999])
    def test_beta_against_scipy(self, a, b, x):
        assert betainc(a, b, x) == pytest.approx(special.betainc(a, b, x), rel=1e-10, abs=1e-14)

    def test_edges(self):
        assert betainc(2, 3, 0.0) == 0.0 and betainc(2, 3, 1.0) == 1.0
        assert gammainc_lower(2, 0.0) == 0.0


class TestNormal:
    def test_reference_quantile(self):
        assert normal_quantile(0.975) == pytest.approx(1.95996, abs=1e-5)

    def test_median(self):
        assert normal_quantile(0.5) == 0.0

    def test_q995_by_bisection_oracle(self):
        lo, hi = 0.0, 10.0
        for _ in range(200):
            mid = (lo + hi) / 2
            if 0.5 * math.erfc(-mid / math.sqrt(2)) < 0.995:
                lo = mid
            else:
                hi = mid
        assert normal_quantile(0.995) == pytest.approx(lo, abs=1e-9)
        assert normal_quantile(0.995) == pytest.approx(2.5758, abs=1e-4)

    @pytest.mark.parametrize("q", [1e-12, 1e-5, 0.02, 0.3, 0.7, 0.98, 1 - 1e-9])
    def test_quantile_error_below_1e9(self, q):
        assert normal_quantile(q) == pytest.approx(stats.norm.ppf(q), abs=1e-9)

    @pytest.mark.parametrize("q", [0.0, 1.0, -0.1, 1.5])
    def test_domain(self, q):
        with pytest.raises(ValueError):
            normal_quantile(q)

    def test_sf_cdf(self):
        for x in np.linspace(-8, 8, 41):
            assert normal_cdf(x) + normal_sf(x) == pytest.approx(1.0, abs=1e-15)


class TestChiSquared:
    def test_reference_values(self):
        assert chi2_sf(8.333, 1) == pytest.approx(0.0039, abs=2e-4)
        assert chi2_sf(2.5, 1) == pytest.approx(0.1138, abs=1e-3)
        assert chi2_sf(7.5294, 2) == pytest.approx(0.0232, abs=1e-4)

    def test_closed_form_df2(self):
        for x in np.linspace(0.0, 60.0, 301):
            assert abs(chi2_sf(x, 2) - math.exp(-x / 2)) < 1e-12

    def test_df1_is_erfc(self):
        for x in (0.1, 1.0, 6.75, 20.0):
            assert chi2_sf(x, 1) == pytest.approx(math.erfc(math.sqrt(x / 2)), rel=1e-10)

    @pytest.mark.parametrize("df", [1, 2, 3.5, 10, 50])
    def test_relative_error(self, df):
        for x in np.linspace(0.05, 4 * df + 20, 25):
            assert chi2_sf(x, df) == pytest.approx(stats.chi2.sf(x, df), rel=1e-10)

    def test_negative_x(self):
        with pytest.raises(ValueError):
            chi2_sf(-1.0, 2)


class TestStudentT:
    def test_reference_quantile(self):
        assert t_quantile(0.975, 99) == pytest.approx(1.984, abs=1e-3)

    @pytest.mark.parametrize("df", [1, 3, 30])
    def test_symmetry(self, df):
        assert t_sf(0.0, df) == 0.5

    def test_quadrature_oracle(self):
        df = 5.0
        c = math.gamma((df + 1) / 2) / (math.sqrt(df * math.pi) * math.gamma(df / 2))
        tail, _ = integrate.quad(lambda u: c * (1 + u * u / df) ** (-(df + 1) / 2), 2.0, np.inf,
                                 epsabs=1e-14, epsrel=1e-13)
        assert t_sf(2.0, 5) == pytest.approx(tail, abs=1e-10)

    def test_df1_quantile(self):
        assert t_quantile(0.975, 1) == pytest.approx(12.706, abs=1e-3)


class TestF:
    def test_zero(self):
        assert f_sf(0.0, 3, 7) == 1.0

    def test_quadrature_oracle(self):
        d1, d2 = 10.0, 5.0
        logc = (special.gammaln((d1 + d2) / 2) - special.gammaln(d1 / 2) - special.gammaln(d2 / 2)
                + (d1 / 2) * math.log(d1 / d2))

        def pdf(x):
            return math.exp(logc + (d1 / 2 - 1) * math.log(x)
                            - ((d1 + d2) / 2) * math.log1p(d1 * x / d2))

        tail, _ = integrate.quad(pdf, 4.735, np.inf, epsabs=1e-13, epsrel=1e-12)
        assert f_sf(4.735, 10, 5) == pytest.approx(tail, abs=1e-6)

    @settings(max_examples=50, deadline=None)
    @given(st.floats(0.01, 50.0), st.integers(1, 80))
    def test_f1_equals_two_sided_t(self, x, df):
        assert f_sf(x, 1, df) == pytest.approx(2 * t_sf(math.sqrt(x), df), abs=1e-12)


class TestRoundTrips:
    @pytest.mark.parametrize("x", [0.2, 1.0, 3.0, 9.0])
    def test_chi2(self, x):
        assert chi2_quantile(chi2_cdf(x, 3), 3) == pytest.approx(x, abs=1e-6)

    @pytest.mark.parametrize("x", [-4.0, -1.0, 0.5, 2.5])
    def test_t(self, x):
        assert t_quantile(t_cdf(x, 7), 7) == pytest.approx(x, abs=1e-6)

    @pytest.mark.parametrize("x", [0.3, 1.0, 2.7])
    def test_f(self, x):
        assert f_quantile(f_cdf(x, 4, 9), 4, 9) == pytest.approx(x, abs=1e-6)

    @pytest.mark.parametrize("x", [-3.0, -0.2, 1.3])
    def test_normal(self, x):
        assert normal_quantile(normal_cdf(x)) == pytest.approx(x, abs=1e-6)

    def test_cdfs_monotone(self):
        xs = np.linspace(0.0, 30.0, 200)
        for fn in (lambda x: chi2_cdf(x, 4), lambda x: f_cdf(x, 3, 8), lambda x: t_cdf(x - 15, 6)):
            values = [fn(x) for x in xs]
            assert all(b >= a for a, b in zip(values, values[1:]))


class TestBinomial:
    def test_mean_and_variance(self):
        pmf = np.array([binomial_pmf(k, 40, 0.5) for k in range(41)])
        k = np.arange(41)
        assert pmf.sum() == pytest.approx(1.0, abs=1e-12)
        assert float(k @ pmf) == pytest.approx(20.0, abs=1e-10)
        assert float(((k - 20) ** 2) @ pmf) == pytest.approx(10.0, abs=1e-9)

    def test_degenerate_p(self):
        assert binomial_pmf(7, 7, 1.0) == 1.0
        assert binomial_pmf(0, 7, 0.0) == 1.0

    def test_factorial_oracle(self):
        assert binomial_pmf(3, 12, 0.5) == pytest.approx(220 / 4096, rel=1e-12)

    def test_two_sided(self):
        assert binomial_two_sided_p(11, 12) == pytest.approx(2 * 13 / 4096, rel=1e-12)
        assert binomial_two_sided_p(20, 40) == 1.0

    def test_two_sided_vs_chi2(self):
        chi2 = (abs(25 - 15) - 1) ** 2 / 40
        assert abs(binomial_two_sided_p(25, 40) - chi2_sf(chi2, 1)) < 0.02

    @settings(max_examples=60, deadline=None)
    @given(st.integers(1, 3000), st.data())
    def test_symmetry(self, n, data):
        b = data.draw(st.integers(0, n))
        assert binomial_two_sided_p(b, n) == pytest.approx(binomial_two_sided_p(n - b, n), abs=1e-15)

    def test_large_n_matches_scipy(self):
        assert binomial_two_sided_p(2600, 5000) == pytest.approx(
            stats.binomtest(2600, 5000).pvalue, rel=1e-8)

    @pytest.mark.parametrize("k, n", [(-1, 3), (4, 3)])
    def test_domain(self, k, n):
        with pytest.raises(ValueError):
            binomial_pmf(k, n, 0.5)


def test_dist_params_dispatch():
    assert DistParams("chi_squared", df1=2).sf(3.0) == pytest.approx(math.exp(-1.5))
    assert DistParams("f", df1=1, df2=9).sf(4.0) == pytest.approx(2 * t_sf(2.0, 9))
    with pytest.raises(ValueError):
        DistParams("student_t", df1=0)
