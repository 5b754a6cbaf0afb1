"""Ensemble expectations, the alpha = 1 split, extremes, and sandwich checks."""

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy import stats

from batchlab import ensemble as en
from batchlab.batch_exact import expected_time_bulk, expected_time_subsets_bulk
from batchlab.distributions import power_tail, scaled, uniform
from batchlab.errors import DivergenceError, PrecisionLossError
from batchlab.rng import derive_rng
from tests.conftest import MASTER_SEED


class TestZetaSumRoute:
    def test_telescoping_base_case(self):
        assert_allclose(en.expected_time_zeta_sum(power_tail(1.0), 1).value,
                        1.0, atol=1e-9)

    def test_n2_binomial_combination(self):
        from batchlab.moment_zeta import zeta
        pt = power_tail(1.0)
        want = 2.0 * zeta(pt, 1.0, eps=1e-11).value - zeta(pt, 2.0, eps=1e-11).value
        assert_allclose(en.expected_time_zeta_sum(pt, 2).value, want, rtol=1e-10)

    def test_uniform_diverges(self):
        with pytest.raises(DivergenceError):
            en.expected_time_zeta_sum(uniform(), 1)

    @pytest.mark.parametrize("n", [1, 2, 5, 10])
    def test_agreement_with_moment_series(self, n):
        a = en.expected_time_zeta_sum(power_tail(1.0), n).value
        b = en.expected_time_moment_series(power_tail(1.0), n, eps=1e-10).value
        assert abs(a - b) <= 1e-8

    def test_cancellation_reported_and_bounded(self):
        # within the n <= 30 window these families stay well conditioned
        # (first moment <= 1/2, so zeta values decay geometrically)
        r = en.expected_time_zeta_sum(power_tail(1.0), 30)
        assert 1.0 <= r.cancellation_ulps < en._CONDITION_LIMIT

    def test_cancellation_refusal_guard(self, monkeypatch):
        monkeypatch.setattr(en, "_CONDITION_LIMIT", 100.0)
        with pytest.raises(PrecisionLossError):
            en.expected_time_zeta_sum(power_tail(1.0), 30)

    def test_size_limit(self):
        with pytest.raises(ValueError):
            en.expected_time_zeta_sum(power_tail(1.0), 31)


class TestMomentSeriesRoute:
    def test_telescoping_n1(self):
        r = en.expected_time_moment_series(power_tail(1.0), 1, eps=1e-10)
        assert_allclose(r.value, 1.0, atol=1e-9)
        assert r.error_bound <= 1e-10

    def test_n1_equals_zeta_at_one(self):
        from batchlab.moment_zeta import zeta
        for beta in (0.5, 1.0, 2.0):
            d = power_tail(beta)
            assert_allclose(en.expected_time_moment_series(d, 1, eps=1e-10).value,
                            zeta(d, 1.0, eps=1e-10).value, atol=1e-9)

    def test_alpha_at_most_one_diverges(self):
        with pytest.raises(DivergenceError):
            en.expected_time_moment_series(uniform(), 5)
        with pytest.raises(DivergenceError):
            en.expected_time_moment_series(power_tail(-0.5), 5)

    def test_scaled_support_converges(self):
        r = en.expected_time_moment_series(scaled(0.5, uniform()), 3, eps=1e-10)
        assert 0.0 < r.value < 3.0

    def test_against_subset_formula_monte_carlo(self):
        # E_p[T(p)] estimated from 1e6 fresh vectors via inclusion-exclusion
        pt = power_tail(1.0)
        rng = derive_rng(MASTER_SEED, 501)
        P = pt.sample(10**6 * 5, rng).reshape(10**6, 5)
        tvals = expected_time_subsets_bulk(P)
        series = en.expected_time_moment_series(pt, 5, eps=1e-10).value
        se = tvals.std(ddof=1) / math.sqrt(tvals.size)
        assert abs(tvals.mean() - series) <= 3.0 * se

    @pytest.mark.parametrize("n", [10, 100])
    def test_against_per_sample_times_monte_carlo(self, n):
        pt = power_tail(1.0)
        rng = derive_rng(MASTER_SEED, 502, n)
        P = pt.sample(10**5 * n, rng).reshape(10**5, n)
        mc_words = expected_time_bulk(P) + 1.0    # word-count convention
        series = en.expected_time_moment_series(pt, n, eps=1e-8).value
        se = mc_words.std(ddof=1) / math.sqrt(mc_words.size)
        assert abs((mc_words.mean() - 1.0) - series) <= 4.0 * se

    def test_truncation_honesty(self):
        loose = en.expected_time_moment_series(power_tail(1.0), 50, eps=1e-4)
        tight = en.expected_time_moment_series(power_tail(1.0), 50, eps=1e-9)
        assert abs(loose.value - tight.value) <= loose.error_bound


class TestAlpha1Split:
    def test_uniform_n2_is_basel_sum(self):
        # T2 = -sum m_j^2 = -(pi^2/6 - 1)
        r = en.alpha1_decomposition(uniform(), 2, eps=1e-9)
        assert_allclose(r.t2, -(math.pi**2 / 6.0 - 1.0), atol=1e-8)

    def test_log_constant_extraction(self):
        r = en.alpha1_decomposition(uniform(), 2)
        assert_allclose(r.c, 1.0, atol=1e-8)

    def test_growth_ratio_at_desk_scale(self):
        n = 10**4
        r = en.alpha1_decomposition(uniform(), n, eps=1.0)
        ratio = r.t2 / (n * math.log(n))
        assert abs(ratio - (-r.c)) <= 0.1 * abs(r.c)

    def test_rejects_wrong_regime(self):
        with pytest.raises(ValueError):
            en.alpha1_decomposition(power_tail(1.0), 10)
        with pytest.raises(ValueError):
            en.alpha1_decomposition(scaled(0.5, uniform()), 10)

    def test_law_of_large_numbers_scale(self):
        # per-sample expected times over 1e4 fresh vectors: the trimmed mean
        # of T/n sits at Theta(1) even though E[T] does not exist
        n = 1000
        rng = derive_rng(MASTER_SEED, 77)
        P = uniform().sample(10**4 * n, rng).reshape(10**4, n)
        t_over_n = expected_time_bulk(P) / n
        trimmed = stats.trim_mean(t_over_n, 0.05)
        assert 0.5 <= trimmed <= 5.0


class TestIntegralRoute:
    def test_matches_closed_form(self):
        # quadrature vs Gamma closed form of the limit integral
        for beta in (0.5, 1.0, 3.0):
            d = power_tail(beta)
            got = en.expected_time_integral(d, 1)
            want = en.limit_integral_closed_form(d)
            assert_allclose(got, want, rtol=1e-6)

    def test_agrees_with_series_in_asymptotic_regime(self):
        d = power_tail(1.0)
        n = 10**4
        got = en.expected_time_integral(d, n)
        series = en.expected_time_moment_series(d, n, eps=1e-4).value
        assert 0.95 <= got / series <= 1.05

    def test_exact_rate_scaling(self):
        d = power_tail(1.0)
        assert_allclose(en.expected_time_integral(d, 2000)
                        / en.expected_time_integral(d, 1000),
                        2.0 ** 0.5, rtol=1e-12)

    def test_divergence_below_alpha_one(self):
        with pytest.raises(DivergenceError):
            en.expected_time_integral(uniform(), 100)


class TestConcentration:
    def test_lln_regime(self):
        cs = en.sum_inverse_gap_concentration(power_tail(1.0), 10**4, 2000,
                                              MASTER_SEED)
        assert cs.regime == "lln"
        assert_allclose(cs.target, 2.0, rtol=1e-12)   # (1+beta)/beta
        assert abs(cs.median - 2.0) < 0.1
        tighter = en.sum_inverse_gap_concentration(power_tail(1.0), 10**5, 2000,
                                                   MASTER_SEED)
        assert tighter.iqr < cs.iqr

    def test_log_regime(self):
        cs = en.sum_inverse_gap_concentration(uniform(), 10**4, 2000, MASTER_SEED)
        assert cs.regime == "log"
        assert 0.7 <= cs.median <= 1.3

    def test_stable_regime_ratio_stability(self):
        small = en.sum_inverse_gap_concentration(power_tail(-0.5), 100, 2000,
                                                 MASTER_SEED)
        large = en.sum_inverse_gap_concentration(power_tail(-0.5), 10**4, 2000,
                                                 MASTER_SEED)
        assert small.regime == "stable" and small.target is None
        assert 1.0 / 3.0 <= large.median / small.median <= 3.0


class TestExtremeValue:
    def test_uniform_minimum_mean(self):
        # min of n+0 uniform gaps has mean 1/(n+1)
        ev = en.extreme_value(uniform(), [9], 10**5, MASTER_SEED)
        assert abs(ev.mean_min_q[0] - 0.1) <= 4.0 * ev.stderr[0]

    def test_uniform_exponential_limit_ks(self):
        ev = en.extreme_value(uniform(), [1000], 10**5, MASTER_SEED)
        assert ev.ks_distance < 0.01

    @pytest.mark.parametrize("beta", [0.0, 1.0, 3.0])
    def test_regression_slope(self, beta):
        d = uniform() if beta == 0.0 else power_tail(beta)
        ev = en.extreme_value(d, [100, 316, 1000, 3162, 10000], 20000,
                              MASTER_SEED)
        assert abs(ev.fitted_slope - (-1.0 / (1.0 + beta))) < 0.05

    def test_fitted_constant_matches_limit_cdf_form(self):
        # of the two candidate closed forms for the scaled-minimum constant,
        # the empirical fit selects the one implied by the limit CDF
        # G(x) = 1 - exp(-x**(1+beta)): integral exp(-u**(1+beta)) du,
        # which is Gamma(1 + 1/(1+beta)) = sqrt(pi)/2 at beta = 1; the
        # alternative reading integral exp(-u**(1/(1+beta))) du = 2 does not
        ev = en.extreme_value(power_tail(1.0), [316, 1000, 3162, 10000],
                              30000, MASTER_SEED)
        g_form = math.gamma(1.0 + 0.5)
        assert abs(ev.fitted_C - g_form) < 0.05
        assert abs(ev.fitted_C - 2.0) > 1.0

    def test_rejects_no_power_tail(self):
        with pytest.raises(ValueError):
            en.extreme_value(scaled(0.5, uniform()), [10], 100, MASTER_SEED)


class TestRegimeWindows:
    def test_sublinear_regime(self):
        rep = en.regime_window_check(power_tail(1.0), 1000, 1000, MASTER_SEED)
        assert rep.regime == "sublinear"
        assert rep.fraction_within >= 0.99

    def test_linear_log_regime(self):
        rep = en.regime_window_check(uniform(), 1000, 1000, MASTER_SEED)
        assert rep.regime == "linear-log"
        assert rep.fraction_within >= 0.99

    def test_tight_regime_below_analysis(self):
        rep = en.regime_window_check(power_tail(-0.5), 1000, 1000, MASTER_SEED)
        assert rep.regime == "tight-outside-analyzed-regime"
        assert rep.fraction_within >= 0.99

    def test_outside_analyzed_regime_label(self):
        rep = en.regime_window_check(power_tail(-0.7), 200, 200, MASTER_SEED)
        assert "outside-analyzed-regime" in rep.regime
        mild = en.regime_window_check(power_tail(-0.3), 200, 200, MASTER_SEED)
        assert mild.regime == "tight"


class TestDispatcher:
    def test_each_method_runs(self):
        pt = power_tail(1.0)
        for method in en.METHODS:
            est = en.ensemble_estimate(pt, 20, method, trials=500,
                                       seed=MASTER_SEED)
            assert est.method == method
            assert est.value > 0.0

    def test_unknown_method(self):
        with pytest.raises(ValueError):
            en.ensemble_estimate(uniform(), 10, "psychic")

    def test_monte_carlo_reproducible(self):
        a = en.ensemble_estimate(uniform(), 50, "monte_carlo", trials=2000,
                                 seed=MASTER_SEED, threads=1)
        b = en.ensemble_estimate(uniform(), 50, "monte_carlo", trials=2000,
                                 seed=MASTER_SEED, threads=3)
        assert a == b
