import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from bridgemix.hyper import (
    ALPHA_FLOOR,
    NuPosterior,
    StepAdapter,
    alpha_log_target,
    ep_loglik,
    reflect,
    sample_alpha_rw,
    sample_nu,
    sample_sigma2,
)
from bridgemix.model import DataError, HyperPrior, ep_log_density


class TestNu:
    def test_substitution(self):
        post = NuPosterior.from_beta(np.array([1.0, -1.0]), 0.5, HyperPrior(2.0, 2.0))
        assert (post.shape, post.rate) == (6.0, 4.0)

    def test_zero_beta(self):
        post = NuPosterior.from_beta(np.zeros(3), 0.7, HyperPrior(1.5, 0.5))
        assert post.shape == pytest.approx(1.5 + 3 / 0.7) and post.rate == 0.5

    def test_ks_and_link(self):
        rng = np.random.default_rng(0)
        beta = np.array([0.3, -2.0, 0.01, 1.2])
        alpha, prior = 0.6, HyperPrior()
        draws = np.empty(100000)
        for i in range(draws.size):
            nu, tau = sample_nu(beta, alpha, prior, rng)
            draws[i] = nu
            if i < 1000:
                assert abs(tau - nu ** (-1 / alpha)) / tau < 1e-12
        post = NuPosterior.from_beta(beta, alpha, prior)
        assert stats.kstest(draws, stats.gamma(post.shape, scale=1 / post.rate).cdf).pvalue > 0.01


class TestSigma2:
    def test_ks(self):
        rng = np.random.default_rng(1)
        draws = np.array([sample_sigma2(12.0, 20, rng) for _ in range(100000)])
        assert stats.kstest(draws, stats.invgamma(10, scale=6.0).cdf).pvalue > 0.01

    def test_mean(self):
        rng = np.random.default_rng(2)
        draws = np.array([sample_sigma2(30.0, 15, rng) for _ in range(100000)])
        se = draws.std() / math.sqrt(draws.size)
        assert abs(draws.mean() - 30.0 / 13) < 3 * se

    def test_scale_family(self):
        a = np.array([sample_sigma2(5.0, 9, np.random.default_rng(3)) for _ in range(1)])
        b = np.array([sample_sigma2(10.0, 9, np.random.default_rng(3)) for _ in range(1)])
        assert b[0] == pytest.approx(2 * a[0], rel=1e-14)
        rng = np.random.default_rng(4)
        d1 = np.array([sample_sigma2(5.0, 9, rng) for _ in range(40000)])
        d2 = np.array([sample_sigma2(10.0, 9, rng) for _ in range(40000)])
        q = [0.1, 0.5, 0.9]
        assert np.allclose(np.quantile(d2, q) / np.quantile(d1, q), 2.0, rtol=0.05)

    def test_degenerate(self):
        with pytest.raises(DataError):
            sample_sigma2(0.0, 5, np.random.default_rng(0))
        with pytest.raises(DataError):
            sample_sigma2(1.0, 0, np.random.default_rng(0))

    def test_floor_truncation_exact(self):
        rng = np.random.default_rng(5)
        rss, n, floor = 4.0, 10, 0.5
        draws = np.array([sample_sigma2(rss, n, rng, floor) for _ in range(50000)])
        assert draws.min() >= floor
        ref = stats.invgamma(n / 2, scale=rss / 2)
        top = ref.sf(floor)
        assert stats.kstest(draws, lambda x: (ref.cdf(x) - ref.cdf(floor)) / top).pvalue > 0.01


class TestReflect:
    @given(st.floats(-50, 50))
    @settings(max_examples=1000, deadline=None)
    def test_stays_in_range(self, x):
        y = reflect(x)
        assert ALPHA_FLOOR <= y <= 1.0

    def test_mirror(self):
        assert reflect(1.1) == pytest.approx(0.9)
        assert reflect(0.0) == pytest.approx(0.02)
        assert reflect(0.5) == 0.5

    def test_many_proposals(self):
        rng = np.random.default_rng(6)
        xs = 0.5 + 0.7 * rng.standard_normal(10**6)
        out = np.array([reflect(x) for x in xs])
        assert np.all((out >= ALPHA_FLOOR) & (out <= 1.0))


class TestAlpha:
    def test_loglik_matches_density(self):
        beta = np.array([0.2, -1.5, 3.0])
        assert ep_loglik(beta, 0.6, 1.4) == pytest.approx(np.sum(ep_log_density(beta, 1.4, 0.6)))

    def test_target_needs_one_scale(self):
        with pytest.raises(ValueError):
            alpha_log_target(0.5, np.zeros(2), (1, 1))
        with pytest.raises(ValueError):
            alpha_log_target(0.5, np.zeros(2), (1, 1), tau=1.0, nu=1.0)

    def test_bad_step(self):
        with pytest.raises(DataError):
            sample_alpha_rw(np.zeros(2), 1.0, 0.5, HyperPrior(), 0.0, np.random.default_rng(0))

    @pytest.mark.parametrize("shapes", [(1.0, 1.0), (3.0, 2.0)])
    def test_no_coefficients_samples_prior(self, shapes):
        rng = np.random.default_rng(7)
        prior = HyperPrior(alpha_prior=shapes)
        alpha, draws = 0.5, []
        for i in range(60000):
            alpha, _ = sample_alpha_rw(np.zeros(0), 1.0, alpha, prior, 0.3, rng)
            if i % 5 == 0:
                draws.append(alpha)
        a, b = shapes
        ref = stats.beta(a, b)
        # target is the Beta prior restricted to [floor, 1]
        lo = ref.cdf(ALPHA_FLOOR)
        res = stats.kstest(draws, lambda x: (ref.cdf(x) - lo) / (1 - lo))
        assert res.pvalue > 0.01

    def test_fixed_target_stationarity(self):
        rng = np.random.default_rng(8)
        beta = stats.gennorm(0.7).rvs(size=40, random_state=rng)
        prior = HyperPrior(alpha_prior=(1.0, 1.0))
        grid = np.linspace(ALPHA_FLOOR, 1.0, 4001)
        logt = np.array([alpha_log_target(a, beta, (1.0, 1.0), tau=1.0) for a in grid])
        dens = np.exp(logt - logt.max())
        cdf = np.concatenate([[0], np.cumsum(0.5 * (dens[1:] + dens[:-1]) * np.diff(grid))])
        cdf /= cdf[-1]
        alpha, draws = 0.5, []
        for i in range(100000):
            alpha, _ = sample_alpha_rw(beta, 1.0, alpha, prior, 0.25, rng)
            if i % 10 == 0:
                draws.append(alpha)
        assert stats.kstest(draws, lambda q: np.interp(q, grid, cdf)).pvalue > 0.01

    def test_hold_nu_changes_scale(self):
        beta = np.array([0.5, -0.2])
        a = alpha_log_target(0.6, beta, (1, 1), nu=2.0)
        b = alpha_log_target(0.6, beta, (1, 1), tau=2.0 ** (-1 / 0.6))
        assert a == pytest.approx(b)


class TestAdapter:
    def test_shrinks_on_low_acceptance(self):
        ad = StepAdapter(0.1, window=10)
        for _ in range(10):
            ad.update(False, adapting=True)
        assert ad.step_sd == pytest.approx(0.08)

    def test_grows_and_caps(self):
        ad = StepAdapter(0.9, window=10)
        for _ in range(20):
            ad.update(True, adapting=True)
        assert ad.step_sd == 1.0

    def test_frozen_after_burn_in(self):
        ad = StepAdapter(0.1, window=10)
        for _ in range(100):
            ad.update(False, adapting=False)
        assert ad.step_sd == 0.1
        assert ad.acceptance_rate == 0.0

    def test_band_is_stable(self):
        ad = StepAdapter(0.1, window=10)
        for i in range(10):
            ad.update(i < 3, adapting=True)
        assert ad.step_sd == 0.1
