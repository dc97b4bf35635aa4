import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from bridgemix.model import BridgeParams, DataError, NumericalError, RegressionData, SuffStats
from bridgemix.triangle import (
    SupportError,
    TriangleState,
    TruncatedGaussian,
    init_triangle_state,
    invert_slice,
    log_truncated_omega_density,
    omega_truncation_weights,
    refresh_latents,
    sample_beta_truncated,
    sample_omega_truncated,
    sample_slice_u,
    triangle_sweep,
)


def shifted_mixture_cdf(x, a, alpha):
    w1, w2 = omega_truncation_weights(a, alpha)
    return w1 * (1 - np.exp(-x)) + w2 * (1 - np.exp(-x) * (1 + x))


def ss_from(X, y):
    return SuffStats.from_data(RegressionData.from_arrays(y, X))


class TestSlice:
    def test_full_slice_at_zero(self):
        rng = np.random.default_rng(0)
        u = sample_slice_u(np.zeros(50000), np.full(50000, 2.0), 1.0, 0.5, rng)
        assert stats.kstest(u, "uniform").pvalue > 0.01

    def test_uniform_on_stated_interval(self):
        rng = np.random.default_rng(1)
        beta, omega, tau, alpha = 0.6, 1.5, 0.8, 0.7
        width = 1 - beta / (tau * omega ** (1 / alpha))
        u = np.array([sample_slice_u(beta, omega, tau, alpha, rng) for _ in range(100000)])
        assert stats.kstest(u, stats.uniform(0, width).cdf).pvalue > 0.01

    def test_boundary_narrows(self):
        rng = np.random.default_rng(2)
        edge = 1.0 * 2.0 ** (1 / 0.5)
        u = sample_slice_u(edge * (1 - 1e-9), 2.0, 1.0, 0.5, rng)
        assert 0 <= u < 1e-8

    def test_outside_support(self):
        with pytest.raises(SupportError):
            sample_slice_u(5.0, 1.0, 1.0, 0.5, np.random.default_rng(0))

    def test_invert_examples(self):
        a, b = invert_slice(0.0, 0.3, 2.0, 1.5, 0.5)
        assert a == 0.0 and b == pytest.approx(1.5 * 0.7 * 4.0)
        a, b = invert_slice(-0.8, 0.0, 2.0, 1.5, 0.5)
        assert a == pytest.approx((0.8 / 1.5) ** 0.5) and b == pytest.approx(1.5 * 4.0)

    def test_invert_rejects_unit_u(self):
        with pytest.raises(DataError):
            invert_slice(0.1, 1.0, 2.0, 1.0, 0.5)

    def test_invert_inequalities(self):
        rng = np.random.default_rng(3)
        n = 10000
        tau = rng.uniform(0.05, 5, n)
        alpha = rng.uniform(0.05, 1, n)
        omega = rng.gamma(2.0, 1.0, n) + 1e-3
        beta = tau * omega ** (1 / alpha) * rng.uniform(-1, 1, n) * 0.999
        u = (1 - np.abs(beta) / (tau * omega ** (1 / alpha))) * rng.random(n)
        for i in range(n):
            a, b = invert_slice(beta[i], u[i], omega[i], tau[i], alpha[i])
            assert abs(beta[i]) <= b * (1 + 1e-12)
            assert omega[i] >= a * (1 - 1e-12)


class TestOmega:
    def test_lasso_at_zero_always_second(self):
        _, labels = sample_omega_truncated(np.zeros(1000), 1.0, np.random.default_rng(0))
        assert np.all(labels == 2)

    @given(st.floats(0.0, 1e3), st.floats(0.01, 1.0))
    @settings(max_examples=300, deadline=None)
    def test_weights_sum_to_one(self, a, alpha):
        w1, w2 = omega_truncation_weights(a, alpha)
        assert w1 >= 0 and w2 >= 0
        assert abs(w1 + w2 - 1) < 1e-14

    def test_zero_truncation_matches_prior(self):
        w1, w2 = omega_truncation_weights(0.0, 0.3)
        assert (w1, w2) == pytest.approx((0.7, 0.3))

    def test_ks_shifted_mixture(self):
        rng = np.random.default_rng(1)
        a, alpha = 0.5, 0.7
        om, lab = sample_omega_truncated(np.full(100000, a), alpha, rng)
        assert np.all(om >= a)
        assert stats.kstest(om - a, lambda x: shifted_mixture_cdf(x, a, alpha)).pvalue > 0.01
        assert abs(np.mean(lab == 2) - alpha / (1 + alpha * a)) < 0.005

    def test_matches_direct_truncated_density(self):
        # weights agree with alpha w e^-w + (1 - alpha) e^-w restricted to w >= a
        a, alpha = 1.3, 0.6
        x = np.linspace(0.01, 10, 50)
        direct = (alpha * (a + x) + 1 - alpha) * np.exp(-x) / (1 + alpha * a)
        assert np.allclose(np.exp(log_truncated_omega_density(x, a, alpha)), direct)

    def test_negative_truncation(self):
        with pytest.raises(DataError):
            sample_omega_truncated(-0.1, 0.5, np.random.default_rng(0))


class TestTruncatedBeta:
    def test_p1_inverse_cdf_oracle(self):
        rng = np.random.default_rng(0)
        x = np.linspace(-1, 1, 20)
        y = 2 * x + 0.3 * np.sin(7 * x)
        ss = ss_from(x[:, None], y)
        sigma2, b = 0.5, np.array([1.6])
        mean, sd = ss.beta_hat[0], math.sqrt(sigma2 / ss.XtX[0, 0])
        draws = np.empty(20000)
        beta = np.zeros(1)
        for i in range(draws.size):
            beta = sample_beta_truncated(ss, sigma2, b, beta, rng)
            draws[i] = beta[0]
        ref = stats.truncnorm((-1.6 - mean) / sd, (1.6 - mean) / sd, loc=mean, scale=sd)
        assert stats.kstest(draws, ref.cdf).pvalue > 0.01

    def test_wide_box_recovers_gaussian(self):
        rng = np.random.default_rng(1)
        X = rng.standard_normal((40, 3))
        X[:, 1] += 0.7 * X[:, 0]
        y = X @ [1.0, -0.5, 0.2] + rng.standard_normal(40)
        ss = ss_from(X, y)
        tg = TruncatedGaussian(ss)
        sigma2, b = 1.0, np.full(3, 1e6)
        beta = np.zeros(3)
        draws = np.empty((40000, 3))
        for i in range(draws.shape[0]):
            beta = tg.sweep(beta, sigma2, b, rng)
            draws[i] = beta
        draws = draws[1000:]
        cov = sigma2 * np.linalg.inv(ss.XtX)
        assert np.allclose(draws.mean(axis=0), ss.beta_hat, atol=0.02)
        assert np.allclose(np.cov(draws.T), cov, atol=0.15 * np.max(np.diag(cov)))

    def test_orthonormal_factorizes(self):
        rng = np.random.default_rng(2)
        Q, _ = np.linalg.qr(rng.standard_normal((30, 2)))
        y = Q @ [0.8, -1.5] + 0.3 * rng.standard_normal(30)
        ss = ss_from(Q, y)
        sigma2, b = 0.4, np.array([0.5, 1.0])
        beta = np.zeros(2)
        draws = np.empty((20000, 2))
        for i in range(draws.shape[0]):
            beta = sample_beta_truncated(ss, sigma2, b, beta, rng)
            draws[i] = beta
        sd = math.sqrt(sigma2)
        for j in range(2):
            m = ss.beta_hat[j]
            ref = stats.truncnorm((-b[j] - m) / sd, (b[j] - m) / sd, loc=m, scale=sd)
            assert stats.kstest(draws[:, j], ref.cdf).pvalue > 0.01
        assert abs(np.corrcoef(draws.T)[0, 1]) < 0.03

    def test_box_respected(self):
        rng = np.random.default_rng(3)
        X = rng.standard_normal((20, 4))
        ss = ss_from(X, X @ [5.0, -5.0, 0, 0] + rng.standard_normal(20))
        b = np.array([0.1, 0.2, 0.3, 0.4])
        beta = np.zeros(4)
        for _ in range(500):
            beta = sample_beta_truncated(ss, 1.0, b, beta, rng)
            assert np.all(np.abs(beta) <= b)

    def test_singular_design(self):
        X = np.ones((5, 2))
        with pytest.raises(NumericalError):
            TruncatedGaussian(ss_from(X, np.arange(5.0)))

    def test_current_point_outside_box(self):
        rng = np.random.default_rng(4)
        X = rng.standard_normal((10, 2))
        with pytest.raises(SupportError):
            sample_beta_truncated(ss_from(X, rng.standard_normal(10)), 1.0, np.ones(2), np.array([2.0, 0.0]), rng)


class TestSweep:
    def test_invariants_long_run(self):
        rng = np.random.default_rng(0)
        X = rng.standard_normal((15, 3))
        ss = ss_from(X, X @ [2.0, 0.0, -1.0] + rng.standard_normal(15))
        params = BridgeParams.from_tau(np.zeros(3), 0.6, 0.7, 1.0)
        state = init_triangle_state(0.5 * ss.beta_hat, params.tau, params.alpha, rng)
        state.check(params.tau, params.alpha)
        tg = TruncatedGaussian(ss)
        for _ in range(100000):
            state = triangle_sweep(state, ss, params, rng, _tg=tg)
            assert np.all(state.slack(params.tau, params.alpha) > 0)
            assert np.all((state.u >= 0) & (state.u < 1))

    @given(st.integers(1, 5), st.floats(0.1, 1.0), st.floats(0.05, 5.0), st.integers(0, 2**31))
    @settings(max_examples=40, deadline=None)
    def test_invariants_random_problems(self, p, alpha, tau, seed):
        rng = np.random.default_rng(seed)
        X = rng.standard_normal((p + 5, p))
        ss = ss_from(X, rng.standard_normal(p + 5) * 3)
        params = BridgeParams.from_tau(np.zeros(p), alpha, tau, 1.0)
        state = init_triangle_state(0.5 * ss.beta_hat, tau, alpha, rng)
        for _ in range(200):
            state = triangle_sweep(state, ss, params, rng)
            state.check(tau, alpha)
            assert set(np.unique(state.labels)) <= {1, 2}

    def test_check_detects_breach(self):
        st_ = TriangleState(np.array([3.0]), np.array([1.0]), np.array([0.0]), np.array([1], dtype=np.int8))
        with pytest.raises(SupportError):
            st_.check(1.0, 0.5)


class TestRefresh:
    @pytest.mark.parametrize("beta", [0.0, 0.3, 2.5])
    def test_exact_conditional(self, beta):
        # refreshed latents must match the joint law of (omega, u) given beta, checked against
        # omega-prior draws weighted by the triangle height
        tau, alpha = 1.0, 0.6
        rng = np.random.default_rng(5)
        n = 40000
        st_ = refresh_latents(np.full(n, beta), tau, alpha, rng)
        assert np.all(st_.slack(tau, alpha) > st_.u)
        from bridgemix.monotone import ep_omega_density

        pos = np.geomspace(1e-8, 80, 200001)
        s = tau * pos ** (1 / alpha)
        grid = np.concatenate([[0.0], pos])
        dens = np.concatenate([[0.0], ep_omega_density(pos, alpha) * np.clip(1 - abs(beta) / s, 0, None) / s])
        cdf = np.concatenate([[0.0], np.cumsum(0.5 * (dens[1:] + dens[:-1]) * np.diff(grid))])
        cdf /= cdf[-1]
        ref = grid
        res = stats.kstest(st_.omega, lambda q: np.interp(q, ref, cdf))
        assert res.pvalue > 0.01

    def test_refresh_preserves_support(self):
        rng = np.random.default_rng(6)
        beta = rng.standard_normal(1000) * 5
        st_ = refresh_latents(beta, 0.3, 0.4, rng)
        st_.check(0.3, 0.4)
        assert np.array_equal(st_.beta, beta)
