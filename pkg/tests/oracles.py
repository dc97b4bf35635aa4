"""Independent reference computations shared by several test modules."""

import numpy as np
from scipy import stats


def exact_p1_log_posterior(beta, x, y, alpha, nu_shape, nu_rate):
    """Log marginal posterior of a single coefficient, sigma^2 and nu integrated out analytically.

    Jeffreys prior on sigma^2 and Gamma(nu_shape, nu_rate) on nu give
    ``RSS(beta)^(-n/2) (nu_rate + |beta|^alpha)^(-(nu_shape + 1/alpha))``.
    """
    beta = np.asarray(beta, dtype=float)
    rss = np.sum((y[None, :] - beta[:, None] * x[None, :]) ** 2, axis=1)
    return -0.5 * y.size * np.log(rss) - (nu_shape + 1 / alpha) * np.log(nu_rate + np.abs(beta) ** alpha)


def importance_moments(x, y, alpha, nu_shape=2.0, nu_rate=2.0, draws=400000, seed=0):
    """Posterior mean and second moment of the p = 1 coefficient by importance sampling."""
    rng = np.random.default_rng(seed)
    bhat = x @ y / (x @ x)
    resid = y - bhat * x
    se = np.sqrt(resid @ resid / (y.size - 1) / (x @ x))
    prop = stats.t(df=3, loc=bhat / 2, scale=3 * se)
    b = prop.rvs(size=draws, random_state=rng)
    logw = exact_p1_log_posterior(b, x, y, alpha, nu_shape, nu_rate) - prop.logpdf(b)
    w = np.exp(logw - logw.max())
    w /= w.sum()
    m1 = float(w @ b)
    m2 = float(w @ b**2)
    ess = 1.0 / float(w @ w)
    return m1, m2, ess


def ep_cdf_table(tau, alpha, half_width=None, size=400001):
    """Grid and CDF of the exponential-power law by cumulative trapezoid."""
    from bridgemix.model import ep_log_density

    half_width = half_width or tau * (60.0 ** (1 / alpha))
    grid = np.linspace(-half_width, half_width, size)
    dens = np.exp(ep_log_density(grid, tau, alpha))
    cdf = np.concatenate([[0.0], np.cumsum(0.5 * (dens[1:] + dens[:-1]) * np.diff(grid))])
    return grid, cdf / cdf[-1]
