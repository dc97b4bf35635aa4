"""Hyperparameter updates shared by both samplers."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammainc, gammaincinv, gammaln

from .model import DataError, check_alpha, nu_to_tau

ALPHA_FLOOR = 0.01


@dataclass(frozen=True)
class NuPosterior:
    shape: float
    rate: float

    @classmethod
    def from_beta(cls, beta, alpha, prior):
        beta = np.asarray(beta, dtype=float)
        return cls(prior.nu_shape + beta.size / alpha,
                   prior.nu_rate + float(np.sum(np.abs(beta) ** alpha)))


def sample_nu(beta, alpha, prior, rng):
    """nu | beta ~ Gamma(c + p/alpha, d + sum |beta_j|^alpha); returns (nu, tau).

    Conditions on beta alone, with the latent scales integrated out.
    """
    check_alpha(alpha)
    post = NuPosterior.from_beta(beta, alpha, prior)
    nu = rng.gamma(post.shape, 1.0 / post.rate)
    return nu, nu_to_tau(nu, alpha)


def sample_sigma2(residual_ss, n, rng, floor=0.0):
    """sigma^2 ~ InverseGamma(n/2, RSS/2), the update under p(sigma^2) proportional to 1/sigma^2.

    A positive ``floor`` truncates the law to ``[floor, inf)``; the draw is
    then made by inversion whenever plain sampling lands below it.
    """
    if n < 1:
        raise DataError("need n >= 1")
    if not residual_ss > 0:
        raise DataError("residual sum of squares must be positive")
    half = 0.5 * residual_ss
    draw = half / rng.gamma(0.5 * n, 1.0)
    if draw >= floor:
        return draw
    # precision h = 1/sigma^2 ~ Gamma(n/2, rate RSS/2) restricted to h <= 1/floor
    top = gammainc(0.5 * n, half / floor)
    h = gammaincinv(0.5 * n, top * rng.random()) / half
    return max(1.0 / h, floor) if h > 0 else math.inf


def reflect(x, lo=ALPHA_FLOOR, hi=1.0):
    """Fold ``x`` back into ``[lo, hi]`` by mirroring at the ends."""
    width = hi - lo
    y = math.fmod(x - lo, 2.0 * width)
    if y < 0:
        y += 2.0 * width
    return lo + (y if y <= width else 2.0 * width - y)


def ep_loglik(beta, alpha, tau):
    """Sum of normalized exponential-power log densities at scale tau."""
    beta = np.asarray(beta, dtype=float)
    p = beta.size
    return (-p * (math.log(2.0 * tau) + gammaln(1.0 + 1.0 / alpha))
            - float(np.sum(np.abs(beta / tau) ** alpha)))


def _log_beta_prior(alpha, shapes):
    a, b = shapes
    out = 0.0
    if a != 1.0:
        out += (a - 1.0) * math.log(alpha)
    if b != 1.0:
        out += (b - 1.0) * math.log1p(-alpha) if alpha < 1.0 else -math.inf * (b > 1.0)
    return out


def alpha_log_target(alpha, beta, prior_shapes, tau=None, nu=None):
    """Log conditional density of alpha (up to a constant).

    Exactly one of ``tau`` (scale held fixed) or ``nu`` (penalty weight held
    fixed, scale follows ``nu^(-1/alpha)``) must be given.
    """
    if (tau is None) == (nu is None):
        raise ValueError("give exactly one of tau or nu")
    scale = tau if tau is not None else nu_to_tau(nu, alpha)
    return ep_loglik(beta, alpha, scale) + _log_beta_prior(alpha, prior_shapes)


def sample_alpha_rw(beta, tau, alpha_current, prior, step_sd, rng, nu=None, floor=ALPHA_FLOOR):
    """Random-walk Metropolis move for alpha with reflection into (floor, 1].

    The target is the product of normalized exponential-power densities of
    beta times the Beta prior.  When ``nu`` is given it is held fixed and
    ``tau`` is ignored.  Returns ``(alpha, accepted)``.
    """
    check_alpha(alpha_current)
    if not step_sd > 0:
        raise DataError("step_sd must be positive")
    shapes = prior.alpha_prior if prior.alpha_prior is not None else (1.0, 1.0)
    prop = reflect(alpha_current + step_sd * rng.standard_normal(), floor, 1.0)
    if nu is not None:
        cur = alpha_log_target(alpha_current, beta, shapes, nu=nu)
        new = alpha_log_target(prop, beta, shapes, nu=nu)
    else:
        cur = alpha_log_target(alpha_current, beta, shapes, tau=tau)
        new = alpha_log_target(prop, beta, shapes, tau=tau)
    if math.log(rng.random()) < new - cur:
        return prop, True
    return alpha_current, False


class StepAdapter:
    """Burn-in tuning of the alpha proposal scale toward a target acceptance band."""

    def __init__(self, step_sd=0.05, low=0.25, high=0.40, window=50):
        self.step_sd = step_sd
        self.low, self.high, self.window = low, high, window
        self.accepted = 0
        self.proposed = 0
        self.total_accepted = 0
        self.total_proposed = 0

    def update(self, accepted, adapting):
        self.proposed += 1
        self.total_proposed += 1
        self.accepted += int(accepted)
        self.total_accepted += int(accepted)
        if adapting and self.proposed >= self.window:
            rate = self.accepted / self.proposed
            if rate < self.low:
                self.step_sd *= 0.8
            elif rate > self.high:
                self.step_sd = min(self.step_sd * 1.25, 1.0)
            self.accepted = self.proposed = 0

    @property
    def acceptance_rate(self):
        return self.total_accepted / self.total_proposed if self.total_proposed else float("nan")
