"""Gibbs sampler built on the triangle (Bartlett-Fejer) mixture of the bridge prior.

Each coefficient carries a latent width ``tau * omega_j^(1/alpha)`` and a
slice variable ``u_j``.  Given the slice, ``omega_j`` is a shifted
two-component gamma mixture and ``beta`` is a box-truncated normal centred
at the least-squares fit.

Component labels: 1 marks the Ga(1, 1) shift component, 2 the Ga(2, 1) one.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import DataError, NumericalError, check_alpha
from .truncnorm import rtruncnorm_std

MAX_REJECTIONS = 10**6


class SupportError(NumericalError):
    """A state violates the triangle support constraint."""


@dataclass
class TriangleState:
    beta: np.ndarray
    omega: np.ndarray
    u: np.ndarray
    labels: np.ndarray
    a: np.ndarray | None = None

    def slack(self, tau, alpha):
        """``1 - |beta| / (tau omega^(1/alpha))``; positive inside the support."""
        return 1.0 - np.abs(self.beta) / (tau * self.omega ** (1.0 / alpha))

    def check(self, tau, alpha):
        slack = self.slack(tau, alpha)
        if np.any(slack <= 0) or np.any(self.u < 0) or np.any(self.u >= slack):
            j = int(np.argmin(slack - self.u))
            raise SupportError(
                f"coordinate {j}: |beta|={abs(self.beta[j]):.4g}, slack={slack[j]:.4g}, u={self.u[j]:.4g}"
            )


@dataclass(frozen=True)
class SliceBounds:
    a: np.ndarray
    b: np.ndarray


def sample_slice_u(beta, omega, tau, alpha, rng):
    """u_j ~ Uniform(0, 1 - |beta_j| / (tau omega_j^(1/alpha)))."""
    width = 1.0 - np.abs(beta) / (tau * np.asarray(omega, dtype=float) ** (1.0 / alpha))
    if np.any(width <= 0):
        raise SupportError("beta lies outside the triangle support")
    u = width * rng.random(np.shape(width))
    return float(u) if np.ndim(u) == 0 else u


def invert_slice(beta, u, omega, tau, alpha):
    """Slice region as a lower bound on omega and a box half-width for beta.

    ``a = (|beta/tau| / (1 - u))^alpha`` and ``b = tau (1 - u) omega^(1/alpha)``.
    """
    u = np.asarray(u, dtype=float)
    if np.any(u >= 1.0) or np.any(u < 0.0):
        raise DataError("slice variable must lie in [0, 1)")
    one_minus = 1.0 - u
    a = (np.abs(beta) / tau / one_minus) ** alpha
    b = tau * one_minus * np.asarray(omega, dtype=float) ** (1.0 / alpha)
    if np.ndim(a) == 0:
        return float(a), float(b)
    return SliceBounds(a, b)


def omega_truncation_weights(a, alpha):
    """Weights of the Ga(1,1) and Ga(2,1) components of ``omega - a``."""
    a = np.asarray(a, dtype=float)
    denom = 1.0 + alpha * a
    return (1.0 - alpha * (1.0 - a)) / denom, alpha / denom


def sample_omega_truncated(a, alpha, rng):
    """omega from the prior mixture ``alpha*Ga(2,1) + (1-alpha)*Ga(1,1)`` truncated to ``omega >= a``.

    Returns ``(omega, label)``.
    """
    a = np.asarray(a, dtype=float)
    if np.any(a < 0):
        raise DataError("truncation point must be nonnegative")
    check_alpha(alpha)
    _, w2 = omega_truncation_weights(a, alpha)
    second = rng.random(a.shape) < w2
    shift = rng.standard_gamma(np.where(second, 2.0, 1.0))
    omega = a + shift
    labels = np.where(second, 2, 1).astype(np.int8)
    if omega.ndim == 0:
        return float(omega), int(labels)
    return omega, labels


class TruncatedGaussian:
    """N(beta_hat, sigma^2 (X'X)^-1) restricted to boxes, updated one coordinate at a time."""

    def __init__(self, ss):
        if ss.beta_hat is None:
            raise NumericalError("X'X is singular; the triangle sampler needs n >= p and full rank")
        self.XtX = np.ascontiguousarray(ss.XtX)
        self.Xty = ss.Xty
        self.diag = np.diag(self.XtX).copy()
        self.beta_hat = ss.beta_hat

    def sweep(self, beta, sigma2, b, rng):
        """One component-wise Gibbs pass; ``beta`` must already lie in the box."""
        beta = np.array(beta, dtype=float)
        b = np.asarray(b, dtype=float)
        if np.any(np.abs(beta) > b):
            raise SupportError("current beta lies outside the truncation box")
        A, diag = self.XtX, self.diag
        resid = self.Xty - A @ beta  # X'(y - X beta)
        sd = np.sqrt(sigma2 / diag)
        for j in range(beta.shape[0]):
            mean = beta[j] + resid[j] / diag[j]
            s = sd[j]
            new = mean + s * rtruncnorm_std((-b[j] - mean) / s, (b[j] - mean) / s, rng)
            new = min(max(new, -b[j]), b[j])
            diff = new - beta[j]
            if diff != 0.0:
                resid -= A[j] * diff
                beta[j] = new
        return beta


def sample_beta_truncated(ss, sigma2, b, beta, rng, likelihood=True, _tg=None):
    """One sweep of component-wise truncated-normal updates for beta.

    With ``likelihood=False`` each coordinate is uniform on ``[-b_j, b_j]``.
    """
    b = np.asarray(b, dtype=float)
    if not likelihood:
        return b * (2.0 * rng.random(b.shape) - 1.0)
    tg = _tg if _tg is not None else TruncatedGaussian(ss)
    return tg.sweep(beta, sigma2, b, rng)


def triangle_sweep(state, ss, params, rng, likelihood=True, _tg=None):
    """Slice variables, then latent scales, then coefficients.

    ``params`` supplies ``tau``, ``alpha`` and ``sigma2``.
    """
    tau, alpha = params.tau, params.alpha
    u = sample_slice_u(state.beta, state.omega, tau, alpha, rng)
    a = invert_slice(state.beta, u, state.omega, tau, alpha).a
    omega, labels = sample_omega_truncated(a, alpha, rng)
    b = tau * (1.0 - u) * omega ** (1.0 / alpha)
    beta = sample_beta_truncated(ss, params.sigma2, b, state.beta, rng, likelihood, _tg)
    return TriangleState(beta, omega, u, labels, a)


def refresh_latents(beta, tau, alpha, rng):
    """Exact joint draw of (omega, u) given beta under the current (tau, alpha).

    Used after tau or alpha moves, which are made with the latents
    integrated out.  For ``a0 = |beta/tau|^alpha <= 1`` omega is proposed
    from the truncated prior and accepted with probability equal to the
    triangle height; otherwise the slice bound ``a`` is drawn by rejection
    from ``a0 + Exp(1)`` against the density
    ``exp(-a) (1 + alpha a) a^(-1/alpha - 1)``.
    """
    beta = np.asarray(beta, dtype=float)
    p = beta.shape[0]
    c = np.abs(beta) / tau
    a0 = c**alpha
    omega = np.empty(p)
    u = np.empty(p)
    labels = np.empty(p, dtype=np.int8)
    a_out = np.empty(p)

    small = np.flatnonzero(a0 <= 1.0)
    pending = small
    for _ in range(MAX_REJECTIONS):
        if pending.size == 0:
            break
        om, lab = sample_omega_truncated(a0[pending], alpha, rng)
        height = 1.0 - c[pending] / om ** (1.0 / alpha)
        ok = rng.random(pending.size) < height
        idx = pending[ok]
        omega[idx] = om[ok]
        labels[idx] = lab[ok]
        u[idx] = height[ok] * rng.random(idx.size)
        a_out[idx] = (c[idx] / (1.0 - u[idx])) ** alpha
        pending = pending[~ok]
    else:
        raise NumericalError("latent refresh exceeded the rejection cap")

    pending = np.flatnonzero(a0 > 1.0)
    for _ in range(MAX_REJECTIONS):
        if pending.size == 0:
            break
        base = a0[pending]
        prop = base + rng.standard_exponential(pending.size)
        log_r = (np.log1p(alpha * prop) - np.log1p(alpha * base)
                 - (1.0 / alpha + 1.0) * (np.log(prop) - np.log(base)))
        ok = np.log(rng.random(pending.size)) < log_r
        idx = pending[ok]
        a_acc = prop[ok]
        u[idx] = 1.0 - c[idx] * a_acc ** (-1.0 / alpha)
        om, lab = sample_omega_truncated(a_acc, alpha, rng)
        omega[idx] = om
        labels[idx] = lab
        a_out[idx] = a_acc
        pending = pending[~ok]
    else:
        raise NumericalError("latent refresh exceeded the rejection cap")
    return TriangleState(beta.copy(), omega, np.clip(u, 0.0, None), labels, a_out)


def init_triangle_state(beta0, tau, alpha, rng):
    """Start from ``beta0`` with omega from the prior truncated to the support and u = 0."""
    beta0 = np.asarray(beta0, dtype=float)
    a = (np.abs(beta0) / tau) ** alpha
    omega, labels = sample_omega_truncated(a, alpha, rng)
    # strict interior: a zero-width gamma shift has probability zero but guard anyway
    omega = np.maximum(omega, a * (1.0 + 1e-12) + 1e-300)
    return TriangleState(beta0.copy(), omega, np.zeros_like(beta0), labels, a)


def log_truncated_omega_density(shift, a, alpha):
    """Log density of ``omega - a`` under the truncated mixture (for tests and diagnostics)."""
    shift = np.asarray(shift, dtype=float)
    w1, w2 = omega_truncation_weights(a, alpha)
    with np.errstate(divide="ignore"):
        return np.logaddexp(np.log(w1) - shift, np.log(w2) + np.log(shift) - shift)

