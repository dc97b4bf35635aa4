"""Normal scale-mixture sampler driven by exponentially tilted positive stable draws.

Prior: beta_j | lambda_j ~ N(0, 1 / (2 nu^(2/alpha) lambda_j)).  Given
beta_j, lambda_j is positive stable of index alpha/2 tilted by
``exp(-nu^(2/alpha) beta_j^2 lambda_j)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .model import DataError, NumericalError, check_alpha

MAX_ITER = 10**6
SCALAR_CUTOFF = 8


@dataclass(frozen=True)
class TiltedStableSpec:
    """Positive stable law with Laplace transform exp(-t^index), tilted by exp(-tilt * s)."""

    index: float
    tilt: float = 0.0

    def __post_init__(self):
        if not (0.0 < self.index < 1.0):
            raise DataError(f"stable index must lie in (0, 1), got {self.index}")
        if not (self.tilt >= 0.0 and math.isfinite(self.tilt)):
            raise DataError(f"tilt must be nonnegative and finite, got {self.tilt}")

    def laplace(self, t):
        """E exp(-t S) = exp(tilt^index - (tilt + t)^index)."""
        return np.exp(self.tilt**self.index - (self.tilt + np.asarray(t, dtype=float)) ** self.index)


@dataclass
class StableState:
    beta: np.ndarray
    lam: np.ndarray

    def check(self):
        if not (np.all(np.isfinite(self.lam)) and np.all(self.lam > 0)):
            raise NumericalError("latent precisions must be positive and finite")


def _sinc(x):
    return np.sinc(x / np.pi)


def _zolotarev(u, a):
    """Zolotarev's A(u) = [sin(a u)^a sin((1-a) u)^(1-a) / sin u]^(1/(1-a))."""
    return (
        (a * _sinc(a * u)) ** a * ((1.0 - a) * _sinc((1.0 - a) * u)) ** (1.0 - a) / _sinc(u)
    ) ** (1.0 / (1.0 - a))


def _untilted(a, size, rng):
    """Kanter's representation: (A(U) / E)^((1-a)/a), U ~ U(0, pi), E ~ Exp(1)."""
    u = np.pi * rng.random(size)
    e = rng.standard_exponential(size)
    return (_zolotarev(u, a) / e) ** ((1.0 - a) / a)


def _naive(a, lam, rng, stats):
    """Untilted proposal accepted with probability exp(-lam * S)."""
    out = np.empty(lam.shape)
    pending = np.arange(lam.size)
    for _ in range(MAX_ITER):
        if pending.size == 0:
            return out
        stats["proposals"] += pending.size
        s = _untilted(a, pending.size, rng)
        ok = rng.random(pending.size) <= np.exp(-lam[pending] * s)
        out[pending[ok]] = s[ok]
        pending = pending[~ok]
    raise NumericalError("tilted stable rejection loop exceeded its iteration cap")


def _double_rejection(a, lam, rng, stats):
    """Devroye's double-rejection sampler for the exponentially tilted stable law.

    Works on the reciprocal power ``X = S^(-a/(1-a))``; the outer rejection
    proposes ``U`` from a mixture bound on its density, the inner one
    proposes ``X`` given ``U`` from a normal / uniform / exponential
    envelope around the mode.
    """
    b = (1.0 - a) / a
    lam_a = lam**a
    gamma = lam_a * a * (1.0 - a)
    sg = np.sqrt(gamma)
    c1 = math.sqrt(math.pi / 2.0)
    c3 = (2.0 + c1) * sg
    xi = (1.0 + math.sqrt(2.0) * c3) / math.pi
    psi = c3 * np.exp(-gamma * math.pi**2 / 8.0) / math.sqrt(math.pi)
    w1 = c1 * xi / sg
    w2 = 2.0 * math.sqrt(math.pi) * psi
    w3 = xi * math.pi
    big = gamma >= 1.0

    out = np.empty(lam.shape)
    pending = np.arange(lam.size)
    for _ in range(MAX_ITER):
        if pending.size <= SCALAR_CUTOFF:
            # few stragglers: per-element loops are cheaper than array passes
            for i in pending:
                out[i] = _double_rejection_one(a, float(lam[i]), rng, stats)
            return out
        k = pending.size
        stats["proposals"] += k
        g, s_g, bg = gamma[pending], sg[pending], big[pending]
        xi_k, psi_k, la = xi[pending], psi[pending], lam_a[pending]

        # U from the bounding mixture; rejected draws are retried with the outer loop
        v = rng.random(k)
        w = rng.random(k)
        normal_branch = bg & (v < w1[pending] / (w1[pending] + w2[pending]))
        flat_branch = ~bg & (v < w3[pending] / (w2[pending] + w3[pending]))
        U = np.where(normal_branch, np.abs(rng.standard_normal(k)) / s_g,
                     np.where(flat_branch, np.pi * w, np.pi * (1.0 - w * w)))
        in_range = U < np.pi
        Uc = np.where(in_range, U, 0.5)
        zeta = np.sqrt(_sinc(Uc) / (_sinc(a * Uc) ** a * _sinc((1.0 - a) * Uc) ** (1.0 - a)))
        z = 1.0 / (1.0 - (1.0 + a * zeta / s_g) ** (-1.0 / a))
        dens = np.where(bg & (Uc >= 0), xi_k * np.exp(-g * Uc**2 / 2.0), 0.0)
        dens = dens + np.where((Uc > 0) & (Uc < np.pi), psi_k / np.sqrt(np.maximum(np.pi - Uc, 1e-300)), 0.0)
        dens = dens + np.where(~bg & (Uc >= 0) & (Uc <= np.pi), xi_k, 0.0)
        with np.errstate(over="ignore", invalid="ignore"):
            # an infinite bound simply rejects
            rho = np.pi * np.exp(-la * (1.0 - zeta**-2.0)) / ((1.0 + c1) * s_g / zeta + z) * dens
        Z = rng.random(k) * rho
        u_ok = in_range & (Z <= 1.0)

        # X given U
        A = _zolotarev(Uc, a)
        m = (b / A) ** a * la
        delta = np.sqrt(m * a / A)
        a1 = delta * c1
        a3 = z / A
        tot = a1 + delta + a3
        v2 = rng.random(k)
        N = rng.standard_normal(k)
        E1 = rng.standard_exponential(k)
        unif = rng.random(k)
        left = v2 < a1 / tot
        mid = ~left & (v2 < (a1 + delta) / tot)
        right = ~left & ~mid
        X = np.where(left, m - delta * np.abs(N), np.where(mid, m + delta * unif, m + delta + E1 * a3))
        pos = X > 0
        Xs = np.where(pos, X, 1.0)
        with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
            c = A * (Xs - m) + np.exp(np.log(lam[pending]) - b * np.log(m)) * ((m / Xs) ** b - 1.0)
        c = c - np.where(left, N * N / 2.0, 0.0) - np.where(right, E1, 0.0)
        E2 = -np.log(np.maximum(Z, 1e-300))
        ok = u_ok & pos & (c <= E2)
        out[pending[ok]] = Xs[ok] ** (-b)
        pending = pending[~ok]
    raise NumericalError("tilted stable rejection loop exceeded its iteration cap")


def _msinc(x):
    return math.sin(x) / x if x != 0.0 else 1.0


def _double_rejection_one(a, lam, rng, stats):
    """Scalar version of :func:`_double_rejection` for a single tilt."""
    b = (1.0 - a) / a
    lam_a = lam**a
    gamma = lam_a * a * (1.0 - a)
    sg = math.sqrt(gamma)
    c1 = math.sqrt(math.pi / 2.0)
    c3 = (2.0 + c1) * sg
    xi = (1.0 + math.sqrt(2.0) * c3) / math.pi
    psi = c3 * math.exp(-gamma * math.pi**2 / 8.0) / math.sqrt(math.pi)
    w1 = c1 * xi / sg
    w2 = 2.0 * math.sqrt(math.pi) * psi
    w3 = xi * math.pi
    big = gamma >= 1.0
    log_lam = math.log(lam)
    for _ in range(MAX_ITER):
        stats["proposals"] += 1
        v, w = rng.random(), rng.random()
        if big:
            U = abs(rng.standard_normal()) / sg if v < w1 / (w1 + w2) else math.pi * (1.0 - w * w)
        else:
            U = math.pi * w if v < w3 / (w2 + w3) else math.pi * (1.0 - w * w)
        if U >= math.pi:
            continue
        zeta = math.sqrt(_msinc(U) / (_msinc(a * U) ** a * _msinc((1.0 - a) * U) ** (1.0 - a)))
        z = 1.0 / (1.0 - (1.0 + a * zeta / sg) ** (-1.0 / a))
        dens = 0.0
        if big:
            dens += xi * math.exp(-gamma * U * U / 2.0)
        else:
            dens += xi
        if U > 0.0:
            dens += psi / math.sqrt(math.pi - U)
        expo = -lam_a * (1.0 - zeta**-2.0)
        if expo > 700.0:
            continue
        rho = math.pi * math.exp(expo) / ((1.0 + c1) * sg / zeta + z) * dens
        Z = rng.random() * rho
        if Z > 1.0:
            continue
        A = (_msinc(a * U) * a) ** a * (_msinc((1.0 - a) * U) * (1.0 - a)) ** (1.0 - a) / _msinc(U)
        A = A ** (1.0 / (1.0 - a))
        m = (b / A) ** a * lam_a
        delta = math.sqrt(m * a / A)
        a1 = delta * c1
        a3 = z / A
        tot = a1 + delta + a3
        v2 = rng.random()
        if v2 < a1 / tot:
            N = rng.standard_normal()
            X = m - delta * abs(N)
            extra = N * N / 2.0
        elif v2 < (a1 + delta) / tot:
            X = m + delta * rng.random()
            extra = 0.0
        else:
            E1 = rng.standard_exponential()
            X = m + delta + E1 * a3
            extra = E1
        if X <= 0.0:
            continue
        try:
            c = A * (X - m) + math.exp(log_lam - b * math.log(m)) * ((m / X) ** b - 1.0) - extra
        except OverflowError:
            continue
        if c <= -math.log(max(Z, 1e-300)):
            return X ** (-b)
    raise NumericalError("tilted stable rejection loop exceeded its iteration cap")


def rtilted_stable(index, tilt, rng, stats=None):
    """Vectorized tilted positive stable draws; ``tilt`` may be an array.

    Tilts with ``tilt^index <= 1`` use plain rejection from the untilted
    law (acceptance probability ``exp(-tilt^index) >= 1/e``); larger tilts
    use double rejection, whose acceptance rate is bounded uniformly in
    the tilt.  Pass a dict as ``stats`` to accumulate the proposal count
    under ``"proposals"``.
    """
    if stats is None:
        stats = {}
    stats.setdefault("proposals", 0)
    if not (0.0 < index < 1.0):
        raise DataError(f"stable index must lie in (0, 1), got {index}")
    tilt = np.asarray(tilt, dtype=float)
    if np.any(tilt < 0) or not np.all(np.isfinite(tilt)):
        raise DataError("tilts must be nonnegative and finite")
    flat = tilt.reshape(-1)
    out = np.empty(flat.shape)
    low = flat**index <= 1.0
    if np.any(low):
        out[low] = _naive(index, flat[low], rng, stats)
    if np.any(~low):
        out[~low] = _double_rejection(index, flat[~low], rng, stats)
    return out.reshape(tilt.shape)


def sample_tilted_stable(spec, rng, size=None):
    if size is None:
        return float(rtilted_stable(spec.index, np.array([spec.tilt]), rng)[0])
    return rtilted_stable(spec.index, np.full(size, spec.tilt), rng)


def sample_lambda(beta, nu, alpha, rng):
    """lambda_j | beta_j: index alpha/2, tilt nu^(2/alpha) beta_j^2.

    The latent's prior ``lambda^(-1/2) g(lambda)`` cancels against the
    normal normalizer, so the conditional is exactly the tilted stable law.
    """
    check_alpha(alpha)
    if not nu > 0:
        raise DataError("nu must be positive")
    beta = np.asarray(beta, dtype=float)
    tilt = nu ** (2.0 / alpha) * beta**2
    return rtilted_stable(alpha / 2.0, tilt, rng)


def sample_beta_gaussian(ss, lam, nu, alpha, sigma2, rng, likelihood=True):
    """Draw beta from N(P^-1 X'y / sigma^2, P^-1), P = X'X / sigma^2 + 2 nu^(2/alpha) diag(lam)."""
    lam = np.asarray(lam, dtype=float)
    prior_prec = 2.0 * nu ** (2.0 / alpha) * lam
    if not likelihood:
        return rng.standard_normal(lam.shape) / np.sqrt(prior_prec)
    P = ss.XtX / sigma2
    P[np.diag_indices_from(P)] += prior_prec
    try:
        cf = linalg.cho_factor(P, lower=True, check_finite=False)
    except linalg.LinAlgError as exc:
        ev = np.linalg.eigvalsh(P)
        raise NumericalError(
            f"precision matrix not positive definite (eigenvalues in [{ev[0]:.3g}, {ev[-1]:.3g}])"
        ) from exc
    mean = linalg.cho_solve(cf, ss.Xty / sigma2, check_finite=False)
    z = rng.standard_normal(lam.shape)
    # P = L L', so L'^-1 z has covariance P^-1
    return mean + linalg.solve_triangular(cf[0], z, lower=True, trans="T", check_finite=False)


def stable_sweep(state, ss, params, rng, likelihood=True):
    """Refresh every lambda_j, then draw beta jointly."""
    lam = sample_lambda(state.beta, params.nu, params.alpha, rng)
    beta = sample_beta_gaussian(ss, lam, params.nu, params.alpha, params.sigma2, rng, likelihood)
    return StableState(beta, lam)
