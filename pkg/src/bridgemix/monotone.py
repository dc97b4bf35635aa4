"""Scale mixtures of beta kernels for symmetric k-monotone densities.

A symmetric density ``C f(x)`` whose restriction to ``(0, inf)`` is
k-monotone can be written as a mixture over ``s`` of the symmetric beta
kernels

    K_k(x; s) = k / (2 s) * (1 - |x| / s)_+^(k - 1),

each of unit area.  The mixing density is proportional to
``(-1)^k s^k f^(k)(s) / k!``.  For the exponential-power family with
``k = 2`` and ``omega = (s / tau)^alpha`` the mixing law is a two-component
gamma mixture, which drives the triangle Gibbs sampler.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate
from scipy.special import gammaln

from .model import BridgeError, DataError, NumericalError, check_alpha, ep_log_norm


class QuadratureError(BridgeError, RuntimeError):
    """Adaptive quadrature did not reach the requested tolerance."""


class MonotonicityError(DataError):
    pass


QUAD_EPSABS = 1e-10
_CERT_GRID = np.concatenate([np.logspace(-3, 1, 160, endpoint=False), np.linspace(10, 50, 40)])


def quad(func, lo, hi, epsabs=QUAD_EPSABS, epsrel=1e-10, points=None, limit=500):
    """scipy quad wrapper that raises instead of warning on non-convergence."""
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            if points is not None and np.isfinite(hi):
                val, err = integrate.quad(func, lo, hi, epsabs=epsabs, epsrel=epsrel,
                                          points=points, limit=limit)
            else:
                val, err = integrate.quad(func, lo, hi, epsabs=epsabs, epsrel=epsrel,
                                          limit=limit)
        except integrate.IntegrationWarning as exc:
            raise QuadratureError(f"quadrature on [{lo}, {hi}] did not converge: {exc}") from exc
    return val


def _quad_halfline(func, lo, scale=1.0, **kw):
    """Integrate over [lo, inf) in pieces of geometrically growing width."""
    total = 0.0
    a, width = lo, max(scale, 1e-3)
    for _ in range(60):
        b = a + width
        piece = quad(func, a, b, **kw)
        total += piece
        if abs(piece) <= 1e-16 * max(1.0, abs(total)) and b > lo + 10 * scale:
            break
        a, width = b, 2.0 * width
    else:
        total += quad(func, a, np.inf, **kw)
    return total


def _central_derivative(f, x, order, h):
    coeffs = [(-1) ** i * math.comb(order, i) for i in range(order + 1)]
    offsets = [(order / 2.0 - i) for i in range(order + 1)]
    return sum(c * f(x + o * h) for c, o in zip(coeffs, offsets)) / h**order


def finite_difference(f, x, order):
    """Central finite difference of ``f`` with one Richardson step.

    The step is ``max(1e-4, 1e-4 * x)``, capped at ``0.01 * x`` near the
    origin so the stencil stays well inside ``(0, inf)``.
    """
    x = np.asarray(x, dtype=float)
    h = np.minimum(np.maximum(1e-4, 1e-4 * x), 0.01 * x)
    d1 = _central_derivative(f, x, order, h)
    d2 = _central_derivative(f, x, order, h / 2.0)
    return (4.0 * d2 - d1) / 3.0


@dataclass
class MonotoneDensity:
    """Symmetric function with ``f(0) = 1`` that is k-monotone on (0, inf).

    Parameters
    ----------
    f : callable
        Vectorized, evaluated at ``|x|``.
    order : int
        Monotonicity order k.
    derivative : callable, optional
        ``derivative(j, s)`` returning ``f^(j)(s)`` for ``s > 0``.  Central
        finite differences are used when omitted.
    C : float, optional
        ``1 / (2 * int_0^inf f)``; computed by quadrature when omitted.
    kernel_order : int, optional
        Set when ``f`` is itself the beta kernel ``(1 - |x|)_+^(m - 1)``.
    """

    f: Callable
    order: int
    derivative: Callable | None = None
    C: float | None = None
    kernel_order: int | None = None
    scale: float = 1.0

    def __post_init__(self):
        if self.order < 1:
            raise DataError("monotonicity order must be >= 1")
        f0 = float(self.f(0.0))
        if abs(f0 - 1.0) > 1e-12:
            raise DataError(f"f(0) must equal 1, got {f0}")
        if self.C is None:
            self.C = 1.0 / (2.0 * _quad_halfline(self.f, 0.0, self.scale, epsabs=1e-13))

    def __call__(self, x):
        return self.f(np.abs(x))

    def deriv(self, j, s):
        if j == 0:
            return self.f(s)
        if self.derivative is not None:
            return self.derivative(j, s)
        return finite_difference(self.f, s, j)

    def certify(self, k=None, grid=None, atol=1e-10):
        """Raise MonotonicityError unless (-1)^j f^(j) >= -atol for j < k on ``grid``."""
        k = self.order if k is None else k
        grid = _CERT_GRID * self.scale if grid is None else np.asarray(grid, dtype=float)
        xs = np.concatenate([grid, -grid])
        if not np.allclose(self.f(np.abs(xs)), self(xs), rtol=0, atol=1e-14):
            raise MonotonicityError("f is not symmetric")
        for j in range(k):
            vals = (-1) ** j * np.asarray(self.deriv(j, grid), dtype=float)
            if np.any(vals < -atol):
                worst = grid[np.argmin(vals)]
                raise MonotonicityError(f"(-1)^{j} f^({j}) < 0 near s = {worst:.4g}")

    @classmethod
    def beta_kernel(cls, m):
        """The order-m kernel shape ``(1 - |x|)_+^(m - 1)``."""

        def f(x):
            x = np.abs(np.asarray(x, dtype=float))
            return np.where(x < 1.0, np.clip(1.0 - x, 0.0, None) ** (m - 1), 0.0)

        def derivative(j, s):
            s = np.asarray(s, dtype=float)
            if j > m - 1:
                return np.zeros_like(s)
            coef = (-1) ** j * math.factorial(m - 1) / math.factorial(m - 1 - j)
            return np.where(s < 1.0, coef * np.clip(1.0 - s, 0.0, None) ** (m - 1 - j), 0.0)

        return cls(f, order=m, derivative=derivative, C=m / 2.0, kernel_order=m)

    @classmethod
    def exponential(cls):
        return cls(lambda x: np.exp(-np.abs(x)), order=64,
                   derivative=lambda j, s: (-1) ** j * np.exp(-np.asarray(s, dtype=float)),
                   C=0.5)

    @classmethod
    def exp_power(cls, alpha, k=2):
        """``exp(-|x|^alpha)``, with analytic first and second derivatives."""
        check_alpha(alpha)
        a = alpha

        def f(x):
            return np.exp(-np.abs(np.asarray(x, dtype=float)) ** a)

        def derivative(j, s):
            s = np.asarray(s, dtype=float)
            e = np.exp(-(s**a))
            if j == 1:
                return -a * s ** (a - 1.0) * e
            if j == 2:
                return (a * a * s ** (2 * a - 2.0) - a * (a - 1.0) * s ** (a - 2.0)) * e
            return finite_difference(f, s, j)

        C = 1.0 / (2.0 * math.exp(gammaln(1.0 + 1.0 / a)))
        return cls(f, order=max(k, 2), derivative=derivative, C=C)


def beta_kernel(x, s, k):
    """Unit-area symmetric beta kernel ``k/(2s) (1 - |x|/s)_+^(k-1)``."""
    s = np.asarray(s, dtype=float)
    r = np.clip(1.0 - np.abs(x) / s, 0.0, None)
    return k / (2.0 * s) * r ** (k - 1)


@dataclass
class MixingDensity:
    """Mixing density ``g(s)`` over kernel widths, paired with kernel order k."""

    pdf: Callable
    kernel_order: int
    sampler: Callable | None = None
    scale: float = 1.0
    epsabs: float = 1e-12
    support: float = np.inf

    def __call__(self, s):
        return self.pdf(s)

    def sample(self, rng, size=None):
        if self.sampler is None:
            self.sampler = _tabulated_sampler(self.pdf, self.scale)
        return self.sampler(rng, size)

    def total_mass(self):
        if np.isfinite(self.support):
            return quad(self.pdf, 0.0, self.support, epsabs=self.epsabs)
        return _quad_halfline(self.pdf, 0.0, self.scale, epsabs=self.epsabs,
                              epsrel=max(self.epsabs, 1e-10))


@dataclass(frozen=True)
class PointMass:
    """Degenerate mixing measure: all mass at one width."""

    location: float
    kernel_order: int

    def sample(self, rng, size=None):
        return np.full(size, self.location) if size is not None else self.location

    def total_mass(self):
        return 1.0


def _tabulated_sampler(pdf, scale, n_grid=4000):
    hi = scale
    while pdf(hi) > 1e-14 * max(1.0, float(pdf(scale))) and hi < 1e8:
        hi *= 2.0
    grid = np.linspace(0.0, hi, n_grid)
    dens = np.nan_to_num(np.asarray(pdf(np.maximum(grid, 1e-300)), dtype=float))
    cdf = np.concatenate([[0.0], np.cumsum(0.5 * (dens[1:] + dens[:-1]) * np.diff(grid))])
    cdf /= cdf[-1]

    def sampler(rng, size=None):
        return np.interp(rng.random(size), cdf, grid)

    return sampler


def invert_mixing(fd: MonotoneDensity, k: int):
    """Mixing measure for ``C f`` over unit-area order-k beta kernels.

    Returns a :class:`PointMass` when ``f`` is the order-k kernel itself,
    otherwise a :class:`MixingDensity` with
    ``g(s) proportional to (-1)^k s^k f^(k)(s) / k!``, normalized by
    quadrature.
    """
    if not (1 <= k <= fd.order):
        raise DataError(f"k must satisfy 1 <= k <= {fd.order}, got {k}")
    fd.certify(k)
    if fd.kernel_order == k:
        return PointMass(1.0, k)
    sign = (-1) ** k
    fact = math.factorial(k)

    def raw(s):
        s = np.asarray(s, dtype=float)
        return sign * s**k * np.asarray(fd.deriv(k, s), dtype=float) / fact

    grid = _CERT_GRID * fd.scale
    if np.any(raw(grid) < -1e-10):
        raise MonotonicityError("mixing density is negative on the evaluation grid")
    # finite-difference derivatives carry ~1e-8 relative noise
    eps = 1e-13 if fd.derivative is not None else 1e-8
    if fd.kernel_order is not None:
        mass = quad(raw, 0.0, 1.0, epsabs=eps)
    else:
        mass = _quad_halfline(raw, 0.0, fd.scale, epsabs=eps, epsrel=max(eps, 1e-10))
    if not mass > 0:
        raise NumericalError("mixing density has zero mass")
    norm = 1.0 / mass

    def pdf(s):
        s = np.asarray(s, dtype=float)
        out = norm * np.clip(raw(s), 0.0, None)
        return float(out) if out.ndim == 0 else out

    support = 1.0 if fd.kernel_order is not None else np.inf
    return MixingDensity(pdf, k, scale=fd.scale, epsabs=max(eps, 1e-12), support=support)


def reconstruct_density(g, x, epsabs=None):
    """Evaluate ``int K_k(x; s) g(s) ds`` by adaptive quadrature.

    The integrand vanishes for ``s < |x|``; integration starts at that
    kink.
    """
    k = g.kernel_order
    ax = abs(float(x))
    if isinstance(g, PointMass):
        return float(beta_kernel(ax, g.location, k))
    if isinstance(g, EpScaleMixing):
        return g.reconstruct(ax, epsabs=1e-12 if epsabs is None else epsabs)

    def integrand(s):
        return float(beta_kernel(ax, s, k)) * float(g.pdf(s)) if s > ax else 0.0

    eps = g.epsabs if epsabs is None else epsabs
    if np.isfinite(g.support):
        return quad(integrand, ax, g.support, epsabs=eps, epsrel=max(eps, 1e-12)) if ax < g.support else 0.0
    return _quad_halfline(integrand, ax, g.scale, epsabs=eps, epsrel=max(eps, 1e-12))


# exponential-power specialization


@dataclass(frozen=True)
class EpOmegaMixture:
    """Mixing law of omega for the exponential-power prior with triangle kernels.

    ``(1+alpha)/2 Ga(2 + 1/alpha, 1) + (1-alpha)/2 Ga(1 + 1/alpha, 1)``.
    """

    alpha: float

    def __post_init__(self):
        check_alpha(self.alpha)

    @property
    def weights(self):
        return ((1.0 + self.alpha) / 2.0, (1.0 - self.alpha) / 2.0)

    @property
    def shapes(self):
        return (2.0 + 1.0 / self.alpha, 1.0 + 1.0 / self.alpha)

    def logpdf(self, omega):
        omega = np.asarray(omega, dtype=float)
        w1, w2 = self.weights
        s1, s2 = self.shapes
        with np.errstate(divide="ignore"):
            lo = np.log(omega)
            l1 = math.log(w1) + (s1 - 1.0) * lo - omega - gammaln(s1)
            l2 = (math.log(w2) if w2 > 0 else -np.inf) + (s2 - 1.0) * lo - omega - gammaln(s2)
        out = np.where(omega > 0, np.logaddexp(l1, l2), -np.inf)
        return float(out) if out.ndim == 0 else out

    def pdf(self, omega):
        return np.exp(self.logpdf(omega))

    def sample(self, rng, size=None, return_labels=False):
        """Draw omega; labels are 2 for the Ga(2 + 1/alpha) component, 1 otherwise."""
        w1, _ = self.weights
        s1, s2 = self.shapes
        heavy = rng.random(size) < w1
        omega = rng.gamma(np.where(heavy, s1, s2), 1.0)
        labels = np.where(heavy, 2, 1).astype(np.int8)
        if size is None:
            omega, labels = float(omega), int(labels)
        if return_labels:
            return omega, labels
        return omega

    def scale_mixing(self, tau=1.0):
        """The same law pushed to kernel widths ``s = tau * omega^(1/alpha)``."""
        return EpScaleMixing(self, tau)


def ep_omega_density(omega, alpha):
    check_alpha(alpha)
    if np.any(np.asarray(omega) <= 0):
        raise DataError("omega must be positive")
    return EpOmegaMixture(alpha).pdf(omega)


def sample_omega_prior(alpha, rng, size=None, return_labels=False):
    return EpOmegaMixture(alpha).sample(rng, size, return_labels)


@dataclass(frozen=True)
class EpScaleMixing:
    """Width-space view of :class:`EpOmegaMixture` for order-2 kernels."""

    omega_law: EpOmegaMixture
    tau: float
    kernel_order: int = 2

    @property
    def scale(self):
        return self.tau

    def pdf(self, s):
        a, tau = self.omega_law.alpha, self.tau
        s = np.asarray(s, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            w = (s / tau) ** a
            jac = a / tau * (s / tau) ** (a - 1.0)
            out = np.where(s > 0, self.omega_law.pdf(np.maximum(w, 1e-300)) * jac, 0.0)
        return float(out) if out.ndim == 0 else out

    def sample(self, rng, size=None):
        om = self.omega_law.sample(rng, size)
        return self.tau * np.asarray(om) ** (1.0 / self.omega_law.alpha)

    def total_mass(self):
        return _quad_halfline(self.omega_law.pdf, 0.0, 1.0)

    def reconstruct(self, x, epsabs=1e-12):
        """Triangle mixture evaluated in omega coordinates, where the integrand is smooth."""
        a, tau = self.omega_law.alpha, self.tau
        ax = abs(float(x))
        w0 = (ax / tau) ** a

        def integrand(w):
            width = tau * w ** (1.0 / a)
            return max(1.0 - ax / width, 0.0) / width * float(self.omega_law.pdf(w))

        if w0 == 0.0:
            return _quad_halfline(integrand, 0.0, 1.0, epsabs=epsabs, epsrel=1e-12)
        return _quad_halfline(integrand, w0, 1.0, epsabs=epsabs, epsrel=1e-12)


def ep_density(x, tau, alpha):
    """Normalized exponential-power density on the linear scale."""
    return np.exp(ep_log_norm(tau, alpha) - np.abs(np.asarray(x, dtype=float) / tau) ** alpha)


# small oracles used in verification


def exponential_limit_approx(k, x):
    """Replace the order-k kernel by ``exp(-k x / s)`` for f(x) = exp(-x).

    The order-k Williamson measure of ``exp(-x)`` is Gamma(k, 1), so the
    approximation is ``E exp(-k x / S)`` with ``S ~ Gamma(k, 1)``.  It tends
    to ``exp(-x)`` as k grows.
    """
    x = float(x)
    lg = gammaln(k)

    def integrand(s):
        return math.exp(-k * x / s + (k - 1) * math.log(s) - s - lg) if s > 0 else 0.0

    return _quad_halfline(integrand, 0.0, float(k), epsabs=1e-13)


def extreme_value_mixture_check(x, corrected=False):
    """Compare ``exp(-e^-x)`` with its gamma-mixture representation.

    With ``corrected=False`` the right-hand side is
    ``int (1/w) (1 - e^-x / w)_+ w e^-w dw``; with ``corrected=True`` the
    integrand carries the extra factor of ``w`` that the second-derivative
    inversion of ``exp(-y)`` produces.  Returns ``(lhs, rhs)``.
    """
    x = float(x)
    if not math.isfinite(x):
        raise DataError("x must be finite")
    y = math.exp(-x)
    lhs = math.exp(-y)
    power = 2 if corrected else 1

    def integrand(w):
        return max(1.0 - y / w, 0.0) * w ** (power - 1) * math.exp(-w)

    rhs = _quad_halfline(integrand, y, 1.0, epsabs=1e-13)
    return lhs, rhs


def exponential_tail_identity(x):
    """``int_x^inf (s - x) e^-s ds`` by quadrature; equals ``e^-x``."""
    x = float(x)
    return _quad_halfline(lambda s: (s - x) * math.exp(-s), x, 1.0, epsabs=1e-14, epsrel=1e-13)
