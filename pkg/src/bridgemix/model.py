"""Regression model, bridge objective and exponential-power densities."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln


class BridgeError(Exception):
    """Base class for errors raised by this package."""


class DataError(BridgeError, ValueError):
    """Invalid input data (shape, content, domain)."""


class ConstantColumnError(DataError):
    pass


class NumericalError(BridgeError, RuntimeError):
    """A numerical routine failed (singular matrix, non-convergence, ...)."""


def check_alpha(alpha):
    if not (0.0 < alpha <= 1.0) or not math.isfinite(alpha):
        raise DataError(f"alpha must lie in (0, 1], got {alpha!r}")


def check_positive(name, value):
    if not (value > 0.0) or not math.isfinite(value):
        raise DataError(f"{name} must be positive and finite, got {value!r}")


@dataclass(frozen=True)
class Transform:
    """Per-column centering/scaling used to map estimates back to raw units."""

    y_mean: float
    x_mean: np.ndarray
    x_scale: np.ndarray


@dataclass(frozen=True)
class RegressionData:
    y: np.ndarray
    X: np.ndarray
    transform: Transform
    names: tuple = ()

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float)
        X = np.asarray(self.X, dtype=float)
        if X.ndim != 2:
            raise DataError("X must be a 2-d array")
        if y.ndim != 1 or y.shape[0] != X.shape[0]:
            raise DataError(f"y has shape {y.shape}, X has shape {X.shape}")
        if X.shape[0] < 1 or X.shape[1] < 1:
            raise DataError("need n >= 1 and p >= 1")
        if not (np.all(np.isfinite(y)) and np.all(np.isfinite(X))):
            raise DataError("non-finite entries in y or X")
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "X", X)

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def p(self):
        return self.X.shape[1]

    @classmethod
    def from_arrays(cls, y, X, names=()):
        """Wrap already-processed arrays with an identity transform."""
        X = np.asarray(X, dtype=float)
        p = X.shape[1] if X.ndim == 2 else 0
        t = Transform(0.0, np.zeros(p), np.ones(p))
        return cls(y, X, t, tuple(names))

    def raw_X(self):
        t = self.transform
        return self.X * t.x_scale + t.x_mean

    def raw_y(self):
        return self.y + self.transform.y_mean

    def coef_to_raw(self, beta):
        """Return (intercept, slopes) on the raw scale for standardized ``beta``."""
        t = self.transform
        slopes = np.asarray(beta, dtype=float) / t.x_scale
        intercept = t.y_mean - float(t.x_mean @ slopes)
        return intercept, slopes

    def transform_X(self, X_raw):
        t = self.transform
        return (np.asarray(X_raw, dtype=float) - t.x_mean) / t.x_scale

    def predict_raw(self, X_raw, beta):
        intercept, slopes = self.coef_to_raw(beta)
        return intercept + np.asarray(X_raw, dtype=float) @ slopes


def standardize(y, X, center_y=True, standardize_X=True, names=()):
    """Center the response and center/scale the predictors.

    Scales are population standard deviations (``ddof=0``), so every stored
    column has mean 0 and mean square 1.
    """
    y = np.asarray(y, dtype=float)
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2 or y.ndim != 1 or y.shape[0] != X.shape[0]:
        raise DataError(f"incompatible shapes y {y.shape}, X {X.shape}")
    if not (np.all(np.isfinite(y)) and np.all(np.isfinite(X))):
        raise DataError("non-finite entries in y or X")
    n, p = X.shape
    if (center_y or standardize_X) and n < 2:
        raise DataError("standardization needs n >= 2")

    y_mean = float(y.mean()) if center_y else 0.0
    if standardize_X:
        x_mean = X.mean(axis=0)
        x_scale = X.std(axis=0)
        tol = 1e-12 * np.maximum(1.0, np.abs(x_mean))
        bad = np.flatnonzero(x_scale <= tol)
        if bad.size:
            raise ConstantColumnError(f"constant predictor column(s): {bad.tolist()}")
        Xs = (X - x_mean) / x_scale
    else:
        x_mean, x_scale, Xs = np.zeros(p), np.ones(p), X.copy()
    return RegressionData(y - y_mean, Xs, Transform(y_mean, x_mean, x_scale), tuple(names))


@dataclass
class BridgeParams:
    """Bridge parameters with ``tau = nu ** (-1 / alpha)`` kept in sync.

    Assign through :meth:`set_nu`, :meth:`set_tau` or :meth:`set_alpha`
    rather than writing the fields directly.
    """

    beta: np.ndarray
    alpha: float
    nu: float
    sigma2: float = 1.0
    tau: float = field(init=False)

    def __post_init__(self):
        check_alpha(self.alpha)
        check_positive("nu", self.nu)
        check_positive("sigma2", self.sigma2)
        self.beta = np.asarray(self.beta, dtype=float)
        self.tau = nu_to_tau(self.nu, self.alpha)

    @classmethod
    def from_tau(cls, beta, alpha, tau, sigma2=1.0):
        check_alpha(alpha)
        check_positive("tau", tau)
        obj = cls(beta, alpha, tau_to_nu(tau, alpha), sigma2)
        obj.tau = float(tau)
        return obj

    def set_nu(self, nu):
        check_positive("nu", nu)
        self.nu = float(nu)
        self.tau = nu_to_tau(self.nu, self.alpha)

    def set_tau(self, tau):
        check_positive("tau", tau)
        self.tau = float(tau)
        self.nu = tau_to_nu(self.tau, self.alpha)

    def set_alpha(self, alpha, hold="nu"):
        """Change alpha, keeping either ``nu`` or ``tau`` fixed."""
        check_alpha(alpha)
        self.alpha = float(alpha)
        if hold == "nu":
            self.tau = nu_to_tau(self.nu, self.alpha)
        elif hold == "tau":
            self.nu = tau_to_nu(self.tau, self.alpha)
        else:
            raise ValueError(f"hold must be 'nu' or 'tau', got {hold!r}")


def nu_to_tau(nu, alpha):
    return math.exp(-math.log(nu) / alpha)


def tau_to_nu(tau, alpha):
    return math.exp(-alpha * math.log(tau))


@dataclass(frozen=True)
class HyperPrior:
    """Gamma(c, d) prior on nu, optional Beta prior on alpha, Jeffreys on sigma^2.

    ``alpha_prior`` is a ``(a, b)`` Beta shape pair, or ``None`` when alpha
    is held fixed.
    """

    nu_shape: float = 2.0
    nu_rate: float = 2.0
    alpha_prior: tuple | None = None
    sigma2_prior: str = "jeffreys"

    def __post_init__(self):
        check_positive("nu_shape", self.nu_shape)
        check_positive("nu_rate", self.nu_rate)
        if self.alpha_prior is not None:
            a, b = self.alpha_prior
            check_positive("alpha prior shape a", a)
            check_positive("alpha prior shape b", b)
        if self.sigma2_prior != "jeffreys":
            raise DataError(f"unsupported sigma2 prior {self.sigma2_prior!r}")


def _check_beta(data, beta):
    beta = np.asarray(beta, dtype=float)
    if beta.shape != (data.p,):
        raise DataError(f"beta has shape {beta.shape}, expected ({data.p},)")
    if not np.all(np.isfinite(beta)):
        raise DataError("non-finite beta")
    return beta


def bridge_objective(data, beta, nu, alpha):
    """0.5 * ||y - X beta||^2 + nu * sum |beta_j|^alpha."""
    beta = _check_beta(data, beta)
    check_alpha(alpha)
    if not (nu >= 0.0 and math.isfinite(nu)):
        raise DataError(f"nu must be nonnegative and finite, got {nu!r}")
    r = data.y - data.X @ beta
    return 0.5 * float(r @ r) + nu * float(np.sum(np.abs(beta) ** alpha))


def ep_log_norm(tau, alpha):
    """log of 1 / (2 tau Gamma(1 + 1/alpha))."""
    return -math.log(2.0 * tau) - float(gammaln(1.0 + 1.0 / alpha))


def ep_log_density(x, tau, alpha):
    """Log density of the exponential-power law  exp(-|x/tau|^alpha) / (2 tau Gamma(1+1/alpha))."""
    check_positive("tau", tau)
    check_alpha(alpha)
    z = np.abs(np.asarray(x, dtype=float) / tau)
    out = ep_log_norm(tau, alpha) - z**alpha
    return float(out) if out.ndim == 0 else out


def sample_ep(rng, alpha, tau=1.0, size=None):
    """Exponential-power draws: |x/tau|^alpha ~ Gamma(1/alpha, 1) with a random sign."""
    check_alpha(alpha)
    check_positive("tau", tau)
    g = rng.gamma(1.0 / alpha, 1.0, size=size)
    sign = np.where(rng.random(size=size) < 0.5, -1.0, 1.0)
    return tau * sign * g ** (1.0 / alpha)


def log_posterior_kernel(data, params):
    """Unnormalized log posterior of beta: -RSS / (2 sigma^2) - sum |beta_j / tau|^alpha."""
    beta = _check_beta(data, params.beta)
    r = data.y - data.X @ beta
    return -float(r @ r) / (2.0 * params.sigma2) - float(
        np.sum(np.abs(beta / params.tau) ** params.alpha)
    )


@dataclass(frozen=True)
class SuffStats:
    """Gram-matrix summaries shared by the samplers."""

    XtX: np.ndarray
    Xty: np.ndarray
    yty: float
    n: int
    beta_hat: np.ndarray | None

    @property
    def p(self):
        return self.XtX.shape[0]

    @classmethod
    def from_data(cls, data):
        XtX = data.X.T @ data.X
        Xty = data.X.T @ data.y
        beta_hat = None
        if data.n >= data.p:
            try:
                c = np.linalg.cholesky(XtX)
                beta_hat = np.linalg.solve(c.T, np.linalg.solve(c, Xty))
            except np.linalg.LinAlgError:
                beta_hat = None
        return cls(XtX, Xty, float(data.y @ data.y), data.n, beta_hat)

    def rss(self, beta):
        """||y - X beta||^2 computed from the Gram summaries."""
        val = self.yty - 2.0 * float(beta @ self.Xty) + float(beta @ self.XtX @ beta)
        return max(val, 0.0)
