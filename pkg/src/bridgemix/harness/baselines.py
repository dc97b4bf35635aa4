"""Least squares and the classical (penalized) bridge estimator."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..model import DataError, NumericalError, bridge_objective, check_alpha

FREEZE = 1e-8
MAX_EM_ITER = 10**4
N_STARTS = 5


def ols(data):
    """Exact least squares via QR; raises on a rank-deficient design."""
    X, y = data.X, data.y
    if data.n < data.p:
        raise NumericalError(f"least squares needs n >= p (n={data.n}, p={data.p})")
    q, r = np.linalg.qr(X)
    d = np.abs(np.diag(r))
    if d.min() <= 1e-12 * max(d.max(), 1.0):
        raise NumericalError("design matrix is rank deficient")
    return np.linalg.solve(r, q.T @ y)


@dataclass
class BridgeFit:
    beta: np.ndarray
    objective: float
    iterations: int
    converged: bool


def bridge_mm(data, nu, alpha, beta0, tol=1e-10, max_iter=MAX_EM_ITER, XtX=None, Xty=None):
    """Minimize ``0.5 ||y - X b||^2 + nu sum |b_j|^alpha`` by reweighted ridge.

    Each step majorizes ``|b|^alpha`` at the current iterate by a quadratic
    with curvature ``alpha |b_j|^(alpha - 2)`` and solves the resulting ridge
    problem; coefficients falling below ``FREEZE`` in magnitude are fixed at
    zero for the rest of the run.
    """
    XtX = data.X.T @ data.X if XtX is None else XtX
    Xty = data.X.T @ data.y if Xty is None else Xty
    beta = np.array(beta0, dtype=float)
    if nu == 0.0:
        return BridgeFit(ols(data), bridge_objective(data, ols(data), 0.0, alpha), 0, True)
    active = np.abs(beta) >= FREEZE
    beta[~active] = 0.0
    obj = bridge_objective(data, beta, nu, alpha)
    for it in range(1, max_iter + 1):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            return BridgeFit(beta, obj, it, True)
        w = nu * alpha * np.abs(beta[idx]) ** (alpha - 2.0)
        A = XtX[np.ix_(idx, idx)].copy()
        A[np.diag_indices_from(A)] += w
        new = np.zeros_like(beta)
        try:
            new[idx] = np.linalg.solve(A, Xty[idx])
        except np.linalg.LinAlgError as exc:
            raise NumericalError("reweighted ridge system is singular") from exc
        small = np.abs(new) < FREEZE
        new[small] = 0.0
        active &= ~small
        new_obj = bridge_objective(data, new, nu, alpha)
        step = np.max(np.abs(new - beta))
        beta, obj = new, new_obj
        if step <= tol * (1.0 + np.max(np.abs(beta))):
            return BridgeFit(beta, obj, it, True)
    return BridgeFit(beta, obj, max_iter, False)


def ridge_df(data, beta, nu, alpha, XtX=None):
    """Trace of the hat matrix of the ridge problem that matches ``beta`` at convergence."""
    XtX = data.X.T @ data.X if XtX is None else XtX
    idx = np.flatnonzero(beta != 0.0)
    if idx.size == 0:
        return 0.0
    if nu == 0.0:
        return float(idx.size)
    A = XtX[np.ix_(idx, idx)].copy()
    w = nu * alpha * np.abs(beta[idx]) ** (alpha - 2.0)
    A[np.diag_indices_from(A)] += w
    return float(np.trace(np.linalg.solve(A, XtX[np.ix_(idx, idx)])))


def gcv(data, beta, df):
    """RSS / (n (1 - df/n)^2)."""
    r = data.y - data.X @ beta
    n = data.n
    denom = n * (1.0 - df / n) ** 2
    return math.inf if denom <= 0 else float(r @ r) / denom


@dataclass
class ClassicalBridgeResult:
    beta: np.ndarray
    nu: float
    gcv: np.ndarray
    nu_grid: np.ndarray
    non_converged: int


def default_nu_grid(data, alpha, size=40):
    """Log-spaced grid scaled to the data."""
    top = float(np.max(np.abs(data.X.T @ data.y))) + 1e-12
    return np.geomspace(1e-6, 1.0, size) * top


def classical_bridge_em(data, alpha, nu_grid=None, seed=0, n_starts=N_STARTS, max_iter=MAX_EM_ITER):
    """Classical bridge estimate with the penalty weight chosen by GCV.

    For each ``nu`` the objective is minimized from ``n_starts`` starts
    (least squares or ridge plus random perturbations) and the lowest
    objective kept.  Returns ``(beta_hat, nu_star)``; the full
    :class:`ClassicalBridgeResult` is available via
    :func:`classical_bridge_path`.
    """
    res = classical_bridge_path(data, alpha, nu_grid, seed, n_starts, max_iter)
    return res.beta, res.nu


def classical_bridge_path(data, alpha, nu_grid=None, seed=0, n_starts=N_STARTS, max_iter=MAX_EM_ITER):
    check_alpha(alpha)
    nu_grid = default_nu_grid(data, alpha) if nu_grid is None else np.asarray(nu_grid, dtype=float)
    if nu_grid.size == 0:
        raise DataError("nu_grid must be nonempty")
    if np.any(nu_grid < 0) or not np.all(np.isfinite(nu_grid)):
        raise DataError("nu_grid entries must be nonnegative and finite")
    rng = np.random.default_rng(seed)
    XtX, Xty = data.X.T @ data.X, data.X.T @ data.y
    if data.n >= data.p:
        try:
            base = ols(data)
        except NumericalError:
            base = np.linalg.solve(XtX + np.eye(data.p), Xty)
    else:
        base = np.linalg.solve(XtX + np.eye(data.p), Xty)
    scale = np.abs(base) + np.std(base) + 1e-3

    scores = np.empty(nu_grid.size)
    fits = []
    failures = 0
    for i, nu in enumerate(nu_grid):
        if nu == 0.0:
            beta = ols(data)
            fits.append(beta)
            scores[i] = gcv(data, beta, float(data.p))
            continue
        best = None
        for s in range(n_starts):
            start = base if s == 0 else base + scale * rng.standard_normal(data.p)
            fit = bridge_mm(data, nu, alpha, start, max_iter=max_iter, XtX=XtX, Xty=Xty)
            failures += not fit.converged
            if best is None or fit.objective < best.objective:
                best = fit
        fits.append(best.beta)
        scores[i] = gcv(data, best.beta, ridge_df(data, best.beta, nu, alpha, XtX))
    k = int(np.argmin(scores))
    return ClassicalBridgeResult(fits[k], float(nu_grid[k]), scores, nu_grid, failures)

