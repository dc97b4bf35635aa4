"""Autocorrelation, effective sample size and posterior summaries."""

from __future__ import annotations

import numpy as np
from scipy.special import gammaln

from ..model import DataError, SuffStats

MAX_LAG = 100


def acf(x, max_lag=MAX_LAG):
    """Sample autocorrelation at lags ``0..max_lag`` via FFT."""
    x = np.asarray(x, dtype=float)
    n = x.size
    if n < 2:
        raise DataError("need at least two draws")
    z = x - x.mean()
    size = 1 << int(np.ceil(np.log2(2 * n)))
    f = np.fft.rfft(z, size)
    r = np.fft.irfft(f * np.conj(f), size)[: min(max_lag, n - 1) + 1]
    if r[0] <= 0:
        # a constant series: define the ACF as a unit spike
        out = np.zeros_like(r)
        out[0] = 1.0
        return out
    return r / r[0]


def ess(x):
    """Effective sample size with Geyer's initial positive sequence truncation.

    Autocorrelations are summed in adjacent pairs until a pair sum turns
    negative; the full series is used for this, not just the reported lags.
    """
    x = np.asarray(x, dtype=float)
    n = x.size
    rho = acf(x, n - 1)
    total = 0.0
    for k in range(0, rho.size - 1, 2):
        pair = rho[k] + rho[k + 1]
        if pair < 0:
            break
        total += pair
    # total = rho_0 + rho_1 + ... ; tau = -1 + 2 * total
    tau = max(-1.0 + 2.0 * total, 1.0 / np.log10(max(n, 10)))
    return float(n / tau)


def _scalar_series(store):
    series = {"tau": store.tau, "nu": store.nu, "sigma2": store.sigma2, "alpha": store.alpha}
    for j, name in enumerate(store.column_names()):
        series[name] = store.beta[:, j]
    return series


def diagnostics(store, max_lag=MAX_LAG):
    """Per-parameter ACF (lags 0..max_lag) and ESS."""
    if store.n_draws < 2:
        raise DataError("draws store is empty")
    out = {}
    for name, x in _scalar_series(store).items():
        out[name] = {"acf": acf(x, max_lag).tolist(), "ess": ess(x), "n": int(x.size)}
    return {"kind": "diagnostics", "method": store.method, "parameters": out}


def _rb_density(beta, sigma2, tau, alpha, ss, j, grid, fine):
    """Average over draws of the conditional density of beta_j on ``grid``.

    The conditional is ``N(m, sigma^2 / x_j'x_j) * exp(-|b/tau|^alpha)``,
    normalized numerically on a fine grid covering the support.
    """
    d = ss.XtX[j, j]
    dens = np.zeros(grid.size)
    for b, s2, t, a in zip(beta, sigma2, tau, alpha):
        r = ss.Xty[j] - ss.XtX[j] @ b + d * b[j]
        mean = r / d
        sd = np.sqrt(s2 / d)
        lo = min(mean - 10 * sd, grid[0])
        hi = max(mean + 10 * sd, grid[-1])
        xs = np.union1d(np.linspace(lo, hi, fine), [0.0])
        logf = -0.5 * ((xs - mean) / sd) ** 2 - np.abs(xs / t) ** a
        shift = logf.max()
        z = np.trapezoid(np.exp(logf - shift), xs)
        dens += np.exp(-0.5 * ((grid - mean) / sd) ** 2 - np.abs(grid / t) ** a - shift) / z
    return dens / len(beta)


def _prior_density(tau, alpha, grid):
    dens = np.zeros(grid.size)
    for t, a in zip(tau, alpha):
        dens += np.exp(-np.log(2 * t) - gammaln(1 + 1 / a) - np.abs(grid / t) ** a)
    return dens / len(tau)


def default_grid(store, j, size=201):
    x = store.beta[:, j]
    lo, hi = np.quantile(x, [0.0005, 0.9995])
    pad = 0.25 * (hi - lo) + 1e-9
    return np.linspace(lo - pad, hi + pad, size)


def summarize(store, data=None, grid_size=201, max_draws=500, fine=801, grids=None):
    """Posterior means, quantiles and Rao-Blackwellized marginal densities.

    Densities average the conditional of each coefficient given the other
    sampled quantities over an evenly thinned subset of at most
    ``max_draws`` draws.  Without ``data`` (or for a prior-only run) the
    conditional reduces to the exponential-power prior.
    """
    if store.n_draws < 1:
        raise DataError("draws store is empty")
    m = store.n_draws
    sub = np.unique(np.linspace(0, m - 1, min(m, max_draws)).astype(int))
    likelihood = data is not None and store.config.likelihood
    ss = SuffStats.from_data(data) if likelihood else None
    coefs = []
    for j, name in enumerate(store.column_names()):
        x = store.beta[:, j]
        grid = np.asarray(grids[j], dtype=float) if grids is not None else default_grid(store, j, grid_size)
        if likelihood:
            dens = _rb_density(store.beta[sub], store.sigma2[sub], store.tau[sub], store.alpha[sub], ss, j, grid, fine)
        else:
            dens = _prior_density(store.tau[sub], store.alpha[sub], grid)
        coefs.append({
            "name": name,
            "mean": float(x.mean()),
            "sd": float(x.std(ddof=1)) if m > 1 else 0.0,
            "mc_se": float(x.std(ddof=1) / np.sqrt(ess(x))) if m > 1 else float("nan"),
            "quantiles": dict(zip(("q025", "q25", "q50", "q75", "q975"),
                                  np.quantile(x, [0.025, 0.25, 0.5, 0.75, 0.975]).tolist())),
            "grid": grid.tolist(),
            "density": dens.tolist(),
        })
    scalars = {k: {"mean": float(np.mean(v)), "sd": float(np.std(v))}
               for k, v in (("tau", store.tau), ("nu", store.nu), ("sigma2", store.sigma2), ("alpha", store.alpha))}
    return {"kind": "summary", "method": store.method, "n_draws": int(m), "coefficients": coefs, "scalars": scalars}


def mode_stratified_draws(store, j):
    """Split the draws of coefficient ``j`` by the omega component label (1 or 2)."""
    if store.labels is None:
        raise DataError("store has no component labels (stable-method run)")
    if not 0 <= j < store.p:
        raise DataError(f"coefficient index {j} out of range")
    lab = store.labels[:, j]
    x = store.beta[:, j]
    return {1: x[lab == 1], 2: x[lab == 2]}


def stratum_separation(strata):
    """Difference of stratum means in units of the pooled standard deviation."""
    a, b = strata[1], strata[2]
    if a.size < 2 or b.size < 2:
        return 0.0
    pooled = np.sqrt(((a.size - 1) * a.var(ddof=1) + (b.size - 1) * b.var(ddof=1)) / (a.size + b.size - 2))
    return float(abs(a.mean() - b.mean()) / pooled) if pooled > 0 else float("inf")
