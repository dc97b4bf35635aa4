"""Simulation designs and the estimation / prediction experiments."""

from __future__ import annotations

from dataclasses import replace

import numpy as np

from ..model import DataError, NumericalError, RegressionData, check_alpha, sample_ep, standardize
from .baselines import classical_bridge_em, ols
from .chain import ChainConfig, run_chains, run_parallel

SCALES = {"desk": (20, 40, 4), "full": (100, 101, 10)}
METHODS = ("ols", "classical", "bayes_fixed_alpha", "bayes_sampled_alpha")


def simulate_factor_design(p, n, k_factors, alpha_true, seed):
    """Factor-model design with exponential-power coefficients.

    Rows of X are N(0, BB' + I) with B a p x k standard normal loading
    matrix; beta ~ EP(alpha_true, tau=1); y = X beta + N(0, 1).  Returns the
    data (no centering, no intercept) and the true coefficients.
    """
    if p < 1 or n < 1 or k_factors < 0:
        raise DataError("dimensions must be positive")
    check_alpha(alpha_true)
    rng = np.random.default_rng(seed)
    B = rng.standard_normal((p, k_factors))
    X = rng.standard_normal((n, k_factors)) @ B.T + rng.standard_normal((n, p))
    beta = sample_ep(rng, alpha_true, 1.0, p)
    y = X @ beta + rng.standard_normal(n)
    return RegressionData.from_arrays(y, X), beta


def factor_covariance(p, k_factors, seed):
    """The BB' + I matrix used by :func:`simulate_factor_design` for ``seed``."""
    rng = np.random.default_rng(seed)
    B = rng.standard_normal((p, k_factors))
    return B @ B.T + np.eye(p)


def simulate_equicorrelated(p, n, rho, beta, seed, noise_sd=1.0):
    """Design whose predictors have pairwise correlation ``rho``; y = X beta + noise."""
    if not 0.0 <= rho < 1.0:
        raise DataError("rho must lie in [0, 1)")
    beta = np.asarray(beta, dtype=float)
    if beta.shape != (p,):
        raise DataError("beta must have length p")
    rng = np.random.default_rng(seed)
    common = rng.standard_normal((n, 1))
    X = np.sqrt(rho) * common + np.sqrt(1.0 - rho) * rng.standard_normal((n, p))
    y = X @ beta + noise_sd * rng.standard_normal(n)
    return standardize(y, X)


def multimodal_design(seed=0):
    """The p = 20, n = 200, correlation 0.99 problem used to exhibit multimodality.

    Two equal large coefficients under heavy noise, so the likelihood
    barely distinguishes which of the correlated predictors carries them.
    """
    beta = np.zeros(20)
    beta[:2] = 10.0
    return simulate_equicorrelated(20, 200, 0.99, beta, seed, noise_sd=7.0)


def simulate_sparse(p, n, n_nonzero, seed, noise_sd=1.0, signal=2.0):
    """Independent Gaussian design with a few nonzero coefficients."""
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, p))
    beta = np.zeros(p)
    beta[rng.choice(p, n_nonzero, replace=False)] = signal * rng.choice([-1.0, 1.0], n_nonzero)
    y = 3.0 + X @ beta + noise_sd * rng.standard_normal(n)
    return X, y, beta


def _fit(method, train, config, alpha, seed):
    """Coefficients on the standardized scale of ``train``."""
    if method == "ols":
        if train.n <= train.p:
            raise DataError(f"least squares needs more training rows than predictors (n={train.n}, p={train.p})")
        return ols(train)
    if method == "classical":
        return classical_bridge_em(train, alpha, seed=seed)[0]
    if method == "bayes_fixed_alpha":
        cfg = replace(config, alpha=alpha, seed=seed)
        return np.mean(np.concatenate([s.beta for s in run_chains(train, cfg)]), axis=0)
    if method == "bayes_sampled_alpha":
        cfg = replace(config, alpha="sample", seed=seed)
        return np.mean(np.concatenate([s.beta for s in run_chains(train, cfg)]), axis=0)
    raise DataError(f"unknown method {method!r}; choose from {METHODS}")


def prediction_experiment(X, y, n_splits, methods, config=None, alpha=0.5, test_fraction=0.2, seed=0):
    """Repeated random train/test splits on raw ``(X, y)``.

    Each split standardizes the training rows, fits every method and scores
    test predictions two ways: ``sse_raw`` compares raw responses with
    predictions carrying the training intercept; ``sse_centered`` removes
    the test-set mean from both before comparing.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    methods = list(methods)
    if not methods:
        raise DataError("methods list is empty")
    for m in methods:
        if m not in METHODS:
            raise DataError(f"unknown method {m!r}; choose from {METHODS}")
    if n_splits < 1:
        raise DataError("n_splits must be positive")
    config = config or ChainConfig()
    n = y.size
    n_test = max(1, int(round(test_fraction * n)))
    if n - n_test < 2:
        raise DataError("too few rows for a train/test split")

    def one_split(i):
        rng = np.random.default_rng(seed + i)
        perm = rng.permutation(n)
        test, train_idx = perm[:n_test], perm[n_test:]
        train = standardize(y[train_idx], X[train_idx])
        row = {"split": i}
        for m in methods:
            beta = _fit(m, train, config, alpha, seed + i)
            pred = train.predict_raw(X[test], beta)
            yt = y[test]
            row[m] = {
                "sse_raw": float(np.sum((yt - pred) ** 2)),
                "sse_centered": float(np.sum(((yt - yt.mean()) - (pred - pred.mean())) ** 2)),
            }
        return row

    rows = run_parallel(one_split, range(n_splits))
    summary = {}
    for m in methods:
        raw = np.array([r[m]["sse_raw"] for r in rows])
        cen = np.array([r[m]["sse_centered"] for r in rows])
        summary[m] = {"median_sse_raw": float(np.median(raw)), "mean_sse_raw": float(raw.mean()),
                      "median_sse_centered": float(np.median(cen)), "mean_sse_centered": float(cen.mean())}
    return {"kind": "prediction", "methods": methods, "n_splits": n_splits, "splits": rows, "summary": summary}


def estimation_experiment(alpha_true, replicates, scale="desk", config=None, seed=0):
    """SSE of least squares, classical bridge and the posterior mean against the truth.

    ``scale`` is a key of ``SCALES`` or a ``(p, n, k_factors)`` tuple.  The
    bridge fits and the Bayesian fit use ``alpha = alpha_true``.  Replicate
    ``r`` uses seed ``seed + r``.
    """
    if replicates < 1:
        raise DataError("estimation experiment needs at least one replicate")
    check_alpha(alpha_true)
    p, n, k = SCALES[scale] if isinstance(scale, str) else scale
    config = config or ChainConfig()

    def one(r):
        data, beta_true = simulate_factor_design(p, n, k, alpha_true, seed + r)
        row = {"replicate": r}
        try:
            row["ols"] = float(np.sum((ols(data) - beta_true) ** 2))
        except NumericalError:
            row["ols"] = float("nan")
        bridge = classical_bridge_em(data, alpha_true, seed=seed + r)[0]
        row["bridge"] = float(np.sum((bridge - beta_true) ** 2))
        cfg = replace(config, alpha=alpha_true, seed=seed + r)
        post = np.mean(np.concatenate([s.beta for s in run_chains(data, cfg)]), axis=0)
        row["bayes"] = float(np.sum((post - beta_true) ** 2))
        return row

    rows = run_parallel(one, range(replicates))
    means = {m: float(np.nanmean([r[m] for r in rows])) for m in ("ols", "bridge", "bayes")}
    return {"kind": "estimation", "alpha_true": alpha_true, "scale": {"p": p, "n": n, "k_factors": k},
            "replicates": rows, "mean_sse": means}


def format_estimation_table(reports):
    """Text table: one row per alpha, columns LSE / Bridge / Bayes mean SSE."""
    lines = [f"{'alpha':>6} {'LSE':>12} {'Bridge':>12} {'Bayes':>12}"]
    for rep in reports:
        m = rep["mean_sse"]
        lines.append(f"{rep['alpha_true']:>6.2f} {m['ols']:>12.4g} {m['bridge']:>12.4g} {m['bayes']:>12.4g}")
    return "\n".join(lines)
