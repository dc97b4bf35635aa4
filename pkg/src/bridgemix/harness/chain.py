"""Chain configuration, draw storage and the sweep loop."""

from __future__ import annotations

import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from ..hyper import StepAdapter, sample_alpha_rw, sample_nu, sample_sigma2
from ..model import BridgeParams, DataError, HyperPrior, NumericalError, SuffStats, check_alpha
from ..stable import StableState, stable_sweep
from ..triangle import TruncatedGaussian, init_triangle_state, refresh_latents, triangle_sweep

METHODS = ("triangle", "stable", "auto")
COLLINEARITY_THRESHOLD = 100.0
# lower bound on sigma^2 relative to the response mean square; keeps exact
# fits from driving the noise variance to underflow
SIGMA2_FLOOR = 1e-12


@dataclass
class ChainConfig:
    """Settings for one or more Markov chains.

    ``alpha`` is either a number in (0, 1] (held fixed) or ``"sample"``.
    ``tau`` and ``sigma2`` pin those parameters when given; otherwise they
    are sampled.  ``likelihood=False`` drops the data term so the chain
    targets the prior.
    """

    method: str = "auto"
    iterations: int = 5000
    burn_in: int = 1000
    thin: int = 1
    seed: int = 0
    alpha: float | str = 0.5
    hyper: HyperPrior = field(default_factory=HyperPrior)
    chains: int = 1
    tau: float | None = None
    sigma2: float | None = None
    likelihood: bool = True
    alpha_init: float = 0.5
    alpha_step: float = 0.05

    def __post_init__(self):
        if self.method not in METHODS:
            raise DataError(f"method must be one of {METHODS}, got {self.method!r}")
        for name in ("iterations", "thin", "chains"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or v < 1:
                raise DataError(f"{name} must be a positive integer, got {v!r}")
        if not isinstance(self.burn_in, (int, np.integer)) or not 0 <= self.burn_in < self.iterations:
            raise DataError("burn_in must satisfy 0 <= burn_in < iterations")
        if not -(2**63) <= int(self.seed) < 2**64:
            raise DataError("seed must fit in 64 bits")
        if self.alpha == "sample":
            check_alpha(self.alpha_init)
            if self.hyper.alpha_prior is None:
                self.hyper = HyperPrior(self.hyper.nu_shape, self.hyper.nu_rate, (1.0, 1.0))
        elif isinstance(self.alpha, str):
            raise DataError(f"alpha must be a number or 'sample', got {self.alpha!r}")
        else:
            self.alpha = float(self.alpha)
            check_alpha(self.alpha)
        for name in ("tau", "sigma2"):
            v = getattr(self, name)
            if v is not None and not (v > 0 and math.isfinite(v)):
                raise DataError(f"{name} must be positive, got {v!r}")
        if self.alpha_step <= 0:
            raise DataError("alpha_step must be positive")

    @property
    def sample_alpha(self):
        return self.alpha == "sample"

    @property
    def n_records(self):
        return len(range(self.burn_in, self.iterations, self.thin))

    def to_dict(self):
        d = asdict(self)
        d["hyper"] = asdict(self.hyper)
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        h = dict(d.pop("hyper", {}))
        if h.get("alpha_prior") is not None:
            h["alpha_prior"] = tuple(h["alpha_prior"])
        return cls(hyper=HyperPrior(**h), **d)


@dataclass
class DrawsStore:
    """Retained draws of one chain plus run metadata.

    ``labels`` holds the omega mixture component (1 or 2) that bounded each
    coefficient draw; it is ``None`` for the stable method.  ``slice_a``
    holds the matching omega truncation points.
    """

    beta: np.ndarray
    tau: np.ndarray
    nu: np.ndarray
    sigma2: np.ndarray
    alpha: np.ndarray
    labels: np.ndarray | None
    method: str
    config: ChainConfig
    seed: int
    chain: int = 0
    wall_time: float = 0.0
    alpha_acceptance: float = float("nan")
    slice_a: np.ndarray | None = None
    names: tuple = ()

    @property
    def n_draws(self):
        return self.beta.shape[0]

    @property
    def p(self):
        return self.beta.shape[1]

    def column_names(self):
        p = self.p
        names = list(self.names) if len(self.names) == p else [f"beta_{j + 1}" for j in range(p)]
        return names

    def metadata(self):
        return {
            "method": self.method,
            "seed": int(self.seed),
            "chain": int(self.chain),
            "wall_time": self.wall_time,
            "alpha_acceptance": self.alpha_acceptance,
            "n_draws": int(self.n_draws),
            "config": self.config.to_dict(),
        }


def collinearity_score(X):
    """Ratio of the extreme singular values of the column-standardized design.

    Infinite when p > n or a column is constant.
    """
    X = np.asarray(X, dtype=float)
    n, p = X.shape
    if p > n:
        return math.inf
    sd = X.std(axis=0)
    if np.any(sd <= 1e-12 * np.maximum(1.0, np.abs(X.mean(axis=0)))):
        return math.inf
    sv = np.linalg.svd((X - X.mean(axis=0)) / sd, compute_uv=False)
    return math.inf if sv[-1] <= 0 else float(sv[0] / sv[-1])


def select_method(data, method="auto", ss=None):
    """Resolve ``auto``: stable for collinear or wide designs, triangle otherwise."""
    if method != "auto":
        return method
    ss = ss if ss is not None else SuffStats.from_data(data)
    if ss.beta_hat is None or collinearity_score(data.X) > COLLINEARITY_THRESHOLD:
        return "stable"
    return "triangle"


def _initial_beta(ss, likelihood):
    """Half the least-squares fit; a unit ridge fit when X'X is singular."""
    if not likelihood:
        return np.zeros(ss.p)
    if ss.beta_hat is not None:
        return 0.5 * ss.beta_hat
    return np.linalg.solve(ss.XtX + np.eye(ss.p), ss.Xty)


def run_chain(data, config, chain=0):
    """Run one chain and return its retained draws.

    Each sweep updates the local latents, then beta, sigma^2, nu and
    (optionally) alpha.  The nu and alpha moves condition on beta alone;
    the triangle latents are redrawn exactly afterwards whenever tau or
    alpha changed.  The generator is seeded with ``config.seed + chain``.
    """
    ss = SuffStats.from_data(data)
    method = select_method(data, config.method, ss)
    rng = np.random.default_rng(int(config.seed) + int(chain))
    p = data.p

    tg = None
    if method == "triangle" and config.likelihood:
        tg = TruncatedGaussian(ss)  # raises on singular X'X before any sweep

    alpha = config.alpha_init if config.sample_alpha else config.alpha
    beta0 = _initial_beta(ss, config.likelihood)
    if config.sigma2 is not None:
        sigma2 = config.sigma2
    elif config.likelihood:
        sigma2 = max(ss.rss(beta0) / data.n, 1e-8 * ss.yty / data.n, 1e-300)
    else:
        sigma2 = 1.0
    if config.tau is not None:
        params = BridgeParams.from_tau(beta0, alpha, config.tau, sigma2)
    else:
        params = BridgeParams(beta0, alpha, config.hyper.nu_shape / config.hyper.nu_rate, sigma2)

    if method == "triangle":
        state = init_triangle_state(beta0, params.tau, params.alpha, rng)
    else:
        state = StableState(beta0.copy(), np.ones(p))

    m = config.n_records
    out_beta = np.empty((m, p))
    out_tau, out_nu, out_s2, out_alpha = (np.empty(m) for _ in range(4))
    out_labels = np.empty((m, p), dtype=np.int8) if method == "triangle" else None
    out_a = np.empty((m, p)) if method == "triangle" else None
    adapter = StepAdapter(config.alpha_step)
    sample_tau = config.tau is None
    sample_s2 = config.sigma2 is None and config.likelihood
    s2_floor = SIGMA2_FLOOR * max(ss.yty / data.n, 1e-300)

    t0 = time.perf_counter()
    k = 0
    for it in range(config.iterations):
        if method == "triangle":
            state = triangle_sweep(state, ss, params, rng, config.likelihood, tg)
            labels, slice_a = state.labels, state.a
        else:
            state = stable_sweep(state, ss, params, rng, config.likelihood)
        beta = state.beta
        params.beta = beta
        if not np.all(np.isfinite(beta)):
            raise NumericalError(f"non-finite coefficients at sweep {it}")

        if sample_s2:
            params.sigma2 = sample_sigma2(ss.rss(beta), data.n, rng, s2_floor)

        moved = False
        if sample_tau:
            nu, _ = sample_nu(beta, params.alpha, config.hyper, rng)
            params.set_nu(nu)
            moved = True
        if config.sample_alpha:
            new_alpha, acc = sample_alpha_rw(
                beta, params.tau, params.alpha, config.hyper, adapter.step_sd, rng,
                nu=params.nu if sample_tau else None,
            )
            adapter.update(acc, adapting=it < config.burn_in)
            if acc:
                params.set_alpha(new_alpha, hold="nu" if sample_tau else "tau")
                moved = True
        if method == "triangle" and moved:
            state = refresh_latents(beta, params.tau, params.alpha, rng)

        if it >= config.burn_in and (it - config.burn_in) % config.thin == 0:
            out_beta[k] = beta
            out_tau[k], out_nu[k] = params.tau, params.nu
            out_s2[k], out_alpha[k] = params.sigma2, params.alpha
            if out_labels is not None:
                out_labels[k] = labels
                out_a[k] = slice_a
            k += 1

    return DrawsStore(
        out_beta, out_tau, out_nu, out_s2, out_alpha, out_labels, method, config,
        int(config.seed), chain, time.perf_counter() - t0,
        adapter.acceptance_rate if config.sample_alpha else float("nan"),
        out_a, tuple(data.names),
    )


def max_workers(requested):
    """Worker count capped by ``BRIDGE_THREADS`` (default: CPU count)."""
    env = os.environ.get("BRIDGE_THREADS")
    cap = os.cpu_count() or 1
    if env:
        try:
            cap = max(1, int(env))
        except ValueError as exc:
            raise DataError(f"BRIDGE_THREADS must be an integer, got {env!r}") from exc
    return max(1, min(requested, cap))


def run_parallel(func, items):
    """Map ``func`` over ``items`` concurrently; results keep input order."""
    items = list(items)
    workers = max_workers(len(items))
    if workers == 1:
        return [func(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, items))


def run_chains(data, config):
    """Run ``config.chains`` independent chains seeded ``seed + chain``."""
    return run_parallel(lambda c: run_chain(data, config, c), range(config.chains))


def posterior_mean(data, config):
    """Posterior mean of beta pooled over all chains."""
    stores = run_chains(data, config)
    return np.mean(np.concatenate([s.beta for s in stores]), axis=0)
