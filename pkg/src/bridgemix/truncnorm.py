"""Univariate truncated standard normal draws."""

import math

from scipy.special import ndtri

TAIL_CUTOFF = 5.0
_SQRT2 = math.sqrt(2.0)


def _phi_cdf(x):
    return 0.5 * math.erfc(-x / _SQRT2)


def _upper_tail(lo, hi, rng):
    """Draw from N(0, 1) restricted to [lo, hi] with lo >= TAIL_CUTOFF."""
    rate = 0.5 * (lo + math.sqrt(lo * lo + 4.0))
    if rate * (hi - lo) < math.log(2.0):
        # narrow interval: uniform proposal, density is decreasing on [lo, hi]
        while True:
            z = lo + (hi - lo) * rng.random()
            if rng.random() <= math.exp(-0.5 * (z * z - lo * lo)):
                return z
    while True:
        z = lo + rng.exponential() / rate
        if z > hi:
            continue
        if rng.random() <= math.exp(-0.5 * (z - rate) ** 2):
            return z


def rtruncnorm_std(lo, hi, rng):
    """One draw from N(0, 1) conditioned on [lo, hi].

    Inverse CDF on the lower-tail side of the interval; exponential or
    uniform rejection once the whole interval lies beyond ``TAIL_CUTOFF``
    standard deviations.
    """
    if not lo < hi:
        if lo == hi:
            return lo
        raise ValueError(f"empty truncation interval [{lo}, {hi}]")
    if lo > 0.0:
        return -rtruncnorm_std(-hi, -lo, rng)
    # now lo <= 0
    if hi < -TAIL_CUTOFF:
        return -_upper_tail(-hi, -lo, rng)
    p_lo = _phi_cdf(lo)
    p_hi = _phi_cdf(hi)
    z = float(ndtri(p_lo + (p_hi - p_lo) * rng.random()))
    return min(max(z, lo), hi)


def rtruncnorm(mean, sd, lo, hi, rng):
    return mean + sd * rtruncnorm_std((lo - mean) / sd, (hi - mean) / sd, rng)

