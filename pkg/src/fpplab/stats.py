"""Distribution-comparison statistics used by the verification runs.

Everything here is deliberately small: empirical CDF distances, the
DKW band that turns a sample size into a tolerance, and a chi-square
goodness-of-fit with equal-probability bins built by inverting a CDF
numerically.
"""

from __future__ import annotations

import math

import numpy as np

from .gamma import gamma_sf


def _cdf_values(cdf, x: np.ndarray) -> np.ndarray:
    """Evaluate a scalar or vectorized CDF on a sorted array."""
    try:
        v = np.asarray(cdf(x), dtype=np.float64)
        if v.shape == x.shape:
            return v
    except (TypeError, ValueError):
        pass
    return np.array([float(cdf(t)) for t in x], dtype=np.float64)


def ks_distance(sample, cdf) -> float:
    """sup |F_hat - F| against a reference CDF.

    Both one-sided gaps are taken at the sample points, which is
    where the supremum of the difference against a continuous CDF
    lives.
    """
    x = np.sort(np.asarray(sample, dtype=np.float64))
    if x.size == 0:
        raise ValueError("empty sample")
    c = _cdf_values(cdf, x)
    i = np.arange(1, x.size + 1, dtype=np.float64)
    over = float(np.max(i / x.size - c))
    under = float(np.max(c - (i - 1.0) / x.size))
    return max(over, under, 0.0)


def ks_two_sample(a, b) -> float:
    """sup distance between two empirical CDFs."""
    a = np.sort(np.asarray(a, dtype=np.float64))
    b = np.sort(np.asarray(b, dtype=np.float64))
    if a.size == 0 or b.size == 0:
        raise ValueError("empty sample")
    grid = np.concatenate([a, b])
    fa = np.searchsorted(a, grid, side="right") / a.size
    fb = np.searchsorted(b, grid, side="right") / b.size
    return float(np.max(np.abs(fa - fb)))


def dkw_epsilon(nsamples: int, alpha: float = 0.01) -> float:
    """Radius of the level-alpha DKW confidence band for the ECDF."""
    if nsamples < 1:
        raise ValueError("need at least one sample")
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    return math.sqrt(math.log(2.0 / alpha) / (2.0 * nsamples))


def _invert_cdf(cdf, p: float, lo: float, hi: float) -> float:
    """Bisect a monotone CDF; the bracket is grown if needed."""
    flo, fhi = float(cdf(lo)), float(cdf(hi))
    grow = max(hi - lo, 1.0)
    while fhi < p:
        lo, flo = hi, fhi
        hi += grow
        grow *= 2.0
        fhi = float(cdf(hi))
        if grow > 1e12:
            raise RuntimeError("CDF never reaches the requested level")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        if float(cdf(mid)) < p:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def chi_square_gof(sample, cdf, *, bins: int = 64, lo: float = 0.0,
                   hi: float = 1.0) -> tuple[float, float]:
    """Chi-square test with equal-probability bins under the CDF.

    Bin edges are found by inverting the CDF, so every cell has the
    same expected count and the statistic is chi-square with
    ``bins - 1`` degrees of freedom under the null.  Returns
    ``(statistic, p_value)``.  ``lo``/``hi`` seed the inversion
    bracket and need not bound the support.
    """
    x = np.asarray(sample, dtype=np.float64)
    if x.size < 5 * bins:
        raise ValueError("sample too small for the requested bin count")
    qs = np.arange(1, bins) / bins
    edges = np.array([_invert_cdf(cdf, q, lo, hi) for q in qs])
    counts = np.bincount(np.searchsorted(edges, x, side="right"), minlength=bins)
    expected = x.size / bins
    stat = float(((counts - expected) ** 2 / expected).sum())
    df = bins - 1
    return stat, gamma_sf(df / 2.0, stat / 2.0)
