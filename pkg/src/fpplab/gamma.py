"""Gamma tail probabilities and the exact point-process intensity.

The number of paths with centred weight below a threshold has mean
``n! * P(Gamma_n <= 1 + a/n)``, where P is the regularized lower
incomplete gamma function.  For n of interest (up to ~28) the factor
``n!`` is astronomically large while the CDF is astronomically small,
so the product must be formed symbolically:

    n! * P(n, x) = exp(-x) * x**n * (1 + K(n, x)),
    K(n, x) = sum_{j>=1} x**j / ((n+1)(n+2)...(n+j)),

which is a sum of positive, rapidly decaying terms whenever x is not
large compared to n.  ``scaled_gamma_cdf`` implements this form; the
plain CDF uses the classic series / continued-fraction split.
"""

from __future__ import annotations

import math

import numpy as np

# Termination threshold for the series and continued fractions.
_EPS = 1e-14
_MAX_ITER = 2000


def _lower_series(shape: float, x: float) -> float:
    """Regularized lower incomplete gamma via its power series.

    Accurate for x < shape + 1.
    """
    if x <= 0.0:
        return 0.0
    ax = shape * math.log(x) - x - math.lgamma(shape)
    if ax < -709.0:
        return 0.0
    ax = math.exp(ax)
    r = shape
    c = 1.0
    ans = 1.0
    for _ in range(_MAX_ITER):
        r += 1.0
        c *= x / r
        ans += c
        if c <= ans * _EPS:
            break
    return ans * ax / shape


def _upper_cf(shape: float, x: float) -> float:
    """Regularized upper incomplete gamma via a continued fraction.

    Accurate for x >= shape + 1.  Modified Lentz evaluation.
    """
    ax = shape * math.log(x) - x - math.lgamma(shape)
    if ax < -709.0:
        return 0.0
    ax = math.exp(ax)
    tiny = 1e-300
    b = x + 1.0 - shape
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_ITER):
        an = -i * (i - shape)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    return ax * h


def _gamma_cdf_scalar(shape: float, x: float) -> float:
    if shape <= 0.0:
        raise ValueError(f"shape must be positive, got {shape}")
    if x <= 0.0:
        return 0.0
    if x < shape + 1.0:
        return _lower_series(shape, x)
    return 1.0 - _upper_cf(shape, x)


def _gamma_sf_scalar(shape: float, x: float) -> float:
    if shape <= 0.0:
        raise ValueError(f"shape must be positive, got {shape}")
    if x <= 0.0:
        return 1.0
    if x >= shape + 1.0:
        return _upper_cf(shape, x)
    return 1.0 - _lower_series(shape, x)


def gamma_cdf(shape: float, x) -> float | np.ndarray:
    """P(Gamma(shape) <= x), vectorised over x."""
    if np.isscalar(x):
        return _gamma_cdf_scalar(float(shape), float(x))
    xs = np.asarray(x, dtype=np.float64)
    out = np.empty(xs.shape, dtype=np.float64)
    flat_in = xs.ravel()
    flat_out = out.ravel()
    for i in range(flat_in.size):
        flat_out[i] = _gamma_cdf_scalar(float(shape), float(flat_in[i]))
    return out


def gamma_sf(shape: float, x) -> float | np.ndarray:
    """P(Gamma(shape) > x), computed without cancellation in either tail."""
    if np.isscalar(x):
        return _gamma_sf_scalar(float(shape), float(x))
    xs = np.asarray(x, dtype=np.float64)
    out = np.empty(xs.shape, dtype=np.float64)
    flat_in = xs.ravel()
    flat_out = out.ravel()
    for i in range(flat_in.size):
        flat_out[i] = _gamma_sf_scalar(float(shape), float(flat_in[i]))
    return out


def _scaled_scalar(m: int, x: float) -> float:
    if x <= 0.0:
        return 0.0
    if x >= m + 1.0:
        # No cancellation risk: the CDF is order one here.
        return math.factorial(m) * _gamma_cdf_scalar(float(m), x)
    # exp(-x) * x**m can underflow for large m even though the final
    # quantity is representable; assemble in log space when needed.
    log_lead = m * math.log(x) - x
    tail = 1.0
    term = 1.0
    for j in range(1, _MAX_ITER):
        term *= x / (m + j)
        tail += term
        if term <= tail * _EPS:
            break
    if log_lead < -700.0:
        return math.exp(log_lead + math.log(tail))
    return math.exp(log_lead) * tail


def scaled_gamma_cdf(m: int, x) -> float | np.ndarray:
    """``m! * P(Gamma(m) <= x)`` without forming either factor.

    This is the expected number of standard-exponential m-sums that
    land below x, per unit of the m! combinatorial volume; it stays
    order-one for x near 1 even when m! overflows.  Vectorised over
    x; the series route covers x < m + 1 and the rest (rare in this
    laboratory) falls back to the plain CDF times m!.
    """
    m = int(m)
    if m < 1:
        raise ValueError(f"m must be a positive integer, got {m}")
    if np.isscalar(x):
        return _scaled_scalar(m, float(x))
    xs = np.asarray(x, dtype=np.float64)
    out = np.zeros(xs.shape, dtype=np.float64)
    series = (xs > 0.0) & (xs < m + 1.0)
    if series.any():
        xv = xs[series]
        tail = np.ones_like(xv)
        term = np.ones_like(xv)
        for j in range(1, _MAX_ITER):
            term = term * (xv / (m + j))
            tail += term
            if term.max() <= _EPS:
                break
        with np.errstate(divide="ignore"):
            log_lead = m * np.log(xv) - xv
        out[series] = np.exp(log_lead + np.log(tail))
    big = xs >= m + 1.0
    if big.any():
        fact = math.factorial(m)
        out[big] = [fact * _gamma_cdf_scalar(float(m), float(v)) for v in xs[big]]
    return out


def gamma_cdf_int_vec(m: int, x: np.ndarray) -> np.ndarray:
    """P(Gamma(m) <= x) for integer shape, vectorised over x.

    Complement of the Poisson partial sum: 1 - e^-x sum_{k<m} x^k/k!.
    Absolute error is machine-level; relative error degrades in the
    deep lower tail, which the conditional-moment sums tolerate.
    """
    m = int(m)
    if m < 0:
        raise ValueError(f"m must be >= 0, got {m}")
    xs = np.asarray(x, dtype=np.float64)
    if m == 0:
        return (xs >= 0.0).astype(np.float64)
    pos = np.clip(xs, 0.0, None)
    term = np.ones_like(pos)
    acc = np.ones_like(pos)
    for k in range(1, m):
        term = term * (pos / k)
        acc += term
    out = 1.0 - np.exp(-pos) * acc
    out[xs <= 0.0] = 0.0
    return np.clip(out, 0.0, 1.0)


def exact_intensity(n: int, a: float) -> float:
    """Expected number of paths with weight at most ``1 + a/n``.

    Equals ``n! * P(Gamma_n <= 1 + a/n)`` and converges to
    ``exp(a - 1)`` as n grows, with relative gap at most
    ``x * exp(x) / (n + 1)`` at ``x = 1 + a/n``.
    """
    x = 1.0 + a / n
    if x <= 0.0:
        return 0.0
    return _scaled_scalar(int(n), x)


def poisson_pmf_table(lam: float, kmax: int) -> np.ndarray:
    """P(Poisson(lam) = k) for k = 0..kmax, by stable upward recursion."""
    if lam < 0.0:
        raise ValueError("lam must be nonnegative")
    out = np.zeros(kmax + 1, dtype=np.float64)
    if lam == 0.0:
        out[0] = 1.0
        return out
    # Start at the mode in log space to avoid underflow for large lam.
    log_p0 = -lam
    if log_p0 > -700.0:
        p = math.exp(log_p0)
        for k in range(kmax + 1):
            out[k] = p
            p *= lam / (k + 1)
        return out
    for k in range(kmax + 1):
        lp = k * math.log(lam) - lam - math.lgamma(k + 1.0)
        out[k] = math.exp(lp) if lp > -745.0 else 0.0
    return out


def poisson_tail(lam: float, k: int) -> float:
    """P(Poisson(lam) >= k), via the gamma identity.

    The event that at least k points of a unit-rate process arrive by
    time lam is the event that the k-th arrival time is at most lam.
    """
    if k <= 0:
        return 1.0
    return _gamma_cdf_scalar(float(k), float(lam))
