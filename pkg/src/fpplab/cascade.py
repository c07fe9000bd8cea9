"""Exponential-weight cascades on Poisson trees.

A cascade of depth r is built from a tree in which every node's
children carry the points of an independent unit-rate Poisson process
on (0, inf), added to the parent's cumulative sum; the cascade value
is ``Z_r = sum over depth-r leaves of exp(-cum)``.  Then E Z_r = 1,
E Z_r^2 = 2 - 2^-r, and Z_r converges to a standard exponential,
the unique fixed point of the smoothing map

    T: X |-> sum_i exp(-eta_i) X_i,   (eta_i) a unit Poisson process,

which contracts Wasserstein-2 distances by 1/sqrt(2) per step.

Sampling truncates the tree at cumulative sum ``s_max``.  Each kept
internal node's pruned children contribute conditional mean
``exp(-s_max)`` (unit-rate points beyond the cut, times subtree mean
one), so adding that constant per kept internal node makes the
sampled mean exactly unbiased at any cutoff; only higher moments feel
the truncation, with distortion variance of order
``2 exp(-s_max) P(Gamma_r > s_max)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.random import Generator, Philox

from .gamma import gamma_sf

# Second key word tags for the auxiliary sample streams, keeping them
# disjoint from edge-weight replica streams under the same seed.
STREAM_CASCADE = 1 << 48
STREAM_MIXING = 2 << 48
STREAM_CONTRACTION = 3 << 48

_CHUNK = 2048


@dataclass(frozen=True)
class CascadeParams:
    """Sampling configuration: tree depth and cumulative-sum cutoff."""

    depth: int
    s_max: float = 25.0

    def __post_init__(self) -> None:
        if self.depth < 0:
            raise ValueError(f"depth must be >= 0, got {self.depth}")
        if not self.s_max > 0.0:
            raise ValueError(f"s_max must be positive, got {self.s_max}")


def truncated_mass(params: CascadeParams) -> float:
    """Expected leaf mass lost to the cutoff (before compensation).

    A leaf survives iff its cumulative sum, a Gamma(depth) variate
    under the mean measure, stays at or below the cutoff; the lost
    mean is P(Gamma_depth > s_max).
    """
    if params.depth == 0:
        return 0.0
    return float(gamma_sf(params.depth, params.s_max))


def second_moment(depth: int) -> float:
    """E Z_r^2 = 2 - 2^-r, exact at every depth."""
    return 2.0 - 0.5 ** depth


def _stream_rng(seed: int, tag: int, block: int) -> Generator:
    return Generator(Philox(key=np.array([seed, tag | block], dtype=np.uint64)))


def _cascade_chunk(depth: int, s_max: float, rng: Generator, m: int) -> np.ndarray:
    """Mean-compensated cascade samples, vectorised across one chunk."""
    comp = math.exp(-s_max)
    z = np.zeros(m, dtype=np.float64)
    if depth == 0:
        z[:] = 1.0
        return z
    owner = np.arange(m, dtype=np.int64)
    cum = np.zeros(m, dtype=np.float64)
    for _ in range(depth):
        # Every currently live node is internal: compensate its cut.
        z += comp * np.bincount(owner, minlength=m)
        span = s_max - cum
        k = rng.poisson(span)
        total = int(k.sum())
        par = np.repeat(np.arange(cum.size, dtype=np.int64), k)
        cum = cum[par] + rng.random(total) * span[par]
        owner = owner[par]
    z += np.bincount(owner, weights=np.exp(-cum), minlength=m)
    return z


def _cascade_worker(job: tuple[int, int, int, float, int]) -> tuple[int, np.ndarray]:
    # Module-level so it survives the multiprocessing pickle boundary.
    idx, m, depth, s_max, seed = job
    rng = _stream_rng(seed, STREAM_CASCADE, idx)
    return idx, _cascade_chunk(depth, s_max, rng, m)


def sample_cascade(
    params: CascadeParams, size: int, seed: int, *, workers: int = 1
) -> np.ndarray:
    """Draw ``size`` cascade values; a pure function of (params, seed).

    Samples are produced in fixed chunks with per-chunk streams, so
    the result is independent of ``workers`` and of batching.
    """
    jobs = [
        (i, min(_CHUNK, size - i * _CHUNK), params.depth, params.s_max, seed)
        for i in range((size + _CHUNK - 1) // _CHUNK)
    ]
    parts = [None] * len(jobs)
    if workers <= 1 or len(jobs) <= 1:
        results = [_cascade_worker(j) for j in jobs]
    else:
        import multiprocessing as mp

        with mp.get_context("fork").Pool(processes=workers) as pool:
            results = pool.map(_cascade_worker, jobs)
    for idx, arr in results:
        parts[idx] = arr
    return np.concatenate(parts) if parts else np.empty(0)


def sample_mixing(size: int, seed: int) -> np.ndarray:
    """Products of two independent standard exponentials.

    This is the mixing variable of the limiting Cox intensity, the
    depth-to-infinity analogue of a product of two cascades.
    """
    out = np.empty(size, dtype=np.float64)
    for i in range((size + _CHUNK - 1) // _CHUNK):
        m = min(_CHUNK, size - i * _CHUNK)
        rng = _stream_rng(seed, STREAM_MIXING, i)
        e = rng.standard_exponential(2 * m)
        out[i * _CHUNK : i * _CHUNK + m] = e[:m] * e[m:]
    return out


def apply_smoothing(
    pool: np.ndarray, rng: Generator, size: int, *, s_max: float = 25.0
) -> np.ndarray:
    """One bootstrap step of the smoothing map T.

    Children beyond ``s_max`` are cut and replaced by their exact
    conditional mean contribution ``exp(-s_max) * mean(pool)``, so
    the sampled mean is preserved; resampling from the pool adds
    O(1/len(pool)) dependence, harmless for distributional studies.
    """
    k = rng.poisson(s_max, size)
    total = int(k.sum())
    par = np.repeat(np.arange(size, dtype=np.int64), k)
    eta = rng.random(total) * s_max
    idx = rng.integers(0, pool.size, total)
    vals = np.exp(-eta) * pool[idx]
    out = np.bincount(par, weights=vals, minlength=size)
    return out + math.exp(-s_max) * float(pool.mean())


def w2_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Empirical Wasserstein-2 distance between equal-size samples."""
    a = np.sort(np.asarray(a, dtype=np.float64))
    b = np.sort(np.asarray(b, dtype=np.float64))
    if a.size != b.size:
        raise ValueError("w2_distance needs equal sample sizes")
    return float(np.sqrt(np.mean((a - b) ** 2)))


def contraction_trace(
    pool_a: np.ndarray,
    pool_b: np.ndarray,
    seed: int,
    steps: int,
    *,
    s_max: float = 25.0,
) -> np.ndarray:
    """Coupled smoothing iterations; returns W2 after 0..steps steps.

    Both pools evolve under identical Poisson counts, identical decay
    points, and rank-matched resampling (same indices into the sorted
    pools), the comonotone coupling that keeps the per-step distance
    ratio near its theoretical contraction factor.
    """
    a = np.asarray(pool_a, dtype=np.float64).copy()
    b = np.asarray(pool_b, dtype=np.float64).copy()
    if a.size != b.size:
        raise ValueError("pools must have equal size")
    size = a.size
    rng = _stream_rng(seed, STREAM_CONTRACTION, 0)
    comp = math.exp(-s_max)
    w2 = np.empty(steps + 1, dtype=np.float64)
    w2[0] = w2_distance(a, b)
    for step in range(1, steps + 1):
        a_sorted = np.sort(a)
        b_sorted = np.sort(b)
        k = rng.poisson(s_max, size)
        total = int(k.sum())
        par = np.repeat(np.arange(size, dtype=np.int64), k)
        eta = rng.random(total) * s_max
        idx = rng.integers(0, size, total)
        decay = np.exp(-eta)
        a = np.bincount(par, weights=decay * a_sorted[idx], minlength=size)
        a += comp * float(a_sorted.mean())
        b = np.bincount(par, weights=decay * b_sorted[idx], minlength=size)
        b += comp * float(b_sorted.mean())
        w2[step] = w2_distance(a, b)
    return w2


def laplace_recursion(
    depth: int, *, t_max: float = 8.0, grid: int = 8192
) -> tuple[np.ndarray, np.ndarray]:
    """Laplace transforms of Z_0..Z_depth on a uniform t-grid.

    The transform obeys psi_{r+1}(t) = exp( int_0^t (psi_r(u)-1)/u du )
    with psi_0(t) = e^-t; the integral is accumulated by composite
    Simpson panels (the integrand extends continuously to -1 at u=0,
    since every cascade has mean one).  Returns (ts, psi) with psi of
    shape (depth+1, grid+1).
    """
    if grid % 2:
        raise ValueError("grid must be even")
    ts = np.linspace(0.0, t_max, grid + 1)
    h = t_max / grid
    psi = np.empty((depth + 1, grid + 1), dtype=np.float64)
    psi[0] = np.exp(-ts)
    for r in range(depth):
        g = np.empty(grid + 1, dtype=np.float64)
        g[0] = -1.0
        g[1:] = (psi[r][1:] - 1.0) / ts[1:]
        acc = np.empty(grid + 1, dtype=np.float64)
        acc[0] = 0.0
        # Even nodes close Simpson pairs; odd nodes add the half-panel
        # parabolic rule from the even anchor just behind them.
        acc[1] = (h / 12.0) * (5.0 * g[0] + 8.0 * g[1] - g[2])
        for i in range(2, grid + 1):
            if i % 2 == 0:
                acc[i] = acc[i - 2] + (h / 3.0) * (g[i - 2] + 4.0 * g[i - 1] + g[i])
            else:
                acc[i] = acc[i - 1] + (h / 12.0) * (
                    -g[i - 2] + 8.0 * g[i - 1] + 5.0 * g[i]
                )
        psi[r + 1] = np.exp(acc)
    return ts, psi


def fixed_point_laplace(t) -> np.ndarray:
    """Laplace transform of the standard exponential fixed point."""
    ts = np.asarray(t, dtype=np.float64)
    return 1.0 / (1.0 + ts)
