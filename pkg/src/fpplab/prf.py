"""Deterministic edge-weight stream.

Every edge weight in the laboratory is a pure function of
``(seed, replica, edge_code)``, so any subset of edges can be
regenerated at any time, in any order, on any worker, without
storing state.  The stream is defined once and frozen:

* ``uniform(code)`` is word ``code mod 4`` of a Philox-4x64-10
  block at counter ``code // 4 + 1`` under key ``(seed, replica)``.
  The ``+1`` matches numpy's convention of incrementing the counter
  before the first block is produced, which lets bulk generation
  delegate to ``numpy.random.Philox`` while scattered lookups use
  the explicit implementation below.  Bit-for-bit agreement between
  the two routes is pinned in the test suite.
* raw 64-bit words map to [0, 1) doubles as ``(raw >> 11) * 2**-53``.
* the edge weight is ``-log1p(-U)``, a standard-exponential variate,
  evaluated by libm's scalar ``log1p`` (numpy's vectorised kernel
  differs from libm by an ulp on a few percent of inputs, so the
  scalar routine is the canonical one).  ``U == 0`` (probability
  2**-53 per edge) is resolved by re-reading the same word from a
  tweaked counter block offset by ``t * 2**62`` for attempt
  t = 1, 2, ...; edge codes occupy well under 2**40 of the counter
  space, so tweaked blocks never collide with real ones.

Edge codes: the directed edge leaving vertex ``v`` (a bitmask) along
coordinate ``j`` has ``code = v * n + j``.  Codes for absent edges
(bit j already set in v) are never consumed by the engine but are
still well-defined stream positions.
"""

from __future__ import annotations

import math

import numpy as np
from numpy.random import Generator, Philox

# Philox-4x64 round constants (Salmon et al., SC'11).
PHILOX_M0 = 0xD2E7470EE14C6C93
PHILOX_M1 = 0xCA5A826395121157
PHILOX_W0 = 0x9E3779B97F4A7C15
PHILOX_W1 = 0xBB67AE8584CAA73B

_MASK64 = (1 << 64) - 1
_MASK32 = np.uint64(0xFFFFFFFF)
_SHIFT32 = np.uint64(32)
_DOUBLE_SHIFT = np.uint64(11)
_DOUBLE_SCALE = 2.0 ** -53

# Counter offset per zero-rejection attempt.  Far above any edge code.
TWEAK_STRIDE = 1 << 62


def key_schedule(seed: int, replica: int) -> np.ndarray:
    """Round keys for Philox under key ``(seed, replica)``.

    Returns a (10, 2) uint64 array; row r holds the pair added in
    round r.  Computed in exact integer arithmetic.
    """
    if not 0 <= seed <= _MASK64:
        raise ValueError(f"seed must fit in uint64, got {seed}")
    if not 0 <= replica <= _MASK64:
        raise ValueError(f"replica must fit in uint64, got {replica}")
    ks = np.empty((10, 2), dtype=np.uint64)
    k0, k1 = seed, replica
    for r in range(10):
        ks[r, 0] = k0
        ks[r, 1] = k1
        k0 = (k0 + PHILOX_W0) & _MASK64
        k1 = (k1 + PHILOX_W1) & _MASK64
    return ks


def _mulhilo(a: np.ndarray, m: int) -> tuple[np.ndarray, np.ndarray]:
    """128-bit product of uint64 array ``a`` with constant ``m``.

    Split 32/32 so only 64-bit products occur; matches the reference
    mulhilo exactly.
    """
    mlo = np.uint64(m & 0xFFFFFFFF)
    mhi = np.uint64(m >> 32)
    alo = a & _MASK32
    ahi = a >> _SHIFT32
    t = ahi * mlo + ((alo * mlo) >> _SHIFT32)
    hi = ahi * mhi + (t >> _SHIFT32) + ((alo * mhi + (t & _MASK32)) >> _SHIFT32)
    lo = a * np.uint64(m)
    return hi, lo


def philox_block(c0: np.ndarray, ks: np.ndarray) -> tuple[np.ndarray, ...]:
    """Philox-4x64-10 on counters ``(c0, 0, 0, 0)``.

    Vectorised over ``c0``; returns the four output words as uint64
    arrays of the same shape.  Counters with nonzero upper words never
    arise here (codes and tweaks both live in the low word).
    """
    c0 = np.ascontiguousarray(c0, dtype=np.uint64)
    x0 = c0.copy()
    x1 = np.zeros_like(c0)
    x2 = np.zeros_like(c0)
    x3 = np.zeros_like(c0)
    for r in range(10):
        hi0, lo0 = _mulhilo(x0, PHILOX_M0)
        hi1, lo1 = _mulhilo(x2, PHILOX_M1)
        x0 = hi1 ^ x1 ^ ks[r, 0]
        x1 = lo1
        x2 = hi0 ^ x3 ^ ks[r, 1]
        x3 = lo0
    return x0, x1, x2, x3


def _raw_words(codes: np.ndarray, ks: np.ndarray, tweak: int = 0) -> np.ndarray:
    """Raw uint64 stream words at the given codes (one block per code)."""
    codes = np.asarray(codes, dtype=np.uint64)
    c0 = (codes >> np.uint64(2)) + np.uint64(1)
    if tweak:
        c0 = c0 + np.uint64((tweak * TWEAK_STRIDE) & _MASK64)
    w = philox_block(c0, ks)
    word = codes & np.uint64(3)
    out = w[0].copy()
    for i in (1, 2, 3):
        np.copyto(out, w[i], where=(word == i))
    return out


def _to_unit(raw: np.ndarray) -> np.ndarray:
    return (raw >> _DOUBLE_SHIFT).astype(np.float64) * _DOUBLE_SCALE


def _fix_zeros(u: np.ndarray, codes: np.ndarray, ks: np.ndarray) -> None:
    """Replace exact-zero uniforms in place via tweaked re-reads."""
    idx = np.flatnonzero(u == 0.0)
    tweak = 1
    while idx.size:
        u[idx] = _to_unit(_raw_words(codes[idx], ks, tweak))
        idx = idx[u[idx] == 0.0]
        tweak += 1


def uniforms_at(seed: int, replica: int, codes) -> np.ndarray:
    """Stream uniforms at arbitrary codes (scattered access)."""
    codes = np.atleast_1d(np.asarray(codes, dtype=np.uint64))
    ks = key_schedule(seed, replica)
    u = _to_unit(_raw_words(codes, ks))
    _fix_zeros(u, codes, ks)
    return u


def uniform_range(seed: int, replica: int, start: int, count: int) -> np.ndarray:
    """Stream uniforms at codes ``start, ..., start + count - 1``.

    Bulk path: delegates block generation to numpy's Philox bit
    generator, then applies the same zero-rejection fix-up as the
    scattered path.
    """
    if count < 0:
        raise ValueError("count must be nonnegative")
    if count == 0:
        return np.empty(0, dtype=np.float64)
    pre = start & 3
    bg = Philox(
        key=np.array([seed, replica], dtype=np.uint64),
        counter=np.array([start >> 2, 0, 0, 0], dtype=np.uint64),
    )
    u = Generator(bg).random(pre + count)
    if pre:
        u = u[pre:]
    zeros = np.flatnonzero(u == 0.0)
    if zeros.size:
        codes = np.asarray(start, dtype=np.uint64) + zeros.astype(np.uint64)
        ks = key_schedule(seed, replica)
        _fix_zeros(u, codes, ks)
    return u


_log1p_elementwise = np.frompyfunc(math.log1p, 1, 1)


def weights_from_uniforms(u: np.ndarray) -> np.ndarray:
    """Standard-exponential transform, exact for the frozen stream.

    Element-by-element libm evaluation; the jitted kernels reproduce
    it bit for bit.
    """
    u = np.asarray(u, dtype=np.float64)
    return -(_log1p_elementwise(-u).astype(np.float64))


def edge_weights_at(seed: int, replica: int, codes) -> np.ndarray:
    """Exponential edge weights at arbitrary codes."""
    return weights_from_uniforms(uniforms_at(seed, replica, codes))


def weight_table(seed: int, replica: int, n: int) -> np.ndarray:
    """All ``2**n * n`` edge weights as a flat array indexed by code.

    Entries at invalid codes (direction bit already set in the tail
    vertex) are well-defined but never read by the engine.
    """
    total = (1 << n) * n
    u = uniform_range(seed, replica, 0, total)
    return weights_from_uniforms(u)
