"""Overlap combinatorics of oriented hypercube paths.

Two permutation paths share the edge at step j+1 (0-based position j)
iff they agree there and their first j directions form the same set.
Against the identity path, a permutation p shares position j iff
``p[j] == j`` and ``max(p[:j]) < j``: the prefix must be a permutation
of 0..j-1 for the prefix sets to match.

The census f(n, k) counts permutations sharing exactly k edges with
the identity (equivalently, with any fixed path, by relabelling).
Its middle-restricted variant keeps the same k but admits only
permutations with at least one shared position j in [r, n-r-1], the
overlap notion driving the dependency graph of the second-moment and
Chen-Stein machinery.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from .core import CapacityError

# 11! permutation tables would need ~4.4 GB; enumeration stops here.
CENSUS_MAX_N = 10


def _perm_matrix(n: int) -> np.ndarray:
    if n > CENSUS_MAX_N:
        raise CapacityError(f"path census needs n <= {CENSUS_MAX_N}, got {n}")
    out = np.fromiter(
        itertools.chain.from_iterable(itertools.permutations(range(n))),
        dtype=np.int8,
        count=math.factorial(n) * n,
    )
    return out.reshape(-1, n)


def shared_position_matrix(perms: np.ndarray) -> np.ndarray:
    """Boolean matrix: row p, column j marks a shared edge at j.

    Vectorised form of the prefix-maximum rule above.
    """
    perms = np.asarray(perms)
    n = perms.shape[1]
    fixed = perms == np.arange(n, dtype=perms.dtype)
    if n == 1:
        return fixed
    prefmax = np.maximum.accumulate(perms, axis=1)
    ok = np.empty_like(fixed)
    ok[:, 0] = True
    ok[:, 1:] = prefmax[:, :-1] < np.arange(1, n, dtype=perms.dtype)
    return fixed & ok


def overlap_census(n: int) -> np.ndarray:
    """f(n, k): permutations sharing exactly k edges with a path.

    Returns an array of length n + 1 summing to n!; the identity
    sits in f[n], and f[n-1] = 0 because fixing all but one position
    fixes the last as well.
    """
    perms = _perm_matrix(n)
    shared = shared_position_matrix(perms)
    k = shared.sum(axis=1, dtype=np.int64)
    return np.bincount(k, minlength=n + 1)


def middle_census(n: int, r: int) -> np.ndarray:
    """f(n, k, r): the census restricted to middle-overlapping pairs.

    Counts permutations sharing exactly k edges in total and at
    least one at a position in [r, n-r-1], where both endpoints sit
    at least r steps from the corners.  With r = 0 this keeps every
    permutation with a shared edge, so f_0[k] = f[k] for k >= 1 and
    f_0[0] = 0.
    """
    if r < 0 or 2 * r >= n:
        raise ValueError(f"need 0 <= 2r < n, got r={r}, n={n}")
    perms = _perm_matrix(n)
    shared = shared_position_matrix(perms)
    k = shared.sum(axis=1, dtype=np.int64)
    mid = shared[:, r : n - r].any(axis=1)
    return np.bincount(k[mid], minlength=n + 1)


def overlap_upper_bound(n: int, k: int) -> float:
    """Crude census bound f(n, k) <= n^6 (n - k)!.

    Loose but uniform in k; useful only as an order-of-magnitude
    sanity rail for the enumerated values.
    """
    if not 0 <= k <= n:
        raise ValueError(f"need 0 <= k <= n")
    return float(n) ** 6 * math.factorial(n - k)


def middle_overlap_bound(n: int, r: int) -> float:
    """Bound on permutations sharing at least one middle edge.

    A shared position j pins p[j] = j and makes p[:j] a permutation
    of 0..j-1: at most j!(n-1-j)! <= r!(n-1-r)! permutations each for
    j in [r, n-r-1], and at most n positions, giving
    sum_k>=1 f_r(n, k) <= n r! (n-1-r)!.
    """
    if r < 0 or 2 * r > n:
        raise ValueError(f"need 0 <= r <= n/2")
    return float(n) * math.factorial(r) * math.factorial(n - 1 - r)


def shared_pattern_count(n: int, positions) -> int:
    """Permutations whose shared positions match ``positions`` exactly.

    ``positions`` is a set of 0-indexed shared-edge slots against the
    identity path.
    """
    perms = _perm_matrix(n)
    shared = shared_position_matrix(perms)
    want = np.zeros(n, dtype=bool)
    if len(positions):
        want[np.asarray(sorted(positions), dtype=np.int64)] = True
    return int((shared == want).all(axis=1).sum())


def gap_factorial_bound(n: int, positions) -> int:
    """Product of (gap - 1)! over the runs between shared positions.

    Between consecutive shared edges the permutation must permute the
    intervening values among themselves, giving at most (s - 1)!
    choices per run of length s; the product dominates the exact
    pattern count.
    """
    u = [0] + [p + 1 for p in sorted(positions)] + [n + 1]
    out = 1
    for lo, hi in zip(u, u[1:]):
        if hi - lo < 1:
            raise ValueError("positions must be distinct and within range")
        out *= math.factorial(hi - lo - 1)
    return out


def g_function(gamma) -> np.ndarray | float:
    """The overlap exponent profile g on [0, 1].

        g(y) = (4 (1 - y))^(1 - y) / (2 - y)^(2 - y)

    with the endpoint values taken as limits: g(0) = 1, g(1) = 1.
    It dips to 3/4 at y = 2/3, stays below (3/4)^y on [0, 2/3], and
    climbs back on [2/3, 1).
    """
    ys = np.asarray(gamma, dtype=np.float64)
    if np.any((ys < 0.0) | (ys > 1.0)):
        raise ValueError("g_function is defined on [0, 1]")
    one = 1.0 - ys
    two = 2.0 - ys
    with np.errstate(divide="ignore", invalid="ignore"):
        log_g = one * (np.log(4.0) + np.log(one)) - two * np.log(two)
    out = np.exp(log_g)
    out = np.where(ys == 1.0, 1.0, out)
    if np.isscalar(gamma):
        return float(out)
    return out


def brute_shared_count(p, q) -> int:
    """Reference overlap count via explicit edge sets (tests, small n)."""
    def edges(perm):
        mask = 0
        out = []
        for d in perm:
            out.append((mask, d))
            mask |= 1 << d
        return set(out)

    return len(edges(p) & edges(q))
