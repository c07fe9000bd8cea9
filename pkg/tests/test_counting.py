"""Census and overlap-bound checks against brute-force enumeration.

The shared-position matrix is the production route; every test here
recomputes overlaps from explicit edge sets or from scratch counting,
so the two never share code.
"""

import itertools
import math

import numpy as np
import pytest

from fpplab.core import CapacityError
from fpplab.counting import (
    CENSUS_MAX_N,
    brute_shared_count,
    g_function,
    gap_factorial_bound,
    middle_census,
    middle_overlap_bound,
    overlap_census,
    overlap_upper_bound,
    shared_pattern_count,
    shared_position_matrix,
)


def brute_census(n):
    out = np.zeros(n + 1, dtype=np.int64)
    ident = list(range(n))
    for q in itertools.permutations(range(n)):
        out[brute_shared_count(ident, q)] += 1
    return out


def test_shared_position_matrix_vs_edge_sets():
    for n in (2, 3, 5, 6):
        perms = np.array(list(itertools.permutations(range(n))), dtype=np.int8)
        mat = shared_position_matrix(perms)
        ident = list(range(n))
        for row, q in zip(mat, itertools.permutations(range(n))):
            assert int(row.sum()) == brute_shared_count(ident, q)


def test_census_small_values():
    np.testing.assert_array_equal(overlap_census(3), [3, 2, 0, 1])
    np.testing.assert_array_equal(overlap_census(2), [1, 0, 1])
    np.testing.assert_array_equal(overlap_census(1), [0, 1])


@pytest.mark.parametrize("n", range(2, 8))
def test_census_against_brute_force(n):
    np.testing.assert_array_equal(overlap_census(n), brute_census(n))


@pytest.mark.parametrize("n", range(2, 10))
def test_census_invariants(n):
    f = overlap_census(n)
    assert f.sum() == math.factorial(n)
    assert f[n] == 1  # only the path itself shares everything
    assert f[n - 1] == 0  # n-1 shared edges force the n-th


def test_census_capacity():
    with pytest.raises(CapacityError):
        overlap_census(CENSUS_MAX_N + 1)


def test_middle_census_r0_recovers_full():
    for n in (3, 5, 7):
        f = overlap_census(n)
        f0 = middle_census(n, 0)
        assert f0[0] == 0
        np.testing.assert_array_equal(f0[1:], f[1:])


def test_middle_census_brute():
    # Re-derive from explicit edge positions: a permutation is counted
    # when some shared slot falls in [r, n-r-1].
    for n, r in [(5, 1), (6, 2), (7, 1)]:
        perms = np.array(list(itertools.permutations(range(n))), dtype=np.int8)
        mat = shared_position_matrix(perms)
        want = np.zeros(n + 1, dtype=np.int64)
        for row in mat:
            k = int(row.sum())
            if row[r : n - r].any():
                want[k] += 1
        np.testing.assert_array_equal(middle_census(n, r), want)


def test_middle_census_dominated_by_full():
    for n, r in [(6, 1), (8, 2), (9, 3)]:
        assert np.all(middle_census(n, r) <= overlap_census(n))


def test_middle_census_validation():
    with pytest.raises(ValueError):
        middle_census(6, -1)
    with pytest.raises(ValueError):
        middle_census(6, 3)


@pytest.mark.parametrize("n", range(5, 10))
@pytest.mark.parametrize("r", [1, 2])
def test_middle_mass_bound(n, r):
    total = middle_census(n, r).sum()
    assert total <= middle_overlap_bound(n, r)


@pytest.mark.parametrize("n", range(3, 10))
def test_crude_bound_dominates(n):
    f = overlap_census(n)
    for k in range(n + 1):
        assert f[k] <= overlap_upper_bound(n, k)


def test_pattern_counts_partition():
    n = 6
    total = 0
    for size in range(n + 1):
        for pos in itertools.combinations(range(n), size):
            total += shared_pattern_count(n, pos)
    assert total == math.factorial(n)


def test_pattern_count_matches_census():
    n = 6
    f = overlap_census(n)
    for k in range(n + 1):
        s = sum(
            shared_pattern_count(n, pos)
            for pos in itertools.combinations(range(n), k)
        )
        assert s == f[k]


def test_gap_factorial_dominates_pattern():
    rng = np.random.default_rng(17)
    n = 7
    for _ in range(60):
        size = int(rng.integers(0, n + 1))
        pos = sorted(rng.choice(n, size=size, replace=False).tolist())
        assert shared_pattern_count(n, pos) <= gap_factorial_bound(n, pos)


def test_gap_factorial_examples():
    # No shared slots: one run of length n+1, bound n!.
    assert gap_factorial_bound(5, []) == math.factorial(5)
    # All slots shared: every run has length 1.
    assert gap_factorial_bound(5, range(5)) == 1
    with pytest.raises(ValueError):
        gap_factorial_bound(5, [2, 2])


def test_gap_factorial_middle_bound_link():
    # A single shared slot at j gives j!(n-1-j)!; maximised over the
    # middle window this is the per-position factor of the mass bound.
    n, r = 9, 2
    worst = max(
        gap_factorial_bound(n, [j]) for j in range(r, n - r)
    )
    assert worst == math.factorial(r) * math.factorial(n - r - 1)


def test_g_function_values():
    assert g_function(0.0) == pytest.approx(1.0, abs=1e-15)
    assert g_function(1.0) == 1.0
    assert g_function(2.0 / 3.0) == pytest.approx(0.75, abs=1e-14)


def test_g_function_dominance_and_shape():
    ys = np.linspace(0.0, 2.0 / 3.0, 301)
    assert np.all(g_function(ys) <= 0.75**ys + 1e-12)
    ys2 = np.linspace(2.0 / 3.0, 0.999, 300)
    vals = g_function(ys2)
    assert np.all(np.diff(vals) >= -1e-12)
    with pytest.raises(ValueError):
        g_function(1.5)
    with pytest.raises(ValueError):
        g_function(-0.1)
