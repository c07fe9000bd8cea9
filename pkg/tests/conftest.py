"""Shared oracles for the test suite.

The exhaustive helpers recompute everything from first principles on
top of the weight table: all n! permutation paths, totals accumulated
last edge first (the package's canonical order), minima and
sub-threshold counts by direct comparison.
"""

import itertools
import math

import numpy as np
import pytest

from fpplab.core import HypercubeInstance, WeightField


def suffix_total(weights) -> float:
    acc = 0.0
    for w in reversed(list(weights)):
        acc = float(w) + acc
    return acc


def brute_path_totals(table: np.ndarray, n: int) -> np.ndarray:
    """Totals of all n! paths in lexicographic permutation order."""
    out = np.empty(math.factorial(n))
    for i, perm in enumerate(itertools.permutations(range(n))):
        tail = 0
        ws = []
        for d in perm:
            ws.append(table[tail * n + d])
            tail |= 1 << d
        out[i] = suffix_total(ws)
    return out


def brute_min(table: np.ndarray, n: int) -> float:
    return float(brute_path_totals(table, n).min())


def brute_count_below(table: np.ndarray, n: int, thr: float) -> int:
    # Inclusive, like the production enumerator.
    return int((brute_path_totals(table, n) <= thr).sum())


@pytest.fixture(scope="session")
def field6() -> WeightField:
    f = WeightField(HypercubeInstance(6, 424242, 0))
    f.table()
    return f
