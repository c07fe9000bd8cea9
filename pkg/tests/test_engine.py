"""Optimum/enumeration engine against exhaustive path oracles."""

import itertools
import math

import numpy as np
import pytest

from conftest import brute_count_below, brute_min, brute_path_totals, suffix_total
from fpplab.core import CapacityError, HypercubeInstance, PathPerm, WeightField
from fpplab.engine import (
    HAVE_FAST,
    ExtremalSet,
    count_extremal,
    extremal_paths,
    first_passage_time,
    simulate_batch,
    suffix_min_table,
)


@pytest.mark.parametrize("n,seed", [(1, 3), (2, 9), (3, 40), (5, 7), (6, 11), (8, 123)])
def test_first_passage_matches_brute_force(n, seed):
    inst = HypercubeInstance(n, seed, 0)
    table = WeightField(inst).table()
    assert first_passage_time(inst) == brute_min(table, n)


def test_suffix_min_table_invariant(field6):
    inst = field6.instance
    n = inst.n
    h = suffix_min_table(inst)
    table = field6.table()
    assert h[(1 << n) - 1] == 0.0
    assert h[0] == first_passage_time(inst)
    # Bellman consistency at every vertex, in the canonical order
    # (edge weight + tail minimum, no re-association).
    for v in range(1 << n):
        legal = [d for d in range(n) if not v >> d & 1]
        if not legal:
            continue
        best = min(table[v * n + d] + h[v | 1 << d] for d in legal)
        assert h[v] == best


@pytest.mark.parametrize("a", [-1.0, 0.0, 1.0, 4.0, 6.0])
def test_enumeration_matches_brute_force(field6, a):
    inst = field6.instance
    n = inst.n
    table = field6.table()
    thr = 1.0 + a / n
    totals = brute_path_totals(table, n)
    ex = extremal_paths(inst, a)
    assert ex.threshold == thr
    assert ex.count == int((totals <= thr).sum())
    assert count_extremal(inst, a) == ex.count
    if a >= 4.0:
        # This environment has m_6 = 1.46, so small a gives empty sets;
        # the larger thresholds keep the checks below non-vacuous.
        assert ex.count > 0
    # Bitwise-equal weights, since both sides sum suffix-first.
    got = sorted(w for _, w in ex.paths)
    want = sorted(totals[totals <= thr])
    assert got == list(map(float, want))
    # Each reported path must re-evaluate to its reported weight.
    for perm, w in ex.paths:
        tail = 0
        ws = []
        for d in perm.order:
            ws.append(table[tail * n + d])
            tail |= 1 << d
        assert suffix_total(ws) == w


def test_extremal_paths_sorted_and_distinct(field6):
    ex = extremal_paths(field6.instance, 6.0)
    assert ex.count > 0
    weights = [w for _, w in ex.paths]
    assert weights == sorted(weights)
    orders = {p.order for p, _ in ex.paths}
    assert len(orders) == ex.count


def test_extremal_capacity():
    inst = HypercubeInstance(5, 77, 1)
    assert count_extremal(inst, 15.0) == 21
    with pytest.raises(CapacityError):
        extremal_paths(inst, 15.0, limit=3)
    with pytest.raises(CapacityError):
        count_extremal(inst, 15.0, limit=3)


@pytest.mark.skipif(not HAVE_FAST, reason="jitted kernels unavailable")
def test_bidir_agrees_with_table():
    for n, seed in [(13, 5), (14, 21)]:
        inst = HypercubeInstance(n, seed, 0)
        mt = first_passage_time(inst, method="table")
        mb = first_passage_time(inst, method="bidir")
        # Same optimum path; only the final summation order differs.
        assert mb == pytest.approx(mt, rel=1e-12, abs=0.0)


def test_method_validation(field6):
    with pytest.raises(ValueError):
        first_passage_time(field6.instance, method="magic")


def test_simulate_batch_matches_scalar_calls():
    n, seed = 6, 424242
    out = simulate_batch(n, seed, 5, a_values=(0.0, 1.0))
    np.testing.assert_array_equal(out["replica"], np.arange(5))
    for i in range(5):
        inst = HypercubeInstance(n, seed, i)
        assert out["m"][i] == first_passage_time(inst, method="table")
        assert out["counts"][i, 0] == count_extremal(inst, 0.0)
        assert out["counts"][i, 1] == count_extremal(inst, 1.0)


def test_simulate_batch_determinism_and_workers():
    base = simulate_batch(9, 31, 24, a_values=(0.5,))
    again = simulate_batch(9, 31, 24, a_values=(0.5,))
    multi = simulate_batch(9, 31, 24, a_values=(0.5,), workers=3)
    for key in ("replica", "m", "counts"):
        np.testing.assert_array_equal(base[key], again[key])
        np.testing.assert_array_equal(base[key], multi[key])
    # Contiguous restart: replicas are addressed, not positional.
    tail = simulate_batch(9, 31, 10, a_values=(0.5,), start_replica=14)
    np.testing.assert_array_equal(tail["m"], base["m"][14:])
    np.testing.assert_array_equal(tail["counts"], base["counts"][14:])


def test_simulate_batch_contract():
    out = simulate_batch(6, 1, 3, counts=False)
    assert "counts" not in out
    assert out["m"].shape == (3,)
    empty = simulate_batch(6, 1, 0)
    assert empty["m"].size == 0 and empty["replica"].size == 0
    with pytest.raises(ValueError):
        simulate_batch(6, 1, -1)
    with pytest.raises(ValueError):
        simulate_batch(16, 1, 1, counts=True, method="bidir")
    with pytest.raises(CapacityError):
        simulate_batch(30, 1, 1, counts=False, method="table")


@pytest.mark.skipif(not HAVE_FAST, reason="jitted kernels unavailable")
def test_simulate_batch_bidir_route():
    table = simulate_batch(13, 8, 6, counts=False, method="table")
    bidir = simulate_batch(13, 8, 6, counts=False, method="bidir")
    np.testing.assert_allclose(bidir["m"], table["m"], rtol=1e-12)
    again = simulate_batch(13, 8, 6, counts=False, method="bidir", workers=2)
    np.testing.assert_array_equal(bidir["m"], again["m"])


def test_counts_are_one_at_tight_threshold(field6):
    # Exactly the optimal path sits at threshold m itself.
    inst = field6.instance
    m = first_passage_time(inst)
    a_star = (m - 1.0) * inst.n
    assert count_extremal(inst, a_star) >= 1
    ex = extremal_paths(inst, a_star)
    assert ex.paths[0][1] == m
