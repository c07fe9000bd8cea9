"""The edge-weight stream is frozen; these tests pin its bits.

A pure-integer Philox reimplementation serves as the oracle for the
vectorised block function, and literal reference values guard the
whole pipeline against accidental redefinition.
"""

import math

import numpy as np
import pytest

from fpplab import prf

MASK = (1 << 64) - 1


def philox_ref(counter: int, key: tuple[int, int]) -> tuple[int, ...]:
    """Philox-4x64-10 on (counter, 0, 0, 0), plain Python integers."""

    def mulhilo(a, m):
        p = a * m
        return (p >> 64) & MASK, p & MASK

    x = [counter & MASK, 0, 0, 0]
    k0, k1 = key
    for _ in range(10):
        hi0, lo0 = mulhilo(x[0], prf.PHILOX_M0)
        hi1, lo1 = mulhilo(x[2], prf.PHILOX_M1)
        x = [(hi1 ^ x[1] ^ k0) & MASK, lo1, (hi0 ^ x[3] ^ k1) & MASK, lo0]
        k0 = (k0 + prf.PHILOX_W0) & MASK
        k1 = (k1 + prf.PHILOX_W1) & MASK
    return tuple(x)


def test_block_matches_integer_reference():
    ks = prf.key_schedule(987654321, 123456789)
    counters = np.array([1, 2, 77, 2**40 + 3, 2**62 + 9], dtype=np.uint64)
    got = prf.philox_block(counters, ks)
    for i, c in enumerate(counters.tolist()):
        want = philox_ref(c, (987654321, 123456789))
        assert tuple(int(w[i]) for w in got) == want


def test_uniform_reference_values_frozen():
    u = prf.uniforms_at(12345, 7, [0, 1, 2, 3, 4, 1_000_000])
    want = [
        0.04075621842612909,
        0.3322372403724486,
        0.3577593034840133,
        0.34572512604181027,
        0.33630612315887953,
        0.7646325341986266,
    ]
    assert u.tolist() == want


def test_weight_reference_values_frozen():
    w = prf.edge_weights_at(12345, 7, [0, 1, 2, 3])
    want = [
        0.041610032467829974,
        0.40382231878443675,
        0.44279212886430913,
        0.4242277192526465,
    ]
    assert w.tolist() == want


def test_words_within_one_block_come_from_one_counter():
    ks = prf.key_schedule(5, 6)
    words = philox_ref(1, (5, 6))
    u = prf.uniforms_at(5, 6, [0, 1, 2, 3])
    for j in range(4):
        assert u[j] == (words[j] >> 11) * 2.0**-53


def test_bulk_and_scattered_routes_agree_bitwise():
    for start, count in [(0, 4096), (3, 1001), (12345, 257), (2**30, 64)]:
        bulk = prf.uniform_range(99, 4, start, count)
        scat = prf.uniforms_at(99, 4, np.arange(start, start + count))
        assert np.array_equal(bulk, scat)


def test_weight_table_slices_match_scattered():
    rng = np.random.default_rng(1)
    n = 7
    table = prf.weight_table(11, 2, n)
    assert table.shape == ((1 << n) * n,)
    codes = rng.integers(0, (1 << n) * n, size=200)
    assert np.array_equal(table[codes], prf.edge_weights_at(11, 2, codes))


def test_streams_differ_across_seed_and_replica():
    codes = np.arange(64)
    a = prf.uniforms_at(1, 0, codes)
    assert not np.array_equal(a, prf.uniforms_at(2, 0, codes))
    assert not np.array_equal(a, prf.uniforms_at(1, 1, codes))


def test_weights_positive_and_match_scalar_log1p():
    u = prf.uniforms_at(3, 3, np.arange(3000))
    w = prf.weights_from_uniforms(u)
    assert (w > 0.0).all() and np.isfinite(w).all()
    for i in range(0, 3000, 517):
        assert w[i] == -math.log1p(-u[i])


def test_zero_fix_rereads_tweaked_counter():
    ks = prf.key_schedule(2, 3)
    u = np.array([0.0, 0.5])
    codes = np.array([5, 9], dtype=np.uint64)
    prf._fix_zeros(u, codes, ks)
    assert u[1] == 0.5
    assert u[0] == 0.26080241234347923  # word 1 of the tweaked block at code 5
    assert u[0] > 0.0


def test_key_schedule_validates_range():
    with pytest.raises(ValueError):
        prf.key_schedule(-1, 0)
    with pytest.raises(ValueError):
        prf.key_schedule(0, 1 << 64)


def test_uniform_range_empty_and_negative():
    assert prf.uniform_range(1, 1, 10, 0).size == 0
    with pytest.raises(ValueError):
        prf.uniform_range(1, 1, 10, -1)


def test_unit_interval_and_mean():
    u = prf.uniforms_at(77, 1, np.arange(20000))
    assert ((u >= 0.0) & (u < 1.0)).all()
    # crude distributional sanity: mean of 2e4 uniforms
    assert abs(u.mean() - 0.5) < 0.02
