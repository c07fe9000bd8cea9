"""Gamma/Poisson numerics against scipy and mpmath oracles.

The module under test hand-rolls the series and continued-fraction
routes, so scipy.special and mpmath are genuinely independent
references rather than the same code looped back.
"""

import math

import mpmath
import numpy as np
import pytest
import scipy.special as sc
import scipy.stats

from fpplab.gamma import (
    exact_intensity,
    gamma_cdf,
    gamma_cdf_int_vec,
    gamma_sf,
    poisson_pmf_table,
    poisson_tail,
    scaled_gamma_cdf,
)

SHAPES = [0.5, 1.0, 2.5, 7.0, 16.0, 40.5]
XGRID = np.array([1e-8, 0.1, 0.5, 1.0, 2.0, 5.0, 12.0, 30.0, 80.0])


@pytest.mark.parametrize("shape", SHAPES)
def test_gamma_cdf_matches_scipy(shape):
    ours = gamma_cdf(shape, XGRID)
    ref = sc.gammainc(shape, XGRID)
    np.testing.assert_allclose(ours, ref, rtol=5e-14, atol=1e-300)


@pytest.mark.parametrize("shape", SHAPES)
def test_gamma_sf_matches_scipy(shape):
    ours = gamma_sf(shape, XGRID)
    ref = sc.gammaincc(shape, XGRID)
    np.testing.assert_allclose(ours, ref, rtol=5e-14, atol=1e-300)


def test_cdf_sf_complement():
    for shape in SHAPES:
        for x in XGRID:
            assert gamma_cdf(shape, float(x)) + gamma_sf(shape, float(x)) == pytest.approx(
                1.0, abs=2e-15
            )


def test_gamma_cdf_scalar_vector_agree():
    vec = gamma_cdf(7.0, XGRID)
    for x, v in zip(XGRID, vec):
        assert gamma_cdf(7.0, float(x)) == v


def test_route_split_is_seamless():
    # The series/continued-fraction handoff sits at x = shape + 1.
    for shape in (3.0, 11.5):
        below = gamma_cdf(shape, shape + 1.0 - 1e-9)
        above = gamma_cdf(shape, shape + 1.0 + 1e-9)
        assert 0.0 < above - below < 1e-8
        np.testing.assert_allclose(
            [below, above],
            sc.gammainc(shape, [shape + 1.0 - 1e-9, shape + 1.0 + 1e-9]),
            rtol=1e-13,
        )


def test_edge_arguments():
    assert gamma_cdf(2.0, 0.0) == 0.0
    assert gamma_cdf(2.0, -1.0) == 0.0
    assert gamma_sf(2.0, 0.0) == 1.0
    with pytest.raises(ValueError):
        gamma_cdf(0.0, 1.0)
    with pytest.raises(ValueError):
        gamma_cdf(-2.0, 1.0)


@pytest.mark.parametrize("m", [1, 2, 5, 16, 20])
def test_scaled_gamma_cdf_small_m(m):
    ref = math.factorial(m) * sc.gammainc(m, XGRID)
    ours = scaled_gamma_cdf(m, XGRID)
    np.testing.assert_allclose(ours, ref, rtol=1e-12, atol=1e-300)


def test_scaled_gamma_cdf_huge_m():
    # m! overflows float64 here; the scaled form must survive anyway.
    mpmath.mp.dps = 50
    for m, x in [(200, 1.0), (300, 0.7), (400, 2.0)]:
        ref = float(
            mpmath.factorial(m) * mpmath.gammainc(m, 0, x, regularized=True)
        )
        assert scaled_gamma_cdf(m, x) == pytest.approx(ref, rel=1e-11)


def test_scaled_gamma_cdf_vector_matches_scalar():
    xs = np.array([-1.0, 0.0, 0.3, 1.0, 8.0, 25.0])
    vec = scaled_gamma_cdf(12, xs)
    for x, v in zip(xs, vec):
        assert scaled_gamma_cdf(12, float(x)) == pytest.approx(v, rel=1e-13, abs=0.0)


def test_scaled_gamma_cdf_contract():
    assert scaled_gamma_cdf(3, 0.0) == 0.0
    assert scaled_gamma_cdf(3, -2.0) == 0.0
    xs = np.linspace(0.0, 6.0, 50)
    vals = scaled_gamma_cdf(4, xs)
    assert np.all(np.diff(vals) >= 0.0)
    with pytest.raises(ValueError):
        scaled_gamma_cdf(0, 1.0)


@pytest.mark.parametrize("m", [0, 1, 2, 3, 7, 12])
def test_gamma_cdf_int_vec_matches_scipy(m):
    xs = np.array([-0.5, 0.0, 0.2, 1.0, 3.5, 10.0, 40.0])
    ours = gamma_cdf_int_vec(m, xs)
    if m == 0:
        # Degenerate shape: all mass at the origin.
        np.testing.assert_array_equal(ours, (xs >= 0.0).astype(float))
    else:
        ref = sc.gammainc(m, np.clip(xs, 0.0, None))
        ref[xs <= 0.0] = 0.0
        np.testing.assert_allclose(ours, ref, rtol=0, atol=5e-14)


def test_exact_intensity_against_mpmath():
    mpmath.mp.dps = 40
    for n, a in [(16, 0.0), (20, 2.0), (8, -1.0), (58, 0.5)]:
        x = 1.0 + a / n
        ref = float(
            mpmath.factorial(n) * mpmath.gammainc(n, 0, x, regularized=True)
        )
        assert exact_intensity(n, a) == pytest.approx(ref, rel=1e-11)


def test_exact_intensity_limit():
    # n! P(Gamma_n <= 1 + a/n) -> exp(a - 1), relative gap <= x e^x / (n+1).
    val = exact_intensity(16, 0.0)
    assert abs(val - math.exp(-1.0)) <= math.exp(-1.0) * math.e / 17.0
    assert exact_intensity(16, -16.0) == 0.0
    assert exact_intensity(16, -20.0) == 0.0


def test_poisson_pmf_table_matches_scipy():
    for lam in (0.3, 1.0, 7.5, 40.0):
        ours = poisson_pmf_table(lam, 60)
        ref = scipy.stats.poisson.pmf(np.arange(61), lam)
        np.testing.assert_allclose(ours, ref, rtol=1e-12, atol=1e-300)


def test_poisson_pmf_table_log_route():
    # exp(-lam) underflows; the table must fall back to log space.
    lam = 800.0
    ours = poisson_pmf_table(lam, 1000)
    ref = scipy.stats.poisson.pmf(np.arange(1001), lam)
    np.testing.assert_allclose(ours, ref, rtol=1e-10, atol=1e-300)
    assert ours.sum() == pytest.approx(1.0, abs=1e-9)


def test_poisson_pmf_table_edges():
    table = poisson_pmf_table(0.0, 5)
    np.testing.assert_array_equal(table, [1.0, 0.0, 0.0, 0.0, 0.0, 0.0])
    with pytest.raises(ValueError):
        poisson_pmf_table(-1.0, 5)


def test_poisson_tail():
    for lam in (0.5, 3.0, 12.0):
        for k in (1, 2, 5, 20):
            ref = float(scipy.stats.poisson.sf(k - 1, lam))
            assert poisson_tail(lam, k) == pytest.approx(ref, rel=1e-12)
    assert poisson_tail(3.0, 0) == 1.0
    assert poisson_tail(3.0, -2) == 1.0
