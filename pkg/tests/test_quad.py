"""Quadrature driver against closed forms and scipy."""

import math

import numpy as np
import pytest
import scipy.integrate

from fpplab.quad import adaptive_quad, exp_tail_quad


def test_polynomial_is_exact():
    # GK15 integrates degree <= 29 exactly; cubic on one panel.
    val, err = adaptive_quad(lambda x: 3.0 * x**2 - 2.0 * x + 1.0, -1.0, 2.0)
    assert val == pytest.approx(9.0 - 3.0 + 3.0, abs=1e-12)
    assert err < 1e-10


def test_smooth_transcendental():
    val, _ = adaptive_quad(np.sin, 0.0, math.pi)
    assert val == pytest.approx(2.0, rel=1e-12)
    val, _ = adaptive_quad(lambda x: np.exp(-x) * np.cos(x), 0.0, 40.0)
    assert val == pytest.approx(0.5, rel=1e-11)


def test_needs_adaptivity():
    # Sharp peak at an awkward offset forces interval splitting.
    val, _ = adaptive_quad(
        lambda x: 1.0 / (1e-6 + (x - 0.37) ** 2), 0.0, 1.0, rel_tol=1e-10
    )
    ref, _ = scipy.integrate.quad(
        lambda x: 1.0 / (1e-6 + (x - 0.37) ** 2), 0.0, 1.0, limit=400
    )
    assert val == pytest.approx(ref, rel=1e-9)


def test_vectorised_calls_only():
    seen = []

    def f(x):
        seen.append(np.ndim(x))
        return np.asarray(x) ** 2

    adaptive_quad(f, 0.0, 1.0)
    assert seen and all(d == 1 for d in seen)


def test_interval_edge_cases():
    assert adaptive_quad(np.sin, 1.0, 1.0) == (0.0, 0.0)
    with pytest.raises(ValueError):
        adaptive_quad(np.sin, 1.0, 0.0)


def test_stall_raises():
    rng = np.random.default_rng(5)

    def noisy(x):
        return rng.standard_normal(np.shape(x))

    with pytest.raises(RuntimeError, match="stalled"):
        adaptive_quad(noisy, 0.0, 1.0, max_intervals=16)


def test_error_estimate_is_honest():
    for f, a, b, exact in [
        (lambda x: np.exp(-(x**2)), -4.0, 4.0, math.sqrt(math.pi) * math.erf(4.0)),
        (lambda x: np.log1p(x) / (1.0 + x), 0.0, 3.0, 0.5 * math.log(4.0) ** 2),
    ]:
        val, err = adaptive_quad(f, a, b)
        assert abs(val - exact) <= max(err * 10.0, 1e-13)


def test_exp_tail_quad():
    # Gamma(3) normalisation: integral of x^2 e^-x / 2 over [0, inf).
    val = exp_tail_quad(lambda x: 0.5 * x**2 * np.exp(-x))
    assert val == pytest.approx(1.0, rel=1e-10)
    # Shifted start.
    val = exp_tail_quad(lambda x: np.exp(-x), a=2.0)
    assert val == pytest.approx(math.exp(-2.0), rel=1e-10)
    assert exp_tail_quad(lambda x: np.exp(-x), a=5.0, cutoff=5.0) == 0.0
