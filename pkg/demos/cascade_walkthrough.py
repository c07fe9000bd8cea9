"""
Cascades, the smoothing map, and its fixed point
=================================================

Draws Poisson-cascade variables Z_r, checks their first two moments
against the closed forms, then follows the smoothing map T: starting
from a point mass, repeated applications contract in W2 toward the
standard exponential at rate about 1/sqrt(2) per step.  The Laplace
recursion gives the same picture without any sampling.

Run time: around ten seconds.
"""

import math

import numpy as np

from fpplab.cascade import (
    CascadeParams,
    apply_smoothing,
    contraction_trace,
    fixed_point_laplace,
    laplace_recursion,
    sample_cascade,
    w2_distance,
)

# Z_r is built from a depth-r cascade of Poisson arrivals.  E Z_r = 1
# at every depth; the second moment climbs to 2 as r grows.
for depth in (1, 2, 4):
    z = sample_cascade(CascadeParams(depth), 20_000, seed=7)
    print(f"depth {depth}: mean={z.mean():.4f}  "
          f"second moment={np.mean(z * z):.4f}  (want {2 - 0.5 ** depth})")

# One application of T: size-biased resampling plus an exponential
# profile.  Exp(1) is its fixed point.
rng = np.random.default_rng(99)
pool = rng.standard_exponential(50_000)
out = apply_smoothing(pool, np.random.default_rng(100), 50_000)
print("exp pool under T: mean", round(out.mean(), 4),
      "m2", round(float(np.mean(out * out)), 4))

# The coupled trace starts from the unit point mass and an exponential
# sample and applies T to both with shared randomness.
trace = contraction_trace(
    np.ones(50_000), rng.standard_exponential(50_000), seed=5, steps=8
)
print("W2 trace:", np.round(trace, 4))
ratios = trace[1:] / trace[:-1]
print("per-step ratios:", np.round(ratios[trace[:-1] > 0.01], 3),
      " reference 1/sqrt(2) =", round(1 / math.sqrt(2), 3))

# Sampling-free cross-check: the Laplace transform of Z_r obeys a
# one-dimensional recursion.  At t = 1 the fixed point has value 1/2.
ts, psi = laplace_recursion(8)
at_one = np.interp(1.0, ts, psi[8])
print("psi_8(1) =", at_one, " fixed point:", fixed_point_laplace(1.0))

# W2 between a large Z_8 sample and exponentials, as a number:
z8 = sample_cascade(CascadeParams(4), 20_000, seed=11)
print("w2(Z_4, Exp):", round(w2_distance(z8, rng.standard_exponential(20_000)), 4))
