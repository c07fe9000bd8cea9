"""
Path overlaps and the mixing density
=====================================

Two self-contained audits.  First the combinatorics: how many ordered
path pairs share exactly k edges, how the count changes when a shared
edge is required in the middle section, and the factorial bounds that
control both.  Then the analytic side: the density of a product of
two unit exponentials, its Bessel-K form, and the normalization
pitfall in the z^2-weighted display of that density.

Run time: under a minute (the mass integrals dominate).
"""

import math

import numpy as np

from fpplab.counting import (
    g_function,
    middle_census,
    middle_overlap_bound,
    overlap_census,
    overlap_upper_bound,
)
from fpplab.limitlaw import (
    claimed_mixture_density,
    mixture_density,
    mixture_total_mass,
)

n = 7
f = overlap_census(n)
print(f"n={n} overlap census:", f.tolist())
print("partition check: sum =", int(f.sum()), "= 7! =", math.factorial(n))

# Requiring a shared edge in the middle positions kills most pairs.
for r in (1, 2):
    fr = middle_census(n, r)
    print(f"r={r}: middle-share mass {int(fr.sum())}"
          f"  vs bound {middle_overlap_bound(n, r)}")

# The crude bound n^6 (n-k)! dominates the census at every k.
for k in range(n + 1):
    assert f[k] <= overlap_upper_bound(n, k)
print("crude bound dominates the census entrywise")

# The overlap exponent profile: equal to 1 at 0, dipping to 3/4 at
# 2/3, then climbing back toward 1.
for y in (0.0, 1 / 3, 2 / 3, 0.9):
    print(f"g({y:.3f}) = {g_function(y):.6f}")

# The mixing density of the limit law is 2 K_0(2 sqrt(z)):
z = np.array([0.25, 1.0, 4.0])
print("density at", z.tolist(), "->", np.round(mixture_density(z), 6).tolist())
print("total mass:", mixture_total_mass())

# The z^2-weighted display is NOT a probability density: its integral
# is the second moment of the product, which equals 4.
print("mass of the z^2-weighted display:",
      round(mixture_total_mass(claimed_mixture_density), 6))
