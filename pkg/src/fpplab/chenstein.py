"""Conditional Poisson approximation for the near-minimum path count.

Freezing every edge weight within graph distance r of either corner
leaves each path indicator with only its middle randomness.  Given
that shell, the count of paths below the threshold 1 + a/n is
approximately Poisson, with a parameter that is an explicit sum over
boundary pair classes.  This module computes that parameter, the
three terms of the dissociated second-moment bound, a Monte Carlo
estimate of the true conditional total-variation distance, and the
solution of the discrete Stein equation with its jump bounds.

Pair sums are never enumerated pair by pair.  Every ordered pair of
paths is a base path composed with a relative position-permutation;
the middle-overlap count and the way boundary slots map onto each
other depend on the relative permutation alone.  One scan over the
n! relative permutations therefore compresses the O((n!)^2) pair
sums into a few hundred signed contractions of boundary tensors.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field as dc_field, replace
from functools import lru_cache

import numpy as np

from .core import CapacityError, WeightField
from .counting import _perm_matrix, shared_position_matrix
from .engine import HAVE_FAST, _popcounts, suffix_min_table_numpy, _enumerate_below_numpy
from .gamma import poisson_pmf_table, scaled_gamma_cdf
from .quad import adaptive_quad

if HAVE_FAST:
    from . import _fast

# Pairwise machinery materialises n! relative permutations; this is
# desk scale and capped accordingly.
CS_MAX_N = 10
# Boundary pair classes per environment must stay enumerable.
PAIR_CAP = 10**8

# Inner-resample replica ids live far above the outer replica range
# and below the tagged cascade key space.
_STREAM_INNER = 1 << 40
_INNER_ENV_STRIDE = 1 << 20
_STREAM_BOOT = np.uint64(4 << 48)

_LETTERS = "abcdefgh"


# ---------------------------------------------------------------------------
# Outer conditioning: boundary shells and accumulated pair weights.


@dataclass(frozen=True)
class OuterConditioning:
    """Realised boundary data for one environment.

    ``x`` holds the accumulated prefix-plus-suffix weight for every
    ordered tuple of r initial and r final directions, shape
    ``(n,) * 2r``; tuples with a repeated direction are marked with
    ``inf`` and never contribute.
    """

    n: int
    r: int
    x: np.ndarray

    @property
    def pair_count(self) -> int:
        return int(np.isfinite(self.x).sum())

    def threshold_margin(self, a: float) -> np.ndarray:
        """Remaining budget ``1 + a/n - X`` with invalid tuples at -1."""
        theta = 1.0 + a / self.n
        return np.where(np.isfinite(self.x), theta - self.x, -1.0)


def _prefix_profile(field: WeightField, r: int):
    """Weight sum and used-direction mask per ordered prefix tuple.

    Axes are in path order (position 0 first).  An already-used
    direction poisons the entry with ``inf``; the mask for such an
    entry is garbage, but the ``inf`` is sticky through later levels.
    """
    n = field.instance.n
    dirs = np.arange(n, dtype=np.uint64)
    bits = np.uint64(1) << dirs
    x = np.zeros((), dtype=np.float64)
    used = np.zeros((), dtype=np.uint64)
    for _ in range(r):
        tails = used[..., None] | np.zeros(n, dtype=np.uint64)
        dup = (tails & bits) != 0
        codes = (tails * np.uint64(n) + dirs).astype(np.int64)
        w = field.weights(codes.ravel()).reshape(codes.shape)
        x = x[..., None] + np.where(dup, np.inf, w)
        used = tails | bits
    return x, used


def _suffix_profile(field: WeightField, r: int):
    """Mirror of the prefix profile, built inward from the far corner.

    Axes are again in path order, so the last axis is the direction
    of the final step.
    """
    n = field.instance.n
    target = np.uint64((1 << n) - 1)
    dirs = np.arange(n, dtype=np.uint64)
    bits = np.uint64(1) << dirs
    x = np.zeros((), dtype=np.float64)
    used = np.zeros((), dtype=np.uint64)
    for _ in range(r):
        shape = (n,) + (1,) * used.ndim
        b = bits.reshape(shape)
        d = dirs.reshape(shape)
        dup = (used[None, ...] & b) != 0
        nxt = used[None, ...] | b
        tails = target ^ nxt
        codes = (tails * np.uint64(n) + d).astype(np.int64)
        w = field.weights(codes.ravel()).reshape(codes.shape)
        x = x[None, ...] + np.where(dup, np.inf, w)
        used = nxt
    return x, used


def outer_conditioning(field: WeightField, r: int) -> OuterConditioning:
    """Accumulate the frozen-shell weight of every boundary pair."""
    n = field.instance.n
    if r < 0 or 2 * r >= n:
        raise ValueError(f"need 0 <= 2r < n, got r={r}, n={n}")
    if math.perm(n, r) * math.perm(n - r, r) > PAIR_CAP:
        raise CapacityError(f"boundary pair list exceeds {PAIR_CAP} entries")
    xp, up = _prefix_profile(field, r)
    xs, us = _suffix_profile(field, r)
    x = xp.reshape(xp.shape + (1,) * r) + xs.reshape((1,) * r + xs.shape)
    if r:
        clash = (up.reshape(up.shape + (1,) * r) & us.reshape((1,) * r + us.shape)) != 0
        x = np.where(clash, np.inf, x)
    return OuterConditioning(n=n, r=r, x=x)


def lambda_from_conditioning(oc: OuterConditioning, a: float) -> float:
    """Conditional Poisson parameter given realised boundary weights.

    Each boundary pair class contributes (n-2r)! middles at equal
    conditional probability, so the sum is the scaled Gamma CDF over
    the margin tensor.  Reduction is in fixed C order.
    """
    m = oc.n - 2 * oc.r
    c = oc.threshold_margin(a)
    return float(scaled_gamma_cdf(m, c.ravel()).sum())


def conditional_lambda(field: WeightField, r: int, a: float) -> float:
    """Expected sub-threshold path count given the frozen shell."""
    return lambda_from_conditioning(outer_conditioning(field, r), a)


def lambda_batch(
    n: int, r: int, a: float, seed: int, replicas: int, *, start_replica: int = 0
) -> np.ndarray:
    """Conditional parameter across independent environments."""
    from .core import HypercubeInstance

    out = np.empty(replicas, dtype=np.float64)
    for i in range(replicas):
        f = WeightField(HypercubeInstance(n, seed, start_replica + i))
        out[i] = conditional_lambda(f, r, a)
    return out


# ---------------------------------------------------------------------------
# Relative-permutation tables.
#
# For a fixed relative permutation rho, the ordered pair (pi, pi o rho)
# shares an edge at position j iff rho fixes j and maps the positions
# before j onto themselves; the overlap pattern does not depend on pi.
# Boundary slot t of the second path reads the base path at position
# rho(pos_t): another boundary slot (a tie) or a middle position (a
# free value).  Summing over pi then costs (n - L)! per admissible
# assignment of the L distinct prescribed values, and the remaining
# distinctness constraints (free values against untouched boundary
# slots) unwind by inclusion-exclusion over partial injections.


@lru_cache(maxsize=8)
def _pair_tables(n: int, r: int):
    """Signed contraction coefficients for all ordered pair sums.

    Returns ``(m, coef2, coef3, full_overlap)`` where ``coef2`` maps a
    signature (tuple of (slot, source) pairs) to its coefficient for
    the product-of-marginals sum, ``coef3`` does the same per middle
    overlap k < m for the joint-moment sum, and ``full_overlap`` lists
    (axes, count) for the k = m pairs, which collapse to a minimum
    instead of an integral.
    """
    if n > CS_MAX_N:
        raise CapacityError(f"pair tables need n <= {CS_MAX_N}, got {n}")
    m = n - 2 * r
    perms = _perm_matrix(n)
    shared = shared_position_matrix(perms)
    k_mid = shared[:, r : n - r].sum(axis=1, dtype=np.int64)

    nb = 2 * r
    base = nb + 1
    bpos = list(range(r)) + list(range(n - r, n))
    pos2slot = np.full(n, nb, dtype=np.int64)
    pos2slot[bpos] = np.arange(nb)

    code = np.zeros(perms.shape[0], dtype=np.int64)
    for t, p in enumerate(bpos):
        code += pos2slot[perms[:, p]] * base**t
    composite = k_mid * base**nb + code
    cnt = np.bincount(composite)
    ident = int(composite[0])  # lexicographic order puts identity first
    cnt[ident] -= 1

    coef2: dict[tuple, float] = {}
    coef3: dict[int, dict[tuple, float]] = {}
    full_overlap: list[tuple[tuple[int, ...], int]] = []
    for comp in np.nonzero(cnt)[0]:
        k = int(comp) // base**nb
        if k < 1:
            continue
        c = int(cnt[comp])
        digits = tuple((int(comp) // base**t) % base for t in range(nb))
        tied = {t: s for t, s in enumerate(digits) if s < nb}
        free = [t for t in range(nb) if t not in tied]
        if k == m:
            # The relative permutation fixes every middle position, so
            # it permutes each boundary block within itself.
            assert not free
            full_overlap.append((digits, c))
        missing = [s for s in range(nb) if s not in tied.values()]
        mult = c * math.factorial(n - nb - len(free))
        dest3 = None if k == m else coef3.setdefault(k, {})
        for size in range(len(free) + 1):
            for sub in itertools.combinations(free, size):
                for img in itertools.permutations(missing, size):
                    sig = tuple(sorted(tied.items() | set(zip(sub, img))))
                    w = mult * (-1.0) ** size
                    coef2[sig] = coef2.get(sig, 0.0) + w
                    if dest3 is not None:
                        dest3[sig] = dest3.get(sig, 0.0) + w
    return m, coef2, coef3, full_overlap


def _contract(t: np.ndarray, coef: dict) -> float:
    """Sum of signed contractions of a boundary tensor against itself.

    The tensor must vanish on every index tuple with a repeated
    label; that is what lets the inclusion-exclusion stop at the
    constraints the signatures spell out.
    """
    nax = t.ndim
    psub = _LETTERS[:nax]
    marg: dict[tuple, np.ndarray] = {}
    out = 0.0
    for sig, c in sorted(coef.items()):
        keep = tuple(slot for slot, _ in sig)
        if keep not in marg:
            drop = tuple(ax for ax in range(nax) if ax not in keep)
            marg[keep] = t.sum(axis=drop) if drop else t
        qsub = "".join(_LETTERS[src] for _, src in sig)
        out += c * float(np.einsum(f"{psub},{qsub}->", t, marg[keep]))
    return out


def _contract_batch(t: np.ndarray, coef: dict) -> np.ndarray:
    """Same contraction with a leading batch axis (quadrature nodes)."""
    nax = t.ndim - 1
    psub = _LETTERS[:nax]
    marg: dict[tuple, np.ndarray] = {}
    out = np.zeros(t.shape[0], dtype=np.float64)
    for sig, c in sorted(coef.items()):
        keep = tuple(slot for slot, _ in sig)
        if keep not in marg:
            drop = tuple(ax + 1 for ax in range(nax) if ax not in keep)
            marg[keep] = t.sum(axis=drop) if drop else t
        qsub = "".join(_LETTERS[src] for _, src in sig)
        out += c * np.einsum(f"z{psub},z{qsub}->z", t, marg[keep])
    return out


def _prob_tensor(m: int, c: np.ndarray) -> np.ndarray:
    """P(Gamma(m) <= c) elementwise; shape 0 degenerates to a step."""
    if m == 0:
        return (c >= 0.0).astype(np.float64)
    return scaled_gamma_cdf(m, c) / math.factorial(m)


def _gamma_pdf(k: int, s: np.ndarray) -> np.ndarray:
    return s ** (k - 1) * np.exp(-s) / math.factorial(k - 1)


# ---------------------------------------------------------------------------
# The bound.


@dataclass(frozen=True)
class CsReport:
    """Conditional parameter, bound terms, and the measured distance."""

    n: int
    r: int
    a: float
    lam: float
    term1: float
    term2: float
    term3: float
    tv: float = float("nan")
    tv_stderr: float = float("nan")
    inner: int = 0

    @property
    def bound(self) -> float:
        return self.term1 + self.term2 + self.term3

    def consistent(self) -> bool:
        """The measured distance does not exceed bound + 3 stderr."""
        return not (self.tv > self.bound + 3.0 * self.tv_stderr)


def pair_joint_prob(ca: float, cb: float, k: int, m: int, *, rel_tol: float = 1e-10) -> float:
    """Joint sub-threshold probability of one pair sharing k middles.

    Splitting the two middle sums at the shared part gives
    ``int gamma_k(s) P(G_{m-k} <= ca - s) P(G_{m-k} <= cb - s) ds``;
    at k = m the integral collapses to the CDF at the smaller budget.
    """
    if not 1 <= k <= m:
        raise ValueError(f"need 1 <= k <= m, got k={k}, m={m}")
    hi = min(ca, cb)
    if hi <= 0.0:
        return 0.0
    if k == m:
        return float(scaled_gamma_cdf(m, hi)) / math.factorial(m)

    def f(s):
        s = np.asarray(s, dtype=np.float64)
        return (
            _gamma_pdf(k, s)
            * _prob_tensor(m - k, ca - s)
            * _prob_tensor(m - k, cb - s)
        )

    val, _ = adaptive_quad(f, 0.0, float(hi), rel_tol=rel_tol, abs_tol=1e-16)
    return val


def _term3_parts(
    m: int,
    coef3: dict,
    full_overlap: list,
    c1: np.ndarray,
    *,
    quad_rel: float,
) -> dict[int, float]:
    """Joint-moment sum split by middle overlap k."""
    parts: dict[int, float] = {}
    hi = float(c1.max(initial=-1.0))
    for k, coef in sorted(coef3.items()):
        if hi <= 0.0:
            parts[k] = 0.0
            continue

        def f(s, _k=k, _coef=coef):
            s = np.asarray(s, dtype=np.float64)
            g = _prob_tensor(m - _k, c1[None, ...] - s.reshape((-1,) + (1,) * c1.ndim))
            return _gamma_pdf(_k, s) * _contract_batch(g, _coef)

        val, _ = adaptive_quad(
            f, 0.0, hi, rel_tol=quad_rel, abs_tol=1e-15, max_intervals=8000
        )
        parts[k] = val
    if full_overlap:
        # Fully shared middles: both budgets gate one Gamma(m) draw.
        total = 0.0
        for axes, c in full_overlap:
            mn = np.minimum(c1, np.transpose(c1, axes))
            total += c * float(scaled_gamma_cdf(m, mn.ravel()).sum())
        parts[m] = total
    return parts


def cs_bound(field: WeightField, r: int, a: float, *, quad_rel: float = 1e-9) -> CsReport:
    """Second-moment bound on the conditional distance to Poisson.

    term1 sums the squared conditional probabilities, term2 the
    products over ordered pairs sharing a middle edge, and term3 the
    joint moments over the same pairs.  The bound is their sum.
    """
    n = field.instance.n
    if n > CS_MAX_N:
        raise CapacityError(f"bound evaluation needs n <= {CS_MAX_N}, got n={n}")
    if r < 0 or 2 * r >= n:
        raise ValueError(f"need 0 <= 2r < n, got r={r}, n={n}")
    m, coef2, coef3, full_overlap = _pair_tables(n, r)
    oc = outer_conditioning(field, r)
    c1 = oc.threshold_margin(a)
    scaled = scaled_gamma_cdf(m, c1.ravel())
    lam = float(scaled.sum())
    term1 = float((scaled * scaled).sum()) / math.factorial(m)
    p = (scaled / math.factorial(m)).reshape(c1.shape)
    term2 = _contract(p, coef2)
    term3 = sum(
        _term3_parts(m, coef3, full_overlap, c1, quad_rel=quad_rel).values()
    )
    return CsReport(n=n, r=r, a=a, lam=lam, term1=term1, term2=term2, term3=term3)


# ---------------------------------------------------------------------------
# Measured conditional distance.


def _shell_codes(n: int, r: int) -> np.ndarray:
    """Edge codes whose tail sits within r of either corner."""
    tails = np.arange(1 << n, dtype=np.uint64)
    pc = _popcounts(tails)
    keep = tails[(pc < r) | (pc >= n - r)]
    dirs = np.arange(n, dtype=np.uint64)
    codes = (keep[:, None] * np.uint64(n) + dirs).astype(np.int64)
    legal = (keep[:, None] >> dirs) & np.uint64(1) == 0
    return codes[legal]


def empirical_poisson_tv(counts: np.ndarray, lam: float) -> float:
    """Total variation between a count sample and Poisson(lam).

    Mass beyond the largest observed count is charged analytically,
    so only the head is subject to sampling noise.
    """
    counts = np.asarray(counts, dtype=np.int64)
    kmax = int(counts.max(initial=0))
    hist = np.bincount(counts, minlength=kmax + 1)
    return _tv_from_hist(hist, counts.size, poisson_pmf_table(lam, kmax))


def _tv_from_hist(hist: np.ndarray, total: int, q: np.ndarray) -> float:
    phat = hist / total
    tail = max(0.0, 1.0 - float(q.sum()))
    return 0.5 * (float(np.abs(phat - q).sum()) + tail)


def _conditional_counts(
    n: int, seed: int, inner0: int, inner: int, codes: np.ndarray,
    w: np.ndarray, thr: float, limit: int,
) -> np.ndarray:
    from . import prf

    out = np.empty(inner, dtype=np.int64)
    if HAVE_FAST:
        table = np.empty((1 << n) * n, dtype=np.float64)
        h = np.empty(1 << n, dtype=np.float64)
        _fast.batch_conditional_counts(
            n, seed, inner0, inner, codes, w, thr, table, h, out, limit
        )
    else:
        for i in range(inner):
            table = prf.weight_table(seed, inner0 + i, n)
            table[codes] = w
            h = suffix_min_table_numpy(n, table)
            cval, _, _ = _enumerate_below_numpy(n, table, h, thr, limit, False)
            out[i] = cval
    if (out < 0).any():
        raise CapacityError(f"a resampled interior exceeded {limit} paths")
    return out


def conditional_tv(
    field: WeightField, r: int, a: float, inner: int, *, boot: int = 200
) -> tuple[float, float]:
    """Estimate the conditional distance to Poisson by resampling.

    Keeps the realised shell fixed, redraws the interior ``inner``
    times from reserved replica streams, and compares the empirical
    count law against Poisson(conditional_lambda).  The standard
    error comes from a multinomial bootstrap of the histogram.
    """
    inst = field.instance
    n = inst.n
    if n > CS_MAX_N:
        raise CapacityError(f"interior resampling needs n <= {CS_MAX_N}, got n={n}")
    if inner < 1:
        raise ValueError("inner must be positive")
    codes = _shell_codes(n, r)
    w = field.weights(codes)
    thr = 1.0 + a / n
    inner0 = _STREAM_INNER + inst.replica * _INNER_ENV_STRIDE
    counts = _conditional_counts(n, inst.seed, inner0, inner, codes, w, thr, 1 << 40)
    lam = conditional_lambda(field, r, a)

    kmax = int(counts.max(initial=0))
    hist = np.bincount(counts, minlength=kmax + 1)
    q = poisson_pmf_table(lam, kmax)
    tv = _tv_from_hist(hist, inner, q)
    key = np.array([np.uint64(inst.seed), _STREAM_BOOT | np.uint64(inst.replica)],
                   dtype=np.uint64)
    rng = np.random.Generator(np.random.Philox(key=key))
    draws = rng.multinomial(inner, hist / inner, size=boot)
    tail = max(0.0, 1.0 - float(q.sum()))
    tvs = 0.5 * (np.abs(draws / inner - q).sum(axis=1) + tail)
    return tv, float(tvs.std(ddof=1))


def cs_report(
    field: WeightField, r: int, a: float, *, inner: int = 10_000,
    boot: int = 200, quad_rel: float = 1e-9,
) -> CsReport:
    """Bound and measured distance for one environment."""
    rep = cs_bound(field, r, a, quad_rel=quad_rel)
    tv, se = conditional_tv(field, r, a, inner, boot=boot)
    return replace(rep, tv=tv, tv_stderr=se, inner=inner)


# ---------------------------------------------------------------------------
# The Stein equation f(n) = lam g(n+1) - n g(n) and its jump bounds.


def _poisson_prob(lam: float, members: frozenset[int]) -> float:
    return sum(
        math.exp(k * math.log(lam) - lam - math.lgamma(k + 1)) for k in sorted(members)
    )


def _stein_value(lam: float, members: frozenset[int], prob: float, nv: int) -> float:
    """One value of the bounded solution, by the stable branch.

    Below lam the initial sum has decaying terms going down; above
    lam the tail sum has decaying terms going up.  Both start from an
    exactly representable leading term, so no factorial or power is
    ever formed on its own.
    """
    if nv <= 0:
        return 0.0
    if nv <= lam:
        acc = 0.0
        t = 1.0 / lam
        for k in range(nv - 1, -1, -1):
            acc += ((1.0 if k in members else 0.0) - prob) * t
            t *= k / lam
        return acc
    acc = 0.0
    t = 1.0 / nv
    k = nv
    kstop = max(members, default=0)
    while True:
        acc += ((1.0 if k in members else 0.0) - prob) * t
        t *= lam / (k + 1)
        k += 1
        if k > kstop and k > lam and t * (1.0 + prob) < 1e-18 * (abs(acc) + 1e-300):
            return -acc
        if k - nv > 100_000:  # pragma: no cover - defensive
            return -acc


@dataclass(frozen=True)
class SteinSolution:
    """Solution g of the Stein equation for the event set A.

    ``g(0) = 0``; for n > 0 the two summation branches agree and are
    chosen for stability.  Solutions add over disjoint event sets.
    """

    lam: float
    members: frozenset[int]
    prob: float
    values: dict[int, float] = dc_field(default_factory=dict)

    def g(self, nv: int) -> float:
        got = self.values.get(nv)
        if got is None:
            got = _stein_value(self.lam, self.members, self.prob, nv)
        return got

    def f(self, nv: int) -> float:
        """Centered indicator driving the equation."""
        return (1.0 if nv in self.members else 0.0) - self.prob

    def residual(self, nv: int) -> float:
        """Defect of the defining identity at one point."""
        return self.f(nv) - (self.lam * self.g(nv + 1) - nv * self.g(nv))

    def delta(self, nv: int) -> float:
        return self.g(nv + 1) - self.g(nv)


def stein_g(lam: float, members, nvals=range(0, 64)) -> SteinSolution:
    """Tabulated Stein solution for the set ``members`` at rate lam."""
    if not lam > 0.0:
        raise ValueError(f"lam must be positive, got {lam}")
    mem = frozenset(int(k) for k in members)
    if any(k < 0 for k in mem):
        raise ValueError("members must be nonnegative integers")
    prob = _poisson_prob(lam, mem)
    values = {int(v): _stein_value(lam, mem, prob, int(v)) for v in nvals}
    return SteinSolution(lam=lam, members=mem, prob=prob, values=values)


def stein_sup_delta(lam: float, members, nvals=range(0, 64)) -> float:
    """Largest absolute jump of the solution over the given range."""
    sol = stein_g(lam, members, nvals)
    lo = min(nvals, default=0)
    hi = max(nvals, default=0)
    return max(abs(sol.g(v + 1) - sol.g(v)) for v in range(lo, hi + 1))


def stein_singleton_gap(lam: float, n: int) -> float:
    """Envelope for the upward jump of a singleton solution at its atom.

    The tail representation decreases beyond the atom and the initial
    representation decreases up to it; evaluating both at the atom
    and differencing gives an upper envelope for g(n+1) - g(n) that
    telescopes to exactly 1/n.  The realised jump sits strictly below
    it for every positive rate.
    """
    if n < 1:
        raise ValueError("the atom must be a positive integer")
    # decreasing-tail branch at the atom: sum_l lam^l (n-1)!/(n+l)!
    up = 0.0
    t = 1.0 / n
    l = 0
    while t > 1e-19 * (up + 1.0):
        up += t
        t *= lam / (n + 1 + l)
        l += 1
    # initial branch at the atom: sum_l (n-1)!/(lam^{l+1} (n-1-l)!)
    low = 0.0
    t = 1.0 / lam
    for l in range(n):
        low += t
        t *= (n - 1 - l) / lam
    pn = math.exp(n * math.log(lam) - lam - math.lgamma(n + 1))
    return pn * (up + low)
