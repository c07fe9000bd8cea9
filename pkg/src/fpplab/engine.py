"""First-passage engine: optima, extremal paths, and replica batches.

Two exact routes coexist:

* the table route materialises all edge weights and runs a suffix
  dynamic program over subsets; it also powers path enumeration and
  is the only route that can count extremal paths.
* the meet-in-the-middle route certifies the optimum by growing
  prefix and suffix balls of radius ``horizon / 2`` and scanning the
  edges between them; for n around 20 that touches a few tens of
  thousands of vertices instead of a million, and the rare replica
  whose optimum exceeds the horizon falls back to the full program.

Both consume the frozen stream of :mod:`fpplab.prf`, so their
results are functions of ``(n, seed, replica)`` alone.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from . import prf
from .core import CapacityError, HypercubeInstance, PathPerm, TABLE_MAX_N

try:
    from . import _fast

    HAVE_FAST = _fast.HAVE_NUMBA
except ImportError:  # pragma: no cover
    HAVE_FAST = False

# Above this dimension the full table / DP is no longer the default
# route for plain optima; the bidirectional search takes over.
_BIDIR_MIN_N = 13
# Search horizon: optima land below 1.35 in all but ~0.6% of replicas
# for moderate n, so the fallback stays rare while the half-radius
# balls stay small.
DEFAULT_HORIZON = 1.35
_HEAP_CAP = 1 << 22

# Force the numpy reference paths (for tests): set FPP_NO_NUMBA=1.
if os.environ.get("FPP_NO_NUMBA"):
    HAVE_FAST = False


def _popcounts(masks: np.ndarray) -> np.ndarray:
    if hasattr(np, "bitwise_count"):
        return np.bitwise_count(masks.astype(np.uint64)).astype(np.int64)
    pc = np.zeros(masks.shape, dtype=np.int64)
    m = masks.astype(np.int64).copy()
    while m.any():
        pc += m & 1
        m >>= 1
    return pc


def suffix_min_table_numpy(n: int, table: np.ndarray) -> np.ndarray:
    """Reference suffix DP, vectorised over popcount layers."""
    size = 1 << n
    h = np.full(size, np.inf, dtype=np.float64)
    h[size - 1] = 0.0
    masks = np.arange(size, dtype=np.int64)
    layers = _popcounts(masks)
    for k in range(n - 1, -1, -1):
        group = masks[layers == k]
        best = np.full(group.size, np.inf, dtype=np.float64)
        for j in range(n):
            bit = 1 << j
            free = (group & bit) == 0
            sub = group[free]
            cand = table[sub * n + j] + h[sub | bit]
            np.minimum.at(best, np.flatnonzero(free), cand)
        h[group] = best
    return h


def _enumerate_below_numpy(n, table, h, thr, limit, record):
    """Reference DFS enumeration (see the jitted twin for semantics)."""
    slack = _fast.DFS_SLACK if HAVE_FAST else 1e-9
    out_dirs: list[list[int]] = []
    out_w: list[float] = []
    path_codes = [0] * n
    path_dirs = [0] * n
    count = 0

    def suffix_total(depth):
        acc = 0.0
        for d in range(depth - 1, -1, -1):
            acc = table[path_codes[d]] + acc
        return acc

    next_j = [0] * (n + 1)
    vert = [0] * (n + 1)
    prefix = [0.0] * (n + 1)
    depth = 0
    while depth >= 0:
        if depth == n:
            total = suffix_total(n)
            if total <= thr:
                if count >= limit:
                    return -1, out_dirs, out_w
                if record:
                    out_dirs.append(path_dirs[:n].copy())
                    out_w.append(total)
                count += 1
            depth -= 1
            continue
        v = vert[depth]
        j = next_j[depth]
        advanced = False
        while j < n:
            bit = 1 << j
            if v & bit == 0:
                code = v * n + j
                g = prefix[depth] + table[code]
                nxt = v | bit
                if g + h[nxt] <= thr + slack:
                    next_j[depth] = j + 1
                    path_codes[depth] = code
                    path_dirs[depth] = j
                    depth += 1
                    vert[depth] = nxt
                    prefix[depth] = g
                    next_j[depth] = 0
                    advanced = True
                    break
            j += 1
        if not advanced:
            next_j[depth] = n
            depth -= 1
    return count, out_dirs, out_w


class _Workspaces:
    """Reusable buffers for one (n,) configuration in this process."""

    def __init__(self, n: int):
        size = 1 << n
        self.n = n
        self.dist_f = np.full(size, np.inf, dtype=np.float64)
        self.dist_b = np.full(size, np.inf, dtype=np.float64)
        self.settled_f = np.zeros(size, dtype=np.uint8)
        self.settled_b = np.zeros(size, dtype=np.uint8)
        self.touched_f = np.empty(size, dtype=np.int64)
        self.touched_b = np.empty(size, dtype=np.int64)
        self.hk = np.empty(_HEAP_CAP, dtype=np.float64)
        self.hv = np.empty(_HEAP_CAP, dtype=np.int64)
        self.h_full = np.empty(size, dtype=np.float64)


_ws_cache: dict[int, _Workspaces] = {}


def _workspaces(n: int) -> _Workspaces:
    ws = _ws_cache.get(n)
    if ws is None:
        ws = _Workspaces(n)
        _ws_cache.clear()
        _ws_cache[n] = ws
    return ws


def _table_and_h(inst: HypercubeInstance) -> tuple[np.ndarray, np.ndarray]:
    n = inst.n
    if n > TABLE_MAX_N:
        raise CapacityError(
            f"table route needs n <= {TABLE_MAX_N}, got n={n}"
        )
    if HAVE_FAST:
        ks = prf.key_schedule(inst.seed, inst.replica)
        table = np.empty((1 << n) * n, dtype=np.float64)
        _fast.fill_weight_table(n, ks, table)
        h = np.empty(1 << n, dtype=np.float64)
        _fast.suffix_dp_table(n, table, h)
    else:
        table = prf.weight_table(inst.seed, inst.replica, n)
        h = suffix_min_table_numpy(n, table)
    return table, h


def suffix_min_table(inst: HypercubeInstance) -> np.ndarray:
    """Minimum remaining weight to the all-ones vertex, per vertex."""
    return _table_and_h(inst)[1]


def first_passage_time(inst: HypercubeInstance, *, method: str = "auto") -> float:
    """Minimum total weight over all oriented 0-to-1 paths.

    ``method`` is one of ``auto``, ``table``, ``bidir``.  All methods
    are exact; ``bidir`` differs from ``table`` only by float
    association noise in the final sum (at most a few ulps).
    """
    n = inst.n
    if method == "auto":
        method = "bidir" if (HAVE_FAST and n >= _BIDIR_MIN_N) else "table"
    if method == "table":
        return float(suffix_min_table(inst)[0])
    if method != "bidir":
        raise ValueError(f"unknown method {method!r}")
    if not HAVE_FAST:
        raise CapacityError("bidirectional search requires the jitted kernels")
    out = np.empty(1, dtype=np.float64)
    ws = _workspaces(n)
    _fast.batch_fpt_bidir(
        n, inst.seed, inst.replica, 1, DEFAULT_HORIZON, out,
        ws.dist_f, ws.dist_b, ws.settled_f, ws.settled_b,
        ws.touched_f, ws.touched_b, ws.hk, ws.hv, ws.h_full,
    )
    return float(out[0])


@dataclass
class ExtremalSet:
    """Paths at most ``threshold`` heavy, with their exact totals."""

    threshold: float
    paths: list[tuple[PathPerm, float]]

    @property
    def count(self) -> int:
        return len(self.paths)


def extremal_paths(
    inst: HypercubeInstance, a: float, *, limit: int = 1_000_000
) -> ExtremalSet:
    """Enumerate paths with total weight <= 1 + a/n, sorted by weight."""
    n = inst.n
    thr = 1.0 + a / n
    table, h = _table_and_h(inst)
    if HAVE_FAST:
        out_dirs = np.empty((limit, n), dtype=np.int64)
        out_w = np.empty(limit, dtype=np.float64)
        cnt = _fast.enumerate_below_table(n, table, h, thr, limit, out_dirs, out_w)
        if cnt < 0:
            raise CapacityError(f"more than {limit} extremal paths")
        pairs = [
            (PathPerm(out_dirs[i]), float(out_w[i])) for i in range(cnt)
        ]
    else:
        cnt, dirs, ws = _enumerate_below_numpy(n, table, h, thr, limit, True)
        if cnt < 0:
            raise CapacityError(f"more than {limit} extremal paths")
        pairs = [(PathPerm(d), float(w)) for d, w in zip(dirs, ws)]
    pairs.sort(key=lambda t: (t[1], t[0].order))
    return ExtremalSet(threshold=thr, paths=pairs)


def count_extremal(
    inst: HypercubeInstance, a: float, *, limit: int = 100_000_000
) -> int:
    """Number of paths with total weight <= 1 + a/n."""
    n = inst.n
    thr = 1.0 + a / n
    table, h = _table_and_h(inst)
    if HAVE_FAST:
        cnt = _fast.count_below_table(n, table, h, thr, limit)
    else:
        cnt, _, _ = _enumerate_below_numpy(n, table, h, thr, limit, False)
    if cnt < 0:
        raise CapacityError(f"more than {limit} extremal paths")
    return int(cnt)


def _simulate_chunk(args):
    (n, seed, rep0, nrep, a_values, want_counts, method, horizon, limit) = args
    thresholds = np.array([1.0 + a / n for a in a_values], dtype=np.float64)
    out_m = np.empty(nrep, dtype=np.float64)
    out_counts = np.full((nrep, len(a_values)), -1, dtype=np.int64)
    if method == "bidir":
        ws = _workspaces(n)
        _fast.batch_fpt_bidir(
            n, seed, rep0, nrep, horizon, out_m,
            ws.dist_f, ws.dist_b, ws.settled_f, ws.settled_b,
            ws.touched_f, ws.touched_b, ws.hk, ws.hv, ws.h_full,
        )
    elif HAVE_FAST:
        table = np.empty((1 << n) * n, dtype=np.float64)
        h = np.empty(1 << n, dtype=np.float64)
        _fast.batch_simulate_table(
            n, seed, rep0, nrep, thresholds, table, h, out_m, out_counts, limit
        )
        if want_counts and (out_counts < 0).any():
            raise CapacityError(f"more than {limit} extremal paths in a replica")
    else:
        for i in range(nrep):
            inst = HypercubeInstance(n, seed, rep0 + i)
            table, h = _table_and_h(inst)
            out_m[i] = h[0]
            for t, thr in enumerate(thresholds):
                c, _, _ = _enumerate_below_numpy(n, table, h, thr, limit, False)
                if c < 0:
                    raise CapacityError(
                        f"more than {limit} extremal paths in a replica"
                    )
                out_counts[i, t] = c
    if not want_counts:
        out_counts = out_counts[:, :0]
    return rep0, out_m, out_counts


def simulate_batch(
    n: int,
    seed: int,
    replicas: int,
    *,
    a_values: tuple[float, ...] = (0.0,),
    counts: bool = True,
    start_replica: int = 0,
    method: str = "auto",
    horizon: float = DEFAULT_HORIZON,
    count_limit: int = 100_000_000,
    workers: int = 1,
) -> dict:
    """Optima (and extremal counts) for a contiguous replica range.

    Returns a dict with ``replica`` (int64), ``m`` (float64) and,
    when ``counts`` is set, ``counts`` of shape (replicas, len(a_values)).
    Output is a pure function of the arguments; ``workers`` only
    changes wall time, never bytes.
    """
    if replicas < 0:
        raise ValueError("replicas must be nonnegative")
    if method == "auto":
        if counts or not HAVE_FAST or n < _BIDIR_MIN_N:
            method = "table"
        else:
            method = "bidir"
    if method == "bidir" and counts:
        raise ValueError("extremal counts require the table route")
    if method == "bidir" and not HAVE_FAST:
        raise CapacityError("bidirectional search requires the jitted kernels")
    if method == "table" and n > TABLE_MAX_N:
        raise CapacityError(f"table route needs n <= {TABLE_MAX_N}")

    chunks = _plan_chunks(start_replica, replicas, workers)
    args = [
        (n, seed, rep0, nrep, tuple(a_values), counts, method, horizon, count_limit)
        for rep0, nrep in chunks
    ]
    if workers <= 1 or len(args) <= 1:
        results = [_simulate_chunk(a) for a in args]
    else:
        import multiprocessing as mp

        with mp.get_context("fork").Pool(processes=workers) as pool:
            results = pool.map(_simulate_chunk, args)
    results.sort(key=lambda t: t[0])
    out = {
        "replica": np.arange(start_replica, start_replica + replicas, dtype=np.int64),
        "m": np.concatenate([r[1] for r in results]) if results else np.empty(0),
    }
    if counts:
        out["counts"] = (
            np.concatenate([r[2] for r in results], axis=0)
            if results
            else np.empty((0, len(a_values)), dtype=np.int64)
        )
    return out


def _plan_chunks(start: int, total: int, workers: int) -> list[tuple[int, int]]:
    if total == 0:
        return []
    per = max(1, total // max(1, workers * 4))
    chunks = []
    pos = start
    end = start + total
    while pos < end:
        take = min(per, end - pos)
        chunks.append((pos, take))
        pos += take
    return chunks
