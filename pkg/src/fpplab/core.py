"""Hypercube instances, oriented paths, and edge weights.

The model: on the directed n-cube, each edge points from a vertex to
a neighbour with one extra coordinate set.  Oriented paths from 0 to
the all-ones vertex are in bijection with permutations of the n
coordinate directions.  Edge weights are i.i.d. standard exponentials
drawn from the frozen stream in :mod:`fpplab.prf`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from . import prf

# Full weight tables are materialised up to this dimension (n = 24 is
# a 1.5 GB table; beyond that the engine streams blocks instead).
TABLE_MAX_N = 24

# Edge codes tail * n + dir must stay within uint64; n = 59 overflows
# at the far corner.
MAX_N = 58


class CapacityError(RuntimeError):
    """A request exceeds a documented size or enumeration limit."""


@dataclass(frozen=True)
class HypercubeInstance:
    """One realisation of the random environment.

    ``n`` is the cube dimension, ``seed`` the experiment key, and
    ``replica`` the index of the independent copy.  Two instances
    agree on every edge weight iff all three fields agree.
    """

    n: int
    seed: int
    replica: int = 0

    def __post_init__(self) -> None:
        if not 1 <= self.n <= MAX_N:
            raise ValueError(f"n must be in [1, {MAX_N}], got {self.n}")

    @property
    def num_vertices(self) -> int:
        return 1 << self.n

    @property
    def num_edges(self) -> int:
        # Count includes only valid codes; the code space is 2**n * n.
        return (1 << (self.n - 1)) * self.n

    @property
    def target(self) -> int:
        return (1 << self.n) - 1


def edge_code(n: int, tail: int, direction: int) -> int:
    """Position of edge ``(tail -> tail | 1<<direction)`` in the stream."""
    return tail * n + direction


@dataclass(frozen=True)
class EdgeRef:
    """A directed edge: tail vertex bitmask plus coordinate index."""

    tail: int
    direction: int

    def head(self) -> int:
        return self.tail | (1 << self.direction)

    def code(self, n: int) -> int:
        if self.tail & (1 << self.direction):
            raise ValueError(
                f"direction {self.direction} already set in tail {self.tail:#x}"
            )
        return edge_code(n, self.tail, self.direction)


class PathPerm:
    """An oriented 0-to-1 path, stored as its direction permutation."""

    __slots__ = ("order",)

    def __init__(self, order: Sequence[int]):
        order = tuple(int(d) for d in order)
        if sorted(order) != list(range(len(order))):
            raise ValueError(f"not a permutation of 0..{len(order) - 1}: {order}")
        self.order = order

    @property
    def n(self) -> int:
        return len(self.order)

    def edges(self) -> Iterator[EdgeRef]:
        mask = 0
        for d in self.order:
            yield EdgeRef(mask, d)
            mask |= 1 << d

    def edge_codes(self) -> list[int]:
        n = self.n
        codes = []
        mask = 0
        for d in self.order:
            codes.append(edge_code(n, mask, d))
            mask |= 1 << d
        return codes

    def __repr__(self) -> str:
        return f"PathPerm({list(self.order)})"

    def __eq__(self, other) -> bool:
        return isinstance(other, PathPerm) and self.order == other.order

    def __hash__(self) -> int:
        return hash(self.order)


def shared_edges(p: PathPerm, q: PathPerm) -> int:
    """Number of directed edges the two paths have in common.

    Step k of each path uses the same edge iff the paths agree on the
    set of the first k-1 directions and on the k-th direction.
    """
    if p.n != q.n:
        raise ValueError("paths live on different cubes")
    count = 0
    mask_p = mask_q = 0
    for dp, dq in zip(p.order, q.order):
        if mask_p == mask_q and dp == dq:
            count += 1
        mask_p |= 1 << dp
        mask_q |= 1 << dq
    return count


class WeightField:
    """Edge-weight accessor for one instance, lazy or table-backed.

    Scattered queries go straight to the stream; ``table()``
    materialises the full flat array once and reuses it afterwards.
    """

    def __init__(self, instance: HypercubeInstance):
        self.instance = instance
        self._table: np.ndarray | None = None

    def table(self) -> np.ndarray:
        if self._table is None:
            inst = self.instance
            if inst.n > TABLE_MAX_N:
                raise CapacityError(
                    f"full table for n={inst.n} exceeds the memory budget"
                )
            self._table = prf.weight_table(inst.seed, inst.replica, inst.n)
        return self._table

    def weight(self, edge: EdgeRef) -> float:
        return float(self.weights([edge.code(self.instance.n)])[0])

    def weights(self, codes) -> np.ndarray:
        if self._table is not None:
            return self._table[np.asarray(codes, dtype=np.int64)]
        inst = self.instance
        return prf.edge_weights_at(inst.seed, inst.replica, codes)


def edge_weight(instance: HypercubeInstance, edge: EdgeRef) -> float:
    """Weight of a single edge (stateless convenience)."""
    return float(
        prf.edge_weights_at(instance.seed, instance.replica, [edge.code(instance.n)])[0]
    )


def suffix_sum(w: np.ndarray) -> float:
    """Canonical path total: add terms last edge first.

    Every consumer that compares path totals for exact equality (the
    suffix DP, the pruned enumerator, count thresholds) accumulates
    in this order, so ties and threshold hits are reproducible to the
    last bit.
    """
    acc = 0.0
    for k in range(len(w) - 1, -1, -1):
        acc = float(w[k]) + acc
    return acc


def path_weight(instance: HypercubeInstance, path: PathPerm) -> float:
    """Total weight along an oriented path, in canonical order."""
    if path.n != instance.n:
        raise ValueError(f"path has n={path.n}, instance has n={instance.n}")
    codes = path.edge_codes()
    w = prf.edge_weights_at(instance.seed, instance.replica, codes)
    return suffix_sum(w)


def path_weights_from_table(table: np.ndarray, n: int, perms: np.ndarray) -> np.ndarray:
    """Weights of many paths given a materialised table.

    ``perms`` is an (m, n) integer array of direction permutations.
    Totals use the canonical last-edge-first order columnwise.
    """
    perms = np.asarray(perms)
    m = perms.shape[0]
    codes = np.empty_like(perms, dtype=np.int64)
    mask = np.zeros(m, dtype=np.int64)
    for k in range(n):
        d = perms[:, k].astype(np.int64)
        codes[:, k] = mask * n + d
        mask |= np.int64(1) << d
    w = table[codes]
    acc = np.zeros(m, dtype=np.float64)
    for k in range(n - 1, -1, -1):
        acc = w[:, k] + acc
    return acc
