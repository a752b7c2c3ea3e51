"""Finite abelian groups as products of cyclic factors, and their subsets.

Elements of Z_{m_1} x ... x Z_{m_r} are indexed 0..|G|-1 lexicographically
over coordinate tuples (C order, last coordinate fastest). All arrays in the
package use this indexing, which makes golden files deterministic.

A GSet is a subset held as a boolean bitmap with cached cardinality; it is the
source of normalised indicator measures and of exact 3-AP counts.
"""

from __future__ import annotations

import math
import os
import re
from functools import reduce
from typing import Iterable, Sequence

import numpy as np

from . import _kernels

DEFAULT_SIZE_CAP = 1 << 26


class GroupSpecError(ValueError):
    """Malformed group spec string, zero order, or size over the cell cap."""


class GroupMismatchError(ValueError):
    """Two operands live on different groups."""


def size_cap() -> int:
    env = os.environ.get("KM_SIZE_CAP")
    return int(env) if env else DEFAULT_SIZE_CAP


_FACTOR_RE = re.compile(r"([ZF])(\d+)(?:\^(\d+))?$")


class Group:
    """Product of cyclic groups Z_{m_1} x ... x Z_{m_r}."""

    __slots__ = ("orders", "size", "rank", "_coords", "_neg", "_strides", "_phase_lcm")

    def __init__(self, orders: Sequence[int], cap: int | None = None):
        orders = tuple(int(m) for m in orders)
        if not orders or any(m < 1 for m in orders):
            raise GroupSpecError(f"cyclic orders must all be >= 1, got {orders}")
        size = math.prod(orders)
        if size > (cap if cap is not None else size_cap()):
            raise GroupSpecError(f"group size {size} exceeds the cell cap")
        self.orders = orders
        self.size = size
        self.rank = len(orders)
        self._coords = None
        self._neg = None
        self._strides = None
        self._phase_lcm = None

    # -- identity ---------------------------------------------------------

    def __eq__(self, other):
        return isinstance(other, Group) and self.orders == other.orders

    def __hash__(self):
        return hash(self.orders)

    def __repr__(self):
        return f"Group({self.spec_string()})"

    def spec_string(self) -> str:
        """Canonical spec string, collapsing equal adjacent factors to powers."""
        parts = []
        i = 0
        while i < self.rank:
            j = i
            while j < self.rank and self.orders[j] == self.orders[i]:
                j += 1
            n = j - i
            parts.append(f"Z{self.orders[i]}" + (f"^{n}" if n > 1 else ""))
            i = j
        return "x".join(parts)

    # -- index arithmetic ---------------------------------------------------

    @property
    def strides(self) -> np.ndarray:
        if self._strides is None:
            s = np.ones(self.rank, dtype=np.int64)
            for j in range(self.rank - 2, -1, -1):
                s[j] = s[j + 1] * self.orders[j + 1]
            self._strides = s
        return self._strides

    @property
    def coords_table(self) -> np.ndarray:
        """(|G|, rank) int64 table idx -> coordinate tuple."""
        if self._coords is None:
            idx = np.arange(self.size, dtype=np.int64)
            cols = []
            for j in range(self.rank):
                cols.append((idx // self.strides[j]) % self.orders[j])
            self._coords = np.stack(cols, axis=1)
        return self._coords

    @property
    def neg_table(self) -> np.ndarray:
        if self._neg is None:
            c = (-self.coords_table) % np.asarray(self.orders, dtype=np.int64)
            self._neg = c @ self.strides
        return self._neg

    @property
    def phase_lcm(self) -> int:
        if self._phase_lcm is None:
            self._phase_lcm = reduce(math.lcm, self.orders, 1)
        return self._phase_lcm

    def index(self, coords: Sequence[int]) -> int:
        if len(coords) != self.rank:
            raise ValueError(f"element {coords} has rank {len(coords)}, expected {self.rank}")
        idx = 0
        for c, m, s in zip(coords, self.orders, self.strides):
            idx += (int(c) % m) * int(s)
        return idx

    def coords(self, idx: int) -> tuple[int, ...]:
        return tuple(int(v) for v in self.coords_table[idx])

    def add(self, a: int, b: int) -> int:
        ca = self.coords_table[a]
        cb = self.coords_table[b]
        return int(((ca + cb) % np.asarray(self.orders, dtype=np.int64)) @ self.strides)

    def neg(self, a: int) -> int:
        return int(self.neg_table[a])

    def sub(self, a: int, b: int) -> int:
        return self.add(a, self.neg(b))

    def scale_indices(self, k: int, idx: np.ndarray | int) -> np.ndarray | int:
        """k * x for an index or index array (no coprimality requirement here)."""
        scalar = np.isscalar(idx)
        arr = np.atleast_1d(np.asarray(idx, dtype=np.int64))
        c = (self.coords_table[arr] * k) % np.asarray(self.orders, dtype=np.int64)
        out = c @ self.strides
        return int(out[0]) if scalar else out

    def roll_shift(self, idx: int, negate: bool = False) -> tuple[int, ...]:
        """np.roll shift tuple that maps f(x) to f(x - idx) (or f(x + idx))."""
        c = self.coords(idx)
        return tuple(-v for v in c) if negate else c


def make_group(spec: str, cap: int | None = None) -> Group:
    """Parse a spec string: factor ("x" factor)*, factor = Z INT ["^" INT].

    "Fq^n" is an alias for "Zq^n" with q required prime.
    """
    if not isinstance(spec, str) or not spec.strip():
        raise GroupSpecError("empty group spec")
    orders: list[int] = []
    for part in spec.strip().split("x"):
        m = _FACTOR_RE.match(part.strip())
        if not m:
            raise GroupSpecError(f"cannot parse group factor {part!r}")
        letter, base, power = m.group(1), int(m.group(2)), int(m.group(3) or 1)
        if base == 0:
            raise GroupSpecError("cyclic order 0 is not a group")
        if letter == "F" and not _is_prime(base):
            raise GroupSpecError(f"F{base} requires a prime field order")
        orders.extend([base] * power)
    return Group(orders, cap=cap)


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    f = 3
    while f * f <= n:
        if n % f == 0:
            return False
        f += 2
    return True


class GSet:
    """Subset of a group as a bitmap with cached cardinality."""

    __slots__ = ("group", "mask", "card")

    def __init__(self, group: Group, mask: np.ndarray):
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != (group.size,):
            raise ValueError("bitmap length must equal the group size")
        self.group = group
        self.mask = mask
        self.card = int(np.count_nonzero(mask))

    # -- constructors -------------------------------------------------------

    @classmethod
    def from_indices(cls, group: Group, indices: Iterable[int]) -> "GSet":
        mask = np.zeros(group.size, dtype=bool)
        idx = np.asarray(list(indices), dtype=np.int64)
        if idx.size:
            if idx.min() < 0 or idx.max() >= group.size:
                raise ValueError("index out of range")
            mask[idx] = True
        return cls(group, mask)

    @classmethod
    def from_elements(cls, group: Group, elements: Iterable[Sequence[int]]) -> "GSet":
        return cls.from_indices(group, [group.index(e) for e in elements])

    @classmethod
    def full(cls, group: Group) -> "GSet":
        return cls(group, np.ones(group.size, dtype=bool))

    @classmethod
    def empty(cls, group: Group) -> "GSet":
        return cls(group, np.zeros(group.size, dtype=bool))

    # -- basics --------------------------------------------------------------

    @property
    def density(self) -> float:
        return self.card / self.group.size

    def indices(self) -> np.ndarray:
        return np.flatnonzero(self.mask)

    def elements(self) -> list[tuple[int, ...]]:
        return [self.group.coords(i) for i in self.indices()]

    def __contains__(self, idx: int) -> bool:
        return bool(self.mask[idx])

    def __eq__(self, other):
        return (
            isinstance(other, GSet)
            and self.group == other.group
            and np.array_equal(self.mask, other.mask)
        )

    def __len__(self):
        return self.card

    def __repr__(self):
        return f"GSet({self.group.spec_string()}, |A|={self.card})"

    def _check_same(self, other: "GSet"):
        if self.group != other.group:
            raise GroupMismatchError("sets live on different groups")

    def intersect(self, other: "GSet") -> "GSet":
        self._check_same(other)
        return GSet(self.group, self.mask & other.mask)

    def union(self, other: "GSet") -> "GSet":
        self._check_same(other)
        return GSet(self.group, self.mask | other.mask)

    def complement(self) -> "GSet":
        return GSet(self.group, ~self.mask)

    def is_subset(self, other: "GSet") -> bool:
        self._check_same(other)
        return not np.any(self.mask & ~other.mask)

    def translate(self, idx: int) -> "GSet":
        """A + idx."""
        g = self.group
        nd = self.mask.reshape(g.orders)
        out = np.roll(nd, g.roll_shift(idx), axis=tuple(range(g.rank)))
        return GSet(g, out.reshape(-1))

    def negate(self) -> "GSet":
        """-A."""
        mask = np.zeros(self.group.size, dtype=bool)
        mask[self.group.neg_table[self.indices()]] = True
        return GSet(self.group, mask)

    # -- json ----------------------------------------------------------------

    def to_json_obj(self) -> dict:
        return {
            "group": self.group.spec_string(),
            "elements": [list(e) for e in self.elements()],
        }

    @classmethod
    def from_json_obj(cls, obj: dict) -> "GSet":
        group = make_group(obj["group"])
        elements = obj["elements"]
        seen = set()
        orders = group.orders
        for e in elements:
            t = tuple(int(v) for v in e)
            if len(t) != group.rank:
                raise ValueError(f"element {e} has wrong rank for {group.spec_string()}")
            if any(not (0 <= v < m) for v, m in zip(t, orders)):
                raise ValueError(f"element {e} is not a reduced residue tuple")
            if t in seen:
                raise ValueError(f"duplicate element {e}")
            seen.add(t)
        return cls.from_elements(group, elements)


def dilate_set(A: GSet, k: int) -> GSet:
    """{k*a : a in A}; requires gcd(k, |G|) = 1 so cardinality is preserved."""
    g = A.group
    if math.gcd(k, g.size) != 1:
        raise ValueError(f"dilation by {k} needs gcd(k, |G|) = 1 (|G| = {g.size})")
    mask = np.zeros(g.size, dtype=bool)
    mask[g.scale_indices(k, A.indices())] = True
    return GSet(g, mask)


def sumset(A: GSet, B: GSet) -> GSet:
    """A + B = {a + b}."""
    A._check_same(B)
    g = A.group
    if A.card == 0 or B.card == 0:
        return GSet.empty(g)
    # iterate over the smaller set's translates
    small, big = (A, B) if A.card <= B.card else (B, A)
    nd = big.mask.reshape(g.orders)
    out = np.zeros(g.orders, dtype=bool)
    axes = tuple(range(g.rank))
    for i in small.indices():
        out |= np.roll(nd, g.roll_shift(int(i)), axis=axes)
    return GSet(g, out.reshape(-1))


def count_3aps(A: GSet) -> int:
    """Ordered pairs (x, d) in G^2 with x, x+d, x+2d all in A (d = 0 included)."""
    g = A.group
    mask = A.mask.astype(np.uint8)
    return int(
        _kernels.count_3aps_mask(mask, g.coords_table, np.asarray(g.orders, dtype=np.int64), g.strides)
    )
