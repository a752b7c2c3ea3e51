"""Subspaces of F_q^n via parity-check matrices in reduced row echelon form.

RREF normal forms make the codimension-c enumeration a true enumeration
(one matrix per subspace, Gaussian-binomial many), which the exhaustive
smoothing oracle relies on.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property
from typing import Iterator

import numpy as np

from .bohr import BohrSet
from .groups import Group, GSet, _is_prime


def check_prime_power_group(group: Group) -> int:
    """Require orders (q, ..., q) with q prime; returns q."""
    q = group.orders[0]
    if any(m != q for m in group.orders) or not _is_prime(q):
        raise ValueError(f"{group.spec_string()} is not of the form F_q^n with q prime")
    return q


@dataclass(frozen=True)
class Subspace:
    """Kernel of a parity-check matrix H (rows = characters vanishing on V)."""

    group: Group
    checks: tuple[tuple[int, ...], ...]  # RREF rows over F_q

    @property
    def codim(self) -> int:
        return len(self.checks)

    @property
    def dim(self) -> int:
        return self.group.rank - self.codim

    @cached_property
    def members(self) -> GSet:
        g = self.group
        q = g.orders[0]
        mask = np.ones(g.size, dtype=bool)
        coords = g.coords_table
        for row in self.checks:
            mask &= (coords @ np.asarray(row, dtype=np.int64)) % q == 0
        return GSet(g, mask)

    @property
    def size(self) -> int:
        return self.members.card

    def to_bohr(self) -> BohrSet:
        """The same subgroup as a zero-width Bohr set."""
        return BohrSet(self.group, list(self.checks), [0.0] * self.codim)

    def basis(self) -> list[tuple[int, ...]]:
        """Null-space basis of the RREF check matrix, one vector per free column."""
        g = self.group
        q = g.orders[0]
        n = g.rank
        pivots = [next(j for j in range(n) if row[j] != 0) for row in self.checks]
        free = [j for j in range(n) if j not in pivots]
        out = []
        for fcol in free:
            vec = [0] * n
            vec[fcol] = 1
            for i, p in enumerate(pivots):
                vec[p] = (-self.checks[i][fcol]) % q
            out.append(tuple(vec))
        return out

    def as_group(self) -> tuple[Group, np.ndarray]:
        """(F_q^dim, embed) where embed[i] is the parent index of the i-th
        coefficient vector over the null-space basis; a bijection onto members."""
        g = self.group
        q = g.orders[0]
        sub = Group([q] * self.dim) if self.dim > 0 else Group([1])
        basis = self.basis()
        if self.dim == 0:
            return sub, np.zeros(1, dtype=np.int64)
        bmat = np.asarray(basis, dtype=np.int64)  # (dim, n)
        coeffs = sub.coords_table[:, : self.dim]
        parent_coords = (coeffs @ bmat) % q
        embed = parent_coords @ g.strides
        return sub, embed.astype(np.int64)

    def to_json_obj(self) -> dict:
        return {"group": self.group.spec_string(), "checks": [list(r) for r in self.checks]}


def rref_matrices(n: int, q: int, c: int) -> Iterator[tuple[tuple[int, ...], ...]]:
    """All c x n matrices over F_q in reduced row echelon form without zero
    rows, enumerated deterministically (pivot columns lexicographic, free
    entries counting in base q)."""
    if c == 0:
        yield ()
        return
    if c > n:
        return
    for pivots in itertools.combinations(range(n), c):
        free_positions = [
            (i, j)
            for i in range(c)
            for j in range(n)
            if j > pivots[i] and j not in pivots
        ]
        for values in itertools.product(range(q), repeat=len(free_positions)):
            rows = [[0] * n for _ in range(c)]
            for i, p in enumerate(pivots):
                rows[i][p] = 1
            for (i, j), v in zip(free_positions, values):
                rows[i][j] = v
            yield tuple(tuple(r) for r in rows)


def enumerate_subspaces(group: Group, codim: int) -> Iterator[Subspace]:
    q = check_prime_power_group(group)
    for checks in rref_matrices(group.rank, q, codim):
        yield Subspace(group, checks)


def gaussian_binomial(n: int, k: int, q: int) -> int:
    """Number of codimension-k subspaces of F_q^n."""
    num = den = 1
    for i in range(k):
        num *= q ** (n - i) - 1
        den *= q ** (i + 1) - 1
    return num // den
