"""Bohr sets: construction, dilates, regularity certification, joins,
pointwise dilation k.B, size bounds and AP extraction.

B = Bohr_w(Gamma) = {x : |1 - gamma(x)| <= w(gamma) for all gamma in Gamma}.

Membership reduces to one threshold array: with per-character terms
min(|1-gamma(x)|/w, 2/w) (and 0/inf for w = 0), the dilate B_s is exactly
{x : t(x) <= s}, including width clamping at 2 and s > 1. Regularity is then
decided exactly by scanning the breakpoints of t, never by sampling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .groups import Group, GroupMismatchError, GSet, make_group, _is_prime

MEMBER_TOL = 1e-12  # relative tolerance at width boundaries; ties are members
ZERO_WIDTH_TOL = 1e-9  # |1-gamma(x)| below this counts as exactly 1
DEFAULT_REG_CONST = 100.0


@dataclass(frozen=True)
class APRun:
    """Arithmetic progression start + j*step, 0 <= j < length (group elements)."""

    start: tuple[int, ...]
    step: tuple[int, ...]
    length: int

    def terms(self, group: Group) -> list[int]:
        s = group.index(self.start)
        d = group.index(self.step)
        out = []
        x = s
        for _ in range(self.length):
            out.append(x)
            x = group.add(x, d)
        return out

    def to_json_obj(self) -> dict:
        return {"start": list(self.start), "step": list(self.step), "length": self.length}


class BohrSet:
    """Frequency set + widths + cached membership and regularity state."""

    __slots__ = ("group", "freqs", "widths", "_thresholds", "_members", "_sorted", "_reg")

    def __init__(self, group: Group, freqs: Sequence[Sequence[int]], widths: Sequence[float]):
        if any(len(f) != group.rank for f in freqs):
            raise ValueError("frequency rank must match the group rank")
        freqs = [tuple(int(c) % m for c, m in zip(f, group.orders)) for f in freqs]
        widths = [float(w) for w in widths]
        if len(freqs) != len(widths):
            raise ValueError("frequency and width lists must have equal length")
        if any(w < 0 or w > 2 for w in widths):
            raise ValueError("widths must lie in [0, 2]")
        # deduplicate identical frequencies, keeping the tighter width
        merged: dict[tuple[int, ...], float] = {}
        for f, w in zip(freqs, widths):
            merged[f] = min(w, merged.get(f, 2.0))
        self.group = group
        self.freqs = tuple(merged.keys())
        self.widths = np.asarray([merged[f] for f in self.freqs], dtype=np.float64)
        self._thresholds = None
        self._members = None
        self._sorted = None
        self._reg = None

    # -- core geometry -----------------------------------------------------

    @property
    def rank(self) -> int:
        return len(self.freqs)

    @property
    def thresholds(self) -> np.ndarray:
        """t(x) = max over Gamma of min(|1-gamma(x)|/w, 2/w); B_s = {t <= s}."""
        if self._thresholds is None:
            g = self.group
            t = np.zeros(g.size, dtype=np.float64)
            L = g.phase_lcm
            coords = g.coords_table
            for f, w in zip(self.freqs, self.widths):
                mults = np.asarray(
                    [c * (L // m) for c, m in zip(f, g.orders)], dtype=np.int64
                )
                phase = (coords @ mults) % L
                dist = 2.0 * np.abs(np.sin(np.pi * (phase / L)))
                if w <= 0.0:
                    term = np.where(dist <= ZERO_WIDTH_TOL, 0.0, np.inf)
                else:
                    term = np.minimum(dist / w, 2.0 / w)
                t = np.maximum(t, term)
            self._thresholds = t
        return self._thresholds

    def dilate_mask(self, scale: float) -> np.ndarray:
        return self.thresholds <= scale * (1.0 + MEMBER_TOL)

    def dilate_size(self, scale: float) -> int:
        if self._sorted is None:
            self._sorted = np.sort(self.thresholds[np.isfinite(self.thresholds)])
        return int(np.searchsorted(self._sorted, scale * (1.0 + MEMBER_TOL), side="right"))

    @property
    def members(self) -> GSet:
        if self._members is None:
            self._members = GSet(self.group, self.dilate_mask(1.0))
        return self._members

    @property
    def size(self) -> int:
        return self.members.card

    def __repr__(self):
        return f"BohrSet({self.group.spec_string()}, rank={self.rank}, size={self.size})"

    # -- json -----------------------------------------------------------------

    def to_json_obj(self) -> dict:
        return {
            "group": self.group.spec_string(),
            "freqs": [list(f) for f in self.freqs],
            "widths": [float(w) for w in self.widths],
        }

    @classmethod
    def from_json_obj(cls, obj: dict) -> "BohrSet":
        group = make_group(obj["group"])
        return cls(group, obj["freqs"], obj["widths"])


def bohr_build(group: Group, freqs: Sequence[Sequence[int]], widths: Sequence[float]) -> BohrSet:
    return BohrSet(group, freqs, widths)


def whole_group_bohr(group: Group) -> BohrSet:
    """Rank-0 Bohr set: no constraints, member set = G."""
    return BohrSet(group, [], [])


def dilate(B: BohrSet, rho: float) -> BohrSet:
    """B_rho: same frequencies, widths rho*w clamped to [0, 2]."""
    if rho <= 0:
        raise ValueError("dilation factor must be positive")
    out = BohrSet(B.group, B.freqs, np.minimum(B.widths * rho, 2.0))
    if rho <= 1.0 and not np.any(B.widths * rho > 2.0):
        # pure threshold rescale: reuse the parent's geometry
        out._thresholds = B.thresholds / rho
    return out


def is_regular(B: BohrSet, reg_const: float = DEFAULT_REG_CONST) -> tuple[bool, float]:
    """Exact regularity decision via breakpoint enumeration.

    Checks (1 - R d |k|)|B| <= |B_{1+k}| <= (1 + R d |k|)|B| for all
    |k| <= 1/(R d); returns (ok, margin) with margin the worst slack
    normalised by |B| (negative = certified irregular).
    """
    if B.rank == 0:
        return True, 1.0
    if B._reg is not None and B._reg[0] == reg_const:
        return B._reg[1], B._reg[2]
    d = B.rank
    R = reg_const
    K = 1.0 / (R * d)
    nB = B.size
    if nB == 0:
        # degenerate (0 not a member can't happen; only possible via inf thresholds)
        return False, -1.0
    ts = np.sort(B.thresholds[np.isfinite(B.thresholds)])
    margin = math.inf

    # upper side: jumps of S(sigma) at sigma in (1, 1+K]
    hi = np.unique(ts[(ts > 1.0 + MEMBER_TOL) & (ts <= (1.0 + K) * (1 + MEMBER_TOL))])
    for t in hi:
        kappa = t - 1.0
        s_after = B.dilate_size(float(t))
        margin = min(margin, ((1.0 + R * d * kappa) * nB - s_after) / nB)
    if hi.size == 0:
        margin = min(margin, ((1.0 + R * d * K) * nB - nB) / nB)

    # lower side: pieces of S(sigma) for sigma in [1-K, 1)
    # lower side: S drops as sigma passes below a threshold t in (1-K, 1];
    # just below the drop, S = #{thresholds < t} and the bound is 1 - Rd(1-t)
    lo = np.unique(ts[(ts > (1.0 - K) * (1 - MEMBER_TOL)) & (ts <= 1.0 + MEMBER_TOL)])
    for t in lo:
        s_below = int(np.searchsorted(ts, float(t) * (1 - 2 * MEMBER_TOL), side="right"))
        kappa = max(1.0 - float(t), 0.0)
        margin = min(margin, (s_below - (1.0 - R * d * kappa) * nB) / nB)
    s_bottom = B.dilate_size(1.0 - K)
    margin = min(margin, (s_bottom - (1.0 - R * d * K) * nB) / nB)

    ok = margin >= 0.0
    B._reg = (reg_const, ok, float(margin))
    return ok, float(margin)


def regularity_status(B: BohrSet, reg_const: float = DEFAULT_REG_CONST) -> str:
    ok, _ = is_regular(B, reg_const)
    return "certified-regular" if ok else "certified-irregular"


def regular_dilate(B: BohrSet, reg_const: float = DEFAULT_REG_CONST,
                   grid: int = 512) -> BohrSet:
    """Largest rho in [1/2, 1] (on a descending grid refined near breakpoints)
    with B_rho regular. A regular rho exists; failure is an internal error."""
    if B.rank == 0:
        return B
    candidates: list[float] = list(np.linspace(1.0, 0.5, grid))
    ts = B.thresholds[np.isfinite(B.thresholds)]
    bps = np.unique(ts[(ts >= 0.49) & (ts <= 2.01)])
    # midpoints between consecutive breakpoints often land in regular windows
    if bps.size >= 2:
        mids = (bps[1:] + bps[:-1]) / 2.0
        candidates.extend(float(m) for m in mids if 0.5 <= m <= 1.0)
    for rho in sorted(set(candidates), reverse=True):
        cand = dilate(B, float(rho))
        ok, _ = is_regular(cand, reg_const)
        if ok:
            return cand
    raise RuntimeError(
        f"no regular dilate found in [1/2, 1] for {B!r} "
        f"(rank {B.rank}, size {B.size}, reg_const {reg_const})"
    )


def freq_dilate(B: BohrSet, k: int) -> BohrSet:
    """k.B = {k x : x in B}, realised by mapping each gamma to gamma o (k^{-1} .).

    Rank, widths, sizes of every dilate, and hence regularity, carry over.
    """
    g = B.group
    if math.gcd(k, g.size) != 1:
        raise ValueError(f"pointwise dilation by {k} needs gcd(k, |G|) = 1")
    new_freqs = []
    for f in B.freqs:
        new_freqs.append(tuple((c * pow(k, -1, m)) % m for c, m in zip(f, g.orders)))
    out = BohrSet(g, new_freqs, B.widths.copy())
    out._reg = B._reg
    return out


def join(B: BohrSet, B2: BohrSet) -> BohrSet:
    """Frequency union with min widths (missing widths default to 2);
    the member set is exactly the intersection."""
    if B.group != B2.group:
        raise GroupMismatchError("joins need a common group")
    freqs = list(B.freqs) + list(B2.freqs)
    widths = list(B.widths) + list(B2.widths)
    return BohrSet(B.group, freqs, widths)


def extract_ap(B: BohrSet, scan_cap: int = 4096) -> APRun:
    """An AP inside B of length >= floor(1/rho), rho = 4 (2/|B|)^{1/d}
    (the prime-modulus guarantee); the scan returns the longest run through 0
    over candidate steps, which can be much longer.
    """
    g = B.group
    if B.rank == 0:
        return APRun(g.coords(0), g.coords(1 % g.size) if g.size > 1 else g.coords(0),
                     g.size)
    if not (g.rank == 1 and _is_prime(g.orders[0])):
        raise ValueError("the AP-extraction guarantee needs a prime cyclic group")
    nB = B.size
    if nB <= 1:
        return APRun(g.coords(0), g.coords(0), 1)
    d = B.rank
    rho = 4.0 * (2.0 / nB) ** (1.0 / d)

    if nB <= scan_cap:
        steps = [int(i) for i in B.members.indices() if i != 0]
    else:
        steps_set: set[int] = set()
        r = min(rho, 1.0)
        for _ in range(6):
            idx = np.flatnonzero(B.dilate_mask(r))
            steps_set.update(int(i) for i in idx if i != 0)
            if len(steps_set) > 64:
                break
            r *= 1.5
        steps = sorted(steps_set)

    best = APRun(g.coords(0), g.coords(0), 1)
    mask = B.members.mask
    for x in steps:
        fwd = 0
        z = x
        while mask[z] and fwd < g.size:
            fwd += 1
            z = g.add(z, x)
        back = 0
        z = g.neg(x)
        while mask[z] and back < g.size:
            back += 1
            z = g.sub(z, x)
        length = min(fwd + back + 1, g.size)
        if length > best.length:
            start_idx = (-back * x) % g.size
            best = APRun(g.coords(start_idx), g.coords(x), length)
    return best
