"""Real-valued functions on a finite abelian group under normalised counting
measure: convolution f*g(x) = E_y f(y)g(x-y), difference convolution
f~g(x) = E_y f(y)g(x+y), weighted inner products and L^p norms.

Two arithmetic routes coexist deliberately:

* an exact route for indicator-derived functions, held as an integer
  numerator array plus one rational scale (value = num/den), convolved by
  integer pair counting;
* a float route (double precision, FFT-based convolution) for everything
  else.

The two are independent implementations and the test-suite holds them to
1e-12 per-cell agreement.
"""

from __future__ import annotations

import math
import os
from fractions import Fraction
from typing import Optional, Union

import numpy as np

from . import _kernels
from .groups import Group, GroupMismatchError, GSet

DEFAULT_EXACT_CONV_CAP = 1 << 13

_INT64_SAFE = 2**62


def exact_conv_cap() -> int:
    env = os.environ.get("KM_EXACT_CAP")
    return int(env) if env else DEFAULT_EXACT_CONV_CAP


class FuncR:
    """Dense real function on a group; optionally carries an exact rational
    representation (num array over a common positive denominator)."""

    __slots__ = ("group", "values", "num", "den")

    def __init__(self, group: Group, values: np.ndarray,
                 num: Optional[np.ndarray] = None, den: int = 1):
        self.group = group
        self.values = np.asarray(values, dtype=np.float64)
        if self.values.shape != (group.size,):
            raise ValueError("value array length must equal the group size")
        self.num = num
        self.den = int(den)

    # -- constructors --------------------------------------------------------

    @classmethod
    def from_exact(cls, group: Group, num: np.ndarray, den: int) -> "FuncR":
        den = int(den)
        if den <= 0:
            raise ValueError("denominator must be positive")
        num, den = _reduce(num, den)
        values = _num_to_float(num, den)
        return cls(group, values, num=num, den=den)

    @classmethod
    def indicator(cls, A: GSet) -> "FuncR":
        return cls.from_exact(A.group, A.mask.astype(np.int64), 1)

    @classmethod
    def constant(cls, group: Group, value: Union[int, Fraction]) -> "FuncR":
        q = Fraction(value)
        num = np.full(group.size, int(q.numerator), dtype=np.int64)
        return cls.from_exact(group, num, q.denominator)

    @classmethod
    def from_values(cls, group: Group, values) -> "FuncR":
        return cls(group, np.asarray(values, dtype=np.float64))

    # -- basics ----------------------------------------------------------------

    @property
    def exact(self) -> bool:
        return self.num is not None

    def as_float(self) -> "FuncR":
        """Same values with the exact tag stripped (forces the float route)."""
        return FuncR(self.group, self.values.copy())

    def value_exact(self, idx: int) -> Fraction:
        self._require_exact()
        return Fraction(int(self.num[idx]), self.den)

    def _require_exact(self):
        if not self.exact:
            raise ValueError("operation requires the exact representation")

    def _check_same(self, other: "FuncR"):
        if self.group != other.group:
            raise GroupMismatchError("functions live on different groups")

    def __repr__(self):
        tag = "exact" if self.exact else "float"
        return f"FuncR({self.group.spec_string()}, {tag})"

    # -- pointwise arithmetic ---------------------------------------------------

    def add(self, other: "FuncR") -> "FuncR":
        self._check_same(other)
        if self.exact and other.exact:
            den = _lcm(self.den, other.den)
            num = _widen(self.num, den // self.den) + _widen(other.num, den // other.den)
            return FuncR.from_exact(self.group, num, den)
        return FuncR(self.group, self.values + other.values)

    def sub(self, other: "FuncR") -> "FuncR":
        return self.add(other.scale(-1))

    def add_scalar(self, value: Union[int, Fraction]) -> "FuncR":
        return self.add(FuncR.constant(self.group, value))

    def scale(self, q: Union[int, Fraction]) -> "FuncR":
        q = Fraction(q)
        if self.exact:
            num = _mul_scalar(self.num, int(q.numerator))
            return FuncR.from_exact(self.group, num, self.den * q.denominator)
        return FuncR(self.group, self.values * float(q))

    def mul(self, other: "FuncR") -> "FuncR":
        self._check_same(other)
        if self.exact and other.exact:
            num = _mul_arrays(self.num, other.num)
            return FuncR.from_exact(self.group, num, self.den * other.den)
        return FuncR(self.group, self.values * other.values)

    def abs(self) -> "FuncR":
        if self.exact:
            return FuncR.from_exact(self.group, np.abs(self.num), self.den)
        return FuncR(self.group, np.abs(self.values))

    def mean(self) -> float:
        return float(np.mean(self.values))

    def mean_exact(self) -> Fraction:
        self._require_exact()
        total = int(self.num.sum(dtype=object))
        return Fraction(total, self.den * self.group.size)


class ProbMeasure:
    """Nonnegative FuncR with mean 1 (the paper-normalised total mass)."""

    __slots__ = ("func",)

    MEAN_TOL = 1e-12

    def __init__(self, func: FuncR):
        if np.min(func.values) < -1e-12:
            raise ValueError("probability measure must be nonnegative")
        if abs(func.mean() - 1.0) > self.MEAN_TOL:
            raise ValueError(f"measure mean {func.mean()} is not 1")
        self.func = func

    @property
    def group(self) -> Group:
        return self.func.group

    @property
    def values(self) -> np.ndarray:
        return self.func.values

    @property
    def exact(self) -> bool:
        return self.func.exact

    def support(self) -> np.ndarray:
        return self.values > 1e-14

    def density_of(self, A: GSet) -> float:
        """mu(A) = E_x mu(x) 1_A(x)."""
        return float(np.mean(self.values[A.mask])) * A.card / self.group.size

    def __repr__(self):
        return f"ProbMeasure({self.func!r})"


def uniform(group: Group) -> ProbMeasure:
    return ProbMeasure(FuncR.constant(group, 1))


def mu_of_set(A: GSet) -> ProbMeasure:
    """Normalised indicator: (|G|/|A|) 1_A, an exact probability measure."""
    if A.card == 0:
        raise ValueError("mu of the empty set is undefined")
    num = A.mask.astype(np.int64) * np.int64(A.group.size)
    return ProbMeasure(FuncR.from_exact(A.group, num, A.card))


FuncLike = Union[FuncR, ProbMeasure]


def _as_func(f: FuncLike) -> FuncR:
    return f.func if isinstance(f, ProbMeasure) else f


# -- convolution ----------------------------------------------------------------


def conv(f: FuncLike, g: FuncLike, force_float: bool = False) -> FuncR:
    """(f*g)(x) = E_y f(y) g(x-y)."""
    return _conv_impl(_as_func(f), _as_func(g), corr=False, force_float=force_float)


def diffconv(f: FuncLike, g: FuncLike, force_float: bool = False) -> FuncR:
    """(f~g)(x) = E_y f(y) g(x+y)."""
    return _conv_impl(_as_func(f), _as_func(g), corr=True, force_float=force_float)


def _conv_impl(f: FuncR, g: FuncR, corr: bool, force_float: bool) -> FuncR:
    f._check_same(g)
    grp = f.group
    if (not force_float) and f.exact and g.exact and grp.size <= exact_conv_cap():
        num = _conv_exact(f.num, g.num, grp, corr)
        return FuncR.from_exact(grp, num, f.den * g.den * grp.size)
    return FuncR(grp, _conv_float(f.values, g.values, grp, corr))


def _conv_exact(fn: np.ndarray, gn: np.ndarray, grp: Group, corr: bool) -> np.ndarray:
    max_f = int(np.max(np.abs(fn))) if fn.size else 0
    max_g = int(np.max(np.abs(gn))) if gn.size else 0
    if (
        fn.dtype != object
        and gn.dtype != object
        and max_f * max_g * grp.size < _INT64_SAFE
    ):
        return _kernels.conv_int64(
            np.ascontiguousarray(fn, dtype=np.int64),
            np.ascontiguousarray(gn, dtype=np.int64),
            grp.coords_table,
            np.asarray(grp.orders, dtype=np.int64),
            grp.strides,
            corr,
        )
    # big-integer fallback (rare: deep convolution chains)
    f_obj = fn.astype(object)
    g_nd = gn.astype(object).reshape(grp.orders)
    out = np.zeros(grp.orders, dtype=object)
    axes = tuple(range(grp.rank))
    for y in np.flatnonzero(f_obj):
        shift = grp.roll_shift(int(y), negate=corr)
        out += f_obj[y] * np.roll(g_nd, shift, axis=axes)
    return out.reshape(-1)


def _conv_float(fv: np.ndarray, gv: np.ndarray, grp: Group, corr: bool) -> np.ndarray:
    shape = grp.orders
    F = np.fft.fftn(fv.reshape(shape))
    G = np.fft.fftn(gv.reshape(shape))
    spec = (np.conj(F) * G) if corr else (F * G)
    out = np.fft.ifftn(spec).real / grp.size
    return np.ascontiguousarray(out.reshape(-1))


# -- inner products and norms ------------------------------------------------------


def inner_wrt(f: FuncLike, g: FuncLike, mu: Optional[ProbMeasure] = None) -> float:
    """<f, g>_mu = E_x mu(x) f(x) g(x); uniform mu when omitted."""
    f, g = _as_func(f), _as_func(g)
    f._check_same(g)
    prod = f.values * g.values
    if mu is not None:
        if mu.group != f.group:
            raise GroupMismatchError("measure lives on a different group")
        prod = prod * mu.values
    return float(np.mean(prod))


def inner_wrt_exact(f: FuncLike, g: FuncLike, mu: Optional[ProbMeasure] = None) -> Fraction:
    f, g = _as_func(f), _as_func(g)
    f._check_same(g)
    f._require_exact()
    g._require_exact()
    num = _mul_arrays(f.num, g.num)
    den = f.den * g.den
    if mu is not None:
        mf = mu.func
        mf._require_exact()
        num = _mul_arrays(num, mf.num)
        den *= mf.den
    total = int(np.sum(num, dtype=object))
    return Fraction(total, den * f.group.size)


def lp_norm_wrt(f: FuncLike, p: float, mu: Optional[ProbMeasure] = None) -> float:
    """||f||_{p(mu)} = (E_x mu(x) |f(x)|^p)^{1/p}; p = inf -> max over supp(mu)."""
    f = _as_func(f)
    if p != math.inf and p < 1:
        raise ValueError("p must be >= 1 or infinity")
    if mu is not None and mu.group != f.group:
        raise GroupMismatchError("measure lives on a different group")
    absf = np.abs(f.values)
    if p == math.inf:
        if mu is None:
            return float(absf.max()) if absf.size else 0.0
        sup = absf[mu.support()]
        return float(sup.max()) if sup.size else 0.0
    w = mu.values if mu is not None else None
    m = float(absf.max() if w is None else (absf[w > 1e-14].max() if np.any(w > 1e-14) else 0.0))
    if m == 0.0:
        return 0.0
    base = (absf / m) ** p
    avg = float(np.mean(base if w is None else base * w))
    return m * avg ** (1.0 / p)


def lp_moment_exact(f: FuncLike, p: int, mu: Optional[ProbMeasure] = None) -> Fraction:
    """E_x mu(x) |f(x)|^p as an exact fraction (integer p >= 1)."""
    f = _as_func(f)
    f._require_exact()
    if p < 1 or int(p) != p:
        raise ValueError("exact moments need integer p >= 1")
    p = int(p)
    nums = [abs(int(v)) ** p for v in f.num]
    den = f.den**p
    if mu is not None:
        mf = mu.func
        mf._require_exact()
        nums = [a * int(b) for a, b in zip(nums, mf.num)]
        den *= mf.den
    return Fraction(sum(nums), den * f.group.size)


def lp_norm_exact_ge(f: FuncLike, p: int, threshold: Fraction,
                     mu: Optional[ProbMeasure] = None) -> bool:
    """Exact test ||f||_{p(mu)} >= threshold for integer p and rational threshold."""
    if threshold <= 0:
        return True
    return lp_moment_exact(f, p, mu) >= threshold**p


# -- internal exact-array helpers ----------------------------------------------------


def _lcm(a: int, b: int) -> int:
    return a // math.gcd(a, b) * b


def _widen(num: np.ndarray, factor: int) -> np.ndarray:
    return _mul_scalar(num, factor)


def _mul_scalar(num: np.ndarray, k: int) -> np.ndarray:
    if num.dtype == object:
        return num * k
    mx = int(np.max(np.abs(num))) if num.size else 0
    if abs(k) and mx and abs(k) * mx >= _INT64_SAFE:
        return num.astype(object) * k
    return num * np.int64(k)


def _mul_arrays(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if a.dtype == object or b.dtype == object:
        return a.astype(object) * b.astype(object)
    ma = int(np.max(np.abs(a))) if a.size else 0
    mb = int(np.max(np.abs(b))) if b.size else 0
    if ma and mb and ma * mb >= _INT64_SAFE:
        return a.astype(object) * b.astype(object)
    return a * b


def _reduce(num: np.ndarray, den: int) -> tuple[np.ndarray, int]:
    if num.dtype == object:
        g = den
        for v in num:
            g = math.gcd(g, abs(int(v)))
            if g == 1:
                return num, den
        if g > 1:
            num = np.array([int(v) // g for v in num], dtype=object)
            den //= g
        # drop back to int64 when it fits again
        mx = max((abs(int(v)) for v in num), default=0)
        if mx < _INT64_SAFE:
            num = num.astype(np.int64)
        return num, den
    arr_g = int(np.gcd.reduce(np.abs(num))) if num.size else 0
    g = math.gcd(arr_g, den)
    if g > 1:
        num = num // np.int64(g)
        den //= g
    return num, den


def _num_to_float(num: np.ndarray, den: int) -> np.ndarray:
    if num.dtype == object:
        return np.array([int(v) / den for v in num], dtype=np.float64)
    return num.astype(np.float64) / float(den)
