"""Characters and the Fourier transform on products of cyclic groups.

Conventions (averaging normalisation):

* fhat(gamma) = E_x f(x) gamma(-x), where gamma is indexed by the same
  coordinate tuples as the group (self-duality of Z_{m_1} x ... x Z_{m_r});
* inverse: f(x) = sum_gamma fhat(gamma) gamma(x);
* conv theorem: (f*g)-hat = fhat * ghat pointwise, (f~f)-hat = |fhat|^2;
* Parseval: E|f|^2 = sum |fhat|^2;
* moments: E f^k equals the k-fold (plain-sum) convolution of fhat at 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .functions import FuncLike, FuncR, _as_func
from .groups import Group

DEFAULT_MOMENT_CAP = 8


class FuncC:
    """Complex array over the dual group (same lexicographic indexing)."""

    __slots__ = ("group", "values")

    def __init__(self, group: Group, values: np.ndarray):
        self.group = group
        self.values = np.asarray(values, dtype=np.complex128)
        if self.values.shape != (group.size,):
            raise ValueError("value array length must equal the group size")

    def __repr__(self):
        return f"FuncC({self.group.spec_string()})"


def dft(f: Union[FuncLike, FuncC]) -> FuncC:
    """fhat(gamma) = E_x f(x) gamma(-x)."""
    if isinstance(f, FuncC):
        grp, vals = f.group, f.values
    else:
        ff = _as_func(f)
        grp, vals = ff.group, ff.values
    spec = np.fft.fftn(vals.reshape(grp.orders)) / grp.size
    return FuncC(grp, spec.reshape(-1))


def idft(F: FuncC) -> np.ndarray:
    """Inverse transform; returns the complex value array f(x) = sum fhat gamma(x)."""
    grp = F.group
    vals = np.fft.ifftn(F.values.reshape(grp.orders)) * grp.size
    return vals.reshape(-1)


def idft_real(F: FuncC, tol: float = 1e-9) -> FuncR:
    vals = idft(F)
    if np.max(np.abs(vals.imag)) > tol:
        raise ValueError("inverse transform is not real within tolerance")
    return FuncR(F.group, vals.real)


def character_value(group: Group, gamma: int, x: int) -> complex:
    """gamma(x) = exp(2 pi i sum_j c_j x_j / m_j)."""
    cg = group.coords_table[gamma]
    cx = group.coords_table[x]
    theta = sum(int(a) * int(b) / m for a, b, m in zip(cg, cx, group.orders))
    return complex(np.exp(2j * np.pi * theta))


@dataclass(frozen=True)
class SpectralStats:
    min_real: float
    max_imag: float


def spectral_min(f: FuncLike) -> SpectralStats:
    """Minimum of Re(fhat) over the dual group plus the largest |Im(fhat)|.

    For f = mu_A ~ mu_A - 1 the minimum must be >= -1e-10 (the transform of a
    difference self-convolution is |mu_A-hat|^2 with the trivial entry dropped).
    """
    spec = dft(f).values
    return SpectralStats(float(spec.real.min()), float(np.abs(spec.imag).max()))


def is_spectrally_nonneg(f: FuncLike, tol: float = 1e-8) -> bool:
    s = spectral_min(f)
    return s.min_real >= -tol


def moment_via_spectrum(f: FuncLike, k: int, cap: int = DEFAULT_MOMENT_CAP) -> float:
    """E_x f(x)^k computed as the k-fold dual-side convolution of fhat at 0."""
    if k < 1 or int(k) != k:
        raise ValueError("k must be a positive integer")
    if k > cap:
        raise ValueError(f"moment order {k} exceeds the cap {cap}")
    grp = _as_func(f).group
    F = dft(f).values.reshape(grp.orders)
    acc = F
    for _ in range(int(k) - 1):
        acc = np.fft.ifftn(np.fft.fftn(acc) * np.fft.fftn(F))
    flat = acc.reshape(-1)
    return float(flat[0].real)


def spectrum_json(f: FuncLike) -> list:
    """Spectrum as [(coords, re, im)] rows, for --dump-spectrum."""
    ff = _as_func(f)
    spec = dft(ff).values
    grp = ff.group
    return [
        [list(grp.coords(i)), float(spec[i].real), float(spec[i].imag)]
        for i in range(grp.size)
    ]


def parseval_gap(f: FuncLike) -> float:
    """| E|f|^2 - sum |fhat|^2 | (should vanish to 1e-9)."""
    ff = _as_func(f)
    lhs = float(np.mean(ff.values**2))
    rhs = float(np.sum(np.abs(dft(ff).values) ** 2))
    return abs(lhs - rhs)
