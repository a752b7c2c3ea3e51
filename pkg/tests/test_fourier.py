import numpy as np
import pytest

from kmroth.fourier import (
    FuncC,
    dft,
    idft_real,
    moment_via_spectrum,
    parseval_gap,
    spectral_min,
    spectrum_json,
)
from kmroth.functions import FuncR, conv, diffconv, mu_of_set
from kmroth.groups import GSet, make_group


def test_dft_examples():
    g = make_group("Z5")
    one = FuncR.constant(g, 1)
    spec = dft(one).values
    assert abs(spec[0] - 1) < 1e-14 and np.max(np.abs(spec[1:])) < 1e-14
    g4 = make_group("Z4")
    point = FuncR.indicator(GSet.from_indices(g4, [0]))
    assert np.allclose(dft(point).values, 0.25)
    mu = mu_of_set(GSet.from_indices(g, [0, 1]))
    assert abs(abs(dft(mu).values[1]) - np.cos(np.pi / 5)) < 1e-12


def test_roundtrip():
    rng = np.random.default_rng(3)
    g = make_group("Z4xZ9")
    f = FuncR.from_values(g, rng.normal(size=g.size))
    back = idft_real(dft(f))
    assert np.max(np.abs(back.values - f.values)) < 1e-10


def test_spectral_min_examples():
    g5 = make_group("Z5")
    mu = mu_of_set(GSet.from_indices(g5, [0, 1]))
    f = diffconv(mu, mu).add_scalar(-1)
    s = spectral_min(f)
    assert s.min_real >= -1e-10
    g2 = make_group("Z2")
    f2 = FuncR.indicator(GSet.from_indices(g2, [1])).sub(
        FuncR.indicator(GSet.from_indices(g2, [0])))
    assert abs(spectral_min(f2).min_real + 1) < 1e-14
    zero = FuncR.constant(g5, 0)
    assert spectral_min(zero).min_real == 0.0


def test_moment_via_spectrum():
    g = make_group("Z5")
    one = FuncR.constant(g, 1)
    for k in (1, 2, 5):
        assert abs(moment_via_spectrum(one, k) - 1) < 1e-12
    mu = mu_of_set(GSet.from_indices(g, [0, 1]))
    f = diffconv(mu, mu).add_scalar(-1)
    for k in (2, 3, 4):
        assert abs(moment_via_spectrum(f, k) - np.mean(f.values**k)) < 1e-8
    for k in (1, 3, 5, 7):
        assert moment_via_spectrum(f, k) >= -1e-10
    with pytest.raises(ValueError):
        moment_via_spectrum(f, 9)
    with pytest.raises(ValueError):
        moment_via_spectrum(f, 0)


def test_convolution_theorem_seeded():
    rng = np.random.default_rng(4)
    for i in range(60):
        n = int(rng.integers(4, 513))
        g = make_group(f"Z{n}")
        f = FuncR.from_values(g, rng.normal(size=n))
        h = FuncR.from_values(g, rng.normal(size=n))
        gap = np.max(np.abs(dft(conv(f, h)).values - dft(f).values * dft(h).values))
        assert gap < 1e-9
        gap2 = np.max(np.abs(dft(diffconv(f, f)).values - np.abs(dft(f).values) ** 2))
        assert gap2 < 1e-9


def test_parseval_seeded():
    rng = np.random.default_rng(5)
    for _ in range(30):
        g = make_group(f"Z{int(rng.integers(4, 400))}")
        f = FuncR.from_values(g, rng.normal(size=g.size))
        assert parseval_gap(f) < 1e-9


def test_mean_zeroing():
    rng = np.random.default_rng(6)
    g = make_group("Z3^2")
    A = GSet.from_indices(g, [0, 1, 5])
    mu = mu_of_set(A)
    lhs = dft(mu.func.add_scalar(-1)).values
    rhs = dft(mu).values.copy()
    rhs[0] = 0
    assert np.max(np.abs(lhs - rhs)) < 1e-12


def test_lp_monotone_exhaustive_z5():
    from kmroth.functions import lp_norm_wrt

    g = make_group("Z5")
    for bits in range(1, 32):
        A = GSet.from_indices(g, [i for i in range(5) if (bits >> i) & 1])
        mu = mu_of_set(A)
        star = conv(mu, mu).add_scalar(-1)
        circ = diffconv(mu, mu).add_scalar(-1)
        for p in (2, 4, 6):
            assert lp_norm_wrt(star, p) <= lp_norm_wrt(circ, p) + 1e-10


def test_spectrum_json_shape():
    g = make_group("Z3^2")
    rows = spectrum_json(mu_of_set(GSet.from_indices(g, [0, 4])))
    assert len(rows) == 9
    assert rows[0][0] == [0, 0] and abs(rows[0][1] - 1.0) < 1e-12
