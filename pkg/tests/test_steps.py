import math
from fractions import Fraction

import numpy as np
import pytest

from kmroth.bohr import bohr_build, dilate, regular_dilate, whole_group_bohr
from kmroth.constants import Constants, load_constants
from kmroth.functions import (
    FuncR,
    conv,
    diffconv,
    inner_wrt,
    inner_wrt_exact,
    lp_norm_wrt,
    mu_of_set,
)
from kmroth.groups import GSet, dilate_set, make_group
from kmroth.steps import (
    BohrContext,
    BohrSearchBudget,
    ConstantBustingInstance,
    HypothesisViolation,
    OracleBudgetExceeded,
    SiftExhausted,
    bohr_unbalance,
    bour_narrow,
    chained_measure,
    density_increment_step,
    drc,
    drc_identity_gap,
    find_smoothing_bohr,
    find_smoothing_subspace,
    holder_lift,
    shifted_set_measure,
    sift,
    unbalance,
)

CONSTS = load_constants()


# -- Holder lifting -----------------------------------------------------------


def test_holder_trivial_near_uniform():
    g = make_group("Z5")
    out = holder_lift(GSet.full(g), GSet.full(g), 0.25)
    assert out.near_uniform and abs(out.inner_value - 1) < 1e-14


def test_holder_point_example():
    g = make_group("Z5")
    out = holder_lift(GSet.from_indices(g, [0]), GSet.from_indices(g, [1]), 0.5)
    assert out.variant == "lp" and out.p == 2
    assert abs(out.norm_value - 2.0) < 1e-12


def test_holder_exhaustive_z7_partition():
    """Every (A, C) lands in exactly one variant and its certificate recomputes."""
    g = make_group("Z7")
    eps = 0.25
    sets = [GSet.from_indices(g, [i for i in range(7) if (b >> i) & 1])
            for b in range(1, 128)]
    for A in sets[::5]:
        mu_A = mu_of_set(A)
        for C in sets[::7]:
            out = holder_lift(A, C, eps, None, CONSTS)
            inner = inner_wrt_exact(conv(mu_A, mu_A), mu_of_set(C).func)
            if out.near_uniform:
                assert abs(inner - 1) <= Fraction(eps)
            else:
                assert abs(inner - 1) > Fraction(eps)
                h = conv(mu_A.func.add_scalar(-1), mu_A.func.add_scalar(-1))
                assert lp_norm_wrt(h, out.p) >= eps / 2 - 1e-12
                assert out.p <= 2 * math.ceil(CONSTS.k_hold * math.log(2 / (C.card / 7)))


def test_holder_empty_errors():
    g = make_group("Z5")
    with pytest.raises(ValueError):
        holder_lift(GSet.empty(g), GSet.full(g), 0.25)


def test_holder_bohr_hypothesis_check():
    g = make_group("Z101")
    B = regular_dilate(bohr_build(g, [[1]], [1.5]))
    A = B.members
    # container far too wide for the hypothesis
    with pytest.raises(HypothesisViolation):
        holder_lift(A, GSet.from_indices(g, [0]), 0.25,
                    BohrContext(B, GSet.full(g)), CONSTS)


# -- unbalancing ---------------------------------------------------------------


def _autocorr_minus_one(A):
    mu = mu_of_set(A)
    return diffconv(mu, mu).add_scalar(-1)


def test_unbalance_example_z5():
    g = make_group("Z5")
    f = _autocorr_minus_one(GSet.from_indices(g, [0, 1]))
    out = unbalance(f, None, 0.8, 1, CONSTS)
    assert out.p_prime == 3
    assert abs(out.norm_value - 3.90625 ** (1 / 3)) < 1e-12
    # minimality: p' - 1 fails
    assert lp_norm_wrt(f.add_scalar(1), 2) < 1.4


def test_unbalance_first_hit():
    g = make_group("Z5")
    f = _autocorr_minus_one(GSet.from_indices(g, [0]))
    # ||f+1||_1 = 1 but sup = 5, small eps hits at p' = 1? no: mean is 1 < 1+eps/2,
    # so the search starts moving; whatever it returns must be minimal
    out = unbalance(f, None, 0.5, 2, CONSTS)
    goal = 1.25
    assert lp_norm_wrt(f.add_scalar(1), out.p_prime) >= goal - 1e-12
    if out.p_prime > 1:
        assert lp_norm_wrt(f.add_scalar(1), out.p_prime - 1) < goal + 1e-12


def test_unbalance_preconditions():
    g = make_group("Z5")
    zero = FuncR.constant(g, 0)
    with pytest.raises(HypothesisViolation):
        unbalance(zero, None, 0.5, 1, CONSTS)  # norm too small
    odd = FuncR.indicator(GSet.from_indices(g, [1])).sub(
        FuncR.indicator(GSet.from_indices(g, [0])))
    with pytest.raises(HypothesisViolation):
        unbalance(odd, None, 0.1, 1, CONSTS)  # spectrum not nonneg


def test_unbalance_bound_holds_on_samples():
    g = make_group("Z11")
    rng = np.random.default_rng(9)
    for _ in range(100):
        A = GSet(g, rng.random(11) < rng.uniform(0.2, 0.9))
        if A.card == 0:
            continue
        f = _autocorr_minus_one(A)
        eps = float(rng.choice([0.2, 0.5, 0.8]))
        if lp_norm_wrt(f, 1) < eps:
            continue
        out = unbalance(f, None, eps, 1, CONSTS)
        assert out.p_prime <= math.ceil(CONSTS.k_unb / eps * math.log(math.e / eps))


# -- dependent random choice / sifting ------------------------------------------


def test_drc_trivial_full_group():
    g = make_group("Z7")
    res = drc(GSet.full(g), GSet.full(g), GSet.full(g), 2, FuncR.constant(g, 0))
    assert res.densities == (1.0, 1.0)
    assert res.mode == "exhaustive"


def test_drc_exhaustive_z7_inequalities():
    g = make_group("Z7")
    A = GSet.from_indices(g, [0, 1, 2])
    full = GSet.full(g)
    res = drc(A, full, full, 2, FuncR.indicator(GSet.empty(g)))
    mu = diffconv(mu_of_set(full), mu_of_set(full))
    base = diffconv(mu_of_set(A), mu_of_set(A))
    norm2 = lp_norm_wrt(base, 2)
    bound = 0.25 * (3 / 7) ** 4 * norm2**8
    assert res.densities[0] * res.densities[1] >= bound - 1e-12
    assert min(res.densities) >= bound - 1e-12  # densities <= 1
    # replay: A_i = B_i ∩ intersect(A + s_j)
    m = full.mask.copy()
    for s in res.shifts:
        m &= A.translate(g.index(s)).mask
    assert np.array_equal(m, res.a1.mask)
    assert np.array_equal(m, res.a2.mask)


@pytest.mark.parametrize("spec,p", [("Z5", 1), ("Z5", 2), ("Z7", 1), ("Z7", 2)])
def test_drc_identity_exhaustive(spec, p):
    g = make_group(spec)
    rng = np.random.default_rng(hash((spec, p)) % 2**32)
    A = GSet(g, rng.random(g.size) < 0.6)
    if A.card == 0:
        A = GSet.from_indices(g, [0])
    B1 = GSet(g, rng.random(g.size) < 0.7)
    if B1.card == 0:
        B1 = GSet.full(g)
    B2 = GSet(g, rng.random(g.size) < 0.7)
    if B2.card == 0:
        B2 = GSet.full(g)
    f = FuncR.from_values(g, rng.random(g.size))
    assert drc_identity_gap(A, B1, B2, p, f) <= 1e-10


def test_drc_both_conclusions_on_returned_pair():
    g = make_group("Z5")
    rng = np.random.default_rng(17)
    for p in (1, 2):
        A = GSet.from_indices(g, [0, 2, 3])
        B1 = GSet.from_indices(g, [0, 1, 2, 3])
        B2 = GSet.full(g)
        f = FuncR.from_values(g, rng.random(5))
        res = drc(A, B1, B2, p, f)
        mu = None
        from kmroth.functions import ProbMeasure

        mu = ProbMeasure(diffconv(mu_of_set(B1), mu_of_set(B2)))
        base = diffconv(mu_of_set(A), mu_of_set(A))
        lhs = inner_wrt(diffconv(mu_of_set(res.a1), mu_of_set(res.a2)), f)
        eta = float(np.mean(mu.values * base.values**p * f.values))
        eta /= float(np.mean(mu.values * base.values**p))
        assert lhs <= 2 * eta + 1e-9
        alpha = A.card / 5
        mom = float(np.mean(mu.values * base.values**p))
        assert (res.densities[0] * res.densities[1]
                >= 0.25 * alpha ** (2 * p) * mom**2 - 1e-12)


def test_sift_trivial_full():
    g = make_group("Z7")
    full = GSet.full(g)
    res = sift(full, full, full, 1, 0.25, 0.25, trials=100, seed=0)
    assert res.S.card == g.size
    assert res.inner_on_S >= 1 - 0.25


def test_sift_example_z7():
    g = make_group("Z7")
    res = sift(GSet.from_indices(g, [0, 1, 2]), GSet.full(g), GSet.full(g),
               2, 0.25, 0.25, trials=20000, seed=42)
    assert res.inner_on_S >= 1 - 0.25 - 1e-12
    assert res.p_used == 2 + math.ceil(4 * math.log(8))
    # certificate replay
    m = np.ones(7, dtype=bool)
    for s in res.shifts:
        m &= GSet.from_indices(g, [0, 1, 2]).translate(g.index(s)).mask
    assert np.array_equal(m, res.a1.mask)
    inner = inner_wrt(diffconv(mu_of_set(res.a1), mu_of_set(res.a2)),
                      FuncR.indicator(res.S))
    assert abs(inner - res.inner_on_S) < 1e-10


def test_sift_adversarial_never_uncertified():
    g = make_group("Z7")
    tiny = GSet.from_indices(g, [0])
    try:
        res = sift(tiny, GSet.full(g), GSet.full(g), 2, 0.25, 0.25,
                   trials=500, seed=1)
    except SiftExhausted as exc:
        assert isinstance(exc.best, dict)
    else:
        assert res.inner_on_S >= 1 - 0.25 - 1e-12


# -- almost-periodicity oracles ---------------------------------------------------


def test_smoothing_trivial_full_group():
    g = make_group("F3^2")
    full = GSet.full(g)
    res = find_smoothing_subspace(full, full, GSet.from_indices(g, [0, 1]), 0.01, 0)
    assert res.found and res.codim == 0


def test_smoothing_line_instance():
    g = make_group("F3^2")
    L = GSet.from_elements(g, [(0, 0), (0, 1), (0, 2)])
    res = find_smoothing_subspace(L, L, L, 0.01, 1)
    assert res.found and res.codim <= 1
    res0 = find_smoothing_subspace(L, L, L, 0.01, 0)
    assert not res0.found
    assert abs(res0.best_margin - 2 / 3) < 1e-9


def test_smoothing_certificate_is_exact():
    g = make_group("F3^2")
    rng = np.random.default_rng(3)
    A1 = GSet(g, rng.random(9) < 0.6)
    A2 = GSet(g, rng.random(9) < 0.6)
    S = GSet(g, rng.random(9) < 0.5)
    res = find_smoothing_subspace(A1, A2, S, 0.30, 2)
    if res.found:
        t = diffconv(mu_of_set(A1), mu_of_set(A2))
        base = inner_wrt_exact(t, FuncR.indicator(S))
        val = inner_wrt_exact(conv(mu_of_set(res.witness.members), t),
                              FuncR.indicator(S))
        assert abs(val - base) <= Fraction(30, 100)


def test_smoothing_bohr_trivial_accept():
    g = make_group("Z101")
    B = regular_dilate(bohr_build(g, [[1]], [1.5]))
    Bp = regular_dilate(dilate(B, 0.5))
    A1 = B.members
    A2 = Bp.members
    supp = diffconv(FuncR.indicator(A1), FuncR.indicator(A2))
    S = GSet(g, supp.values > 1e-14)
    res = find_smoothing_bohr(B, Bp, A1, A2, S, 2.0, a2_shift=0)
    assert res.found and res.witness is Bp


def test_smoothing_bohr_budget_zero():
    g = make_group("Z101")
    B = regular_dilate(bohr_build(g, [[1]], [1.5]))
    Bp = regular_dilate(dilate(B, 0.4))
    rng = np.random.default_rng(5)
    ins = B.members.indices()
    A1 = GSet.from_indices(g, ins[rng.random(ins.size) < 0.5])
    if A1.card == 0:
        A1 = GSet.from_indices(g, ins[:1])
    A2 = Bp.members
    S = GSet.from_indices(g, [0, 1, 2])
    res = find_smoothing_bohr(B, Bp, A1, A2, S, 1e-9,
                              BohrSearchBudget(freqs=0), a2_shift=0)
    assert not res.found and res.best_margin > 0


def test_smoothing_bohr_hypothesis_on_s():
    g = make_group("Z101")
    B = regular_dilate(bohr_build(g, [[1]], [0.5]))
    with pytest.raises(HypothesisViolation):
        find_smoothing_bohr(B, B, B.members, B.members, GSet.full(g), 0.5,
                            a2_shift=0)


# -- density increment and narrowing ----------------------------------------------


def test_increment_trivial():
    g = make_group("F3^2")
    out = density_increment_step(GSet.full(g), dilate_set(GSet.full(g), 2), 0.25)
    assert out.near_uniform


def test_increment_two_coset_example():
    g = make_group("F3^2")
    A = GSet.from_elements(g, [(0, 0), (0, 1), (0, 2), (1, 0), (1, 1), (1, 2)])
    out = density_increment_step(A, dilate_set(A, 2), 0.125, 4, CONSTS,
                                 seed=1, trials=8000)
    assert out.variant == "increment"
    assert out.subspace.codim == 1
    assert abs(out.new_density - 1.0) < 1e-12
    # certificate replay in exact arithmetic
    w = conv(FuncR.indicator(A), mu_of_set(out.subspace.members))
    sup = w.value_exact(int(np.argmax(w.values)))
    assert sup >= (1 + Fraction(1, 8) / 100) * Fraction(A.card, 9)


def test_increment_random_f33_replay():
    g = make_group("F3^3")
    rng = np.random.default_rng(23)
    done = 0
    for i in range(12):
        A = GSet(g, rng.random(27) < 0.6)
        if A.card == 0:
            continue
        try:
            out = density_increment_step(A, dilate_set(A, 2), 0.25, 4, CONSTS,
                                         seed=i, trials=4000)
        except OracleBudgetExceeded:
            continue
        done += 1
        if out.near_uniform:
            inner = inner_wrt_exact(conv(mu_of_set(A), mu_of_set(A)),
                                    mu_of_set(dilate_set(A, 2)).func)
            assert abs(inner - 1) <= Fraction(1, 4)
        else:
            w = conv(FuncR.indicator(A), mu_of_set(out.subspace.members))
            sup = w.value_exact(int(np.argmax(w.values)))
            assert sup >= (1 + Fraction(1, 4) / 100) * Fraction(A.card, 27)
    assert done >= 6


def test_increment_requires_odd_prime_power():
    g = make_group("Z6")
    with pytest.raises(ValueError):
        density_increment_step(GSet.full(g), GSet.full(g), 0.25)


def test_bour_translate_at_full_density():
    g = make_group("Z101")
    B = regular_dilate(bohr_build(g, [[1]], [1.0]))
    A = B.members
    Bp = regular_dilate(dilate(B, 0.002))
    Bpp = regular_dilate(dilate(Bp, 0.9))
    out = bour_narrow(A, B, Bp, Bpp, 0.25, CONSTS)
    assert out.kind == "translate" and out.x == (0,)
    assert out.density_bprime == 1.0 and out.density_bdoubleprime == 1.0


def test_bour_hypothesis_violation():
    g = make_group("Z101")
    B = regular_dilate(bohr_build(g, [[1]], [1.0]))
    A = B.members
    with pytest.raises(HypothesisViolation):
        bour_narrow(A, B, B, B, 0.25, CONSTS)  # B' not inside B_rho


def test_bour_seeded_one_alternative_always():
    rng = np.random.default_rng(31)
    for i in range(25):
        n = int(rng.integers(101, 600))
        g = make_group(f"Z{n}")
        B = regular_dilate(bohr_build(g, [[int(rng.integers(1, n))]],
                                      [float(rng.uniform(0.5, 2.0))]))
        ins = B.members.indices()
        keep = rng.random(ins.size) < rng.uniform(0.3, 0.95)
        if not keep.any():
            keep[0] = True
        A = GSet.from_indices(g, ins[keep])
        eps = 0.25
        alpha = A.card / B.size
        rho = CONSTS.c_narrow * alpha * eps / max(B.rank, 1)
        Bp = regular_dilate(dilate(B, rho))
        Bpp = regular_dilate(dilate(Bp, 0.8))
        out = bour_narrow(A, B, Bp, Bpp, eps, CONSTS)
        x = g.index(out.x)
        w1 = conv(FuncR.indicator(A), mu_of_set(Bp.members))
        w2 = conv(FuncR.indicator(A), mu_of_set(Bpp.members))
        if out.kind == "translate":
            assert w1.values[x] >= (1 - eps) * alpha - 1e-12
            assert w2.values[x] >= (1 - eps) * alpha - 1e-12
        else:
            w = w1 if out.kind == "inc_bprime" else w2
            assert w.values[x] >= (1 + eps / 2) * alpha - 1e-12


# -- relative unbalancing and the positive-definite bridge --------------------------


def test_bohr_unbalance_certificate():
    rng = np.random.default_rng(41)
    g = make_group("Z301")
    B = regular_dilate(bohr_build(g, [[7]], [1.8]))
    ins = B.members.indices()
    keep = rng.random(ins.size) < 0.5
    keep[0] = True
    A = GSet.from_indices(g, ins[keep])
    eps, p = 0.25, 2
    alpha = A.card / B.size
    rho = CONSTS.c_narrow * eps * alpha / max(B.rank, 1)
    narrow = dilate(B, rho / 2)
    from kmroth.functions import ProbMeasure

    nu = ProbMeasure(diffconv(mu_of_set(narrow.members), mu_of_set(narrow.members)))
    fd = mu_of_set(A).func.sub(mu_of_set(B.members).func)
    target = g.size / B.size
    if lp_norm_wrt(diffconv(fd, fd), p, nu) < eps * target:
        pytest.skip("instance misses the norm hypothesis")
    out = bohr_unbalance(A, B, nu, eps, p, CONSTS)
    base = diffconv(mu_of_set(A), mu_of_set(A))
    assert lp_norm_wrt(base, out.p_prime, nu) >= (1 + eps / 4) * target * (1 - 1e-12)


def test_posdef_comparison_seeded():
    rng = np.random.default_rng(43)
    for _ in range(10):
        n = int(rng.integers(64, 512))
        g = make_group(f"Z{n}")
        B = regular_dilate(bohr_build(g, [[int(rng.integers(1, n))]],
                                      [float(rng.uniform(0.8, 2.0))]))
        d = max(B.rank, 1)
        Bp = regular_dilate(dilate(B, CONSTS.c_cover / (2 * d)))
        Bpp = regular_dilate(dilate(Bp, CONSTS.c_cover / (2 * d)))
        f = FuncR.from_values(g, rng.normal(size=n))
        nu = chained_measure(Bp.members, Bpp.members)
        for p in (2, 4):
            lhs = lp_norm_wrt(diffconv(f, f), p, nu)
            rhs = 0.5 * lp_norm_wrt(conv(f, f), p, mu_of_set(B.members))
            assert lhs >= rhs - 1e-10


def test_measure_builders():
    g = make_group("Z11")
    X = GSet.from_indices(g, [0, 1, 5])
    nu = chained_measure(X, X)
    from kmroth.fourier import is_spectrally_nonneg

    assert is_spectrally_nonneg(nu.func)
    mu = shifted_set_measure(X, k=3, shift=2)
    assert abs(mu.func.mean() - 1) < 1e-12
    assert sorted(np.flatnonzero(mu.values > 0)) == sorted(
        (3 * np.array([0, 1, 5]) + 2) % 11)
