"""Acceptance gate: every criterion at its stated tolerance, one pass/fail
line each (emitted by the conftest hook). Target: full suite well under five
minutes on commodity hardware."""

import json
import math
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

from kmroth.bohr import BohrSet, dilate, regular_dilate
from kmroth.constants import load_constants, ledger_meta, ledger_values
from kmroth.fourier import dft, parseval_gap
from kmroth.functions import (
    FuncR,
    conv,
    diffconv,
    inner_wrt,
    inner_wrt_exact,
    lp_norm_wrt,
    mu_of_set,
)
from kmroth.groups import GSet, count_3aps, dilate_set, make_group
from kmroth.pipelines import (
    behrend,
    embed_interval,
    integer_3ap_count,
    is_progression_free,
    roth_ffq_driver,
    three_sumset_ap_pipeline,
)
from kmroth.steps import (
    SiftExhausted,
    drc,
    drc_identity_gap,
    find_smoothing_bohr,
    find_smoothing_subspace,
    sift,
    BohrSearchBudget,
)
from kmroth.subspaces import Subspace
from kmroth.verify import SuiteSpec, run_suite

CONSTS = load_constants()
GOLDEN = Path(__file__).parent / "golden"


def test_criterion_01_algebra_kernel():
    """Exact-vs-float conv/diffconv <= 1e-12 per cell; conv theorem and
    Parseval <= 1e-9 on 200 seeded instances, |G| <= 512."""
    rng = np.random.default_rng(101)
    for i in range(200):
        n = int(rng.integers(4, 513))
        g = make_group(f"Z{n}")
        # exact vs float on indicator-derived measures
        A = GSet(g, rng.random(n) < rng.uniform(0.2, 0.9))
        B = GSet(g, rng.random(n) < rng.uniform(0.2, 0.9))
        if A.card and B.card:
            fa, fb = mu_of_set(A).func, mu_of_set(B).func
            for op in (conv, diffconv):
                gap = np.max(np.abs(op(fa, fb).values
                                    - op(fa.as_float(), fb.as_float()).values))
                assert gap <= 1e-12
        # spectral identities on float functions
        f = FuncR.from_values(g, rng.normal(size=n))
        h = FuncR.from_values(g, rng.normal(size=n))
        assert np.max(np.abs(dft(conv(f, h)).values
                             - dft(f).values * dft(h).values)) < 1e-9
        assert parseval_gap(f) < 1e-9


def test_criterion_02_spectral_facts():
    """spectral-nonneg, odd-moment, lp-monotone, mean-zeroing pass
    exhaustively on Z5 and Z7 plus 200 seeded larger instances."""
    for suite in ("spectral-nonneg", "odd-moment", "lp-monotone", "mean-zeroing"):
        rep = run_suite(SuiteSpec(suite, instances=200, seed=42, exhaustive=True),
                        CONSTS)
        assert rep.passed, (suite, rep.failures[:2])
        assert rep.instances_run >= 31 + 127 + 200


def test_criterion_03_adjoint_identity():
    """The delta oracle fixes the pairing variant; 200 random triples satisfy
    it within 1e-10 (the swapped variant fails on the oracle instance)."""
    rep = run_suite(SuiteSpec("adjoint", instances=200, seed=42), CONSTS)
    assert rep.passed and rep.instances_run == 201


def test_criterion_04_unbalancing():
    """1000 sampled A in Z11: minimal p' certificate exact, p' within the
    calibrated ledger bound."""
    rep = run_suite(SuiteSpec("unbalancing", instances=1000, seed=42), CONSTS)
    assert rep.passed
    assert rep.empirical_constants["k_unb_observed"] <= CONSTS.k_unb


def test_criterion_05_drc_and_sifting():
    """Exhaustive shift scans on Z5/Z7, p in {1, 2}: both lemma inequalities
    on the returned pair, proof identity to 1e-10, sift inner >= 1-delta on
    every success, and no uncertified success."""
    rng = np.random.default_rng(55)
    for spec in ("Z5", "Z7"):
        g = make_group(spec)
        n = g.size
        full = GSet.full(g)
        for p in (1, 2):
            A = GSet(g, rng.random(n) < 0.6)
            if A.card == 0:
                A = GSet.from_indices(g, [0, 1])
            f = FuncR.from_values(g, rng.random(n))
            assert drc_identity_gap(A, full, full, p, f) <= 1e-10
            res = drc(A, full, full, p, f, exhaustive=True)
            assert res.mode == "exhaustive"
            base = diffconv(mu_of_set(A), mu_of_set(A))
            mom = float(np.mean(base.values**p))
            eta = float(np.mean(base.values**p * f.values)) / mom
            got = inner_wrt(diffconv(mu_of_set(res.a1), mu_of_set(res.a2)), f)
            assert got <= 2 * eta + 1e-9
            assert (res.densities[0] * res.densities[1]
                    >= 0.25 * A.density ** (2 * p) * mom**2 - 1e-12)
    # sift: certified or exhausted, nothing in between
    successes = 0
    for i in range(12):
        g = make_group("Z7" if i % 2 else "Z5")
        A = GSet(g, np.random.default_rng(500 + i).random(g.size) < 0.55)
        if A.card == 0:
            continue
        try:
            res = sift(A, GSet.full(g), GSet.full(g), 1 + i % 2, 0.25, 0.25,
                       trials=4000, seed=i, consts=CONSTS)
        except SiftExhausted:
            continue
        successes += 1
        assert res.inner_on_S >= 1 - 0.25 - 1e-12
        inner = inner_wrt(diffconv(mu_of_set(res.a1), mu_of_set(res.a2)),
                          FuncR.indicator(res.S))
        assert abs(inner - res.inner_on_S) <= 1e-10
    assert successes >= 4


def test_criterion_06_almost_periodicity_oracles():
    """F_3^2 line instance smooths at codimension <= 1; 50 seeded Z101 Bohr
    instances succeed within budget.freqs = 3 or report NotFound with margins,
    at the success rate frozen in the golden file."""
    g = make_group("F3^2")
    L = GSet.from_elements(g, [(0, 0), (0, 1), (0, 2)])
    res = find_smoothing_subspace(L, L, L, 0.01, 1)
    assert res.found and res.codim <= 1

    gold = json.loads((GOLDEN / "smoothing_bohr_rate.json").read_text())
    g101 = make_group("Z101")
    succ = 0
    for i in range(gold["total"]):
        rng = np.random.default_rng(gold["seed_base"] + i)
        B = regular_dilate(BohrSet(g101, [[int(rng.integers(1, 101))]],
                                   [float(rng.uniform(0.8, 2.0))]))
        Bp = regular_dilate(dilate(B, float(rng.uniform(0.25, 0.6))))
        ins = B.members.indices()
        keep = rng.random(ins.size) < 0.6
        if not keep.any():
            keep[0] = True
        A1 = GSet.from_indices(g101, ins[keep])
        x = int(rng.integers(0, 101))
        pins = Bp.members.translate(g101.neg(x)).indices()
        keep2 = rng.random(pins.size) < 0.7
        if not keep2.any():
            keep2[0] = True
        A2 = GSet.from_indices(g101, pins[keep2])
        supp = diffconv(FuncR.indicator(A1), FuncR.indicator(A2))
        smask = (supp.values > 1e-14) & (np.random.default_rng(i).random(101) < 0.8)
        S = GSet(g101, smask)
        if S.card > 2 * B.size:
            S = GSet.from_indices(g101, S.indices()[: 2 * B.size])
        out = find_smoothing_bohr(B, Bp, A1, A2, S, 0.1,
                                  BohrSearchBudget(freqs=3),
                                  a2_shift=g101.neg(x))
        if out.found:
            succ += 1
        else:
            assert math.isfinite(out.best_margin) and out.best_margin > 0.1
    assert succ == gold["successes"]


def test_criterion_07_density_increment_all_subsets():
    """roth_ffq_driver terminates on all 512 subsets of F_3^2; every increment
    certificate replays exactly; trace lengths respect the step bound."""
    g = make_group("F3^2")
    outcomes = {"near-uniform": 0, "budget-exceeded": 0}
    for bits in range(512):
        mask = np.array([(bits >> i) & 1 for i in range(9)], dtype=bool)
        A = GSet(g, mask)
        tr = roth_ffq_driver(A, 0.25, consts=CONSTS, seed=bits, trials=4000)
        outcomes[tr.terminal["kind"]] += 1
        if tr.terminal["kind"] == "near-uniform":
            assert len(tr.steps) <= tr.step_bound()
        dens = tr.densities
        for j, step in enumerate(tr.steps):
            parent_grp, parent_A = tr.cells[j]
            V = Subspace(parent_grp, tuple(tuple(r) for r in step["cell"]["checks"]))
            w = conv(FuncR.indicator(parent_A), mu_of_set(V.members))
            sup = w.value_exact(int(np.argmax(w.values)))
            alpha = Fraction(parent_A.card, parent_grp.size)
            assert sup >= (1 + Fraction(1, 4) / Fraction(CONSTS.c_inc)) * alpha
            assert abs(float(sup) - step["density"]) < 1e-12
    assert outcomes["near-uniform"] >= 500  # termination everywhere, mostly certified


def test_criterion_08_bohr_calculus():
    """bohrsiz, bohrreg, bohr-ap pass on 100 seeded instances (rank <= 3,
    N <= 10^4); regconv and fourierbohr empirical constants match the
    committed ledger within 10%."""
    for suite in ("bohrsiz", "bohrreg", "bohr-ap"):
        rep = run_suite(SuiteSpec(suite, instances=100, seed=42), CONSTS)
        assert rep.passed and rep.instances_run == 100
    meta = ledger_meta()["observed"]
    runs = {r["suite"]: r for r in ledger_meta()["runs"]}
    rep = run_suite(SuiteSpec("regconv", instances=runs["regconv"]["instances"],
                              seed=runs["regconv"]["seed"]), CONSTS)
    assert rep.passed
    got = rep.empirical_constants["k_regconv_observed"]
    assert abs(got - meta["k_regconv_observed"]) <= 0.1 * meta["k_regconv_observed"]
    rep = run_suite(SuiteSpec("fourierbohr",
                              instances=runs["fourierbohr"]["instances"],
                              seed=runs["fourierbohr"]["seed"], calibrate=True),
                    CONSTS)
    assert abs(rep.proposals["c_cover"] - ledger_values()["c_cover"]) \
        <= 0.1 * ledger_values()["c_cover"]


def test_criterion_09_constructions():
    """behrend AP-free for N in {1e2, 1e3, 1e4} (exhaustive); ternary N=14
    golden set; embed_interval count equivalence on 200 seeded instances."""
    gold = json.loads((GOLDEN / "behrend_sizes.json").read_text())
    for N in (100, 1000, 10000):
        for strat in ("ternary", "sphere"):
            A = behrend(N, strat)
            assert is_progression_free(A)
            assert len(A) == gold[strat][str(N)]
    assert behrend(14, "ternary") == {1, 2, 4, 5, 10, 11, 13, 14}
    rng = np.random.default_rng(909)
    for _ in range(200):
        N = int(rng.integers(2, 2001))
        size = int(rng.integers(1, min(N, 50) + 1))
        A = sorted(rng.choice(np.arange(1, N + 1), size=size, replace=False).tolist())
        grp, img = embed_interval(A, N)
        assert count_3aps(img) == integer_3ap_count(A)


def test_criterion_10_three_sumset_pipeline():
    """20 seeded instances (N = 101, alpha >= 0.4): every success's APRun is
    exhaustively inside A+A+A; every failure names the violated inequality
    and its margin."""
    from kmroth.groups import sumset

    grp = make_group("Z101")
    successes = 0
    for i in range(20):
        rng = np.random.default_rng(1000 + i)
        A = sorted(rng.choice(np.arange(1, 102), size=41, replace=False).tolist())
        rep = three_sumset_ap_pipeline(A, 101, 0.25, consts=CONSTS, seed=i)
        if rep.verified:
            successes += 1
            A_emb = GSet.from_indices(grp, [a % 101 for a in A])
            cont = sumset(sumset(A_emb, A_emb), A_emb)
            assert all(cont.mask[t] for t in rep.run.terms(grp))
        else:
            assert rep.stage in ("driver", "sumset-density", "triple-cover",
                                 "membership")
            assert rep.margins
    assert successes >= 15


def test_criterion_11_reproducibility(tmp_path, capsys):
    """Any CLI invocation re-run with the same seed and inputs produces
    byte-identical JSON."""
    from kmroth.cli import main

    aset = tmp_path / "a.json"
    aset.write_text(json.dumps({"group": "Z7", "elements": [[0], [1], [2]]}))
    invocations = [
        ["count-aps", "--set", str(aset), "--json"],
        ["sift", "--set", str(aset), "--p", "2", "--eps", "0.25",
         "--delta", "0.25", "--trials", "4000", "--seed", "42", "--json"],
        ["verify", "bohrsiz", "--instances", "15", "--seed", "9", "--json"],
        ["behrend", "--n", "200", "--strategy", "sphere", "--json"],
    ]
    for argv in invocations:
        assert main(argv) == 0
        first = capsys.readouterr().out
        assert main(argv) == 0
        second = capsys.readouterr().out
        assert first == second and first.strip()
