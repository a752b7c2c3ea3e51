"""End-to-end drivers and constructions: progression-free sets, the interval
embedding, the F_q^n increment loop, the Bohr-set loop over Z_M, long-AP
search, and the A+A+A pipeline.

Drivers are sequential state machines; traces are append-only records whose
every accepted step carries a replayable certificate, and whose terminal is
either a recomputed near-uniform certificate or an explicit budget record.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .bohr import APRun, BohrSet, dilate, extract_ap, freq_dilate, regular_dilate, whole_group_bohr
from .constants import Constants
from .functions import (
    FuncR,
    ProbMeasure,
    conv,
    diffconv,
    inner_wrt,
    inner_wrt_exact,
    lp_norm_wrt,
    mu_of_set,
)
from .groups import Group, GSet, _is_prime, count_3aps, dilate_set, make_group, sumset
from .steps import (
    BohrContext,
    BohrSearchBudget,
    BourOutcome,
    ConstantBustingInstance,
    HypothesisViolation,
    OracleBudgetExceeded,
    SiftExhausted,
    bohr_unbalance,
    bour_narrow,
    chained_measure,
    density_increment_step,
    find_smoothing_bohr,
    holder_lift,
    sift,
)

# ---------------------------------------------------------------------------
# constructions
# ---------------------------------------------------------------------------


def behrend(N: int, strategy: str = "sphere", verify: bool = False) -> set[int]:
    """Progression-free subset of {1..N}.

    ternary: {m+1 : 0 <= m < N, base-3 digits of m all in {0, 1}};
    sphere:  lattice points on a sphere written in base 2m-1 (no carries),
             dimension and radius swept to maximise the output size.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    if strategy == "ternary":
        out = set()
        for m in range(N):
            mm = m
            while mm and mm % 3 != 2:
                mm //= 3
            if mm == 0 or mm % 3 != 2:
                out.add(m + 1)
        out = {m + 1 for m in range(N) if _digits01(m)}
    elif strategy == "sphere":
        out = _behrend_sphere(N)
    else:
        raise ValueError(f"unknown strategy {strategy!r}")
    if verify and not is_progression_free(out):
        raise AssertionError("construction produced a 3-AP (bug)")
    return out


def _digits01(m: int) -> bool:
    while m:
        if m % 3 == 2:
            return False
        m //= 3
    return True


def _behrend_sphere(N: int) -> set[int]:
    if N <= 3:
        return {1} if N < 3 else {1, 2}
    d_hi = math.ceil(math.sqrt(math.log(N))) + 2
    best: set[int] = {1}
    for d in range(2, max(d_hi, 2) + 1):
        m = int(round((2 * N - 1) ** (1.0 / d) + 1) // 2)
        while m >= 1 and (2 * m - 1) ** d > 2 * N - 1:
            m -= 1
        if m < 2:
            continue
        base = 2 * m - 1
        # count lattice points per squared radius, then take the best shell
        counts: dict[int, int] = {0: 1}
        for _ in range(d):
            nxt: dict[int, int] = {}
            for r2, c in counts.items():
                for x in range(m):
                    nxt[r2 + x * x] = nxt.get(r2 + x * x, 0) + c
            counts = nxt
        r2_best = max(counts, key=lambda r: (counts[r], -r))
        if counts[r2_best] <= len(best):
            continue
        shell: set[int] = set()
        for point in _sphere_points(d, m, r2_best):
            n = sum(x * base**i for i, x in enumerate(point)) + 1
            shell.add(n)
        if len(shell) > len(best) and max(shell) <= N:
            best = shell
    return best


def _sphere_points(d: int, m: int, r2: int):
    point = [0] * d

    def rec(i: int, rem: int):
        if i == d:
            if rem == 0:
                yield tuple(point)
            return
        for x in range(m):
            if x * x > rem:
                break
            point[i] = x
            yield from rec(i + 1, rem - x * x)

    yield from rec(0, r2)


def integer_3ap_count(A: Sequence[int]) -> int:
    """Ordered (x, d) count over the integers (d any integer, 0 included)."""
    s = set(A)
    return sum(1 for a in s for b in s if 2 * b - a in s)


def is_progression_free(A: Sequence[int]) -> bool:
    """No nontrivial x, x+d, x+2d inside A."""
    s = set(A)
    return integer_3ap_count(s) == len(s)


def embed_interval(A: Sequence[int], N: int) -> tuple[Group, GSet]:
    """{1..N} -> Z_{3N+1}; 3-APs biject (no wraparound), so the ordered group
    count equals the ordered integer count."""
    if N < 1:
        raise ValueError("N must be >= 1")
    A = sorted(set(int(a) for a in A))
    if A and (A[0] < 1 or A[-1] > N):
        raise ValueError("elements must lie in [1..N]")
    grp = make_group(f"Z{3 * N + 1}")
    return grp, GSet.from_indices(grp, A)


# ---------------------------------------------------------------------------
# long APs
# ---------------------------------------------------------------------------


def longest_ap(S: GSet) -> APRun:
    """Exhaustive maximum-length AP in a cyclic group; steps restricted to
    units mod |G| (every step when |G| is prime). Ties: smallest (step, start)."""
    g = S.group
    if g.rank != 1:
        raise ValueError("the exhaustive AP scan is defined for cyclic groups")
    n = g.size
    if S.card == 0:
        return APRun((0,), (0,), 0)
    best_len, best_step, best_start = 1, 0, int(S.indices()[0])
    idx = np.arange(n, dtype=np.int64)
    for d in range(1, n):
        if math.gcd(d, n) != 1:
            continue
        orbit = (idx * d) % n
        memb = S.mask[orbit]
        if memb.all():
            length, start = n, 0
        else:
            length, start_pos = _longest_circular_run(memb)
            if length == 0:
                continue
            start = int(orbit[start_pos])
        if length > best_len or (length == best_len and (d, start) < (best_step, best_start)):
            best_len, best_step, best_start = length, d, start
        if best_len == n and best_step == 1:
            break
    return APRun((best_start,), (best_step,), best_len)


def _longest_circular_run(memb: np.ndarray) -> tuple[int, int]:
    """(length, start position) of the longest circular True-run; ties go to
    the smallest element at the run start after unwrapping."""
    n = memb.size
    doubled = np.concatenate([memb, memb])
    best_len, best_pos = 0, 0
    run = 0
    for i in range(2 * n):
        if doubled[i]:
            run += 1
            if run > n:
                run = n
            start = i - run + 1
            if start < n and run > best_len:
                best_len, best_pos = run, start
        else:
            run = 0
    return best_len, best_pos


# ---------------------------------------------------------------------------
# increment traces
# ---------------------------------------------------------------------------


@dataclass
class IncrementTrace:
    kind: str
    group0: str
    eps: float
    seed: int
    alpha0: float
    min_gain: float
    steps: list = field(default_factory=list)
    terminal: dict = field(default_factory=dict)
    constants: dict = field(default_factory=dict)
    cells: list = field(default_factory=list, repr=False)  # runtime only
    terminal_cell: Optional[tuple] = field(default=None, repr=False)  # runtime only

    def to_json_obj(self) -> dict:
        return {
            "kind": self.kind,
            "group0": self.group0,
            "eps": self.eps,
            "seed": self.seed,
            "alpha0": self.alpha0,
            "min_gain": self.min_gain,
            "steps": self.steps,
            "terminal": self.terminal,
            "constants": self.constants,
        }

    @property
    def densities(self) -> list[float]:
        return [self.alpha0] + [s["density"] for s in self.steps]

    def step_bound(self) -> int:
        if self.alpha0 <= 0 or self.min_gain <= 0:
            return 1
        return math.ceil(math.log(1.0 / self.alpha0) / math.log1p(self.min_gain)) + 1


def roth_ffq_driver(A: GSet, eps: float, codim_max_per_step: int = 4,
                    consts: Constants = Constants(), seed: int = 0,
                    trials: Optional[int] = None) -> IncrementTrace:
    """Iterate the increment step with C = 2.A' on the current cell until the
    near-uniform certificate fires (the cell's exact 3-AP count is then
    reported) or a budget binds."""
    from .subspaces import check_prime_power_group

    q = check_prime_power_group(A.group)
    if q == 2:
        raise ValueError("the driver needs an odd prime field")
    trace = IncrementTrace(
        kind="ffq", group0=A.group.spec_string(), eps=eps, seed=seed,
        alpha0=A.density, min_gain=eps / consts.c_inc,
        constants=consts.to_json_obj())
    cur_grp, cur_A = A.group, A
    trace.cells.append((cur_grp, cur_A))
    bound = trace.step_bound()
    while True:
        if cur_A.card == 0:
            trace.terminal = {"kind": "near-uniform", "note": "empty-cell",
                              "count_3aps": 0, "group": cur_grp.spec_string(),
                              "density": 0.0}
            return trace
        if cur_A.card == cur_grp.size or cur_grp.size == 1:
            trace.terminal = _near_uniform_terminal(cur_grp, cur_A, 1.0, eps)
            return trace
        # richness is the halting condition: a solution surplus is success,
        # only a deficit drives another increment round
        mu_A = mu_of_set(cur_A)
        inner = inner_wrt_exact(conv(mu_A, mu_A),
                                mu_of_set(dilate_set(cur_A, 2)).func)
        if inner >= (1 - Fraction(eps)):
            trace.terminal = _near_uniform_terminal(cur_grp, cur_A,
                                                    float(inner), eps)
            return trace
        try:
            out = density_increment_step(cur_A, dilate_set(cur_A, 2), eps,
                                         codim_max_per_step, consts,
                                         seed=seed + 97 * len(trace.steps),
                                         trials=trials)
        except OracleBudgetExceeded as exc:
            trace.terminal = {"kind": "budget-exceeded", "stage": exc.stage,
                              "margins": _floats(exc.margins),
                              "group": cur_grp.spec_string(),
                              "density": cur_A.density}
            return trace
        if out.near_uniform:
            trace.terminal = _near_uniform_terminal(cur_grp, cur_A,
                                                    out.inner_value, eps)
            return trace
        V = out.subspace
        x_idx = cur_grp.index(out.translate)
        sub, embed = V.as_group()
        mask_next = cur_A.translate(cur_grp.neg(x_idx)).mask[embed]
        nxt = GSet(sub, mask_next)
        assert abs(nxt.density - out.new_density) < 1e-9
        trace.steps.append({
            "cell": {"checks": [list(r) for r in V.checks],
                     "translate": list(out.translate),
                     "group": cur_grp.spec_string()},
            "density": out.new_density,
            "p": out.p, "p_prime": out.p_prime,
            "shifts": [list(s) for s in out.sift.shifts],
            "sift_inner": out.sift.inner_on_S,
            "smoothing_gap": out.smoothing.best_margin,
            "codim": V.codim,
        })
        trace.cells.append((sub, nxt))
        cur_grp, cur_A = sub, nxt
        if len(trace.steps) > bound:
            trace.terminal = {"kind": "budget-exceeded", "stage": "trace-bound",
                              "margins": {}, "group": cur_grp.spec_string(),
                              "density": cur_A.density}
            return trace


def _near_uniform_terminal(grp: Group, A: GSet, inner: float, eps: float) -> dict:
    return {"kind": "near-uniform", "inner": inner, "eps": eps,
            "count_3aps": count_3aps(A), "group": grp.spec_string(),
            "density": A.density}


def _floats(d: dict) -> dict:
    out = {}
    for k, v in d.items():
        try:
            out[k] = float(v) if not isinstance(v, dict) else _floats(v)
        except (TypeError, ValueError):
            out[k] = str(v)
    return out


# ---------------------------------------------------------------------------
# Bohr-set driver (Z_M)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BohrBudget:
    max_steps: int = 24
    trials: int = 12000
    freqs: int = 3
    widths: tuple = (1.0, 0.5, 0.25, 0.125)
    delta_ladder: tuple = (0.25, 0.1)


def _next_coprime_modulus(base: int, k: int) -> int:
    M = base
    while math.gcd(k, M) != 1:
        M += 1
    return M


def roth_znz_driver(A: Sequence[int], N: int, eps: float, k: int = 2,
                    budget: BohrBudget = BohrBudget(),
                    consts: Constants = Constants(), seed: int = 0) -> IncrementTrace:
    """Desk-scale integer driver: embed {1..N} into Z_M (M >= 3N+1 coprime to
    k) and iterate narrowing -> relative lifting -> unbalancing -> sifting ->
    Bohr smoothing, with every accepted step certified by an exactly
    recomputed relative-density gain."""
    A = sorted(set(int(a) for a in A))
    if A and (A[0] < 1 or A[-1] > N):
        raise ValueError("elements must lie in [1..N]")
    M = _next_coprime_modulus(3 * N + 1, k)
    grp = make_group(f"Z{M}")
    A0 = GSet.from_indices(grp, A)
    return _bohr_increment_loop(grp, A0, eps, k, budget, consts, seed, kind="znz")


def _bohr_increment_loop(grp: Group, A0: GSet, eps: float, k: int,
                         budget: BohrBudget, consts: Constants, seed: int,
                         kind: str) -> IncrementTrace:
    theta = eps / 16.0
    eps_nar = theta / 32.0
    min_gain = eps / 1024.0
    trace = IncrementTrace(
        kind=kind, group0=grp.spec_string(), eps=eps, seed=seed,
        alpha0=A0.density, min_gain=min_gain, constants=consts.to_json_obj())
    B = whole_group_bohr(grp)
    cur = A0
    shift_total = 0
    trace.cells.append((B, cur, shift_total))

    def finish(terminal: dict) -> IncrementTrace:
        trace.terminal = terminal
        return trace

    for it in range(budget.max_steps):
        if cur.card == 0:
            return finish({"kind": "near-uniform", "note": "empty-cell",
                           "solutions": 0, "bohr_size": B.size,
                           "density": 0.0})
        alpha = Fraction(cur.card, B.size)
        d = max(B.rank, 1)
        rho1 = consts.c_narrow * eps_nar * float(alpha) / d
        B1 = regular_dilate(dilate(B, rho1), consts.reg_const) if B.rank else B
        B2 = regular_dilate(dilate(B1, rho1), consts.reg_const) if B.rank else B
        try:
            bout = bour_narrow(cur, B, B1, B2, eps_nar, consts)
        except ConstantBustingInstance as exc:
            return finish({"kind": "budget-exceeded", "stage": "narrowing",
                           "margins": _floats(exc.payload),
                           "density": float(alpha), "bohr_size": B.size})
        if bout.kind != "translate":
            Bn = B1 if bout.kind == "inc_bprime" else B2
            x_idx = grp.index(bout.x)
            nxt = cur.translate(grp.neg(x_idx)).intersect(Bn.members)
            gain = Fraction(nxt.card, Bn.size) / alpha
            trace.steps.append({
                "kind": "narrow-increment", "which": bout.kind,
                "translate": list(bout.x), "density": nxt.card / Bn.size,
                "gain": float(gain), "bohr": Bn.to_json_obj(),
                "bohr_size": Bn.size})
            B, cur = Bn, nxt
            shift_total = grp.add(shift_total, x_idx)
            trace.cells.append((B, cur, shift_total))
            continue

        # translate case: A' = (A - x) ∩ B1, then test flatness vs C = k.(A' ∩ B2)
        x_idx = grp.index(bout.x)
        Ap = cur.translate(grp.neg(x_idx)).intersect(B1.members)
        App = Ap.intersect(B2.members)
        if Ap.card == 0 or App.card == 0:
            return finish({"kind": "budget-exceeded", "stage": "narrow-degenerate",
                           "margins": {"b1_size": B1.size, "b2_size": B2.size},
                           "density": float(alpha), "bohr_size": B.size})
        C = dilate_set(App, k)
        container = freq_dilate(B2, k)
        # richness halts the loop (one-sided: a surplus of a1+a2 = k*c
        # solutions is the goal); only a deficit drives the increment chain
        target_fr = Fraction(grp.size, B1.size)
        inner_fr = inner_wrt_exact(conv(mu_of_set(Ap), mu_of_set(Ap)),
                                   mu_of_set(C).func)
        if inner_fr >= (1 - Fraction(eps)) * target_fr:
            sols = _solution_count(Ap, App, k)
            shift_final = grp.add(shift_total, x_idx)
            trace.terminal_cell = (B1, B2, Ap, shift_final)
            return finish({"kind": "near-uniform", "inner": float(inner_fr),
                           "target": float(target_fr), "eps": eps,
                           "solutions": sols, "bohr_size": B1.size,
                           "density": Ap.card / B1.size,
                           "shift": list(grp.coords(shift_final))})
        try:
            lift = holder_lift(Ap, C, eps, BohrContext(B1, container.members), consts)
        except (HypothesisViolation, ConstantBustingInstance) as exc:
            return finish({"kind": "budget-exceeded", "stage": "holder",
                           "margins": {"error": str(exc)},
                           "density": float(alpha), "bohr_size": B.size})
        if lift.near_uniform:
            # unreachable after the richness check, kept as a defensive exit
            return finish({"kind": "budget-exceeded", "stage": "holder-two-sided",
                           "margins": {"inner": lift.inner_value},
                           "density": float(alpha), "bohr_size": B.size})

        step = _bohr_ap_step(grp, Ap, B1, B2, lift.p, eps, theta, k, budget,
                             consts, seed + 131 * it)
        if "error-stage" in step:
            return finish({"kind": "budget-exceeded", "stage": step["error-stage"],
                           "margins": step.get("margins", {}),
                           "density": float(alpha), "bohr_size": B.size})
        Bn, x_new, rec = step["bohr"], step["translate"], step["record"]
        nxt = Ap.translate(grp.neg(x_new)).intersect(Bn.members)
        new_rel = Fraction(nxt.card, Bn.size)
        if new_rel < (1 + Fraction(min_gain).limit_denominator(1 << 40)) * alpha:
            return finish({"kind": "budget-exceeded", "stage": "increment-cert",
                           "margins": {"achieved": float(new_rel / alpha)},
                           "density": float(alpha), "bohr_size": B.size})
        rec.update({"kind": "ap-increment", "density": nxt.card / Bn.size,
                    "gain": float(new_rel / alpha), "bohr_size": Bn.size})
        trace.steps.append(rec)
        B, cur = Bn, nxt
        shift_total = grp.add(grp.add(shift_total, x_idx), x_new)
        trace.cells.append((B, cur, shift_total))
    return finish({"kind": "budget-exceeded", "stage": "max-steps",
                   "margins": {}, "density": trace.densities[-1],
                   "bohr_size": B.size})


def _solution_count(Ap: GSet, App: GSet, k: int) -> int:
    """Exact #{(a1, a2, c) in A' x A' x A'' : a1 + a2 = k c}."""
    cnt = conv(FuncR.indicator(Ap), FuncR.indicator(Ap))
    kc = dilate_set(App, k)
    total = inner_wrt(cnt, FuncR.indicator(kc)) * Ap.group.size**2
    return int(round(total))


def _bohr_ap_step(grp: Group, Ap: GSet, B1: BohrSet, B2: BohrSet, p: int,
                  eps: float, theta: float, k: int, budget: BohrBudget,
                  consts: Constants, seed: int) -> dict:
    """The non-flat branch: positive-definite bridge, relative unbalancing,
    averaging translate, sifting, Bohr smoothing. Returns either
    {'bohr', 'translate', 'record'} or {'error-stage', 'margins'}."""
    target = grp.size / B1.size
    d = max(B1.rank, 1)
    rho = consts.c_narrow / d
    B3 = regular_dilate(dilate(B2, rho), consts.reg_const) if B2.rank else B2
    B4 = regular_dilate(dilate(B3, rho), consts.reg_const) if B3.rank else B3
    P = freq_dilate(B3, k)
    Q = freq_dilate(B4, k)
    nu = chained_measure(P.members, Q.members)

    fd = mu_of_set(Ap).func.sub(mu_of_set(B1.members).func)
    circ = diffconv(fd, fd)
    if lp_norm_wrt(circ, p, nu) < (eps / 4.0) * target * (1 - 1e-9):
        return {"error-stage": "posdef-bridge",
                "margins": {"norm": lp_norm_wrt(circ, p, nu),
                            "needed": (eps / 4.0) * target}}
    try:
        unb = bohr_unbalance(Ap, B1, nu, eps / 4.0, p, consts)
    except (HypothesisViolation, ConstantBustingInstance) as exc:
        return {"error-stage": "bohr-unbalance", "margins": {"error": str(exc)}}

    base = diffconv(mu_of_set(Ap), mu_of_set(Ap))
    # averaging: best translate x2 of the product measure
    w0 = conv(mu_of_set(P.members), mu_of_set(Q.members))
    mx = float(np.max(base.values))
    arr = (base.values / mx) ** unb.p_prime if mx > 0 else base.values
    shape = grp.orders
    F1 = np.fft.fftn(w0.values.reshape(shape))
    F2 = np.fft.fftn(arr.reshape(shape))
    scores = np.fft.ifftn(np.conj(F1) * F2).real.reshape(-1)
    x2 = int(np.argmax(scores))
    B2s = Q.members.translate(grp.neg(x2))

    s_thr = (1 + Fraction(eps) / 32) * Fraction(grp.size, B1.size)
    mask = np.zeros(grp.size, dtype=bool)
    for x in range(grp.size):
        if base.value_exact(x) >= s_thr:
            mask[x] = True
    S_drv = GSet(grp, mask)

    margins: dict = {"p_prime": unb.p_prime}
    rung = 0
    for p_s in dict.fromkeys([unb.p_prime, unb.p_prime + 2, unb.p_prime + 4,
                              unb.p_prime + 8]):
        mu_sift = ProbMeasure(diffconv(mu_of_set(P.members), mu_of_set(B2s)))
        norm_ps = lp_norm_wrt(base, p_s, mu_sift)
        eps_s = 1.0 - float(s_thr) * (1 + 1e-9) / norm_ps if norm_ps > 0 else -1.0
        if eps_s < 0.02:
            continue
        for delta_s in budget.delta_ladder:
            rung += 1
            try:
                sres = sift(Ap, P.members, B2s, p_s, eps_s, delta_s,
                            trials=budget.trials, seed=seed + rung, consts=consts)
            except (SiftExhausted, ValueError) as exc:
                margins[f"rung{rung}_sift"] = str(getattr(exc, "best", exc))
                continue
            inner_S = inner_wrt(diffconv(mu_of_set(sres.a1), mu_of_set(sres.a2)),
                                FuncR.indicator(S_drv))
            if inner_S < 1.0 - delta_s - 1e-9:
                margins[f"rung{rung}_innerS"] = inner_S
                continue
            supp = diffconv(FuncR.indicator(sres.a1), FuncR.indicator(sres.a2))
            S_ap = GSet(grp, S_drv.mask & (supp.values > 1e-14))
            if S_ap.card > 2 * P.size:
                margins[f"rung{rung}_scard"] = S_ap.card
                continue
            sm = find_smoothing_bohr(
                P, Q, sres.a1, sres.a2, S_ap, theta / 8.0 * target,
                BohrSearchBudget(budget.freqs, budget.widths),
                a2_shift=grp.neg(x2), reg_const=consts.reg_const)
            if not sm.found:
                margins[f"rung{rung}_smoothing"] = sm.best_margin
                continue
            Bn = sm.witness
            w = conv(FuncR.indicator(Ap), mu_of_set(Bn.members))
            x_new = int(np.argmax(w.values))
            rec = {"p": p_s, "p_prime": unb.p_prime,
                   "shifts": [list(s) for s in sres.shifts],
                   "sift_inner": inner_S,
                   "smoothing_gap": sm.best_margin,
                   "bohr": Bn.to_json_obj(),
                   "translate": list(grp.coords(x_new))}
            return {"bohr": Bn, "translate": x_new, "record": rec}
    return {"error-stage": "ap-search", "margins": _floats(margins)}


# ---------------------------------------------------------------------------
# A+A+A pipeline
# ---------------------------------------------------------------------------


@dataclass
class APReport:
    run: Optional[APRun]
    container_size: int
    verified: bool
    stage: str  # "ok" or the failed check's name
    margins: dict
    trace: IncrementTrace

    def to_json_obj(self) -> dict:
        return {
            "run": self.run.to_json_obj() if self.run else None,
            "container_size": self.container_size,
            "verified": self.verified,
            "stage": self.stage,
            "margins": _floats(self.margins),
            "trace": self.trace.to_json_obj(),
        }


def three_sumset_ap_pipeline(A: Sequence[int], N: int, eps: float = 0.25,
                             budget: BohrBudget = BohrBudget(),
                             consts: Constants = Constants(),
                             seed: int = 0) -> APReport:
    """A+A+A long-AP pipeline over Z_M (M = N if prime, else the next prime):
    run the k=1 Bohr loop; check mu_{B'}(A'+A') >= 1 - alpha/4; check the
    narrowed B'' sits inside A'+A'+A' by the emptiness test; extract an AP and
    verify every term inside A+A+A exhaustively."""
    A = sorted(set(int(a) for a in A))
    if A and (A[0] < 1 or A[-1] > N):
        raise ValueError("elements must lie in [1..N]")
    M = N
    while not _is_prime(M):
        M += 1
    grp = make_group(f"Z{M}")
    A_emb = GSet.from_indices(grp, [a % M for a in A])
    alpha = Fraction(A_emb.card, M)
    trace = _bohr_increment_loop(grp, A_emb, eps, 1, budget, consts, seed, kind="3sum")
    container = sumset(sumset(A_emb, A_emb), A_emb)

    def fail(stage: str, margins: dict) -> APReport:
        return APReport(None, container.card, False, stage, margins, trace)

    if trace.terminal.get("kind") != "near-uniform" or trace.terminal_cell is None:
        return fail("driver", {"terminal": str(trace.terminal.get("stage",
                                                                  trace.terminal.get("note", "?")))})
    B1, Bprime, Ap, shift_total = trace.terminal_cell
    if Ap.card == 0:
        return fail("driver", {"terminal": "empty"})

    # mu_{B'}(A'+A') >= 1 - alpha/4, with alpha the original density of A
    AA = sumset(Ap, Ap)
    dens_AA = Fraction(AA.intersect(Bprime.members).card, Bprime.size)
    need = 1 - alpha / 4
    if dens_AA < need:
        return fail("sumset-density", {"mu_Bprime(A'+A')": float(dens_AA),
                                       "needed": float(need)})

    # B'' = regular dilate of B' at rho = c*alpha/rk; contradiction test:
    # x in B'' must have (A'+A') ∩ (x - A') nonempty, i.e. x in A'+A'+A'
    d = max(Bprime.rank, 1)
    rho = consts.c_narrow * float(alpha) / d
    B2 = regular_dilate(dilate(Bprime, rho), consts.reg_const) if Bprime.rank else Bprime
    AAA = sumset(AA, Ap)
    missing = int(np.count_nonzero(B2.members.mask & ~AAA.mask))
    if missing:
        return fail("triple-cover", {"missing": missing, "b2_size": B2.size})

    # A' ⊆ A - shift, so A'+A'+A' + 3*shift ⊆ A+A+A
    ap = extract_ap(B2)
    shift3 = (3 * shift_total) % grp.size
    start_idx = grp.add(grp.index(ap.start), shift3)
    run = APRun(grp.coords(start_idx), ap.step, ap.length)
    terms = run.terms(grp)
    ok = all(bool(container.mask[t]) for t in terms)
    return APReport(run, container.card, ok, "ok" if ok else "membership",
                    {"length": ap.length}, trace)
