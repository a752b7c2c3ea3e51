"""The proof steps as certified, machine-checkable operations:

1. Holder lifting      - near-uniform inner product or an L^p lower bound;
2. unbalancing          - spectrally nonnegative f with ||f||_p >= eps forces
                          ||f+1||_{p'} >= 1 + eps/2 at some small p';
3. dependent random choice / sifting - dense A_1, A_2 from intersected random
                          translates with controlled difference convolution;
4. almost-periodicity oracles - exhaustive subspace search over F_q^n and a
                          heuristic Bohr-set search (desk-scale stand-ins for
                          imported black boxes; conclusions only);
5. density increment    - the chained step with an exactly recomputed
                          sup-norm certificate.

Every returned outcome replays from raw inputs on the exact path; searches
never emit an uncertified success. Randomised searches take an explicit seed
and draw shift vectors by rejection-free index arithmetic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .bohr import BohrSet, dilate, is_regular, join, regular_dilate
from .constants import Constants
from .fourier import dft, is_spectrally_nonneg
from .functions import (
    FuncR,
    ProbMeasure,
    conv,
    diffconv,
    inner_wrt,
    inner_wrt_exact,
    lp_moment_exact,
    lp_norm_wrt,
    mu_of_set,
    uniform,
)
from .groups import GSet, dilate_set

SLOP = 1e-12


class HypothesisViolation(ValueError):
    """An operation's stated hypothesis fails on the given instance."""


class SiftExhausted(RuntimeError):
    """The shift search ran out of candidates; carries the best margins seen."""

    def __init__(self, message: str, best: Optional[dict] = None):
        super().__init__(message)
        self.best = best or {}


class OracleBudgetExceeded(RuntimeError):
    """A desk-scale oracle budget bound the search (not a disproof)."""

    def __init__(self, message: str, stage: str, margins: Optional[dict] = None):
        super().__init__(message)
        self.stage = stage
        self.margins = margins or {}


class ConstantBustingInstance(RuntimeError):
    """An instance falsified only a calibrated constant, not the logic."""

    def __init__(self, constant: str, message: str, payload: Optional[dict] = None):
        super().__init__(f"[{constant}] {message}")
        self.constant = constant
        self.payload = payload or {}


# ---------------------------------------------------------------------------
# Step 1: Holder lifting
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BohrContext:
    """Relative setting: A ⊆ B.members, C inside a narrow container set."""

    B: BohrSet
    container: GSet


@dataclass
class LiftOutcome:
    variant: str  # "near_uniform" | "lp"
    inner_value: float
    target: float
    eps: float
    context: str
    p: Optional[int] = None
    norm_value: Optional[float] = None
    gamma: float = 0.0

    @property
    def near_uniform(self) -> bool:
        return self.variant == "near_uniform"


def holder_lift(A: GSet, C: GSet, eps: float, context: Optional[BohrContext] = None,
                consts: Constants = Constants()) -> LiftOutcome:
    """Either |<mu_A*mu_A, mu_C> - target| <= eps*target, or the smallest even
    p <= 2*ceil(k_hold*log(2/gamma)) with ||(mu_A-u)*(mu_A-u)||_{p(w)} >= (eps/2)*target.

    Globally (u, w, target) = (1, uniform, 1); in a Bohr context
    (mu_B, mu_container, mu(B)^{-1}), with the container checked to sit inside
    B_{c*eps*alpha/rk(B)}.
    """
    if A.card == 0 or C.card == 0:
        raise ValueError("holder lifting needs nonempty A and C")
    grp = A.group
    mu_A = mu_of_set(A)
    mu_C = mu_of_set(C)
    if context is None:
        u = FuncR.constant(grp, 1)
        w = None
        target = Fraction(1)
        gamma = Fraction(C.card, grp.size)
        ctx_name = "global"
    else:
        B, cont = context.B, context.container
        if not A.is_subset(B.members):
            raise HypothesisViolation("A must sit inside the Bohr set")
        if not C.is_subset(cont):
            raise HypothesisViolation("C must sit inside the stated container")
        alpha = A.card / B.size
        d = max(B.rank, 1)
        rho = consts.c_narrow * eps * alpha / d
        idx = cont.indices()
        if idx.size and float(B.thresholds[idx].max()) > rho * (1 + 1e-9):
            raise HypothesisViolation(
                f"container is not inside B_rho (rho = c*eps*alpha/d = {rho:.3g})"
            )
        u = mu_of_set(B.members).func
        w = mu_of_set(cont)
        target = Fraction(grp.size, B.size)
        gamma = Fraction(C.card, cont.card)
        ctx_name = "bohr"

    inner_f = inner_wrt_exact(conv(mu_A, mu_A), mu_C.func)
    eps_f = Fraction(eps)
    if abs(inner_f - target) <= eps_f * target:
        return LiftOutcome("near_uniform", float(inner_f), float(target), eps,
                           ctx_name, gamma=float(gamma))

    h = conv(mu_A.func.sub(u), mu_A.func.sub(u))
    p_max = 2 * math.ceil(consts.k_hold * math.log(2.0 / float(gamma)))
    need = eps_f / 2 * target
    for p in range(2, max(p_max, 2) + 1, 2):
        norm = lp_norm_wrt(h, p, w)
        if norm >= float(need) * (1 - 1e-12):
            return LiftOutcome("lp", float(inner_f), float(target), eps, ctx_name,
                               p=p, norm_value=norm, gamma=float(gamma))
    raise ConstantBustingInstance(
        "k_hold",
        f"no even p <= {p_max} reached the norm bound",
        {"inner": float(inner_f), "target": float(target), "gamma": float(gamma)},
    )


# ---------------------------------------------------------------------------
# Step 2: unbalancing
# ---------------------------------------------------------------------------


@dataclass
class UnbalanceOutcome:
    p_prime: int
    norm_value: float
    eps: float
    p: int
    bound: int


def _pp_bound(k: float, eps: float, p: int) -> int:
    return math.ceil(k * (1.0 / eps) * math.log(math.e / eps) * p)


def unbalance(f: FuncR, nu: Optional[ProbMeasure], eps: float, p: int,
              consts: Constants = Constants()) -> UnbalanceOutcome:
    """Smallest integer p' with ||f+1||_{p'(nu)} >= 1 + eps/2, for spectrally
    nonnegative f and nu; asserts p' <= ceil(k_unb * eps^{-1} log(e/eps) * p)."""
    if not is_spectrally_nonneg(f):
        raise HypothesisViolation("f must have a nonnegative spectrum")
    if nu is not None and not is_spectrally_nonneg(nu.func):
        raise HypothesisViolation("nu must have a nonnegative spectrum")
    if lp_norm_wrt(f, p, nu) < eps * (1 - 1e-9):
        raise HypothesisViolation(f"||f||_p(nu) must be at least eps = {eps}")
    g = f.add_scalar(1)
    bound = _pp_bound(consts.k_unb, eps, p)
    goal = 1.0 + eps / 2.0
    exact_ok = g.exact and (nu is None or nu.exact)
    goal_fr = 1 + Fraction(eps) / 2
    for pp in range(1, bound + 1):
        if exact_ok:
            hit = lp_moment_exact(g, pp, nu) >= goal_fr**pp
        else:
            hit = lp_norm_wrt(g, pp, nu) >= goal * (1 - 1e-12)
        if hit:
            return UnbalanceOutcome(pp, lp_norm_wrt(g, pp, nu), eps, p, bound)
    raise ConstantBustingInstance(
        "k_unb", f"no p' <= {bound} reached 1 + eps/2", {"eps": eps, "p": p}
    )


def bohr_unbalance(A: GSet, B: BohrSet, nu: ProbMeasure, eps: float, p: int,
                   consts: Constants = Constants()) -> UnbalanceOutcome:
    """Bohr-relative unbalancing: from ||(mu_A-mu_B)~(mu_A-mu_B)||_{p(nu)} >=
    eps*mu(B)^{-1} (nu spectrally nonnegative, supported on a narrow dilate)
    produce p' with ||mu_A~mu_A||_{p'(nu)} >= (1 + eps/4)*mu(B)^{-1}."""
    grp = A.group
    if not A.is_subset(B.members):
        raise HypothesisViolation("A must sit inside the Bohr set")
    alpha = A.card / B.size
    d = max(B.rank, 1)
    rho = consts.c_narrow * eps * alpha / d
    supp = np.flatnonzero(nu.values > 1e-14)
    if supp.size and float(B.thresholds[supp].max()) > rho * (1 + 1e-9):
        raise HypothesisViolation("nu is not supported on B_{c*eps*alpha/d}")
    if not is_spectrally_nonneg(nu.func):
        raise HypothesisViolation("nu must have a nonnegative spectrum")
    target = grp.size / B.size
    fd = mu_of_set(A).func.sub(mu_of_set(B.members).func)
    if lp_norm_wrt(diffconv(fd, fd), p, nu) < eps * target * (1 - 1e-9):
        raise HypothesisViolation("the centred difference convolution is too small")
    base = diffconv(mu_of_set(A), mu_of_set(A))
    bound = _pp_bound(consts.k_lporth, eps, p)
    goal = (1.0 + eps / 4.0) * target
    for pp in range(1, bound + 1):
        norm = lp_norm_wrt(base, pp, nu)
        if norm >= goal * (1 - 1e-12):
            return UnbalanceOutcome(pp, norm, eps, p, bound)
    raise ConstantBustingInstance(
        "k_lporth", f"no p' <= {bound} reached (1+eps/4)/mu(B)", {"eps": eps, "p": p}
    )


# ---------------------------------------------------------------------------
# Step 3: dependent random choice and sifting
# ---------------------------------------------------------------------------


@dataclass
class SiftResult:
    """Certificate for one accepted shift vector s in G^p."""

    a1: GSet
    a2: GSet
    shifts: list[tuple[int, ...]]
    S: Optional[GSet]
    inner_value: float          # <mu_{A1} ~ mu_{A2}, f> for the searched f
    densities: tuple[float, float]  # relative to B1, B2
    f_threshold: float
    density_threshold: float
    p_used: int
    mode: str
    seed: Optional[int] = None
    inner_on_S: Optional[float] = None


def _translate_table(A: GSet) -> np.ndarray:
    """T[t] = bitmap of A + t."""
    g = A.group
    n = g.size
    if n > 8192:
        raise ValueError("shift-scan table would exceed the desk-scale cap")
    nd = A.mask.reshape(g.orders)
    axes = tuple(range(g.rank))
    T = np.empty((n, n), dtype=bool)
    for t in range(n):
        T[t] = np.roll(nd, g.roll_shift(t), axis=axes).reshape(-1)
    return T


def drc(A: GSet, B1: GSet, B2: GSet, p: int, f: FuncR,
        exhaustive: Optional[bool] = None, trials: int = 20000, seed: int = 0,
        consts: Constants = Constants(),
        f_threshold: Optional[float] = None) -> SiftResult:
    """Find s in G^p with, for A_i = B_i ∩ (A+s_1) ∩ ... ∩ (A+s_p):

        <mu_{A1} ~ mu_{A2}, f>  <=  2 <(mu_A~mu_A)^p, f>_mu / ||mu_A~mu_A||_{p(mu)}^p
        mu_{B1}(A1) * mu_{B2}(A2)  >=  (1/4) alpha^{2p} ||mu_A~mu_A||_{p(mu)}^{2p}

    where mu = mu_{B1} ~ mu_{B2}. Exhaustive mode scans all of G^p in index
    order (first hit wins); sampled mode draws seeded uniform shift vectors.
    `f_threshold` may tighten the first inequality (used by sift).
    """
    if A.card == 0 or B1.card == 0 or B2.card == 0:
        raise ValueError("drc needs nonempty A, B1, B2")
    if p < 1:
        raise ValueError("p must be >= 1")
    grp = A.group
    n = grp.size
    mu = ProbMeasure(diffconv(mu_of_set(B1), mu_of_set(B2)))
    base = diffconv(mu_of_set(A), mu_of_set(A))
    alpha = Fraction(A.card, n)
    moment_p = lp_moment_exact(base, p, mu)  # = ||base||_{p(mu)}^p
    if moment_p == 0:
        raise ValueError("||mu_A~mu_A||_{p(mu)} vanishes; no usable instance")
    inner_pf = float(np.mean(mu.values * base.values**p * f.values))
    eta = inner_pf / float(moment_p)
    thr_f = 2.0 * eta
    if f_threshold is not None:
        thr_f = min(thr_f, f_threshold)
    thr_dens = 0.25 * float(alpha**(2 * p)) * float(moment_p) ** 2

    if exhaustive is None:
        exhaustive = n**p <= consts.drc_exhaustive_cap
    T = _translate_table(A)
    b1 = B1.mask
    b2 = B2.mask
    f_vals = f.values

    def eval_candidates(smat: np.ndarray, base_index: int, mode: str,
                        best: dict) -> Optional[SiftResult]:
        m1 = np.broadcast_to(b1, (smat.shape[0], n)).copy()
        m2 = np.broadcast_to(b2, (smat.shape[0], n)).copy()
        for j in range(p):
            tj = T[smat[:, j]]
            m1 &= tj
            m2 &= tj
        c1 = m1.sum(axis=1)
        c2 = m2.sum(axis=1)
        dens = (c1 / B1.card) * (c2 / B2.card)
        ok = (c1 > 0) & (c2 > 0) & (dens >= thr_dens * (1 - 1e-12))
        shape = grp.orders
        for i in np.flatnonzero(ok):
            F1 = np.fft.fftn(m1[i].astype(np.float64).reshape(shape))
            F2 = np.fft.fftn(m2[i].astype(np.float64).reshape(shape))
            corr = np.fft.ifftn(np.conj(F1) * F2).real.reshape(-1) / n
            inner_f = float(np.mean(corr * f_vals)) * n * n / (int(c1[i]) * int(c2[i]))
            if inner_f < best.get("inner_f", math.inf):
                best.update(inner_f=inner_f, dens=float(dens[i]))
            if inner_f <= thr_f + SLOP:
                shifts = [grp.coords(int(v)) for v in smat[i]]
                a1 = GSet(grp, m1[i].copy())
                a2 = GSet(grp, m2[i].copy())
                return SiftResult(
                    a1=a1, a2=a2, shifts=shifts, S=None,
                    inner_value=inner_f,
                    densities=(a1.card / B1.card, a2.card / B2.card),
                    f_threshold=thr_f, density_threshold=thr_dens,
                    p_used=p, mode=mode,
                    seed=seed if mode == "sampled" else None)
        if np.any(ok) and "dens" not in best:
            best["dens"] = float(dens[np.flatnonzero(ok)[0]])
        return None

    best: dict = {}
    chunk = 4096
    if exhaustive:
        total = n**p
        if total > consts.drc_exhaustive_cap:
            raise ValueError(f"|G|^p = {total} exceeds the exhaustive cap")
        for start in range(0, total, chunk):
            idx = np.arange(start, min(start + chunk, total), dtype=np.int64)
            smat = np.empty((idx.size, p), dtype=np.int64)
            rem = idx.copy()
            for j in range(p - 1, -1, -1):
                smat[:, j] = rem % n
                rem //= n
            hit = eval_candidates(smat, start, "exhaustive", best)
            if hit is not None:
                return hit
        raise SiftExhausted(
            f"exhaustive scan of {total} shift vectors found no certified pair", best)
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    done = 0
    while done < trials:
        take = min(chunk, trials - done)
        smat = rng.integers(0, n, size=(take, p), dtype=np.int64)
        hit = eval_candidates(smat, done, "sampled", best)
        if hit is not None:
            return hit
        done += take
    raise SiftExhausted(f"sampled search exhausted {trials} trials", best)


def sift(A: GSet, B1: GSet, B2: GSet, p: int, eps: float, delta: float,
         trials: int = 20000, seed: int = 0,
         consts: Constants = Constants()) -> SiftResult:
    """Sifting: S = {x : mu_A~mu_A(x) > (1-eps) ||mu_A~mu_A||_{p(mu)}} and the
    returned A_1 ⊆ B_1, A_2 ⊆ B_2 satisfy <mu_{A1}~mu_{A2}, 1_S> >= 1-delta
    plus the lemma's density guarantee. p is raised internally by
    ceil((1/eps) log(2/delta)) before the shift search."""
    grp = A.group
    mu = ProbMeasure(diffconv(mu_of_set(B1), mu_of_set(B2)))
    base = diffconv(mu_of_set(A), mu_of_set(A))
    # S from the caller's p (exact comparison: base^p vs (1-eps)^p * moment)
    moment_p = lp_moment_exact(base, p, mu)
    one_m_eps = 1 - Fraction(eps)
    thr_pow = one_m_eps**p * moment_p
    mask = np.zeros(grp.size, dtype=bool)
    for x in range(grp.size):
        v = base.value_exact(x)
        if v > 0 and v**p > thr_pow:
            mask[x] = True
    S = GSet(grp, mask)
    p_raised = p + math.ceil((1.0 / eps) * math.log(2.0 / delta))
    f = FuncR.indicator(S.complement())
    res = drc(A, B1, B2, p_raised, f, exhaustive=None, trials=trials, seed=seed,
              consts=consts, f_threshold=delta)
    res.S = S
    res.inner_on_S = 1.0 - res.inner_value
    return res


def drc_identity_gap(A: GSet, B1: GSet, B2: GSet, p: int, f: FuncR) -> float:
    """|<(mu_A~mu_A)^p, f>_mu - alpha^{-2p} beta1^{-1} beta2^{-1} E_s <1_{A1(s)}~1_{A2(s)}, f>|
    with the s-average taken over all of G^p (the identity behind drc)."""
    grp = A.group
    n = grp.size
    mu = ProbMeasure(diffconv(mu_of_set(B1), mu_of_set(B2)))
    base = diffconv(mu_of_set(A), mu_of_set(A))
    lhs = float(np.mean(mu.values * base.values**p * f.values))
    T = _translate_table(A)
    total = 0.0
    shape = grp.orders
    for flat in range(n**p):
        rem = flat
        m1 = B1.mask.copy()
        for _ in range(p):
            m1 &= T[rem % n]
            rem //= n
        rem = flat
        m2 = B2.mask.copy()
        for _ in range(p):
            m2 &= T[rem % n]
            rem //= n
        F1 = np.fft.fftn(m1.astype(np.float64).reshape(shape))
        F2 = np.fft.fftn(m2.astype(np.float64).reshape(shape))
        corr = np.fft.ifftn(np.conj(F1) * F2).real.reshape(-1) / n
        total += float(np.mean(corr * f.values))
    avg = total / n**p
    alpha = A.card / n
    beta1 = B1.card / n
    beta2 = B2.card / n
    rhs = avg / (alpha ** (2 * p) * beta1 * beta2)
    return abs(lhs - rhs)


# ---------------------------------------------------------------------------
# Step 4: almost-periodicity oracles
# ---------------------------------------------------------------------------


@dataclass
class SmoothingResult:
    found: bool
    witness: object  # Subspace | BohrSet | None
    codim: Optional[int]
    inner_base: float
    inner_smoothed: Optional[float]
    best_margin: float
    candidates_tried: int
    eps: float


def find_smoothing_subspace(A1: GSet, A2: GSet, S: GSet, eps: float,
                            codim_max: int) -> SmoothingResult:
    """Exhaustive subspace oracle over F_q^n: the lowest-codimension V (RREF
    enumeration order) with |<mu_V * mu_{A1}~mu_{A2}, 1_S> - <mu_{A1}~mu_{A2}, 1_S>| <= eps.

    Candidates are screened spectrally (mu_V-hat indicates the check-row
    span); the winner's certificate is recomputed on the exact physical path.
    NotFound is a legitimate outcome at desk scale.
    """
    from .subspaces import check_prime_power_group, enumerate_subspaces

    grp = A1.group
    q = check_prime_power_group(grp)
    del q
    if A1.card == 0 or A2.card == 0:
        raise ValueError("smoothing oracle needs nonempty A1, A2")
    t = diffconv(mu_of_set(A1), mu_of_set(A2))
    ind_S = FuncR.indicator(S)
    W = dft(t).values * np.conj(dft(ind_S).values)
    base = float(np.sum(W).real)
    base_exact = inner_wrt_exact(t, ind_S)
    tried = 0
    best = math.inf
    eps_f = Fraction(eps)
    for c in range(0, min(codim_max, grp.rank) + 1):
        for V in enumerate_subspaces(grp, c):
            tried += 1
            rows = np.asarray(V.checks, dtype=np.int64).reshape(c, grp.rank)
            if c == 0:
                span_idx = np.zeros(1, dtype=np.int64)
            else:
                coeffs = np.stack(
                    np.meshgrid(*([np.arange(grp.orders[0])] * c), indexing="ij"),
                    axis=-1).reshape(-1, c)
                span = (coeffs @ rows) % grp.orders[0]
                span_idx = span @ grp.strides
            val = float(np.sum(W[span_idx]).real)
            gap = abs(val - base)
            best = min(best, gap)
            if gap <= eps + 1e-9:
                smoothed = inner_wrt_exact(conv(mu_of_set(V.members), t), ind_S)
                if abs(smoothed - base_exact) <= eps_f:
                    return SmoothingResult(True, V, c, float(base_exact),
                                           float(smoothed), gap, tried, eps)
    return SmoothingResult(False, None, None, base, None, best, tried, eps)


@dataclass(frozen=True)
class BohrSearchBudget:
    freqs: int = 3
    widths: tuple = (1.0, 0.5, 0.25, 0.125)
    max_candidates: int = 64


def find_smoothing_bohr(B: BohrSet, Bprime: BohrSet, A1: GSet, A2: GSet,
                        S: GSet, eps: float,
                        budget: BohrSearchBudget = BohrSearchBudget(),
                        a2_shift: Optional[int] = None,
                        reg_const: float = 100.0) -> SmoothingResult:
    """Desk-scale Bohr smoothing search (stand-in for an imported black box;
    the candidate generator is engineering, not the cited construction).

    Candidates are B' itself, then regularised joins of B' with the top-m
    characters of |mu_{A1}-hat| over a geometric width grid; the first
    candidate B'' ⊆ B' with |<mu_{B''} * mu_{A1}~mu_{A2}, 1_S> - <mu_{A1}~mu_{A2}, 1_S>| <= eps wins.
    """
    grp = B.group
    if not A1.is_subset(B.members):
        raise HypothesisViolation("A1 must sit inside B")
    if not _inside_some_translate(A2, Bprime.members, a2_shift):
        raise HypothesisViolation("A2 must sit inside a translate of B'")
    if S.card > 2 * B.size:
        raise HypothesisViolation("|S| must be at most 2|B|")
    if A1.card == 0 or A2.card == 0:
        raise ValueError("smoothing oracle needs nonempty A1, A2")

    t = diffconv(mu_of_set(A1), mu_of_set(A2))
    ind_S = FuncR.indicator(S)
    base = inner_wrt(t, ind_S)
    spectrum = np.abs(dft(mu_of_set(A1)).values)
    order = np.argsort(-spectrum, kind="stable")
    top = [int(i) for i in order if i != 0][: budget.freqs]

    def candidates():
        yield Bprime
        for m in range(1, budget.freqs + 1):
            freqs = [grp.coords(i) for i in top[:m]]
            for w in budget.widths:
                raw = join(Bprime, BohrSet(grp, freqs, [w] * m))
                if raw.size == 0:
                    continue
                try:
                    yield regular_dilate(raw, reg_const)
                except RuntimeError:
                    continue

    tried = 0
    best = math.inf
    for cand in candidates():
        if tried >= budget.max_candidates:
            break
        tried += 1
        if not cand.members.is_subset(Bprime.members):
            continue
        val = inner_wrt(conv(mu_of_set(cand.members), t), ind_S)
        gap = abs(val - base)
        best = min(best, gap)
        if gap <= eps + 1e-9:
            return SmoothingResult(True, cand, cand.rank, base, val, gap, tried, eps)
    return SmoothingResult(False, None, None, base, None, best, tried, eps)


def _inside_some_translate(A: GSet, container: GSet, hint: Optional[int]) -> bool:
    if hint is not None:
        return A.translate(A.group.neg(hint)).is_subset(container)
    if A.card == 0:
        return True
    for x in range(A.group.size):
        if A.translate(A.group.neg(x)).is_subset(container):
            return True
    return False


# ---------------------------------------------------------------------------
# Step 5: density increment (F_q^n) and Bourgain narrowing
# ---------------------------------------------------------------------------


@dataclass
class IncrementOutcome:
    variant: str  # "near_uniform" | "increment"
    inner_value: Optional[float] = None
    subspace: object = None  # Subspace when variant == "increment"
    translate: Optional[tuple[int, ...]] = None
    new_density: Optional[float] = None
    eps: float = 0.0
    alpha: float = 0.0
    p: Optional[int] = None
    p_prime: Optional[int] = None
    sift: Optional[SiftResult] = None
    smoothing: Optional[SmoothingResult] = None

    @property
    def near_uniform(self) -> bool:
        return self.variant == "near_uniform"


def density_increment_step(A: GSet, C: GSet, eps: float, codim_max: int = 4,
                           consts: Constants = Constants(), seed: int = 0,
                           trials: Optional[int] = None) -> IncrementOutcome:
    """One increment step over F_q^n (q odd prime): either certify
    |<mu_A*mu_A, mu_C> - 1| <= eps, or produce a subspace V of codimension
    <= codim_max and a translate on which A has relative density
    >= (1 + eps/c_inc) * alpha, recomputed exactly.

    The chain is lifting -> unbalancing -> sifting -> subspace smoothing with
    S = {x : mu_A~mu_A(x) >= 1 + eps/8}. Intermediate search tolerances walk a
    deterministic ladder; they only affect whether the search succeeds, never
    the validity of the returned certificate.
    """
    from .subspaces import check_prime_power_group

    grp = A.group
    q = check_prime_power_group(grp)
    if q == 2:
        raise ValueError("density increment needs an odd prime field")
    if trials is None:
        trials = consts.sift_default_trials
    lift = holder_lift(A, C, eps, None, consts)
    if lift.near_uniform:
        return IncrementOutcome("near_uniform", inner_value=lift.inner_value,
                                eps=eps, alpha=A.density)
    base = diffconv(mu_of_set(A), mu_of_set(A))
    f = base.add_scalar(-1)
    unb = unbalance(f, None, eps / 2.0, lift.p, consts)

    eps_f = Fraction(eps)
    s_thresh = 1 + eps_f / 8
    mask = np.zeros(grp.size, dtype=bool)
    for x in range(grp.size):
        if base.value_exact(x) >= s_thresh:
            mask[x] = True
    S = GSet(grp, mask)
    alpha = Fraction(A.card, grp.size)
    target_fr = (1 + eps_f / Fraction(consts.c_inc)) * alpha
    G_full = GSet.full(grp)

    margins: dict = {"lift_p": lift.p, "p_prime": unb.p_prime}
    rung = 0
    for p_s in dict.fromkeys([unb.p_prime, unb.p_prime + 2, unb.p_prime + 4,
                              unb.p_prime + 8]):
        norm_ps = lp_norm_wrt(base, p_s, None)
        eps_s = 1.0 - (1.0 + eps / 8.0) * (1 + 1e-9) / norm_ps
        if eps_s < 0.02:
            continue
        for delta_s in (0.25, 0.1):
            rung += 1
            try:
                sres = sift(A, G_full, G_full, p_s, eps_s, delta_s,
                            trials=trials, seed=seed + rung, consts=consts)
            except SiftExhausted as exc:
                margins[f"rung{rung}_sift"] = exc.best
                continue
            # certificate on our S (not just on sift's internal S)
            inner_S = inner_wrt(diffconv(mu_of_set(sres.a1), mu_of_set(sres.a2)),
                                FuncR.indicator(S))
            if inner_S < 1.0 - delta_s - 1e-9:
                margins[f"rung{rung}_innerS"] = inner_S
                continue
            sm = find_smoothing_subspace(sres.a1, sres.a2, S, eps / 32.0, codim_max)
            if not sm.found:
                margins[f"rung{rung}_smoothing"] = sm.best_margin
                continue
            V = sm.witness
            w = conv(FuncR.indicator(A), mu_of_set(V.members))
            sup_idx = int(np.argmax(w.values))
            sup_fr = w.value_exact(sup_idx)
            if sup_fr >= target_fr:
                return IncrementOutcome(
                    "increment", inner_value=lift.inner_value, subspace=V,
                    translate=grp.coords(sup_idx), new_density=float(sup_fr),
                    eps=eps, alpha=float(alpha), p=lift.p, p_prime=unb.p_prime,
                    sift=sres, smoothing=sm)
            margins[f"rung{rung}_increment"] = float(sup_fr / alpha)
    raise OracleBudgetExceeded(
        "increment chain exhausted its search ladder", "increment", margins)


@dataclass
class BourOutcome:
    kind: str  # "translate" | "inc_bprime" | "inc_bdoubleprime"
    x: Optional[tuple[int, ...]]
    density_bprime: float
    density_bdoubleprime: float
    sup_bprime: float
    sup_bdoubleprime: float
    alpha: float
    eps: float


def bour_narrow(A: GSet, B: BohrSet, Bp: BohrSet, Bpp: BohrSet, eps: float,
                consts: Constants = Constants()) -> BourOutcome:
    """Narrowing trichotomy: a translate x with mu_{B'}(A-x) and mu_{B''}(A-x)
    both >= (1-eps)*alpha, or a density increment on B' or B''. All three
    alternatives are evaluated exactly; at least one must hold under the
    hypotheses (else the narrowing constant is logged as busted)."""
    grp = A.group
    if not A.is_subset(B.members):
        raise HypothesisViolation("A must sit inside B")
    ok, _ = is_regular(B, consts.reg_const)
    if not ok:
        raise HypothesisViolation("B must be certified regular")
    alpha = Fraction(A.card, B.size)
    if alpha == 0:
        raise ValueError("narrowing needs nonempty A")
    d = max(B.rank, 1)
    rho = consts.c_narrow * float(alpha) * eps / d
    for nm, Bn in (("B'", Bp), ("B''", Bpp)):
        idx = Bn.members.indices()
        if idx.size and float(B.thresholds[idx].max()) > rho * (1 + 1e-9):
            raise HypothesisViolation(
                f"{nm} is not inside B_rho (rho = c*alpha*eps/d = {rho:.3g})")

    w1 = conv(FuncR.indicator(A), mu_of_set(Bp.members))
    w2 = conv(FuncR.indicator(A), mu_of_set(Bpp.members))
    inc_thr = (1 + Fraction(eps) / 2) * alpha
    lo_thr = (1 - Fraction(eps)) * alpha
    i1 = int(np.argmax(w1.values))
    i2 = int(np.argmax(w2.values))
    s1 = w1.value_exact(i1)
    s2 = w2.value_exact(i2)
    common = dict(density_bprime=float(s1), density_bdoubleprime=float(s2),
                  sup_bprime=float(s1), sup_bdoubleprime=float(s2),
                  alpha=float(alpha), eps=eps)
    if s1 >= inc_thr:
        return BourOutcome("inc_bprime", grp.coords(i1), **common)
    if s2 >= inc_thr:
        return BourOutcome("inc_bdoubleprime", grp.coords(i2), **common)
    for x in map(int, B.members.indices()):
        v1 = w1.value_exact(x)
        if v1 < lo_thr:
            continue
        v2 = w2.value_exact(x)
        if v2 >= lo_thr:
            out = dict(common)
            out.update(density_bprime=float(v1), density_bdoubleprime=float(v2))
            return BourOutcome("translate", grp.coords(x), **out)
    raise ConstantBustingInstance(
        "c_narrow", "no narrowing alternative held on a hypothesis-satisfying instance",
        {"alpha": float(alpha), "eps": eps, "sup1": float(s1), "sup2": float(s2)})


# ---------------------------------------------------------------------------
# measure builders (printed k-dilate chain is the canonical default)
# ---------------------------------------------------------------------------


def chained_measure(P: GSet, Q: GSet) -> ProbMeasure:
    """mu_P ~ mu_P * mu_Q ~ mu_Q: spectrally nonnegative by construction."""
    return ProbMeasure(conv(diffconv(mu_of_set(P), mu_of_set(P)),
                            diffconv(mu_of_set(Q), mu_of_set(Q))))


def shifted_set_measure(X: GSet, k: int = 1, shift: int = 0) -> ProbMeasure:
    """mu_{k.X + shift}: the translate/dilate variants the analysis permits as
    ("slightly weaker") alternatives; no canonical default beyond k-dilates."""
    Y = dilate_set(X, k) if k != 1 else X
    if shift:
        Y = Y.translate(shift)
    return mu_of_set(Y)
