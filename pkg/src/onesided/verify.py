"""Independent re-verification of a constructed state, plus brute-force oracles.

Nothing here trusts the enclosures stored in a state: every certificate is
re-derived from the integer vectors and the dyadic caps.  The cap test for
the zeta window uses a plain quotient box for (x_1/x_0, x_2/x_0) rather than
the tangent-plane bound the construction uses.
"""

from __future__ import annotations

import enum
import json
import math
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional, Sequence

import numpy as np

from .constants import AlgebraicConstants, derive_constants
from .construction import ConstructionState, ParameterProfile
from .lattice import (
    IntVec3,
    angle_at_least,
    axis_angles_ok,
    cross,
    det3,
    dot,
    gcd3,
    opposite_signs,
)
from .numerics import (
    NumericsError,
    RealEnclosure,
    enclose,
    nearest_int_dist,
    sqrt_int,
)

# published constants of the paper profile: floor 2^-300, range start 2^200
PUBLISHED_FLOOR_EXP = 300
PUBLISHED_START_EXP = 200


class MalformedState(ValueError):
    pass


class EnclosureTooWide(ValueError):
    pass


# ---------------------------------------------------------------------------
# condition report

@dataclass
class CheckResult:
    passed: bool
    witness: Optional[str] = None

    def to_json(self):
        return {"pass": self.passed} if self.passed else {"pass": False, "witness": self.witness}


@dataclass
class ConditionReport:
    steps: list[dict[str, CheckResult]]
    notes: list[str] = field(default_factory=list)

    @property
    def overall(self) -> bool:
        return all(c.passed for s in self.steps for c in s.values())

    def failures(self) -> list[tuple[int, str, str]]:
        return [(nu, k, c.witness or "") for nu, s in enumerate(self.steps) for k, c in s.items() if not c.passed]

    def first_failure(self, condition: str) -> Optional[tuple[int, str]]:
        for nu, k, w in self.failures():
            if k == condition:
                return nu, w
        return None

    def to_json(self) -> dict:
        return {
            "overall": self.overall,
            "steps": [{k: c.to_json() for k, c in s.items()} for s in self.steps],
            "notes": self.notes,
        }


def _bits_for_norm2(n2: int, consts: AlgebraicConstants) -> int:
    log2M = (n2.bit_length() + 1) // 2 + 1
    bits = math.ceil((float(consts.omega.hi) + 1) * log2M) + 64
    return max(128, -(-bits // 64) * 64)


def _coerce_state(state) -> ConstructionState:
    if isinstance(state, ConstructionState):
        return state
    try:
        if isinstance(state, (str, bytes)):
            state = json.loads(state)
        return ConstructionState.from_json(state)
    except Exception as exc:  # noqa: BLE001 -- any parse failure is a malformed state
        raise MalformedState(f"cannot read state: {exc}") from exc


def _quotient_box(cap, bits: int) -> tuple[RealEnclosure, RealEnclosure]:
    """Box containing (x_1/x_0, x_2/x_0) for all x with |x - centre| <= r."""
    r = cap.radius
    c = cap.center
    x0 = RealEnclosure.hull(c[0] - r, c[0] + r, bits)
    if x0.lo <= 0:
        raise MalformedState("cap reaches x_0 <= 0")
    return tuple(RealEnclosure.hull(c[i] - r, c[i] + r, bits) / x0 for i in (1, 2))


def zeta_enclosure(m: Sequence[int], alpha: tuple[RealEnclosure, RealEnclosure]) -> RealEnclosure:
    return m[0] + alpha[0] * m[1] + alpha[1] * m[2]


def check_conditions(state) -> ConditionReport:
    """Re-derive conditions (i)-(v), covolume bounds and cap nesting from raw data."""
    state = _coerce_state(state)
    prof = state.profile
    ms = [IntVec3(*s.m) for s in state.steps]
    caps = [s.cap for s in state.steps]
    K = len(ms) - 1
    if K < 0:
        raise MalformedState("state has no vectors")
    consts = derive_constants(_bits_for_norm2(max(m.bar.norm2() for m in ms), derive_constants(128)))
    thr = prof.angle_threshold
    rep: list[dict[str, CheckResult]] = []
    for nu in range(K + 1):
        m = ms[nu]
        row: dict[str, CheckResult] = {}
        if nu == 0:
            row["structure"] = CheckResult(m == IntVec3(1, 1, -1), f"m_0 = {tuple(m)}")
        n2 = m.bar.norm2()
        bits = _bits_for_norm2(ms[min(nu + 1, K)].bar.norm2(), consts)
        # (i)
        if nu >= 1:
            why = None
            if gcd3(m) != 1:
                why = f"m_{nu} = {tuple(m)} is not primitive"
            elif not any(cross(ms[nu - 1], m)) or gcd3(cross(ms[nu - 1], m)) != 1:
                why = f"<m_{nu - 1}, m_{nu}> is not a complete lattice"
            elif nu >= 2 and det3(ms[nu - 2], ms[nu - 1], m) == 0:
                why = f"m_{nu - 2}, m_{nu - 1}, m_{nu} are dependent"
            row["i"] = CheckResult(why is None, why)
        # (iv)
        why = None
        if not opposite_signs(m.bar):
            why = f"m1 * m2 >= 0 for {tuple(m.bar)}"
        elif not axis_angles_ok(m.bar, thr):
            why = f"angle of {tuple(m.bar)} to an axis is below {thr}"
        row["iv"] = CheckResult(why is None, why)
        if nu < K:
            nxt = ms[nu + 1]
            N2 = nxt.bar.norm2()
            Mn = sqrt_int(N2, bits)
            # (ii): zeta_nu over the next cap, which contains every later cap
            top = 1 / Mn ** consts.omega
            low = top / (1 << prof.e_zeta)
            try:
                z = zeta_enclosure(m, _quotient_box(caps[nu + 1], bits))
                ok = z.lo >= low.hi and z.hi <= top.lo
                row["ii"] = CheckResult(ok, None if ok else f"zeta_{nu} in [{float(z.lo):.6g}, {float(z.hi):.6g}] "
                                        f"outside [{float(low.mid):.6g}, {float(top.mid):.6g}]")
            except MalformedState as exc:
                row["ii"] = CheckResult(False, str(exc))
            # (iii)
            if nu == 0:
                ok = N2 <= 1 << (2 * prof.e_M1)
                row["iii"] = CheckResult(ok, None if ok else f"M_1^2 = {N2} exceeds 2^{2 * prof.e_M1}")
            else:
                why = None
                if not N2 >= n2 << (2 * prof.e_gap):
                    why = f"M_{nu + 1} < 2^{prof.e_gap} M_{nu}"
                else:
                    H = sqrt_int(n2, bits) ** consts.growth / (1 << prof.e_H)
                    if not N2 >= (H * H).hi:
                        why = f"M_{nu + 1} < H_{nu}"
                    elif not N2 <= (4 * H * H).lo:
                        why = f"M_{nu + 1} > 2 H_{nu}"
                row["iii"] = CheckResult(why is None, why)
            # (v)
            ok = angle_at_least(m.bar, nxt.bar, thr)
            row["v"] = CheckResult(ok, None if ok else f"angle(m_{nu}, m_{nu + 1}) < {thr}")
            # covolumes: M M'/2^5 <= D <= M M' and the same for |m x m'|
            D = abs(m.m1 * nxt.m2 - m.m2 * nxt.m1)
            ok = (D * D) << 10 >= n2 * N2 and D * D <= n2 * N2
            row["covolume_D"] = CheckResult(ok, None if ok else f"D_{nu} = {D} outside [MM'/32, MM']")
            d2 = cross(m, nxt).norm2()
            ok = d2 << 10 >= m.norm2() * nxt.norm2() and d2 <= m.norm2() * nxt.norm2()
            row["covolume_d"] = CheckResult(ok, None if ok else f"d_{nu}^2 = {d2} outside bounds")
        row["cap"] = _check_cap(nu, ms, caps, consts, bits)
        row["stored"] = _check_stored(state, nu)
        rep.append(row)
    notes = [
        "zeta_nu is checked on the cap B_{nu+1}; every later cap lies inside it",
        "the half-size cap B'_nu is taken with radius 1/(2^7 |m_nu|^omega |m_{nu-1}|)",
    ]
    return ConditionReport(rep, notes)


def _check_cap(nu, ms, caps, consts, bits) -> CheckResult:
    cap = caps[nu]
    c, r = cap.center, cap.radius
    if r <= 0:
        return CheckResult(False, "non-positive radius")
    if abs(sum(x * x for x in c) - 1) > Fraction(1, 1 << 60):
        return CheckResult(False, "centre off the unit sphere")
    if not c[0] - r > 0:
        return CheckResult(False, "cap reaches x_0 <= 0")
    if nu == 0:
        if r > Fraction(1, 64) or not (Fraction(3, 5) <= c[0] - r and c[0] + r <= Fraction(9, 10)):
            return CheckResult(False, "B_0 must have radius <= 1/64 and x_0 in [0.6, 0.9]")
        return CheckResult(True)
    m, prev = ms[nu], ms[nu - 1]
    if dot(m, c) ** 2 > m.norm2() * (r / 64) ** 2:
        return CheckResult(False, f"centre of B_{nu} is not on the plane m_{nu} . x = 0")
    bound = 1 / (sqrt_int(m.norm2(), bits) ** consts.omega * sqrt_int(prev.norm2(), bits) * 64)
    if not r <= bound.lo:
        return CheckResult(False, f"radius of B_{nu} exceeds 1/(2^6 |m_nu|^omega |m_nu-1|)")
    old = caps[nu - 1]
    d2 = sum((a - b) ** 2 for a, b in zip(c, old.center))
    if not (old.radius > r and d2 < (old.radius - r) ** 2):
        return CheckResult(False, f"B_{nu} is not strictly inside B_{nu - 1}")
    if not d2 <= (old.radius / 2) ** 2:
        return CheckResult(False, f"centre of B_{nu} is outside B'_{nu - 1}")
    return CheckResult(True)


def _check_stored(state: ConstructionState, nu: int) -> CheckResult:
    s = state.steps[nu]
    n2 = s.m.bar.norm2()
    if not (s.M.lo >= 0 and s.M.lo ** 2 <= n2 <= s.M.hi ** 2):
        return CheckResult(False, f"stored M_{nu} does not enclose |m_bar|")
    if nu + 1 < len(state.steps):
        nxt = state.steps[nu + 1].m
        if s.D != abs(s.m.m1 * nxt.m2 - s.m.m2 * nxt.m1):
            return CheckResult(False, f"stored D_{nu} is wrong")
        if s.d is None or not (s.d.lo ** 2 <= cross(s.m, nxt).norm2() <= s.d.hi ** 2):
            return CheckResult(False, f"stored d_{nu} does not enclose |m x m'|")
        if s.zeta is None or not s.zeta.lo > 0:
            return CheckResult(False, f"stored zeta_{nu} is not certainly positive")
    return CheckResult(True)


# ---------------------------------------------------------------------------
# profile-derived constants

@dataclass(frozen=True)
class ProfileConstants:
    """Powers of two standing in for the floor 2^-300 and the start 2^200.

    lemma2_exp: |zeta(m)| >= 2^-lemma2_exp M^-sigma on Lambda_nu, m1, m2 >= 0
    theorem_exp: ||m1 a1 + m2 a2|| >= 2^-theorem_exp max(m1, m2)^-sigma
    start_exp: the segments I_nu begin below 2^start_exp
    """

    lemma2_exp: int
    theorem_exp: int
    start_exp: int
    derived_lemma2_exp: int
    derived_theorem_exp: int
    derived_start_exp: int
    derivation: tuple[str, ...]

    @property
    def floor(self) -> Fraction:
        return Fraction(1, 1 << self.theorem_exp)

    @property
    def lemma2_floor(self) -> Fraction:
        return Fraction(1, 1 << self.lemma2_exp)

    def to_json(self) -> dict:
        return {
            "lemma2_exp": self.lemma2_exp,
            "theorem_exp": self.theorem_exp,
            "start_exp": self.start_exp,
            "derived_lemma2_exp": self.derived_lemma2_exp,
            "derived_theorem_exp": self.derived_theorem_exp,
            "derived_start_exp": self.derived_start_exp,
            "derivation": list(self.derivation),
        }


def profile_constants(profile: ParameterProfile, consts: Optional[AlgebraicConstants] = None) -> ProfileConstants:
    consts = consts or derive_constants(128)
    s = consts.sigma.hi
    g = consts.growth.lo
    e_mid = 9 + profile.e_zeta + profile.e_H / g
    lemma2 = math.ceil(e_mid + 8 * s)
    # M <= sqrt(2) max(m1, m2); below the first segment |zeta| >= 1/(4 M_0 M_1)
    theorem = max(math.ceil(e_mid + 8 * s + s / 2), math.ceil(Fraction(5, 2) + profile.e_M1))
    start = math.ceil((Fraction(5, 2) + profile.e_M1) / consts.sigma.lo)
    lines = (
        f"on a layer mu != 0: |zeta| >= |mu| / (2^(8+{profile.e_zeta}+1) M_nu M_(nu+1)^tau)",
        f"M_nu <= 2^({profile.e_H}/(sigma tau - 1)) M_(nu+1)^(1/(sigma tau - 1)) gives 2^-{float(e_mid):.4f} M_(nu+1)^-sigma",
        f"M_(nu+1) <= 2^8 M / |mu| gives the Lemma-2 floor 2^-{lemma2} M^-sigma",
        f"M <= sqrt(2) max(m1, m2) and |zeta| >= 2^-(2.5+{profile.e_M1}) below the first segment give 2^-{theorem}",
        f"lo(I_0) <= (4 sqrt(2) 2^{profile.e_M1})^(1/sigma) <= 2^{start}",
    )
    if profile.label == "paper":
        return ProfileConstants(
            PUBLISHED_FLOOR_EXP, PUBLISHED_FLOOR_EXP, PUBLISHED_START_EXP, lemma2, theorem, start, lines
        )
    return ProfileConstants(lemma2, theorem, start, lemma2, theorem, start, lines)


# ---------------------------------------------------------------------------
# Lemma 1

class Lemma1Outcome(enum.Enum):
    HOLDS = "holds"
    NOT_APPLICABLE = "not_applicable"
    FAILS = "fails"


@dataclass(frozen=True)
class SegmentNu:
    nu: int
    lo: RealEnclosure
    hi: RealEnclosure


def segments(state: ConstructionState, bits: int = 128) -> list[SegmentNu]:
    """I_nu = [(4 M_nu M_(nu+1))^(1/sigma), M_(nu+1)^tau / 8] for nu < K."""
    ms = state.vectors
    consts = derive_constants(bits)
    out = []
    for nu in range(len(ms) - 1):
        M = sqrt_int(ms[nu].bar.norm2(), bits)
        Mn = sqrt_int(ms[nu + 1].bar.norm2(), bits)
        out.append(SegmentNu(nu, (4 * M * Mn) ** (1 / consts.sigma), Mn ** consts.tau / 8))
    return out


def _lemma_range(state: ConstructionState, nu: int) -> None:
    if not 0 <= nu <= len(state.steps) - 3:
        raise ValueError(f"nu must lie in [0, {len(state.steps) - 3}] (zeta_(nu+1) must be certified)")


def lemma1_bound_check(
    state: ConstructionState,
    nu: int,
    m: Sequence[int],
    alpha: Optional[tuple[RealEnclosure, RealEnclosure]] = None,
    segment: Optional[SegmentNu] = None,
) -> Lemma1Outcome:
    """|zeta(m)| >= M^-sigma for m independent of m_nu, m_(nu+1) with M in I_nu."""
    from .construction import alpha_enclosure

    _lemma_range(state, nu)
    ms = state.vectors
    if det3(m, ms[nu], ms[nu + 1]) == 0:
        return Lemma1Outcome.NOT_APPLICABLE
    seg = segment or segments(state)[nu]
    n2 = m[1] * m[1] + m[2] * m[2]
    if not (seg.lo.hi ** 2 <= n2 <= seg.hi.lo ** 2):
        return Lemma1Outcome.NOT_APPLICABLE
    alpha = alpha or alpha_enclosure(state)
    bits = alpha[0].bits
    z = abs(zeta_enclosure(m, alpha))
    floor = sqrt_int(n2, bits) ** (-derive_constants(max(128, bits)).sigma)
    if z.lo >= floor.hi:
        return Lemma1Outcome.HOLDS
    if z.hi < floor.lo:
        return Lemma1Outcome.FAILS
    raise NumericsError("Lemma 1 comparison inconclusive at the available precision")


def lemma1_sample(state: ConstructionState, nu: int, count: int, seed: int = 0) -> dict:
    """Check ``count`` random independent vectors with M in I_nu, worst-case m_0.

    m_0 is taken as the integer nearest to -(m1 a1 + m2 a2), which gives the
    smallest |zeta| for the sampled (m1, m2).
    """
    from .construction import alpha_enclosure

    _lemma_range(state, nu)
    alpha = alpha_enclosure(state)
    seg = segments(state)[nu]
    rng = random.Random(seed * 1000003 + nu)
    lo, hi = math.log(float(seg.lo.hi)), math.log(float(seg.hi.lo))
    a_mid = (alpha[0].mid, alpha[1].mid)
    out = {"checked": 0, "holds": 0, "fails": [], "skipped": 0}
    while out["checked"] < count:
        M = math.exp(rng.uniform(lo, hi))
        th = rng.uniform(0, 2 * math.pi)
        m1, m2 = round(M * math.cos(th)), round(M * math.sin(th))
        m0 = -round(m1 * a_mid[0] + m2 * a_mid[1])
        m = IntVec3(m0, m1, m2)
        res = lemma1_bound_check(state, nu, m, alpha, seg)
        if res is Lemma1Outcome.NOT_APPLICABLE:
            out["skipped"] += 1
            continue
        out["checked"] += 1
        if res is Lemma1Outcome.HOLDS:
            out["holds"] += 1
        else:
            out["fails"].append(tuple(m))
    return out


# ---------------------------------------------------------------------------
# Lemma 2

@dataclass
class Lemma2Result:
    nu: int
    kept: int
    violations: list[tuple[int, int, str]]
    mu0_kept: int


def _ceil_div(a: int, b: int) -> int:
    return -((-a) // b)


def _lambda_range(a: int, b: int, mu: int, lam_max: int) -> tuple[int, int]:
    """Integers lam in [-lam_max, lam_max] with lam * a + mu * b >= 0."""
    c = -mu * b
    if a > 0:
        return max(-lam_max, _ceil_div(c, a)), lam_max
    if a < 0:
        return -lam_max, min(lam_max, c // a)
    return (-lam_max, lam_max) if c <= 0 else (1, 0)


def lemma2_enumerate(
    state: ConstructionState, nu: int, mu_range: int, lambda_range: int,
    profile_consts: Optional[ProfileConstants] = None,
) -> Lemma2Result:
    """m = lam m_nu + mu m_(nu+1) with m1, m2 >= 0: check the floor and the proof chain."""
    from .construction import alpha_enclosure

    _lemma_range(state, nu)
    pc = profile_consts or profile_constants(state.profile)
    ms = state.vectors
    a, b, c = ms[nu], ms[nu + 1], ms[nu + 2]
    alpha = alpha_enclosure(state)
    bits = alpha[0].bits
    consts = derive_constants(max(128, bits))
    za, zb = zeta_enclosure(a, alpha), zeta_enclosure(b, alpha)
    Ma2, Mb2 = a.bar.norm2(), b.bar.norm2()
    D = abs(a.m1 * b.m2 - a.m2 * b.m1)
    Ma, Mb, Mc = (sqrt_int(x.bar.norm2(), bits) for x in (a, b, c))
    floor_c = pc.lemma2_floor
    sig = consts.sigma
    # the chain: the negative term M''^-omega must be at most half the first one
    first = 1 / (Ma * Mb ** consts.tau * (1 << (8 + state.profile.e_zeta)))
    chain_ok = (1 / Mc ** consts.omega).hi <= (first / 2).lo
    violations = []
    if not chain_ok:
        violations.append((0, 0, "chain: M_(nu+2)^-omega exceeds half the leading term"))
    kept = 0
    mu0 = 0
    zaf, zbf = float(za.mid), float(zb.mid)
    sf = float(sig.hi)
    log_floor_c = math.log(float(floor_c))
    ratio = float(Mb.mid / Ma.mid) / 256
    for mu in range(-mu_range, mu_range + 1):
        l1 = _lambda_range(a.m1, b.m1, mu, lambda_range)
        l2 = _lambda_range(a.m2, b.m2, mu, lambda_range)
        lo, hi = max(l1[0], l2[0]), min(l1[1], l2[1])
        if lo > hi:
            continue
        lam = np.arange(lo, hi + 1, dtype=np.float64)
        if mu == 0:
            lam = lam[lam != 0]
            mu0 += len(lam)
            continue
        kept += len(lam)
        m1 = lam * a.m1 + mu * b.m1
        m2 = lam * a.m2 + mu * b.m2
        Mf = np.hypot(m1, m2)
        z = np.abs(lam * zaf + mu * zbf)
        err = (np.abs(lam) * abs(zaf) + abs(mu) * abs(zbf)) * 1e-12
        with np.errstate(divide="ignore"):
            lhs = np.log(np.maximum(z - err, 0))
        rhs = log_floor_c - sf * np.log(Mf)
        hmax = np.maximum(m1, m2)
        flag = (lhs < rhs + 1e-6) | (2 * hmax * math.sqrt(Ma2) < abs(mu) * D * (1 + 1e-9)) | (
            np.abs(lam) < abs(mu) * ratio * (1 + 1e-9)
        )
        for k in np.nonzero(flag)[0]:
            L = int(lam[k])
            why = _lemma2_exact(a, b, L, mu, za, zb, D, Ma2, Mb2, floor_c, sig, bits)
            if why:
                violations.append((L, mu, why))
    if mu0:
        violations.append((0, 0, f"{mu0} vectors with mu = 0 in the closed positive quadrant"))
    return Lemma2Result(nu, kept, violations, mu0)


def _lemma2_exact(a, b, lam, mu, za, zb, D, Ma2, Mb2, floor_c, sigma, bits) -> Optional[str]:
    m1 = lam * a.m1 + mu * b.m1
    m2 = lam * a.m2 + mu * b.m2
    h = max(m1, m2)
    if (2 * h) ** 2 * Ma2 < mu * mu * D * D:
        return "max(m1, m2) < |mu| D_nu / (2 M_nu)"
    if lam * lam * Ma2 << 16 < mu * mu * Mb2:
        return "|lam| < |mu| M_(nu+1) / (2^8 M_nu)"
    z = abs(za * lam + zb * mu)
    fl = floor_c * sqrt_int(m1 * m1 + m2 * m2, bits) ** (-sigma)
    if not z.lo >= fl.hi:
        return f"|zeta| below the floor (undecided)" if z.hi >= fl.lo else "|zeta| below the floor"
    return None


# ---------------------------------------------------------------------------
# coverage

@dataclass
class CoverageReport:
    segments: list[tuple[int, float, float]]
    proper: list[bool]
    gaps: list[tuple[int, float, float]]
    covered_from: Optional[float]
    covered_to: Optional[float]

    def to_json(self) -> dict:
        return {
            "segments_log2": [{"nu": n, "lo": lo, "hi": hi} for n, lo, hi in self.segments],
            "proper": self.proper,
            "gaps_log2": [{"after_nu": n, "from": a, "to": b} for n, a, b in self.gaps],
            "covered_log2": None if self.covered_from is None else [self.covered_from, self.covered_to],
        }


def _log2(x: RealEnclosure) -> float:
    f = x.mid
    return math.log2(f.numerator) - math.log2(f.denominator)


def coverage_check(state: ConstructionState, from_height: int = 1) -> CoverageReport:
    """Segments I_nu, their properness, and gaps between consecutive ones above from_height."""
    segs = segments(state)
    proper = [s.lo.hi < s.hi.lo for s in segs]
    gaps = []
    for s, t in zip(segs, segs[1:]):
        if not t.lo.hi <= s.hi.lo and t.lo.hi > from_height:
            gaps.append((s.nu, _log2(s.hi), _log2(t.lo)))
    cov_from = cov_to = None
    if segs:
        # longest chained run ending at the top segment
        start = len(segs) - 1
        while start > 0 and segs[start].lo.hi <= segs[start - 1].hi.lo and proper[start - 1]:
            start -= 1
        cov_from, cov_to = _log2(segs[start].lo), _log2(segs[-1].hi)
        cov_from = max(cov_from, math.log2(from_height)) if from_height > 0 else cov_from
    return CoverageReport([(s.nu, _log2(s.lo), _log2(s.hi)) for s in segs], proper, gaps, cov_from, cov_to)


# ---------------------------------------------------------------------------
# the quadrant scan

@dataclass(frozen=True)
class ScanRecord:
    m1: int
    m2: int
    form_value: RealEnclosure
    height: int
    normalized: RealEnclosure

    def csv_row(self) -> list[str]:
        return [
            str(self.m1), str(self.m2), str(self.height),
            f"{float(self.form_value.lo):.17g}", f"{float(self.form_value.hi):.17g}",
            f"{float(self.normalized.lo):.17g}", f"{float(self.normalized.hi):.17g}",
        ]


SCAN_HEADER = ["m1", "m2", "height", "form_lo", "form_hi", "normalized_lo", "normalized_hi"]


@dataclass
class ScanResult:
    min_normalized: ScanRecord
    all_records_below: list[ScanRecord]
    height_records: list[ScanRecord]
    height_max: int


def _fixed_point(alpha: RealEnclosure) -> tuple[int, int]:
    """floor(frac(lo) 2^64) and the width in units of 2^-64 (rounded up)."""
    lo = alpha.lo
    frac = lo - math.floor(lo)
    a = math.floor(frac * (1 << 64))
    w = math.ceil(alpha.width * (1 << 64))
    return a, w


def make_record(m1: int, m2: int, alpha, sigma_prime: RealEnclosure) -> ScanRecord:
    form = nearest_int_dist(alpha[0] * m1 + alpha[1] * m2)
    h = max(m1, m2)
    return ScanRecord(m1, m2, form, h, form * enclose(h, form.bits) ** sigma_prime)


def _scan_band(args) -> tuple[list, list]:
    h_lo, h_hi, A, B, a1, a2, unit, thr_c, sig = args
    best = []  # (h, dmin) per height
    flagged = []
    M64 = 1 << 64
    for h in range(max(h_lo, 1), h_hi):
        E = (2 * h) * unit + 1
        row = B[: h + 1] + np.uint64(h * a1 % M64)
        col = A[:h] + np.uint64(h * a2 % M64)
        drow = np.minimum(row, np.uint64(0) - row)
        dcol = np.minimum(col, np.uint64(0) - col)
        dr = int(drow.min())
        dc = int(dcol.min())
        best.append((h, min(dr, dc), E))
        # anything whose upper estimate may fall below the floor at this height
        thr = int(thr_c * h ** (-sig) * 2.0 ** 64 * (1 + 1e-9)) + E + 1
        if min(dr, dc) <= thr:
            for k in np.nonzero(drow <= np.uint64(min(thr, M64 - 1)))[0]:
                flagged.append((h, int(k)))
            for k in np.nonzero(dcol <= np.uint64(min(thr, M64 - 1)))[0]:
                flagged.append((int(k), h))
    return best, flagged


def theorem_scan(
    alpha: tuple[RealEnclosure, RealEnclosure],
    height_max: int,
    sigma_prime: RealEnclosure,
    constant_floor: Optional[Fraction] = None,
    threads: int = 1,
) -> ScanResult:
    """All (m1, m2) in [0, N]^2 minus the origin, walked height by height.

    ||m1 a1 + m2 a2|| is screened in 64-bit fixed point: with a_i the lower
    fixed-point value of frac(alpha_i), the screened distance is within
    (m1 + m2)(1 + width 2^64) + 1 units of 2^-64 of the true one.  Every
    height minimum near the global minimum, and every vector that might fall
    below the floor, is then re-evaluated with enclosures.
    """
    if height_max < 1:
        raise ValueError("height_max must be >= 1")
    w = max(alpha[0].width, alpha[1].width)
    if not w * height_max < Fraction(1, 256):
        raise EnclosureTooWide(f"alpha width {float(w):.3g} too large for height {height_max}")
    a1, w1 = _fixed_point(alpha[0])
    a2, w2 = _fixed_point(alpha[1])
    unit = 1 + max(w1, w2)
    idx = np.arange(height_max + 1, dtype=np.uint64)
    A = idx * np.uint64(a1)
    B = idx * np.uint64(a2)
    thr_c = float(constant_floor) if constant_floor is not None else 0.0
    sig = float(sigma_prime.hi)
    threads = max(1, threads)
    bands = _bands(height_max, threads * 4 if threads > 1 else 1)
    jobs = [(lo, hi, A, B, a1, a2, unit, thr_c, sig) for lo, hi in bands]
    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            parts = list(ex.map(_scan_band, jobs))
    else:
        parts = [_scan_band(j) for j in jobs]
    best = [b for p in parts for b in p[0]]
    flagged = sorted({f for p in parts for f in p[1]})
    two64 = 2.0 ** 64
    exact: dict[int, ScanRecord] = {}
    # running minimum of the per-height minima, in height order
    records: list[ScanRecord] = []
    current = math.inf
    for h, d, E in best:
        if max(d - E, 0) / two64 * h ** sig <= current * (1 + 1e-6):
            rec = exact[h] = _exact_height_min(h, d, E, a1, a2, A, B, alpha, sigma_prime)
            if float(rec.normalized.mid) < current:
                records.append(rec)
                current = float(rec.normalized.mid)
    gmin = min(exact.values(), key=lambda r: (r.normalized.mid, r.m1, r.m2))
    below = []
    if constant_floor is not None:
        for m1, m2 in flagged:
            if (m1, m2) == (0, 0):
                continue
            rec = make_record(m1, m2, alpha, sigma_prime)
            fl = enclose(constant_floor, rec.form_value.bits)
            if rec.normalized.lo < fl.hi:
                below.append(rec)
    return ScanResult(gmin, below, records, height_max)


def _bands(n: int, parts: int) -> list[tuple[int, int]]:
    # equal work per band: height h costs about 2h
    edges = [0] + [int(n * math.sqrt(k / parts)) + 1 for k in range(1, parts)] + [n + 1]
    edges = sorted(set(min(e, n + 1) for e in edges))
    return list(zip(edges, edges[1:]))


def _exact_height_min(h, d, E, a1, a2, A, B, alpha, sigma_prime) -> ScanRecord:
    M64 = 1 << 64
    row = B[: h + 1] + np.uint64(h * a1 % M64)
    col = A[:h] + np.uint64(h * a2 % M64)
    lim = np.uint64(min(d + 2 * E + 2, M64 - 1))
    cands = [(h, int(k)) for k in np.nonzero(np.minimum(row, np.uint64(0) - row) <= lim)[0]]
    cands += [(int(k), h) for k in np.nonzero(np.minimum(col, np.uint64(0) - col) <= lim)[0]]
    recs = [make_record(m1, m2, alpha, sigma_prime) for m1, m2 in cands]
    return min(recs, key=lambda r: (r.form_value.mid, r.m1, r.m2))


# ---------------------------------------------------------------------------
# independence

def independence_check(alpha: tuple[RealEnclosure, RealEnclosure], coeff_bound: int) -> bool:
    """No nonzero (m0, m1, m2) with |m_i| <= bound has 0 in m0 + m1 a1 + m2 a2."""
    if coeff_bound <= 0:
        return True
    w = max(alpha[0].width, alpha[1].width)
    if not w < Fraction(1, 8 * coeff_bound):
        raise EnclosureTooWide("alpha enclosure too wide for the coefficient bound")
    Bn = coeff_bound
    r = np.arange(-Bn, Bn + 1, dtype=np.float64)
    m1, m2 = np.meshgrid(r, r, indexing="ij")
    a1f, a2f = float(alpha[0].mid), float(alpha[1].mid)
    v = m1 * a1f + m2 * a2f
    dist = np.abs(v - np.round(v))
    slack = (np.abs(m1) + np.abs(m2)) * (float(w) + 1e-15) + 1e-12
    for i, j in zip(*np.nonzero(dist <= slack)):
        p, q = int(m1[i, j]), int(m2[i, j])
        val = alpha[0] * p + alpha[1] * q
        for m0 in {-math.floor(val.lo), -math.ceil(val.hi), -round(val.mid)}:
            if abs(m0) > Bn or (m0, p, q) == (0, 0, 0):
                continue
            z = val + m0
            if z.lo <= 0 <= z.hi:
                return False
    return True
