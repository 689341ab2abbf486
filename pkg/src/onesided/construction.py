"""Inductive construction of the integer vectors m_nu and the nested caps B_nu.

State after nu steps: vectors m_0 = (1, 1, -1), m_1, ..., m_nu and caps
B_0 > B_1 > ... > B_nu on the unit sphere.  Every point x of B_nu gives a
pair (alpha_1, alpha_2) = (x_1/x_0, x_2/x_0) for which the linear forms

    zeta_j = m_{0,j} + m_{1,j} alpha_1 + m_{2,j} alpha_2,   j < nu,

sit in the window [1/(2^e_zeta M_{j+1}^omega), 1/M_{j+1}^omega].

One inductive step (nu >= 1) works in the affine layer
L_{nu-1, mu*} = {mu* n + a m_{nu-1} + b m_nu}, where (n, m_{nu-1}, m_nu) is
a basis of Z^3.  The point w of that layer lying in the plane spanned by
m_{nu-1} and the cap centre, orthogonal to the centre, has norm about
mu* M_{nu-1} M_nu^omega / d_{nu-1}; mu* is picked so that |w| ~ 1.5 H_nu,
and integer points of the layer near w have planes m.x = 0 passing through
the current cap.  Any such point with gcd(a, mu*) = 1 spans a complete
lattice together with m_nu.
"""

from __future__ import annotations

import json
import math
import random
from collections import Counter
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Optional, Sequence

from .constants import AlgebraicConstants, derive_constants
from .lattice import (
    IntVec3,
    angle_at_least,
    axis_angles_ok,
    complete_to_basis,
    covolume2,
    cross,
    det3,
    dot,
    is_complete_pair,
    opposite_signs,
)
from .numerics import (
    RealEnclosure,
    decimal_to_fraction,
    dyadic_to_decimal,
    enclose,
    enclosure_from_json,
    enclosure_to_json,
    round_dyadic,
    sqrt,
    sqrt_int,
)

M0 = IntVec3(1, 1, -1)
# zeta_nu is steered to this fraction of the window top 1/M_{nu+1}^omega
ZETA_TARGET = Fraction(3, 4)
CAP_EXP = 6
SPHERE_TOL = Fraction(1, 1 << 60)
B0_RADIUS = Fraction(1, 1 << CAP_EXP)
# direction of the odd-indexed cut vectors; even ones follow m_0 = (1, -1)
ODD_DIRECTION = -math.pi / 8
CANDIDATE_WINDOW = 4


class ConstructionError(RuntimeError):
    pass


class InadmissibleProfile(ConstructionError):
    pass


class InvalidState(ConstructionError):
    pass


class DegenerateGeometry(ConstructionError):
    pass


class CapCertificateFailed(ConstructionError):
    pass


class SearchExhausted(ConstructionError):
    def __init__(self, message: str, diagnostics: dict[str, int]):
        super().__init__(f"{message}; rejections: {dict(diagnostics)}")
        self.diagnostics = dict(diagnostics)


# ---------------------------------------------------------------------------
# profiles

@dataclass(frozen=True)
class ParameterProfile:
    e_zeta: int = 5
    e_gap: int = 10
    e_H: int = 9
    e_M1: int = 100
    e_disk: int = 10
    angle_threshold: Fraction = Fraction(1, 4)
    label: str = "paper"

    @classmethod
    def paper(cls) -> "ParameterProfile":
        return cls()

    @classmethod
    def scaled(cls) -> "ParameterProfile":
        return cls(e_zeta=3, e_gap=3, e_H=3, e_M1=24, e_disk=4, label="scaled")

    @classmethod
    def named(cls, name: str) -> "ParameterProfile":
        try:
            return {"paper": cls.paper, "scaled": cls.scaled}[name]()
        except KeyError:
            raise ValueError(f"unknown profile {name!r}") from None

    def to_json(self) -> dict:
        return {
            "e_zeta": self.e_zeta,
            "e_gap": self.e_gap,
            "e_H": self.e_H,
            "e_M1": self.e_M1,
            "e_disk": self.e_disk,
            "angle_threshold": f"{self.angle_threshold.numerator}/{self.angle_threshold.denominator}",
            "label": self.label,
        }

    @classmethod
    def from_json(cls, d: dict) -> "ParameterProfile":
        return cls(
            e_zeta=int(d["e_zeta"]),
            e_gap=int(d["e_gap"]),
            e_H=int(d["e_H"]),
            e_M1=int(d["e_M1"]),
            e_disk=int(d["e_disk"]),
            angle_threshold=Fraction(d["angle_threshold"]),
            label=d["label"],
        )

    def min_start_log2(self, consts: AlgebraicConstants) -> RealEnclosure:
        """log2 of the smallest M with M^(sigma tau - 1)/2^e_H >= 2^e_gap M."""
        return (self.e_gap + self.e_H) / (consts.growth - 1)

    def admissibility(self, consts: AlgebraicConstants) -> list[str]:
        problems = []
        for name in ("e_zeta", "e_gap", "e_H", "e_M1", "e_disk"):
            if getattr(self, name) < 1:
                problems.append(f"{name} must be >= 1")
        if not (0 < self.angle_threshold and math.sin(float(self.angle_threshold)) < math.sin(math.pi / 8)):
            problems.append("angle_threshold must lie in (0, pi/8) to leave room for two directions")
        lo2 = self.min_start_log2(consts)
        # room for M_1 in [1.1 M_min, 0.9 * 2^e_M1]
        if not lo2.hi + math.log2(1.1 / 0.9) < self.e_M1:
            problems.append(
                f"growth law M^(sigma*tau-1)/2^{self.e_H} >= 2^{self.e_gap} M needs "
                f"M >= 2^{float(lo2.hi):.2f}, but M_1 <= 2^{self.e_M1}"
            )
        return problems


# ---------------------------------------------------------------------------
# state

@dataclass(frozen=True)
class SphericalCap:
    """{x on the unit sphere : |x - center| <= radius}, dyadic centre and radius."""

    center: tuple[Fraction, Fraction, Fraction]
    radius: Fraction

    def center_enclosures(self, bits: int) -> tuple[RealEnclosure, ...]:
        return tuple(RealEnclosure(c, c, bits) for c in self.center)

    def to_json(self) -> dict:
        return {
            "center": [enclosure_to_json(RealEnclosure(c, c, 0)) for c in self.center],
            "radius": dyadic_to_decimal(self.radius),
        }

    @classmethod
    def from_json(cls, d: dict) -> "SphericalCap":
        cs = [enclosure_from_json(c) for c in d["center"]]
        for c in cs:
            if not c.is_exact():
                raise InvalidState("cap centre components must be exact dyadics")
        return cls(tuple(c.lo for c in cs), decimal_to_fraction(d["radius"]))


@dataclass(frozen=True)
class StepGeometry:
    plane0: IntVec3
    mu_star: int
    mu_star_paper: RealEnclosure
    w_center: tuple[RealEnclosure, ...]
    disk_radius: RealEnclosure
    layer_spacing: RealEnclosure
    n_basis: IntVec3
    # filled in once m_{nu+1} is chosen
    xi: Optional[tuple[RealEnclosure, ...]] = None
    slab_level: Optional[RealEnclosure] = None
    cylinder_radius: Optional[RealEnclosure] = None
    cylinder_distance: Optional[RealEnclosure] = None
    # exact coordinates of w_center in the basis (n, m_{nu-1}, m_nu)
    w_exact: Optional[tuple[Fraction, Fraction, Fraction]] = field(default=None, compare=False)

    def to_json(self) -> dict:
        enc = enclosure_to_json
        out = {
            "plane0": [str(x) for x in self.plane0],
            "n_basis": [str(x) for x in self.n_basis],
            "mu_star": str(self.mu_star),
            "mu_star_paper": enc(self.mu_star_paper),
            "w_center": [enc(x) for x in self.w_center],
            "disk_radius": enc(self.disk_radius),
            "layer_spacing": enc(self.layer_spacing),
        }
        if self.xi is not None:
            out["xi"] = [enc(x) for x in self.xi]
            out["slab_level"] = enc(self.slab_level)
            out["cylinder_radius"] = enc(self.cylinder_radius)
            out["cylinder_distance"] = enc(self.cylinder_distance)
        return out

    @classmethod
    def from_json(cls, d: dict) -> "StepGeometry":
        dec = enclosure_from_json
        return cls(
            plane0=IntVec3(*(int(x) for x in d["plane0"])),
            n_basis=IntVec3(*(int(x) for x in d["n_basis"])),
            mu_star=int(d["mu_star"]),
            mu_star_paper=dec(d["mu_star_paper"]),
            w_center=tuple(dec(x) for x in d["w_center"]),
            disk_radius=dec(d["disk_radius"]),
            layer_spacing=dec(d["layer_spacing"]),
            xi=tuple(dec(x) for x in d["xi"]) if "xi" in d else None,
            slab_level=dec(d["slab_level"]) if "slab_level" in d else None,
            cylinder_radius=dec(d["cylinder_radius"]) if "cylinder_radius" in d else None,
            cylinder_distance=dec(d["cylinder_distance"]) if "cylinder_distance" in d else None,
        )


@dataclass(frozen=True)
class StepRecord:
    m: IntVec3
    cap: SphericalCap
    bits: int
    M: RealEnclosure
    H: RealEnclosure
    D: Optional[int] = None
    d: Optional[RealEnclosure] = None
    zeta: Optional[RealEnclosure] = None
    geometry: Optional[StepGeometry] = None

    def to_json(self) -> dict:
        enc = enclosure_to_json
        return {
            "m": [str(x) for x in self.m],
            "bits": self.bits,
            "M": enc(self.M),
            "H": enc(self.H),
            "D": None if self.D is None else str(self.D),
            "d": None if self.d is None else enc(self.d),
            "zeta": None if self.zeta is None else enc(self.zeta),
            "cap": self.cap.to_json(),
            "geometry": None if self.geometry is None else self.geometry.to_json(),
        }

    @classmethod
    def from_json(cls, d: dict) -> "StepRecord":
        dec = enclosure_from_json
        return cls(
            m=IntVec3(*(int(x) for x in d["m"])),
            cap=SphericalCap.from_json(d["cap"]),
            bits=int(d["bits"]),
            M=dec(d["M"]),
            H=dec(d["H"]),
            D=None if d.get("D") is None else int(d["D"]),
            d=None if d.get("d") is None else dec(d["d"]),
            zeta=None if d.get("zeta") is None else dec(d["zeta"]),
            geometry=None if d.get("geometry") is None else StepGeometry.from_json(d["geometry"]),
        )


@dataclass(frozen=True)
class ConstructionState:
    profile: ParameterProfile
    seed: int
    steps: tuple[StepRecord, ...]

    @property
    def nu(self) -> int:
        """Index of the last constructed vector."""
        return len(self.steps) - 1

    @property
    def current_cap(self) -> SphericalCap:
        return self.steps[-1].cap

    @property
    def vectors(self) -> list[IntVec3]:
        return [s.m for s in self.steps]

    def to_json(self) -> dict:
        return {
            "profile": self.profile.to_json(),
            "seed": self.seed,
            "steps": [s.to_json() for s in self.steps],
            "cap": self.current_cap.to_json(),
        }

    @classmethod
    def from_json(cls, d: dict) -> "ConstructionState":
        steps = tuple(StepRecord.from_json(s) for s in d["steps"])
        st = cls(ParameterProfile.from_json(d["profile"]), int(d["seed"]), steps)
        if SphericalCap.from_json(d["cap"]) != st.current_cap:
            raise InvalidState("top-level cap disagrees with the last step's cap")
        return st


def dumps(state: ConstructionState) -> str:
    return json.dumps(state.to_json(), indent=1) + "\n"


def loads(text: str) -> ConstructionState:
    return ConstructionState.from_json(json.loads(text))


# ---------------------------------------------------------------------------
# helpers

def _bits_for(log2_next: float, consts: AlgebraicConstants) -> int:
    bits = math.ceil((float(consts.omega) + 1) * log2_next) + 64
    return max(128, -(-bits // 64) * 64)


def _log2_upper(x: Fraction) -> int:
    return x.numerator.bit_length() - x.denominator.bit_length() + 1


def _consts(bits: int) -> AlgebraicConstants:
    return derive_constants(max(128, bits))


def norm(v: Sequence[int], bits: int) -> RealEnclosure:
    return sqrt_int(sum(x * x for x in v), bits)


def h_value(M: RealEnclosure, profile: ParameterProfile, consts: AlgebraicConstants) -> RealEnclosure:
    """H = M^(sigma tau - 1) / 2^e_H."""
    return M ** consts.growth / (1 << profile.e_H)


def _record(m: IntVec3, cap: SphericalCap, bits: int, profile, geometry=None) -> StepRecord:
    consts = _consts(bits)
    M = norm(m.bar, bits)
    return StepRecord(m=m, cap=cap, bits=bits, M=M, H=h_value(M, profile, consts), geometry=geometry)


def zeta_over_cap(m: Sequence[int], cap: SphericalCap, bits: int) -> RealEnclosure:
    """Enclosure of m0 + m1 x1/x0 + m2 x2/x0 over the ball |x - centre| <= r."""
    eta = cap.center
    r = cap.radius
    mn = norm(m, bits)
    me = dot(m, eta)
    num = RealEnclosure.hull(me, me, bits) + RealEnclosure(-r, r, bits) * mn
    den = RealEnclosure.hull(eta[0] - r, eta[0] + r, bits)
    return num / den


def window_certificates(
    m: Sequence[int], cap: SphericalCap, M_next: RealEnclosure, e_zeta: int, omega: RealEnclosure
) -> dict[str, bool]:
    """Certify 1/(2^e_zeta M^omega) <= zeta_m(x) <= 1/M^omega on the whole cap.

    With x_0 > 0 both bounds are linear in x: v.x >= 0 for v = m - L e_0 and
    v = U e_0 - m, and min over the ball of v.x is v.eta - |v| r.
    """
    bits = M_next.bits
    eta = cap.center
    r = cap.radius
    top = 1 / M_next ** omega
    low = top / (1 << e_zeta)
    e = [RealEnclosure(c, c, bits) for c in eta]

    def min_over_ball(v):
        vv = v[0] * v[0] + v[1] * v[1] + v[2] * v[2]
        return v[0] * e[0] + v[1] * e[1] + v[2] * e[2] - sqrt(vv) * r

    vl = (m[0] - low, enclose(m[1], bits), enclose(m[2], bits))
    vu = (top - m[0], enclose(-m[1], bits), enclose(-m[2], bits))
    return {
        "x0_positive": eta[0] - r > 0,
        "zeta_lower": min_over_ball(vl).lo >= 0,
        "zeta_upper": min_over_ball(vu).lo >= 0,
    }


def cap_inside(inner: SphericalCap, outer: SphericalCap, factor: Fraction = Fraction(1)) -> bool:
    """|c_in - c_out| + r_in <= factor * r_out, exactly."""
    gap = factor * outer.radius - inner.radius
    if gap <= 0:
        return False
    d2 = sum((a - b) ** 2 for a, b in zip(inner.center, outer.center))
    return d2 <= gap * gap


def cap_radius(m_next: Sequence[int], m_cur: Sequence[int], bits: int) -> Fraction:
    """Dyadic lower rounding of 1/(2^6 |m_next|^omega |m_cur|)."""
    consts = _consts(bits)
    r = 1 / (norm(m_next, bits) ** consts.omega * norm(m_cur, bits) * (1 << CAP_EXP))
    return round_dyadic(r.lo, bits, False)


# ---------------------------------------------------------------------------
# init / validation

def init(profile: ParameterProfile, seed: int = 0) -> ConstructionState:
    consts = _consts(128)
    problems = profile.admissibility(consts)
    if problems:
        raise InadmissibleProfile("; ".join(problems))
    rng = random.Random(seed)
    u = Fraction(rng.getrandbits(32), 1 << 32)
    a1 = Fraction(-1, 2) + u / 5
    a2 = 1 + a1  # zeta_0 = 1 + a1 - a2 = 0 at the centre
    bits = 128
    n = sqrt(enclose(1 + a1 * a1 + a2 * a2, bits + 32))
    center = tuple(round_dyadic((enclose(c, bits + 32) / n).mid, bits, False) for c in (1, a1, a2))
    cap = SphericalCap(center, B0_RADIUS)
    return ConstructionState(profile, seed, (_record(M0, cap, bits, profile),))


def validate(state: ConstructionState) -> None:
    if not state.steps or state.steps[0].m != M0:
        raise InvalidState("first vector must be (1, 1, -1)")
    cap = state.current_cap
    if cap.radius <= 0:
        raise InvalidState("cap radius must be positive")
    n2 = sum(c * c for c in cap.center)
    # centres are dyadic roundings at >= 128 bits, so anything coarser is tampering
    if abs(n2 - 1) > SPHERE_TOL:
        raise InvalidState(f"cap centre is off the unit sphere by {float(abs(n2 - 1)):.3g}")
    m = state.steps[-1].m
    if abs(dot(m, cap.center)) ** 2 > Fraction(m.norm2()) * (cap.radius / 64) ** 2:
        raise InvalidState("cap centre does not lie on the plane m_nu . x = 0")
    for a, b in zip(state.steps, state.steps[1:]):
        if not cap_inside(b.cap, a.cap):
            raise InvalidState("caps are not nested")


# ---------------------------------------------------------------------------
# the cap update

def update_cap(state: ConstructionState, chosen: IntVec3, bits: Optional[int] = None) -> SphericalCap:
    """Centre on {chosen . x = 0, zeta_nu = 3/4 M^-omega}; radius 1/(2^6 |m'|^omega |m|)."""
    prev = state.steps[-1]
    bits = bits or prev.bits
    consts = _consts(bits)
    m = prev.m
    M_next = norm(chosen.bar, bits)
    t = ZETA_TARGET / M_next ** consts.omega
    a = (m[0] - t, enclose(m[1], bits), enclose(m[2], bits))
    c = [enclose(x, bits) for x in chosen]
    v = (
        a[1] * c[2] - a[2] * c[1],
        a[2] * c[0] - a[0] * c[2],
        a[0] * c[1] - a[1] * c[0],
    )
    nv = sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2])
    center = [round_dyadic((x / nv).mid, bits, False) for x in v]
    if dot(center, prev.cap.center) < 0:
        center = [-x for x in center]
    new = SphericalCap(tuple(center), cap_radius(chosen, m, bits))
    failed = [k for k, ok in cap_certificates(prev.cap, new, m, M_next, state.profile, consts).items() if not ok]
    if failed:
        raise CapCertificateFailed(f"cap certificates failed: {failed}")
    return new


def cap_certificates(old: SphericalCap, new: SphericalCap, m: Sequence[int], M_next, profile, consts) -> dict[str, bool]:
    out = {
        "centre_in_half_cap": cap_inside(SphericalCap(new.center, Fraction(0)), old, Fraction(1, 2)),
        "nested": cap_inside(new, old),
    }
    out.update(window_certificates(m, new, M_next, profile.e_zeta, consts.omega))
    return out


# ---------------------------------------------------------------------------
# candidate checks shared by the bootstrap and the layer step

def _check_candidate(state: ConstructionState, cand: IntVec3, bits: int) -> tuple[Optional[str], Optional[SphericalCap]]:
    profile = state.profile
    consts = _consts(bits)
    prev = state.steps[-1]
    m = prev.m
    nu = state.nu
    thr = profile.angle_threshold
    cbar = cand.bar
    if not any(cbar):
        return "zero", None
    M_next = norm(cbar, bits)
    if nu == 0:
        if not M_next.hi <= (1 << profile.e_M1):
            return "norm_window", None
        if not (M_next ** (consts.growth - 1)).lo >= 1 << (profile.e_gap + profile.e_H):
            return "norm_window", None
    else:
        H = prev.H
        if not (H.hi <= M_next.lo and M_next.hi <= 2 * H.lo):
            return "norm_window", None
        if not cbar.norm2() >= m.bar.norm2() << (2 * profile.e_gap):
            return "growth", None
    if not opposite_signs(cbar) or not axis_angles_ok(cbar, thr):
        return "sign_axis_angle", None
    if not angle_at_least(m.bar, cbar, thr):
        return "pair_angle", None
    if not any(cross(m, cand)) or not is_complete_pair(m, cand):
        return "complete", None
    if nu >= 1 and det3(state.steps[-2].m, m, cand) == 0:
        return "independent", None
    D = covolume2(m.bar, cbar)
    if not (D * D << 10) >= m.bar.norm2() * cbar.norm2():
        return "covolume", None
    d2 = cross(m, cand).norm2()
    if not (d2 << 10) >= m.norm2() * cand.norm2():
        return "covolume", None
    try:
        cap = update_cap(state, cand, bits)
    except CapCertificateFailed:
        return "cap", None
    return None, cap


def _append(state: ConstructionState, chosen: IntVec3, cap: SphericalCap, bits: int, geometry=None) -> ConstructionState:
    prev = state.steps[-1]
    consts = _consts(bits)
    d = norm(cross(prev.m, chosen), bits)
    zeta = zeta_over_cap(prev.m, cap, bits)
    if geometry is not None:
        M_next = norm(chosen.bar, bits)
        top = 1 / M_next ** consts.omega
        xi_raw = cross(prev.m, chosen)
        xn = norm(xi_raw, bits)
        xi = tuple(enclose(x, bits) / xn for x in xi_raw)
        cen = cap.center
        # |centre x xi| is the distance from the centre to the line Xi
        cx = (
            xi[2] * cen[1] - xi[1] * cen[2],
            xi[0] * cen[2] - xi[2] * cen[0],
            xi[1] * cen[0] - xi[0] * cen[1],
        )
        geometry = replace(
            geometry,
            xi=xi,
            slab_level=top / 2,
            cylinder_radius=top / norm(prev.m, bits),
            cylinder_distance=sqrt(cx[0] * cx[0] + cx[1] * cx[1] + cx[2] * cx[2]),
        )
    done = replace(prev, D=covolume2(prev.m.bar, chosen.bar), d=d, zeta=zeta)
    new = _record(chosen, cap, bits, state.profile, geometry)
    return replace(state, steps=state.steps[:-1] + (done, new))


def _bootstrap(state: ConstructionState) -> ConstructionState:
    """nu = 0 -> 1: direct search near |m1| ~ 0.9 * 2^e_M1 in a fixed direction."""
    profile = state.profile
    consts = _consts(128)
    bits = _bits_for(profile.e_M1, consts)
    eta = state.current_cap.center
    al1, al2 = eta[1] / eta[0], eta[2] / eta[0]
    T = Fraction(9, 10) * (1 << profile.e_M1)
    c1 = round(T * Fraction(math.cos(ODD_DIRECTION)))
    c2 = round(T * Fraction(math.sin(ODD_DIRECTION)))
    offsets = sorted(
        ((i, j) for i in range(-6, 7) for j in range(-6, 7)),
        key=lambda ij: (ij[0] ** 2 + ij[1] ** 2, ij),
    )
    reasons: Counter = Counter()
    for i, j in offsets:
        p1, p2 = c1 + i, c2 + j
        cand = IntVec3(-round(p1 * al1 + p2 * al2), p1, p2)
        why, cap = _check_candidate(state, cand, bits)
        if why is None:
            return _append(state, cand, cap, bits)
        reasons[why] += 1
    raise SearchExhausted("bootstrap search found no admissible m_1", reasons)


# ---------------------------------------------------------------------------
# the layer step

def layer_and_disk(state: ConstructionState) -> StepGeometry:
    if state.nu < 1:
        raise DegenerateGeometry("layer geometry needs at least two vectors")
    profile = state.profile
    prev, cur = state.steps[-2], state.steps[-1]
    H = cur.H
    bits = _bits_for(_log2_upper(2 * H.hi), _consts(128))
    consts = _consts(bits)
    mp_, mc = prev.m, cur.m
    eta = cur.cap.center
    n = complete_to_basis(mp_, mc, math.isqrt(mc.bar.norm2()) + 1)
    sgn = det3(n, mp_, mc)
    N = cross(mp_, mc).scale(sgn)  # N . n = 1, N . m_prev = N . m_cur = 0
    s = dot(mp_, eta)
    if s == 0:
        raise DegenerateGeometry("cap centre lies on the plane of m_{nu-1}")
    u = [mp_[k] - s * eta[k] for k in range(3)]
    Nu = dot(N, u)
    if Nu == 0:
        raise DegenerateGeometry("tangency construction failed")
    w1 = [x / Nu for x in u]
    w1bar = sqrt(enclose(w1[1] ** 2 + w1[2] ** 2, bits))
    R = H / (1 << profile.e_disk)
    dnorm = norm(cross(mp_, mc), bits)
    mu_paper = dnorm * H / (norm(mc, bits) ** consts.omega * norm(mp_, bits))

    def fits(mu: int) -> bool:
        r = w1bar * mu
        return mu >= 1 and (r - R).lo >= H.hi and (r + R).hi <= 2 * H.lo

    ratio = float(Fraction(3, 2) * H.mid / w1bar.mid)
    options = [max(1, round(float(mu_paper.mid))), round(ratio), math.floor(ratio), math.ceil(ratio)]
    mu_star = next((mu for mu in options if fits(mu)), None)
    if mu_star is None:
        raise DegenerateGeometry(
            f"no layer index puts the disk inside [H, 2H] (|w_1| = {float(w1bar.mid):.4g}, H = {float(H.mid):.4g})"
        )
    w = [mu_star * x for x in w1]
    # coordinates of w in the basis (n, m_prev, m_cur)
    rest = [w[k] - mu_star * n[k] for k in range(3)]
    det = mp_[1] * mc[2] - mp_[2] * mc[1]
    a0 = (rest[1] * mc[2] - rest[2] * mc[1]) / det
    b0 = (mp_[1] * rest[2] - mp_[2] * rest[1]) / det
    return StepGeometry(
        plane0=mc,
        mu_star=mu_star,
        mu_star_paper=mu_paper,
        w_center=tuple(RealEnclosure.exact(x, bits) for x in w),
        disk_radius=R,
        layer_spacing=1 / dnorm,
        n_basis=n,
        w_exact=(Fraction(mu_star), a0, b0),
    )


def candidate_search(state: ConstructionState, geometry: StepGeometry, window: int = CANDIDATE_WINDOW) -> list[IntVec3]:
    """Layer points mu* n + a m_{nu-1} + b m_nu within the disk, nearest first."""
    mp_, mc = state.steps[-2].m, state.steps[-1].m
    n, mu = geometry.n_basis, geometry.mu_star
    _, a0, b0 = geometry.w_exact
    wc = [mu * n[k] + a0 * mp_[k] + b0 * mc[k] for k in range(3)]
    R2 = geometry.disk_radius.lo ** 2
    out = []
    for a in range(math.floor(a0) - window, math.ceil(a0) + window + 1):
        if math.gcd(a, mu) != 1:
            continue
        for b in range(math.floor(b0) - window, math.ceil(b0) + window + 1):
            cand = IntVec3(*(mu * n[k] + a * mp_[k] + b * mc[k] for k in range(3)))
            dist2 = sum((cand[k] - wc[k]) ** 2 for k in range(3))
            if dist2 <= R2:
                out.append((dist2, tuple(cand), cand))
    out.sort(key=lambda t: (t[0], t[1]))
    return [c for _, _, c in out]


def step(state: ConstructionState) -> ConstructionState:
    validate(state)
    if state.nu == 0:
        return _bootstrap(state)
    geometry = layer_and_disk(state)
    H = state.steps[-1].H
    bits = _bits_for(_log2_upper(2 * H.hi), _consts(128))
    reasons: Counter = Counter()
    cands = candidate_search(state, geometry)
    if not cands:
        reasons["empty_disk"] += 1
    for cand in cands:
        why, cap = _check_candidate(state, cand, bits)
        if why is None:
            return _append(state, cand, cap, bits, geometry)
        reasons[why] += 1
    raise SearchExhausted(f"no candidate in the disk for step {state.nu} -> {state.nu + 1}", reasons)


def run(profile: ParameterProfile, steps: int, seed: int = 0) -> ConstructionState:
    state = init(profile, seed)
    for _ in range(steps):
        state = step(state)
    return state


# ---------------------------------------------------------------------------
# alpha

def alpha_enclosure(state: ConstructionState, bits: Optional[int] = None) -> tuple[RealEnclosure, RealEnclosure]:
    """Intervals for alpha_i = x_i/x_0 valid on the whole current cap.

    The extremes of x_i/x_0 over the ball |x - eta| <= r are attained on
    planes x_i = c x_0 tangent to it:
        c = (eta_i eta_0 -+ r sqrt(eta_0^2 + eta_i^2 - r^2)) / (eta_0^2 - r^2).
    """
    cap = state.current_cap
    bits = bits or max(state.steps[-1].bits, 128)
    e0, r = cap.center[0], cap.radius
    den = enclose(e0 * e0 - r * r, bits)
    out = []
    for i in (1, 2):
        ei = cap.center[i]
        root = sqrt(enclose(e0 * e0 + ei * ei - r * r, bits)) * r
        base = enclose(ei * e0, bits)
        lo = (base - root) / den
        hi = (base + root) / den
        out.append(RealEnclosure(lo.lo, hi.hi, bits))
    return out[0], out[1]
