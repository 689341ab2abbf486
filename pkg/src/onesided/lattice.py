"""Exact integer-lattice primitives on Z^2 and Z^3."""

from __future__ import annotations

import math
from functools import lru_cache
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple, Sequence, Union

from .numerics import (
    DEFAULT_POLICY,
    PrecisionExhausted,
    PrecisionPolicy,
    RealEnclosure,
    enclose,
    sin,
)


class LatticeError(ValueError):
    pass


class ZeroVector(LatticeError):
    pass


class DependentInput(LatticeError):
    pass


class IncompletePair(LatticeError):
    pass


class IntVec3(NamedTuple):
    m0: int
    m1: int
    m2: int

    @property
    def bar(self) -> "IntVec2":
        """The cut vector (m1, m2)."""
        return IntVec2(self.m1, self.m2)

    def norm2(self) -> int:
        return self.m0 * self.m0 + self.m1 * self.m1 + self.m2 * self.m2

    def __add__(self, o):  # type: ignore[override]
        return IntVec3(self.m0 + o[0], self.m1 + o[1], self.m2 + o[2])

    def __sub__(self, o):
        return IntVec3(self.m0 - o[0], self.m1 - o[1], self.m2 - o[2])

    def scale(self, k: int) -> "IntVec3":
        return IntVec3(k * self.m0, k * self.m1, k * self.m2)


class IntVec2(NamedTuple):
    m1: int
    m2: int

    def norm2(self) -> int:
        return self.m1 * self.m1 + self.m2 * self.m2


Vec3 = Union[IntVec3, Sequence[int]]


def cross(a: Vec3, b: Vec3) -> IntVec3:
    return IntVec3(
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    )


def dot(a: Sequence, b: Sequence):
    return sum(x * y for x, y in zip(a, b))


def det3(a: Vec3, b: Vec3, c: Vec3) -> int:
    return dot(a, cross(b, c))


def gcd3(v: Vec3) -> int:
    return math.gcd(math.gcd(abs(v[0]), abs(v[1])), abs(v[2]))


@dataclass(frozen=True)
class Sublattice2in3:
    basis_a: IntVec3
    basis_b: IntVec3

    def __post_init__(self) -> None:
        if not any(cross(self.basis_a, self.basis_b)):
            raise DependentInput("basis vectors are linearly dependent")

    def covolume2(self) -> int:
        """Squared fundamental volume |a x b|^2."""
        return cross(self.basis_a, self.basis_b).norm2()

    def is_complete(self) -> bool:
        return is_complete_pair(self.basis_a, self.basis_b)


def is_primitive(v: Vec3) -> bool:
    if not any(v):
        raise ZeroVector("zero vector has no primitivity")
    return gcd3(v) == 1


def is_complete_pair(a: Vec3, b: Vec3) -> bool:
    """True iff <a, b>_Z equals Z^3 intersected with its rational span.

    Equivalent to the 2x2 minors of (a, b) being coprime, i.e. a x b primitive.
    """
    c = cross(a, b)
    if not any(c):
        raise DependentInput("a and b are linearly dependent")
    return gcd3(c) == 1


def _ext_gcd(a: int, b: int) -> tuple[int, int, int]:
    x0, x1, y0, y1 = 1, 0, 0, 1
    while b:
        q, a, b = a // b, b, a % b
        x0, x1 = x1, x0 - q * x1
        y0, y1 = y1, y0 - q * y1
    return a, x0, y0


def _solve_dot_one(c: IntVec3) -> IntVec3:
    """An integer n with n . c = gcd(c) (= 1 for primitive c)."""
    g01, x, y = _ext_gcd(c[0], c[1])
    g, u, w = _ext_gcd(g01, c[2])
    n = IntVec3(u * x, u * y, w)
    if g < 0:
        n = n.scale(-1)
    return n


def gauss_reduce(u: IntVec2, v: IntVec2) -> tuple[IntVec2, IntVec2]:
    """Lagrange-Gauss reduction of a rank-2 basis of a lattice in Z^2."""
    u, v = IntVec2(*u), IntVec2(*v)
    if u.norm2() > v.norm2():
        u, v = v, u
    while True:
        k = round(Fraction(dot(u, v), u.norm2()))
        v = IntVec2(v[0] - k * u[0], v[1] - k * u[1])
        if v.norm2() >= u.norm2():
            return u, v
        u, v = v, u


def _reduce_mod(target: tuple, p: IntVec2, q: IntVec2) -> tuple[int, int]:
    """Integer coefficients (x, y) with target - x p - y q in the centred cell."""
    det = p[0] * q[1] - p[1] * q[0]
    x = Fraction(target[0] * q[1] - target[1] * q[0], det)
    y = Fraction(p[0] * target[1] - p[1] * target[0], det)
    return round(x), round(y)


def complete_to_basis(a: Vec3, b: Vec3, bound: int, box_corner: tuple[int, int] | None = None) -> IntVec3:
    """Find n with |det(n, a, b)| = 1 and a small (n1, n2) projection.

    Without ``box_corner`` the projection satisfies max(|n1|, |n2|) <= bound;
    with it, ``box_corner[k] <= n_k <= box_corner[k] + bound``.  Shifting
    n by <a, b>_Z keeps the determinant, which is what lets the box move.
    """
    a, b = IntVec3(*a), IntVec3(*b)
    c = cross(a, b)
    if not any(c):
        raise DependentInput("a and b are linearly dependent")
    if gcd3(c) != 1:
        raise IncompletePair(f"<{a}, {b}> is not complete (gcd of minors {gcd3(c)})")
    n = _solve_dot_one(c)
    abar, bbar = a.bar, b.bar
    if box_corner is None:
        centre = (Fraction(0), Fraction(0))
        lo = (-bound, -bound)
        hi = (bound, bound)
    else:
        centre = (box_corner[0] + Fraction(bound, 2), box_corner[1] + Fraction(bound, 2))
        lo = box_corner
        hi = (box_corner[0] + bound, box_corner[1] + bound)
    if abar[0] * bbar[1] - abar[1] * bbar[0] == 0:
        return _complete_degenerate(n, a, b, centre, lo, hi, bound)
    p, q = gauss_reduce(abar, bbar)
    # express p, q back in terms of a, b so the shift is a lattice vector of <a,b>
    lift = _lift_pair(abar, bbar, a, b)
    P, Q = lift(p), lift(q)
    x, y = _reduce_mod((n.m1 - centre[0], n.m2 - centre[1]), p, q)
    base = n - P.scale(x) - Q.scale(y)
    best = None
    for dx in range(-2, 3):
        for dy in range(-2, 3):
            cand = base - P.scale(dx) - Q.scale(dy)
            if lo[0] <= cand.m1 <= hi[0] and lo[1] <= cand.m2 <= hi[1]:
                key = (abs(cand.m1 - centre[0]) + abs(cand.m2 - centre[1]), cand)
                if best is None or key < best:
                    best = key
    if best is None:
        raise LatticeError(f"no basis completion with projection in the box of side {bound}")
    out = best[1]
    assert abs(det3(out, a, b)) == 1
    return out


def _complete_degenerate(n: IntVec3, a: IntVec3, b: IntVec3, centre, lo, hi, bound: int) -> IntVec3:
    """Parallel projections: the shifts only move (n1, n2) along one line."""
    abar, bbar = a.bar, b.bar
    d = abar if any(abar) else bbar
    if any(d):
        g0 = math.gcd(*d)
        d = IntVec2(d[0] // g0, d[1] // g0)
        k = 0 if d[0] else 1
        s, t = abar[k] // d[k], bbar[k] // d[k]
        g, x, y = _egcd(s, t)
        G = a.scale(x) + b.scale(y)  # projection g * d
        off = Fraction((n.m1 - centre[0]) * d[0] + (n.m2 - centre[1]) * d[1], g * (d[0] ** 2 + d[1] ** 2))
        n = n - G.scale(round(off))
    if not (lo[0] <= n.m1 <= hi[0] and lo[1] <= n.m2 <= hi[1]):
        raise LatticeError(f"no basis completion with projection in the box of side {bound}")
    assert abs(det3(n, a, b)) == 1
    return n


def _egcd(s: int, t: int) -> tuple[int, int, int]:
    """(g, x, y) with x s + y t = g = gcd(s, t) >= 0."""
    x0, y0, x1, y1, r0, r1 = 1, 0, 0, 1, s, t
    while r1:
        q = r0 // r1
        r0, r1 = r1, r0 - q * r1
        x0, x1 = x1, x0 - q * x1
        y0, y1 = y1, y0 - q * y1
    if r0 < 0:
        r0, x0, y0 = -r0, -x0, -y0
    return r0, x0, y0


def _lift_pair(abar, bbar, a: IntVec3, b: IntVec3):
    det = abar[0] * bbar[1] - abar[1] * bbar[0]

    def lift(w: IntVec2) -> IntVec3:
        x = Fraction(w[0] * bbar[1] - w[1] * bbar[0], det)
        y = Fraction(abar[0] * w[1] - abar[1] * w[0], det)
        assert x.denominator == 1 and y.denominator == 1
        return a.scale(int(x)) + b.scale(int(y))

    return lift


def covolume2(u: Sequence[int], v: Sequence[int]) -> int:
    return abs(u[0] * v[1] - u[1] * v[0])


def angle_sin2(u: Sequence[int], v: Sequence[int]) -> Fraction:
    """sin^2 of the acute angle between the lines spanned by u and v (exact)."""
    uu = u[0] * u[0] + u[1] * u[1]
    vv = v[0] * v[0] + v[1] * v[1]
    if uu == 0 or vv == 0:
        raise ZeroVector("angle with the zero vector")
    cr = u[0] * v[1] - u[1] * v[0]
    return Fraction(cr * cr, uu * vv)


@lru_cache(maxsize=256)
def sin2_threshold(threshold: Union[Fraction, RealEnclosure], bits: int) -> RealEnclosure:
    t = threshold if isinstance(threshold, RealEnclosure) else enclose(Fraction(threshold), bits)
    s = sin(t.with_bits(bits))
    return s * s


def angle_at_least(
    u: Sequence[int],
    v: Sequence[int],
    threshold: Union[Fraction, RealEnclosure] = Fraction(1, 4),
    policy: PrecisionPolicy = DEFAULT_POLICY,
) -> bool:
    """Acute angle between span(u) and span(v) is >= threshold (radians).

    Decided by comparing the exact rational sin^2 of the angle against a
    certified enclosure of sin^2(threshold).
    """
    q = angle_sin2(u, v)
    for bits in policy.schedule():
        s2 = sin2_threshold(threshold, bits)
        if q > s2.hi:
            return True
        if q < s2.lo:
            return False
        if isinstance(threshold, RealEnclosure):
            break
    raise PrecisionExhausted("angle indistinguishable from the threshold")


def opposite_signs(u: Sequence[int]) -> bool:
    return u[0] * u[1] < 0


E1 = IntVec2(1, 0)
E2 = IntVec2(0, 1)


def axis_angles_ok(u: Sequence[int], threshold=Fraction(1, 4), policy: PrecisionPolicy = DEFAULT_POLICY) -> bool:
    """Both axis-angle conditions angle(u, +-e_j) >= threshold."""
    return angle_at_least(u, E1, threshold, policy) and angle_at_least(u, E2, threshold, policy)
