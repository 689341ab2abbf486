"""The algebraic constants of the construction and their certificates.

``sigma`` is the largest real root of x^4 - 2x^2 - 4x + 1; the other
exponents are rational functions of it::

    tau   = (1 + sigma^2) / (2 sigma)
    omega = tau + 1

The quartic was chosen so that ``tau + 1/(sigma*tau - 1) == sigma`` holds
exactly, and ``sigma*tau - 1 > tau`` is what makes the growth law work.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

from .numerics import (
    PrecisionExhausted,
    RealEnclosure,
    enclose,
    enclosure_to_json,
    exp,
    log,
    round_dyadic,
    sqrt,
)

# x^4 - 2x^2 - 4x + 1, highest degree first
QUARTIC = (1, 0, -2, -4, 1)


class DomainError(ValueError):
    pass


def poly_eval(coeffs, x: Fraction) -> Fraction:
    acc = Fraction(0)
    for c in coeffs:
        acc = acc * x + c
    return acc


def poly_deriv(coeffs):
    n = len(coeffs) - 1
    return tuple(c * (n - i) for i, c in enumerate(coeffs[:-1]))


def _poly_rem(a, b):
    a = [Fraction(c) for c in a]
    b = [Fraction(c) for c in b]
    while len(a) >= len(b) and any(a):
        q = a[0] / b[0]
        for i in range(len(b)):
            a[i] -= q * b[i]
        a.pop(0)
    while a and a[0] == 0:
        a.pop(0)
    return tuple(a)


def sturm_sequence(coeffs):
    seq = [tuple(Fraction(c) for c in coeffs), tuple(Fraction(c) for c in poly_deriv(coeffs))]
    while len(seq[-1]) > 1:
        r = _poly_rem(seq[-2], seq[-1])
        if not r:
            break
        seq.append(tuple(-c for c in r))
    return seq


def _sign_changes(values) -> int:
    signs = [v > 0 for v in values if v != 0]
    return sum(1 for a, b in zip(signs, signs[1:]) if a != b)


def sturm_root_count(coeffs, a: Fraction, b: Fraction) -> int:
    """Number of distinct real roots in (a, b]."""
    seq = sturm_sequence(coeffs)
    return _sign_changes([poly_eval(p, a) for p in seq]) - _sign_changes([poly_eval(p, b) for p in seq])


def _interval_poly(coeffs, x: RealEnclosure) -> RealEnclosure:
    acc = enclose(0, x.bits)
    for c in coeffs:
        acc = acc * x + c
    return acc


@lru_cache(maxsize=32)
def solve_sigma(bits: int) -> RealEnclosure:
    """Certified enclosure of the largest real root of x^4 - 2x^2 - 4x + 1.

    Exact rational bisection from [1, 2] (P(1) = -4, P(2) = 1) down to a
    coarse bracket, then interval Newton steps, each intersected with the
    current bracket; the result always brackets a sign change of P.
    """
    if bits < 32:
        raise ValueError("bits must be >= 32")
    lo, hi = Fraction(1), Fraction(2)
    assert poly_eval(QUARTIC, lo) < 0 < poly_eval(QUARTIC, hi)
    while hi - lo > Fraction(1, 1 << 24):
        mid = (lo + hi) / 2
        if poly_eval(QUARTIC, mid) < 0:
            lo = mid
        else:
            hi = mid
    dp = poly_deriv(QUARTIC)
    target = Fraction(1, 1 << (bits - 4))
    work = bits + 16
    while hi - lo > target:
        x = RealEnclosure(lo, hi, work)
        deriv = _interval_poly(dp, x)  # positive on the bracket
        m = round_mid(lo, hi, work)
        pm = poly_eval(QUARTIC, m)
        step = enclose(pm, work) / deriv
        n_lo, n_hi = m - step.hi, m - step.lo
        new_lo, new_hi = max(lo, n_lo), min(hi, n_hi)
        if not new_hi - new_lo < (hi - lo) / 2:
            # Newton stalled on rounding; fall back to a bisection step
            mid = (lo + hi) / 2
            new_lo, new_hi = (mid, hi) if poly_eval(QUARTIC, mid) < 0 else (lo, mid)
        lo, hi = new_lo, new_hi
    # snap outward to the requested precision, keeping the sign change
    res = RealEnclosure.hull(lo, hi, bits)
    if not poly_eval(QUARTIC, res.lo) < 0 < poly_eval(QUARTIC, res.hi):
        raise PrecisionExhausted("sign-change certificate lost while rounding")
    return res


def round_mid(lo: Fraction, hi: Fraction, bits: int) -> Fraction:
    return round_dyadic((lo + hi) / 2, bits, False)


def sign_change_certificate(sigma: RealEnclosure) -> bool:
    return poly_eval(QUARTIC, sigma.lo) < 0 < poly_eval(QUARTIC, sigma.hi)


def no_larger_root_certificate(sigma: RealEnclosure, upper: int = 16) -> bool:
    """Sturm count: no root of the quartic in (hi(sigma), upper] and none beyond
    (Cauchy bound 1 + max|a_i| = 5 < upper)."""
    return sturm_root_count(QUARTIC, sigma.hi, Fraction(upper)) == 0


@dataclass(frozen=True)
class AlgebraicConstants:
    sigma: RealEnclosure
    tau: RealEnclosure
    omega: RealEnclosure
    phi: RealEnclosure
    t_gap: RealEnclosure
    bits: int

    @property
    def growth(self) -> RealEnclosure:
        """sigma*tau - 1, the exponent of the norm growth law."""
        return self.sigma * self.tau - 1

    def certificates(self) -> dict[str, bool]:
        st1 = self.growth
        ident = self.tau + 1 / st1
        tol = Fraction(1, 1 << max(self.bits - 8, 1))
        return {
            "sigma_sign_change": sign_change_certificate(self.sigma),
            "sigma_no_larger_root": no_larger_root_certificate(self.sigma),
            "sigma_tau_minus_1_gt_tau": st1.certainly_gt(self.tau),
            "t_gap_positive": self.t_gap.certainly_positive(),
            "identity_tau_plus_inv_equals_sigma": ident.overlaps(self.sigma)
            and (ident - self.sigma).hi - (ident - self.sigma).lo <= tol * 4,
            "phi_squared_equals_phi_plus_1": (self.phi * self.phi).overlaps(self.phi + 1),
        }

    def to_json(self) -> dict:
        return {
            "bits": self.bits,
            "sigma": enclosure_to_json(self.sigma),
            "tau": enclosure_to_json(self.tau),
            "omega": enclosure_to_json(self.omega),
            "phi": enclosure_to_json(self.phi),
            "t_gap": enclosure_to_json(self.t_gap),
            "sigma_tau_minus_1": enclosure_to_json(self.growth),
            "certificates": self.certificates(),
        }


@lru_cache(maxsize=32)
def derive_constants(bits: int) -> AlgebraicConstants:
    if bits < 64:
        raise ValueError("bits must be >= 64")
    work = bits + 32
    sigma = solve_sigma(work)
    tau = (1 + sigma * sigma) / (2 * sigma)
    omega = tau + 1
    phi = (1 + sqrt(enclose(5, work))) / 2
    t_gap = sigma * tau - omega
    out = AlgebraicConstants(
        sigma=sigma.with_bits(bits),
        tau=tau.with_bits(bits),
        omega=omega.with_bits(bits),
        phi=phi.with_bits(bits),
        t_gap=t_gap.with_bits(bits),
        bits=bits,
    )
    bad = [k for k, ok in out.certificates().items() if not ok]
    if bad:
        raise PrecisionExhausted(f"certificates inconclusive at {bits} bits: {bad}")
    return out


def g_of_gamma(gamma: RealEnclosure, phi: RealEnclosure | None = None) -> RealEnclosure:
    """phi + (2 phi - 2) / (phi^2 gamma - 2), decreasing from 2 (at gamma = 2) to phi."""
    if gamma.lo < 2:
        raise DomainError("gamma must be >= 2")
    if phi is None:
        phi = derive_constants(max(64, gamma.bits)).phi
    return phi + (2 * phi - 2) / (phi * phi * gamma - 2)


def c_of_gamma_big(Gamma: RealEnclosure, gamma: RealEnclosure, phi: RealEnclosure | None = None) -> RealEnclosure:
    """2^18 * Gamma^((phi - phi^2) / (phi^2 gamma - 2)).

    Since phi - phi^2 = -1 the exponent is evaluated as -1/(phi^2 gamma - 2).
    """
    if not (Gamma.lo > 0 and Gamma.hi <= 1):
        raise DomainError("Gamma must lie in (0, 1]")
    if gamma.lo < 2:
        raise DomainError("gamma must be >= 2")
    if phi is None:
        phi = derive_constants(max(64, gamma.bits, Gamma.bits)).phi
    expo = -1 / (phi * phi * gamma - 2)
    if Gamma.is_exact() and Gamma.lo == 1:
        return enclose(1 << 18, phi.bits)
    return (1 << 18) * exp(expo * log(Gamma))
