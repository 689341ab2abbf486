"""Exact rationals and outward-rounded dyadic interval arithmetic.

Every irrational quantity in the package (algebraic constants, the linear
forms ``m0 + m1*a1 + m2*a2``, powers ``M**omega``) is carried as a
:class:`RealEnclosure`: a closed interval whose endpoints are dyadic
rationals rounded outward to a working precision.  Comparisons that decide
a certificate go through :func:`certified_compare`, which escalates the
precision until the two enclosures separate.

Transcendental kernels (exp, log, sin) are delegated to ``mpmath.iv``,
which performs directed rounding of its endpoints; the results are then
converted exactly to dyadic fractions and re-rounded outward.
"""

from __future__ import annotations

import enum
import numbers
import math
from contextlib import contextmanager
from dataclasses import dataclass
from decimal import Decimal
from fractions import Fraction
from typing import Callable, Iterator, Union

from mpmath import iv, libmp

Number = Union[int, Fraction, "RealEnclosure"]

DEFAULT_BITS = 64


class NumericsError(ArithmeticError):
    pass


class DivisorStraddlesZero(NumericsError):
    pass


class NegativeBaseFractionalPower(NumericsError):
    pass


class IntervalTooWide(NumericsError):
    pass


class PrecisionExhausted(NumericsError):
    pass


# ---------------------------------------------------------------------------
# dyadic rounding

def _floor_log2(x: Fraction) -> int:
    """floor(log2 |x|) for x != 0, exact."""
    p, q = abs(x.numerator), x.denominator
    e = p.bit_length() - q.bit_length()
    # 2**e <= p/q < 2**(e+1) after one correction
    if e >= 0:
        if p < (q << e):
            e -= 1
    elif (p << -e) < q:
        e -= 1
    return e


def round_dyadic(x: Fraction, bits: int, up: bool) -> Fraction:
    """Round ``x`` to a dyadic rational with ``bits`` significant bits.

    Rounds toward +inf when ``up`` else toward -inf.  Dyadic inputs that
    already fit are returned unchanged.
    """
    if x == 0:
        return Fraction(0)
    shift = bits - 1 - _floor_log2(x)
    p, q = x.numerator, x.denominator
    if shift >= 0:
        num, rem = divmod(p << shift, q)
    else:
        num, rem = divmod(p, q << -shift)
    if rem and up:
        num += 1
    # divmod floors, so the down direction is already correct
    if shift >= 0:
        return Fraction(num, 1 << shift)
    return Fraction(num << -shift)


def is_dyadic(x: Fraction) -> bool:
    q = x.denominator
    return q & (q - 1) == 0


def dyadic_to_decimal(x: Fraction) -> str:
    """Exact decimal expansion of a dyadic rational."""
    if not is_dyadic(x):
        raise ValueError(f"{x} is not dyadic")
    k = x.denominator.bit_length() - 1
    if k == 0:
        return str(x.numerator)
    digits = abs(x.numerator) * 5 ** k
    s = str(digits).rjust(k + 1, "0")
    s = s[:-k] + "." + s[-k:]
    s = s.rstrip("0").rstrip(".")
    return "-" + s if x < 0 else s


def decimal_to_fraction(s: str) -> Fraction:
    return Fraction(Decimal(s))


# ---------------------------------------------------------------------------
# the enclosure type

@dataclass(frozen=True)
class RealEnclosure:
    """Closed interval ``[lo, hi]`` with dyadic endpoints."""

    lo: Fraction
    hi: Fraction
    bits: int = DEFAULT_BITS

    def __post_init__(self) -> None:
        if self.lo > self.hi:
            raise ValueError(f"empty enclosure [{self.lo}, {self.hi}]")

    # -- constructors -----------------------------------------------------
    @classmethod
    def exact(cls, x: Union[int, Fraction], bits: int = DEFAULT_BITS) -> "RealEnclosure":
        x = Fraction(x)
        if is_dyadic(x):
            return cls(x, x, bits)
        return cls(round_dyadic(x, bits, False), round_dyadic(x, bits, True), bits)

    @classmethod
    def hull(cls, lo: Fraction, hi: Fraction, bits: int) -> "RealEnclosure":
        return cls(round_dyadic(Fraction(lo), bits, False), round_dyadic(Fraction(hi), bits, True), bits)

    # -- inspection -------------------------------------------------------
    @property
    def width(self) -> Fraction:
        return self.hi - self.lo

    @property
    def mid(self) -> Fraction:
        return (self.lo + self.hi) / 2

    def is_exact(self) -> bool:
        return self.lo == self.hi

    def contains(self, x: Union[int, Fraction, "RealEnclosure"]) -> bool:
        if isinstance(x, RealEnclosure):
            return self.lo <= x.lo and x.hi <= self.hi
        return self.lo <= x <= self.hi

    def overlaps(self, other: "RealEnclosure") -> bool:
        return self.lo <= other.hi and other.lo <= self.hi

    def certainly_lt(self, other: Number) -> bool:
        return self.hi < _as_enclosure(other, self.bits).lo

    def certainly_le(self, other: Number) -> bool:
        return self.hi <= _as_enclosure(other, self.bits).lo

    def certainly_gt(self, other: Number) -> bool:
        return self.lo > _as_enclosure(other, self.bits).hi

    def certainly_ge(self, other: Number) -> bool:
        return self.lo >= _as_enclosure(other, self.bits).hi

    def certainly_positive(self) -> bool:
        return self.lo > 0

    def __float__(self) -> float:
        return float(self.mid)

    def __repr__(self) -> str:
        return f"RealEnclosure([{float(self.lo)!r}, {float(self.hi)!r}], bits={self.bits})"

    def with_bits(self, bits: int) -> "RealEnclosure":
        return RealEnclosure.hull(self.lo, self.hi, bits)

    # -- arithmetic -------------------------------------------------------
    def __neg__(self) -> "RealEnclosure":
        return RealEnclosure(-self.hi, -self.lo, self.bits)

    def __abs__(self) -> "RealEnclosure":
        if self.lo >= 0:
            return self
        if self.hi <= 0:
            return -self
        return RealEnclosure(Fraction(0), max(-self.lo, self.hi), self.bits)

    def __add__(self, other: Number) -> "RealEnclosure":
        o = _as_enclosure(other, self.bits)
        bits = max(self.bits, o.bits)
        return RealEnclosure.hull(self.lo + o.lo, self.hi + o.hi, bits)

    __radd__ = __add__

    def __sub__(self, other: Number) -> "RealEnclosure":
        o = _as_enclosure(other, self.bits)
        bits = max(self.bits, o.bits)
        return RealEnclosure.hull(self.lo - o.hi, self.hi - o.lo, bits)

    def __rsub__(self, other: Number) -> "RealEnclosure":
        return _as_enclosure(other, self.bits) - self

    def __mul__(self, other: Number) -> "RealEnclosure":
        o = _as_enclosure(other, self.bits)
        bits = max(self.bits, o.bits)
        ps = (self.lo * o.lo, self.lo * o.hi, self.hi * o.lo, self.hi * o.hi)
        return RealEnclosure.hull(min(ps), max(ps), bits)

    __rmul__ = __mul__

    def __truediv__(self, other: Number) -> "RealEnclosure":
        o = _as_enclosure(other, self.bits)
        if o.lo <= 0 <= o.hi:
            raise DivisorStraddlesZero(f"divisor {o!r} contains zero")
        bits = max(self.bits, o.bits)
        qs = (self.lo / o.lo, self.lo / o.hi, self.hi / o.lo, self.hi / o.hi)
        return RealEnclosure.hull(min(qs), max(qs), bits)

    def __rtruediv__(self, other: Number) -> "RealEnclosure":
        return _as_enclosure(other, self.bits) / self

    def __pow__(self, y: Union[int, Fraction, "RealEnclosure"]) -> "RealEnclosure":
        if isinstance(y, int):
            return self._ipow(y)
        if isinstance(y, Fraction) and y.denominator == 1:
            return self._ipow(int(y))
        y = _as_enclosure(y, self.bits)
        if y.is_exact() and y.lo.denominator == 1:
            return self._ipow(int(y.lo))
        if self.lo <= 0:
            raise NegativeBaseFractionalPower(f"base {self!r} not strictly positive")
        return exp(y * log(self))

    def _ipow(self, n: int) -> "RealEnclosure":
        if n < 0:
            return 1 / self._ipow(-n)
        if n == 0:
            return RealEnclosure(Fraction(1), Fraction(1), self.bits)
        lo, hi = self.lo ** n, self.hi ** n
        if n % 2 == 0:
            if self.lo <= 0 <= self.hi:
                return RealEnclosure.hull(Fraction(0), max(lo, hi), self.bits)
            lo, hi = min(lo, hi), max(lo, hi)
        return RealEnclosure.hull(lo, hi, self.bits)


def _as_enclosure(x: Number, bits: int) -> RealEnclosure:
    if isinstance(x, RealEnclosure):
        return x
    if isinstance(x, (int, Fraction)):
        return RealEnclosure.exact(x, bits)
    if isinstance(x, numbers.Rational):
        return RealEnclosure.exact(Fraction(int(x.numerator), int(x.denominator)), bits)
    raise TypeError(f"cannot enclose {type(x).__name__}")


def enclose(x: Number, bits: int = DEFAULT_BITS) -> RealEnclosure:
    return _as_enclosure(x, bits)


# ---------------------------------------------------------------------------
# elementary functions

@contextmanager
def _ivprec(bits: int) -> Iterator[None]:
    old = iv.prec
    iv.prec = bits
    try:
        yield
    finally:
        iv.prec = old


def _frac_to_iv(x: Fraction):
    if x.denominator == 1:
        return iv.mpf(x.numerator)
    return iv.mpf(x.numerator) / iv.mpf(x.denominator)


def _to_iv(x: RealEnclosure):
    a = _frac_to_iv(x.lo)
    b = a if x.lo == x.hi else _frac_to_iv(x.hi)
    return iv.mpf([a.a, b.b])


def _from_iv(v, bits: int) -> RealEnclosure:
    lo_t, hi_t = v._mpi_
    for t in (lo_t, hi_t):
        if t in (libmp.finf, libmp.fninf, libmp.fnan):
            raise PrecisionExhausted("non-finite interval endpoint")
    # mpmath may hand back gmpy integers; keep plain ints throughout
    lo = Fraction(*map(int, libmp.to_rational(lo_t)))
    hi = Fraction(*map(int, libmp.to_rational(hi_t)))
    return RealEnclosure.hull(lo, hi, bits)


def _unary(fn: Callable, x: RealEnclosure) -> RealEnclosure:
    with _ivprec(x.bits + 16):
        return _from_iv(fn(_to_iv(x)), x.bits)


def exp(x: RealEnclosure) -> RealEnclosure:
    return _unary(iv.exp, x)


def log(x: RealEnclosure) -> RealEnclosure:
    if x.lo <= 0:
        raise NegativeBaseFractionalPower(f"log of non-positive enclosure {x!r}")
    return _unary(iv.log, x)


def sin(x: RealEnclosure) -> RealEnclosure:
    return _unary(iv.sin, x)


def _isqrt_frac(x: Fraction, bits: int, up: bool) -> Fraction:
    # sqrt(p/q) = sqrt(p*q*4^k)/(q*2^k)
    if x == 0:
        return Fraction(0)
    k = bits + 2
    p, q = x.numerator, x.denominator
    n = p * q << (2 * k)
    r = math.isqrt(n)
    if up and r * r != n:
        r += 1
    return Fraction(r, q << k)


def sqrt(x: RealEnclosure) -> RealEnclosure:
    if x.hi < 0:
        raise NegativeBaseFractionalPower(f"sqrt of negative enclosure {x!r}")
    lo = _isqrt_frac(max(x.lo, Fraction(0)), x.bits, False)
    hi = _isqrt_frac(x.hi, x.bits, True)
    return RealEnclosure.hull(lo, hi, x.bits)


def sqrt_int(n: int, bits: int = DEFAULT_BITS) -> RealEnclosure:
    """Enclosure of sqrt(n) for a non-negative integer (e.g. a squared norm)."""
    return sqrt(RealEnclosure.exact(n, bits))


def pi(bits: int = DEFAULT_BITS) -> RealEnclosure:
    with _ivprec(bits + 16):
        return _from_iv(iv.pi, bits)


def interval_ops(a: RealEnclosure, b: RealEnclosure, op: str) -> RealEnclosure:
    """Dispatch ``a op b`` for op in ``+ - * / pow``."""
    table = {
        "+": lambda: a + b,
        "-": lambda: a - b,
        "*": lambda: a * b,
        "/": lambda: a / b,
        "pow": lambda: a ** b,
    }
    try:
        return table[op]()
    except KeyError:
        raise ValueError(f"unknown operation {op!r}") from None


# ---------------------------------------------------------------------------
# nearest-integer distance

def nearest_int_dist(x: RealEnclosure) -> RealEnclosure:
    """Enclosure of ||xi|| (distance to the nearest integer) over ``x``."""
    if x.width >= Fraction(1, 4):
        raise IntervalTooWide(f"enclosure of width {float(x.width)} is too wide")
    half = Fraction(1, 2)
    n = math.floor(x.lo + half)  # nearest integer to lo
    lo_off, hi_off = x.lo - n, x.hi - n  # lo_off in [-1/2, 1/2)
    if hi_off <= half:
        if lo_off <= 0 <= hi_off:
            d = RealEnclosure(Fraction(0), max(-lo_off, hi_off), x.bits)
        else:
            a, b = abs(lo_off), abs(hi_off)
            d = RealEnclosure(min(a, b), max(a, b), x.bits)
    else:
        # straddles the half-integer n + 1/2
        d = RealEnclosure(min(abs(lo_off), abs(hi_off - 1)), half, x.bits)
    return d


# ---------------------------------------------------------------------------
# certified comparison with precision escalation

class Comparison(enum.Enum):
    LESS = "less"
    GREATER = "greater"
    INCONCLUSIVE = "equal-or-inconclusive"


@dataclass(frozen=True)
class PrecisionPolicy:
    start_bits: int = 64
    max_bits: int = 8192
    escalation_factor: int = 2

    def __post_init__(self) -> None:
        if self.start_bits < 32:
            raise ValueError("start_bits must be >= 32")
        if self.max_bits < self.start_bits:
            raise ValueError("max_bits must be >= start_bits")
        if self.escalation_factor < 2:
            raise ValueError("escalation_factor must be >= 2")

    def schedule(self) -> Iterator[int]:
        bits = self.start_bits
        while True:
            yield bits
            if bits >= self.max_bits:
                return
            bits = min(self.max_bits, bits * self.escalation_factor)


DEFAULT_POLICY = PrecisionPolicy()


def compare(a: RealEnclosure, b: RealEnclosure) -> Comparison:
    if a.hi < b.lo:
        return Comparison.LESS
    if a.lo > b.hi:
        return Comparison.GREATER
    return Comparison.INCONCLUSIVE


def certified_compare(
    a: RealEnclosure,
    b: RealEnclosure,
    policy: PrecisionPolicy = DEFAULT_POLICY,
    refiner: Callable[[int], tuple[RealEnclosure, RealEnclosure]] | None = None,
) -> Comparison:
    """Compare two reals, recomputing them at rising precision on overlap.

    ``refiner(bits)`` must return fresh enclosures of both operands.  Without
    a refiner only the given enclosures are compared.
    """
    res = compare(a, b)
    if res is not Comparison.INCONCLUSIVE or refiner is None:
        return res
    for bits in policy.schedule():
        a, b = refiner(bits)
        res = compare(a, b)
        if res is not Comparison.INCONCLUSIVE:
            return res
    return Comparison.INCONCLUSIVE


def require_sign(
    make: Callable[[int], RealEnclosure],
    policy: PrecisionPolicy = DEFAULT_POLICY,
    what: str = "quantity",
) -> int:
    """Sign (+1/-1) of a real computed by ``make(bits)``, escalating on zero overlap."""
    for bits in policy.schedule():
        x = make(bits)
        if x.lo > 0:
            return 1
        if x.hi < 0:
            return -1
    raise PrecisionExhausted(f"sign of {what} undecided at {policy.max_bits} bits")


# ---------------------------------------------------------------------------
# serialization

def enclosure_to_json(x: RealEnclosure) -> dict:
    return {"lo": dyadic_to_decimal(x.lo), "hi": dyadic_to_decimal(x.hi), "bits": x.bits}


def enclosure_from_json(d: dict) -> RealEnclosure:
    lo, hi = decimal_to_fraction(d["lo"]), decimal_to_fraction(d["hi"])
    if not (is_dyadic(lo) and is_dyadic(hi)):
        raise ValueError("enclosure endpoints must be dyadic")
    return RealEnclosure(lo, hi, int(d["bits"]))
