from decimal import Decimal, getcontext
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from onesided.numerics import (
    Comparison,
    DivisorStraddlesZero,
    IntervalTooWide,
    NegativeBaseFractionalPower,
    PrecisionPolicy,
    RealEnclosure,
    certified_compare,
    dyadic_to_decimal,
    enclose,
    enclosure_from_json,
    enclosure_to_json,
    interval_ops,
    nearest_int_dist,
    round_dyadic,
    sqrt,
)
from onesided.constants import solve_sigma

E = RealEnclosure.exact


def test_exact_integer_addition():
    r = interval_ops(E(1), E(2), "+")
    assert r.lo == r.hi == 3


def test_sqrt2_against_long_division():
    getcontext().prec = 60
    ref = Fraction(Decimal(2).sqrt())
    r = interval_ops(E(2, 128), E(Fraction(1, 2), 128), "pow")
    assert r.lo <= ref + Fraction(1, 10**55) and ref - Fraction(1, 10**55) <= r.hi
    assert r.width <= Fraction(1, 1 << 120)


def test_divisor_straddling_zero():
    with pytest.raises(DivisorStraddlesZero):
        interval_ops(RealEnclosure(Fraction(0), Fraction(1)), RealEnclosure(Fraction(-1), Fraction(1)), "/")


def test_fractional_power_of_negative_base():
    with pytest.raises(NegativeBaseFractionalPower):
        RealEnclosure(Fraction(-1), Fraction(1)) ** Fraction(1, 2)


@pytest.mark.parametrize(
    "x, expected",
    [(Fraction(37, 10), Fraction(3, 10)), (Fraction(-1, 2), Fraction(1, 2)), (Fraction(2), Fraction(0))],
)
def test_nearest_int_dist_points(x, expected):
    r = nearest_int_dist(RealEnclosure.hull(x, x, 200))
    assert r.contains(expected)
    assert r.width < Fraction(1, 1 << 190)


def test_nearest_int_dist_too_wide():
    with pytest.raises(IntervalTooWide):
        nearest_int_dist(RealEnclosure(Fraction(0), Fraction(1, 2)))


def test_nearest_int_dist_straddling_half():
    r = nearest_int_dist(RealEnclosure(Fraction(9, 20), Fraction(11, 20)))
    assert r.hi == Fraction(1, 2) and r.lo <= Fraction(9, 20)


def test_certified_compare_cases():
    pol = PrecisionPolicy(64, 256, 2)
    assert certified_compare(E(1), E(2), pol, lambda b: (E(1), E(2))) is Comparison.LESS
    sig = solve_sigma(64)
    trunc = E(Fraction(194696, 100000))
    assert certified_compare(sig, trunc, pol, lambda b: (solve_sigma(b), trunc)) is Comparison.GREATER
    unit = RealEnclosure(Fraction(0), Fraction(1))
    assert certified_compare(unit, unit, pol, lambda b: (unit, unit)) is Comparison.INCONCLUSIVE


def test_policy_schedule_doubles():
    assert list(PrecisionPolicy(64, 512, 2).schedule()) == [64, 128, 256, 512]
    with pytest.raises(ValueError):
        PrecisionPolicy(16, 64, 2)


def test_dyadic_decimal_round_trip():
    x = Fraction(-12345, 1 << 20)
    s = dyadic_to_decimal(x)
    assert Fraction(Decimal(s)) == x
    d = enclosure_to_json(RealEnclosure(x, -x, 77))
    assert enclosure_from_json(d) == RealEnclosure(x, -x, 77)


rationals = st.fractions(min_value=-1000, max_value=1000, max_denominator=10**6)


@given(rationals, rationals, rationals, rationals, st.sampled_from(["+", "-", "*", "/"]))
@settings(max_examples=200, deadline=None)
def test_containment(a, b, c, d, op):
    x = RealEnclosure.hull(min(a, b), max(a, b), 96)
    y = RealEnclosure.hull(min(c, d), max(c, d), 96)
    if op == "/" and y.lo <= 0 <= y.hi:
        return
    r = interval_ops(x, y, op)
    for p in (a, b):
        for q in (c, d):
            exact = {"+": p + q, "-": p - q, "*": p * q, "/": p / q if q else None}[op]
            if exact is not None:
                assert r.lo <= exact <= r.hi


@given(st.fractions(min_value=Fraction(1, 100), max_value=1000, max_denominator=10**6))
@settings(max_examples=60, deadline=None)
def test_monotone_refinement(x):
    lo = sqrt(enclose(x, 64))
    hi = sqrt(enclose(x, 256))
    assert lo.lo <= hi.lo and hi.hi <= lo.hi


@given(st.fractions(min_value=-50, max_value=50, max_denominator=1000), st.integers(-10**6, 10**6))
@settings(max_examples=150, deadline=None)
def test_nearest_int_dist_shift_invariant(x, k):
    a = nearest_int_dist(RealEnclosure.hull(x, x, 128))
    b = nearest_int_dist(RealEnclosure.hull(x + k, x + k, 128))
    assert a.overlaps(b)
    assert Fraction(0) <= a.lo and a.hi <= Fraction(1, 2)


def test_round_dyadic_directions():
    x = Fraction(1, 3)
    assert round_dyadic(x, 20, False) < x < round_dyadic(x, 20, True)
