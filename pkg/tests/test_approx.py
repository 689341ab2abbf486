from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from onesided.approx import EmptyInput, EnclosureTooWide, exponent_summary, gnuplot_script, make_record, positive_records
from onesided.construction import alpha_enclosure
from onesided.numerics import RealEnclosure, sqrt

E = RealEnclosure.exact


def _golden(bits=256):
    g = (sqrt(E(5, bits)) - 1) / 2  # phi - 1
    return g, g


def test_fibonacci_heights():
    # ||n (phi - 1)|| has its records at Fibonacci n; here n = x1 + x2
    recs = positive_records(_golden(), 2000)
    sums = [r.x1 + r.x2 for r in recs]
    fib = [2, 3, 5, 8, 13, 21, 34, 55, 89, 144, 233, 377, 610, 987, 1597, 2584]
    assert sums == fib[: len(sums)] and sums[-1] == 2584
    # among equal sums the lexicographically smallest wins; it lies on the diagonal
    assert all(abs(r.x1 - r.x2) <= 1 for r in recs)
    assert all(r.x1 <= r.x2 for r in recs)


def test_height_one():
    recs = positive_records((E(Fraction(1, 3), 128), E(Fraction(2, 7), 128)), 1)
    assert [(r.x1, r.x2) for r in recs] == [(1, 1)]
    s = exponent_summary(recs)
    assert s["best_exponent"] is None or s["best_exponent"] == recs[0].exponent


def test_records_strictly_decrease(scaled_state):
    recs = positive_records(alpha_enclosure(scaled_state), 3000)
    for a, b in zip(recs, recs[1:]):
        assert b.form_value.hi < a.form_value.lo
        assert b.height > a.height


def test_methods_agree(scaled_state):
    alpha = alpha_enclosure(scaled_state)
    ex = positive_records(alpha, 4000, method="exhaustive")
    ac = positive_records(alpha, 4000, method="accelerated")
    assert [(r.x1, r.x2) for r in ex] == [(r.x1, r.x2) for r in ac]


@given(st.integers(1, 10**9), st.integers(1, 10**9))
@settings(max_examples=20, deadline=None)
def test_methods_agree_random(p, q):
    alpha = (E(Fraction(p, 10**9 + 7), 128), E(Fraction(q, 10**9 + 9), 128))
    ex = positive_records(alpha, 1500, method="exhaustive")
    ac = positive_records(alpha, 1500, method="accelerated")
    assert [(r.x1, r.x2) for r in ex] == [(r.x1, r.x2) for r in ac]


def test_exponent_refines_with_bits(scaled_state):
    alpha = alpha_enclosure(scaled_state)
    rec = positive_records(alpha, 500)[-1]
    lo = make_record(rec.x1, rec.x2, alpha, bits=96).exponent
    hi = make_record(rec.x1, rec.x2, alpha, bits=192).exponent
    assert lo.lo <= hi.lo and hi.hi <= lo.hi
    assert hi.width < lo.width


def test_empty_and_bad_input():
    with pytest.raises(EmptyInput):
        exponent_summary([])
    with pytest.raises(ValueError):
        positive_records(_golden(), 0)
    wide = (RealEnclosure(Fraction(0), Fraction(1, 100)), E(Fraction(1, 3)))
    with pytest.raises(EnclosureTooWide):
        positive_records(wide, 1000)


def test_gnuplot_script():
    text = gnuplot_script("rec.csv", "rec.png")
    assert "set output 'rec.png'" in text and "plot 'rec.csv'" in text
