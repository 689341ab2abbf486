from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from onesided.constants import (
    QUARTIC,
    DomainError,
    c_of_gamma_big,
    derive_constants,
    g_of_gamma,
    no_larger_root_certificate,
    poly_eval,
    solve_sigma,
    sturm_root_count,
)
from onesided.numerics import RealEnclosure

E = RealEnclosure.exact
# 60 digits of the largest root of x^4 - 2x^2 - 4x + 1, from an independent mpmath findroot
SIGMA_60 = Fraction("1.94696532812840456026081823863027122773525161405989520914675")


def test_sigma_64_bits_in_published_bracket():
    s = solve_sigma(64)
    assert Fraction("1.94696") <= s.lo and s.hi <= Fraction("1.94697")
    assert s.width <= Fraction(1, 1 << 60)


def test_sigma_sign_change():
    s = solve_sigma(128)
    assert poly_eval(QUARTIC, s.lo) < 0 < poly_eval(QUARTIC, s.hi)


def test_sigma_refines():
    a, b = solve_sigma(64), solve_sigma(256)
    assert a.lo <= b.lo and b.hi <= a.hi


def test_sigma_matches_reference_digits():
    s = solve_sigma(256)
    assert abs(s.mid - SIGMA_60) < Fraction(1, 10**58)


def test_sigma_is_the_largest_root():
    s = solve_sigma(128)
    assert no_larger_root_certificate(s)
    # two real roots in total: one near 0.22 and sigma
    assert sturm_root_count(QUARTIC, Fraction(-16), Fraction(16)) == 2


def test_tau_and_identities():
    c = derive_constants(128)
    assert Fraction("1.23029") <= c.tau.lo and c.tau.hi <= Fraction("1.23030")
    assert c.growth.certainly_gt(c.tau)
    ident = c.tau + 1 / c.growth
    assert ident.overlaps(c.sigma)
    assert (ident - c.sigma).width <= Fraction(1, 1 << (128 - 8))
    assert c.t_gap.certainly_positive()
    assert all(c.certificates().values())


def test_omega_and_phi():
    c = derive_constants(128)
    assert (c.omega - c.tau).contains(1)
    assert (c.phi * c.phi - c.phi).contains(1)
    assert abs(float(c.phi.mid) - 1.6180339887498949) < 1e-15


def test_bits_preconditions():
    with pytest.raises(ValueError):
        solve_sigma(16)
    with pytest.raises(ValueError):
        derive_constants(32)


def test_g_values():
    c = derive_constants(128)
    assert g_of_gamma(E(2, 128)).contains(2)
    g3 = g_of_gamma(E(3, 128))
    assert abs(float(g3.mid) - 1.829179606750063) < 1e-12
    assert c.phi.hi < g3.lo < 2
    assert abs(float(g_of_gamma(E(10**6, 128)).mid) - float(c.phi.mid)) < 1e-5
    with pytest.raises(DomainError):
        g_of_gamma(E(Fraction(19, 10)))


@given(st.fractions(min_value=2, max_value=1000, max_denominator=100), st.fractions(min_value=Fraction(1, 100), max_value=10, max_denominator=100))
@settings(max_examples=60, deadline=None)
def test_g_strictly_decreasing(gamma, delta):
    assert g_of_gamma(E(gamma, 96)).certainly_gt(g_of_gamma(E(gamma + delta, 96)))


def test_c_of_gamma():
    phi = derive_constants(128).phi
    assert c_of_gamma_big(E(1, 128), E(2, 128)).contains(1 << 18)
    c = c_of_gamma_big(E(Fraction(1, 2), 128), E(2, 128))
    # the exponent collapses to 1/(2 phi) at gamma = 2
    ref = 2 ** (18 + 1 / (2 * float(phi.mid)))
    assert abs(float(c.mid) / ref - 1) < 1e-12
    assert c_of_gamma_big(E(Fraction(1, 4), 128), E(2, 128)).certainly_gt(c)
    with pytest.raises(DomainError):
        c_of_gamma_big(E(2), E(2))
    with pytest.raises(DomainError):
        c_of_gamma_big(E(Fraction(1, 2)), E(1))
