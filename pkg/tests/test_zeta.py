import math
from fractions import Fraction

import mpmath
import pytest
from hypothesis import given
from hypothesis import strategies as st

from psprimes import zeta


def test_bernoulli_numbers():
    assert zeta.bernoulli(0) == 1
    assert zeta.bernoulli(1) == Fraction(-1, 2)
    assert zeta.bernoulli(2) == Fraction(1, 6)
    assert zeta.bernoulli(4) == Fraction(-1, 30)
    assert zeta.bernoulli(12) == Fraction(-691, 2730)
    assert zeta.bernoulli(7) == 0


def test_zeta_closed_forms():
    v, b = zeta.zeta(2)
    assert abs(v - math.pi**2 / 6) <= b
    v, b = zeta.zeta(4)
    assert abs(v - math.pi**4 / 90) <= b


@given(st.floats(1.01, 60))
def test_zeta_bound_is_honest(s):
    v, b = zeta.zeta(s)
    with mpmath.workdps(40):
        ref = float(mpmath.zeta(s))
    assert abs(v - ref) <= b + 2e-16 * ref


def test_zeta_domain():
    with pytest.raises(ValueError):
        zeta.zeta(1.0)


def test_constants():
    c0, b0 = zeta.euler_mascheroni()
    assert abs(c0 - 0.57721566490153286061) <= max(b0, 1e-15)
    c2, b2 = zeta.twin_prime_constant()
    assert abs(c2 - 0.66016181584686957393) <= max(b2, 1e-15)
    assert b2 < 1e-12
