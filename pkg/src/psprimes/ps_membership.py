"""Exact membership in Piatetski-Shapiro sequences ``floor(n**c)``.

The exponent ``c`` is taken to be the exact rational value of its binary64
representation; ``gamma = 1/c`` is kept as an exact fraction.  Floors of real
powers are decided by a cheap float screen, then by high-precision evaluation
at 106 and 256 bits, and finally by an exact test for integer powers.  A value
that is still ambiguous raises :class:`UndecidableMembership` rather than
being rounded silently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property

import mpmath
import numpy as np

PRECISION_STEPS = (106, 256)

# float screen margin, relative to the value (2**8 ulps of slack)
_SCREEN_REL = 2.0**-44


class UndecidableMembership(ArithmeticError):
    """The floor of a power could not be decided within the precision ceiling."""

    def __init__(self, m: int, c: float, what: str = "floor"):
        self.m = m
        self.c = c
        super().__init__(f"cannot decide {what} for m={m}, c={c!r} at {PRECISION_STEPS[-1]} bits")


@dataclass(frozen=True)
class PsExponent:
    """A Piatetski-Shapiro exponent ``1 < c < 2``."""

    c: float

    def __post_init__(self):
        c = float(self.c)
        if not math.isfinite(c) or not 1.0 < c < 2.0:
            raise ValueError(f"exponent c must lie in (1, 2), got {self.c!r}")
        object.__setattr__(self, "c", c)

    @cached_property
    def exact(self) -> Fraction:
        return Fraction(self.c)

    @cached_property
    def gamma_exact(self) -> Fraction:
        return 1 / self.exact

    @property
    def gamma(self) -> float:
        return float(self.gamma_exact)


def _as_exponent(e) -> PsExponent:
    return e if isinstance(e, PsExponent) else PsExponent(e)


def iroot(n: int, k: int) -> int:
    """``floor(n ** (1/k))`` for integers ``n >= 0, k >= 1``."""
    if n < 0 or k < 1:
        raise ValueError("iroot needs n >= 0 and k >= 1")
    if n < 2 or k == 1:
        return n
    if k >= n.bit_length():
        return 1
    x = 1 << -(-n.bit_length() // k)  # upper bound
    while True:
        y = ((k - 1) * x + n // x ** (k - 1)) // k
        if y >= x:
            return x
        x = y


def _exact_integer_power(n: int, e: Fraction) -> int | None:
    """``n**e`` if it is an integer, else None (``n >= 1``, ``e > 0``)."""
    p, q = e.numerator, e.denominator
    if n == 1:
        return 1
    if q > n.bit_length():
        return None
    r = iroot(n, q)
    if r**q != n:
        return None
    return r**p


def floor_power(n: int, e: Fraction) -> tuple[int, bool]:
    """Certified ``(floor(n**e), n**e is an integer)`` for ``n >= 1``."""
    n = int(n)
    if n < 1:
        raise ValueError("floor_power needs n >= 1")
    ef = float(e)
    try:
        y = math.pow(n, ef)
    except OverflowError:
        y = math.inf
    if math.isfinite(y) and y < 2.0**52:
        # float(e) is itself rounded: widen by log(n) ulps of the exponent
        tol = y * (_SCREEN_REL + 2.0**-52 * math.log(n)) + 2.0**-60
        f = math.floor(y)
        if f + tol < y < f + 1 - tol:
            return f, False

    exact = _exact_integer_power(n, e)
    if exact is not None:
        return exact, True

    for prec in PRECISION_STEPS:
        with mpmath.workprec(prec + 16):
            ee = mpmath.mpf(e.numerator) / e.denominator
            val = mpmath.power(n, ee)
            tol = abs(val) * mpmath.ldexp(1, -prec) * (1 + mpmath.log(n))
            lo = int(mpmath.floor(val - tol))
            hi = int(mpmath.floor(val + tol))
        if lo == hi:
            return lo, False
    raise UndecidableMembership(n, float(e))


def indicator(m: int, e) -> int:
    """``floor(-m**gamma) - floor(-(m+1)**gamma)``: 1 iff ``m`` is a term."""
    e = _as_exponent(e)
    m = int(m)
    if m < 1:
        raise ValueError("indicator needs m >= 1")
    return _ceil_power(m + 1, e) - _ceil_power(m, e)


def _ceil_power(m: int, e: PsExponent) -> int:
    try:
        f, is_int = floor_power(m, e.gamma_exact)
    except UndecidableMembership as exc:
        raise UndecidableMembership(m, e.c, "membership") from exc
    return f if is_int else f + 1


def is_member(m: int, e) -> bool:
    return indicator(m, e) == 1


def nth_element(n: int, e) -> int:
    """``floor(n**c)``, certified."""
    e = _as_exponent(e)
    n = int(n)
    if n < 1:
        raise ValueError("nth_element needs n >= 1")
    try:
        return floor_power(n, e.exact)[0]
    except UndecidableMembership as exc:
        raise UndecidableMembership(n, e.c, "nth element") from exc


def count_members_up_to(x: int, e) -> int:
    """``max{n : floor(n**c) <= x}`` by a monotone search from a float guess."""
    e = _as_exponent(e)
    x = int(x)
    if x < 1:
        raise ValueError("count_members_up_to needs x >= 1")
    n = max(1, int(x**e.gamma))
    while nth_element(n, e) > x:
        n -= 1
    while nth_element(n + 1, e) <= x:
        n += 1
    return n


def elements_in_range(lo: int, hi: int, e) -> np.ndarray:
    """All terms ``floor(n**c)`` lying in ``[lo, hi)``, ascending, as int64.

    Vectorised float screen over the candidate indices; entries the screen
    cannot certify go through :func:`nth_element`.
    """
    e = _as_exponent(e)
    lo, hi = max(int(lo), 1), int(hi)
    if hi <= lo:
        return np.zeros(0, dtype=np.int64)
    g = e.gamma
    n_lo = max(1, int(math.floor(lo**g)) - 2)
    n_hi = int(math.ceil(hi**g)) + 2
    n = np.arange(n_lo, n_hi + 1, dtype=np.int64)
    y = np.power(n.astype(np.float64), e.c)
    f = np.floor(y)
    frac = y - f
    tol = y * _SCREEN_REL + 2.0**-60
    vals = f.astype(np.int64)
    for i in np.flatnonzero((frac <= tol) | (frac >= 1 - tol)):
        vals[i] = nth_element(int(n[i]), e)
    return vals[(vals >= lo) & (vals < hi)]


def member_flags(values: np.ndarray, lo: int, hi: int, e) -> np.ndarray:
    """Membership flags for integers ``values`` that all lie in ``[lo, hi)``."""
    terms = elements_in_range(lo, hi, e)
    if values.size == 0:
        return np.zeros(0, dtype=bool)
    hit = np.zeros(hi - lo, dtype=bool)
    hit[terms - lo] = True
    return hit[values - lo]
