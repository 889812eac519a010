"""Real-argument zeta function and the constants C0 and C2.

``zeta(s)`` uses Euler-Maclaurin summation; the returned bound covers the
remainder (twice the first omitted correction term) plus float rounding.
"""

from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache

import mpmath

_EPS = 2.0**-52

# Euler-Maclaurin parameters for zeta
_ZETA_N = 16
_ZETA_M = 12


@lru_cache(maxsize=None)
def bernoulli(n: int) -> Fraction:
    """Bernoulli number B_n (convention B_1 = -1/2)."""
    if n < 0:
        raise ValueError("n must be non-negative")
    if n == 0:
        return Fraction(1)
    if n == 1:
        return Fraction(-1, 2)
    if n % 2:
        return Fraction(0)
    total = Fraction(0)
    for k in range(n):
        total += math.comb(n + 1, k) * bernoulli(k)
    return -total / (n + 1)


def zeta(s: float) -> tuple[float, float]:
    """``(zeta(s), bound)`` for real ``s > 1``."""
    s = float(s)
    if not s > 1.0:
        raise ValueError(f"zeta needs real s > 1, got {s!r}")
    n = _ZETA_N
    terms = [k**-s for k in range(1, n)]
    terms.append(n ** (1 - s) / (s - 1))
    terms.append(0.5 * n**-s)
    rising = s  # s (s+1) ... (s+2j-2)
    omitted = 0.0
    for j in range(1, _ZETA_M + 2):
        coef = float(bernoulli(2 * j) / math.factorial(2 * j))
        t = coef * rising * n ** (-s - 2 * j + 1)
        if j <= _ZETA_M:
            terms.append(t)
        else:
            omitted = abs(t)
        rising *= (s + 2 * j - 1) * (s + 2 * j)
    value = math.fsum(terms)
    bound = 2.0 * omitted + 8 * _EPS * abs(value) + 1e-300
    return value, bound


def euler_mascheroni() -> tuple[float, float]:
    """C0 from the Euler-Maclaurin expansion of the harmonic numbers."""
    n = 10
    terms = [1.0 / k for k in range(1, n + 1)]
    terms += [-math.log(n), -0.5 / n]
    for k in range(1, 12):
        terms.append(float(bernoulli(2 * k)) / (2 * k * n ** (2 * k)))
    omitted = abs(float(bernoulli(24))) / (24 * n**24)
    value = math.fsum(terms)
    return value, 2 * omitted + 8 * _EPS * value


def twin_prime_constant(q: int = 100, digits: int = 60) -> tuple[float, float]:
    """C2 = prod_{p>2} (1 - 1/(p-1)^2).

    Primes up to ``q`` are multiplied directly; the remaining tail is written
    through the prime zeta function restricted to p > q,
    ``log C2_tail = -sum_{n>=2} (2^n - 2)/n * P_q(n)``, and ``P_q`` is obtained
    by Moebius inversion of ``log zeta`` with the small primes removed.
    """
    small = [p for p in range(3, q + 1) if all(p % d for d in range(2, math.isqrt(p) + 1))]
    with mpmath.workdps(digits):

        def log_zeta_tail(s):
            v = mpmath.log(mpmath.zeta(s))
            for p in [2] + small:
                v += mpmath.log(1 - mpmath.mpf(p) ** -s)
            return v

        n_max = 24
        cache = {}

        def prime_zeta_tail(n):
            total = mpmath.mpf(0)
            m = 1
            while m * n <= 2 * n_max:
                mu = _moebius(m)
                if mu:
                    s = m * n
                    if s not in cache:
                        cache[s] = log_zeta_tail(s)
                    total += mpmath.mpf(mu) / m * cache[s]
                m += 1
            return total

        log_c2 = mpmath.fsum(mpmath.log(1 - mpmath.mpf(1) / (p - 1) ** 2) for p in small)
        for n in range(2, n_max + 1):
            log_c2 -= mpmath.mpf(2**n - 2) / n * prime_zeta_tail(n)
        value = float(mpmath.exp(log_c2))
    # first omitted term is below (2/q)^25
    bound = (2.0 / q) ** (n_max + 1) + 2 * _EPS * value
    return value, bound


def _moebius(m: int) -> int:
    result = 1
    d = 2
    while d * d <= m:
        if m % d == 0:
            m //= d
            if m % d == 0:
                return 0
            result = -result
        d += 1
    if m > 1:
        result = -result
    return result
