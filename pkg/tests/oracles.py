"""Independent reference implementations used only by the tests.

Nothing here imports the package under test.
"""

from __future__ import annotations

import math
from decimal import ROUND_FLOOR, Decimal, localcontext
from itertools import combinations


def is_prime_td(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    d = 3
    while d * d <= n:
        if n % d == 0:
            return False
        d += 2
    return True


def primes_td(lo: int, hi: int) -> list[int]:
    return [n for n in range(lo, hi) if is_prime_td(n)]


def eratosthenes(n: int) -> list[int]:
    """Plain list-based sieve, primes <= n."""
    if n < 2:
        return []
    flags = bytearray([1]) * (n + 1)
    flags[0] = flags[1] = 0
    for i in range(2, math.isqrt(n) + 1):
        if flags[i]:
            flags[i * i :: i] = bytearray(len(range(i * i, n + 1, i)))
    return [i for i in range(n + 1) if flags[i]]


def floor_power_decimal(n: int, c: float, digits: int = 60) -> int:
    with localcontext() as ctx:
        ctx.prec = digits
        return int((Decimal(n) ** Decimal(c)).to_integral_value(rounding=ROUND_FLOOR))


def ps_terms_decimal(c: float, upto: int) -> list[int]:
    out, n = [], 1
    while True:
        v = floor_power_decimal(n, c)
        if v > upto:
            return out
        out.append(v)
        n += 1


def singular_series_direct(H, primes) -> float:
    """Truncated Euler product with residues counted by Python sets."""
    k = len(H)
    logs = 0.0
    for p in primes:
        r = len({h % p for h in H})
        if r == p:
            return 0.0
        logs += math.log(1 - r / p) - k * math.log(1 - 1 / p)
    return math.exp(logs)


def pair_series_from_product(h: int, twin_constant: float) -> float:
    if h % 2:
        return 0.0
    v = 2 * twin_constant
    m = h
    p = 3
    while m % 2 == 0:
        m //= 2
    while m > 1:
        if m % p == 0:
            v *= (p - 1) / (p - 2)
            while m % p == 0:
                m //= p
        p += 2
    return v


def subsets(H):
    for r in range(len(H) + 1):
        yield from combinations(H, r)


def d_hL_bruteforce(h: int, L: int, u: float, s0_pair) -> float:
    """Loop over every ``A subset {0,h}`` and ``T subset [1,h-1]`` with ``|A|+|T| = L``.

    ``s0_pair(d)`` gives the modified series of a two-point set with difference
    ``d``; singletons and the empty set are handled from the definition.
    """
    lu = math.log(u)
    nu = 1 - 1 / lu
    nl = nu * lu
    total = 0.0

    def s0(S):
        if len(S) == 0:
            return 1.0
        if len(S) == 1:
            return 1.0 - 1.0  # S({t}) - S(empty)
        a, b = S
        return s0_pair(abs(b - a))

    inner = list(range(1, h))
    for a_size in range(0, 3):
        t_size = L - a_size
        if t_size < 0:
            continue
        for A in combinations((0, h), a_size):
            for T in combinations(inner, t_size):
                total += (-1) ** t_size * s0(tuple(A) + tuple(T)) * nl**-t_size
    return total * nu**h


def simpson_fixed(f, a: float, b: float, n: int) -> float:
    if n % 2:
        n += 1
    step = (b - a) / n
    acc = f(a) + f(b)
    for i in range(1, n):
        acc += (4 if i % 2 else 2) * f(a + i * step)
    return acc * step / 3


def li_series(x: float) -> float:
    """``li(x) = C0 + ln ln x + sum (ln x)^n / (n n!)``."""
    c0 = 0.57721566490153286061
    lx = math.log(x)
    total, term, n = 0.0, 1.0, 1
    while True:
        term *= lx / n
        add = term / n
        total += add
        if add < 1e-17 * total:
            break
        n += 1
    return c0 + math.log(lx) + total
