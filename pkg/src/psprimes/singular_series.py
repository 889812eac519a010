"""Hardy-Littlewood singular series with certified truncation bounds.

For a finite offset set ``H`` with ``k = |H|`` elements,

    S(H) = prod_p (1 - |H mod p| / p) (1 - 1/p)^(-k).

Primes that divide no difference of ``H`` all contribute the same factor
``f_k(p) = (1 - k/p)(1 - 1/p)^(-k)``, so the product over ``(D, P]`` (``D`` the
largest difference) is read from a cached sum of ``log f_k``.  The tail over
``p > P`` is bounded with explicit prime-counting estimates.

Also here: the modified series ``S0`` (inclusion-exclusion), the variant
``S_q`` that skips primes dividing ``q``, the pair fast path
``S({0,h}) = 2 C2 prod_{p | h, p > 2} (p-1)/(p-2)``, averages of ``S0`` over
pairs, and the Dirichlet series ``F(s) = sum_h S({0,h}) h^(-s)``.
"""

from __future__ import annotations

import io
import itertools
import math
import threading
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, TextIO

import numpy as np

from . import zeta as _zeta
from .prime_engine import small_primes

DEFAULT_CUTOFF = 10**6
MAX_OFFSETS = 32
MAX_MODIFIED_OFFSETS = 20

_EPS = 2.0**-52
# explicit upper bound pi(t) <= t/ln t * (1 + DUSART/ln t), t > 1
_DUSART = 1.2762


class CutoffTooSmall(ValueError):
    """The prime cutoff does not exceed the largest difference in the set."""


class SubsetExplosion(ValueError):
    """Inclusion-exclusion over this many offsets is refused."""


@dataclass(frozen=True)
class OffsetSet:
    """A sorted set of distinct non-negative offsets."""

    offsets: tuple[int, ...] = ()

    def __post_init__(self):
        offs = tuple(int(h) for h in self.offsets)
        if any(h < 0 for h in offs):
            raise ValueError("offsets must be non-negative")
        if any(a >= b for a, b in zip(offs, offs[1:])):
            raise ValueError("offsets must be sorted and distinct")
        if len(offs) > MAX_OFFSETS:
            raise ValueError(f"at most {MAX_OFFSETS} offsets supported")
        object.__setattr__(self, "offsets", offs)

    @classmethod
    def of(cls, values: Iterable[int]) -> "OffsetSet":
        return cls(tuple(sorted(set(int(v) for v in values))))

    def __len__(self) -> int:
        return len(self.offsets)

    def __iter__(self):
        return iter(self.offsets)

    @property
    def span(self) -> int:
        return self.offsets[-1] - self.offsets[0] if self.offsets else 0

    def shifted(self, t: int) -> "OffsetSet":
        return OffsetSet(tuple(h + t for h in self.offsets))

    def normalized(self) -> "OffsetSet":
        return self.shifted(-self.offsets[0]) if self.offsets else self


def _as_offsets(H) -> OffsetSet:
    return H if isinstance(H, OffsetSet) else OffsetSet.of(H)


@dataclass(frozen=True)
class SeriesValue:
    value: float
    abs_error: float

    def __post_init__(self):
        if not math.isfinite(self.abs_error) or self.abs_error < 0:
            raise ValueError("abs_error must be finite and non-negative")


@dataclass(frozen=True)
class Constants:
    euler_mascheroni: float
    A: float
    twin_prime_constant: float
    twin_prime_error: float


@lru_cache(maxsize=1)
def constants() -> Constants:
    c0, _ = _zeta.euler_mascheroni()
    c2, c2_err = _zeta.twin_prime_constant()
    return Constants(
        euler_mascheroni=c0,
        A=2 - c0 - math.log(2 * math.pi),
        twin_prime_constant=c2,
        twin_prime_error=c2_err,
    )


class _PrimeTable:
    """Grow-only shared prime table with per-size cached log-factor sums."""

    def __init__(self):
        self._lock = threading.Lock()
        self._primes = small_primes(1 << 16)
        self._logs: dict[int, np.ndarray] = {}
        self._totals: dict[tuple[int, int], float] = {}

    def primes(self, limit: int) -> np.ndarray:
        if self._primes[-1] < limit:
            with self._lock:
                if self._primes[-1] < limit:
                    self._primes = small_primes(max(int(limit), 2 * int(self._primes[-1])))
                    self._logs.clear()
        return self._primes

    def pi(self, t: int) -> int:
        return int(np.searchsorted(self.primes(t), t, side="right"))

    def log_factors(self, k: int) -> np.ndarray:
        """``log f_k(p)`` for every prime in the current table (nan where p <= k)."""
        with self._lock:
            arr = self._logs.get(k)
            if arr is None or arr.size != self._primes.size:
                p = self._primes.astype(np.float64)
                with np.errstate(invalid="ignore", divide="ignore"):
                    arr = np.log1p(-k / p) - k * np.log1p(-1.0 / p)
                arr[self._primes <= k] = np.nan
                self._logs[k] = arr
            return arr

    def log_factor_sum(self, k: int, lo: int, hi: int) -> float:
        """``sum_{lo < p <= hi} log f_k(p)``; requires ``lo >= k``."""
        if hi <= lo:
            return 0.0
        primes = self.primes(hi)
        i = int(np.searchsorted(primes, lo, side="right"))
        j = int(np.searchsorted(primes, hi, side="right"))
        logs = self.log_factors(k)
        if j - i <= 4096:
            return math.fsum(logs[i:j])
        # long ranges: cached total from the first prime above k, minus the head
        base = int(np.searchsorted(primes, k, side="right"))
        key = (k, hi)
        if key not in self._totals:
            self._totals[key] = math.fsum(logs[base:j])
        return self._totals[key] - math.fsum(logs[base:i])


_TABLE = _PrimeTable()


def prime_table(limit: int) -> np.ndarray:
    """Shared cached array of primes, covering at least ``limit``."""
    return _TABLE.primes(limit)


def prime_reciprocal_square_tail(q: int) -> float:
    """Certified upper bound for ``sum_{p > q} p^-2`` (``q >= 3``)."""
    q = int(q)
    lq = math.log(q)
    integral = math.log1p(1.0 / lq) / q + _DUSART / (q * lq * lq)
    return 2.0 * integral - _TABLE.pi(q) / (q * q)


def _local_counts(offsets: np.ndarray, primes: np.ndarray) -> np.ndarray:
    """``|H mod p|`` for each prime."""
    if primes.size == 0:
        return np.zeros(0, dtype=np.int64)
    res = np.sort(offsets[None, :] % primes[:, None], axis=1)
    return 1 + np.count_nonzero(np.diff(res, axis=1), axis=1)


def _euler_product(H: OffsetSet, P: int, excluded: frozenset[int] = frozenset()) -> SeriesValue:
    k = len(H)
    if k <= 1:
        return SeriesValue(1.0, 0.0)
    P = int(P)
    if P < 3:
        raise ValueError("prime cutoff must be at least 3")
    D = H.span
    if P < D:
        raise CutoffTooSmall(f"cutoff {P} below largest difference {D}")
    offs = np.array(H.offsets, dtype=np.int64)
    explicit_hi = max(D, k)
    primes = prime_table(max(P, 2 * k, explicit_hi))

    # a prime p <= k covering every residue forces S(H) = 0
    small = primes[: np.searchsorted(primes, k, side="right")]
    small = small[~np.isin(small, list(excluded))] if excluded else small
    if np.any(_local_counts(offs, small) == small):
        return SeriesValue(0.0, 0.0)

    head_hi = min(P, explicit_hi)
    head = primes[: np.searchsorted(primes, head_hi, side="right")]
    if excluded:
        head = head[~np.isin(head, list(excluded))]
    counts = _local_counts(offs, head)
    pf = head.astype(np.float64)
    logs = [math.fsum(np.log1p(-counts / pf) - k * np.log1p(-1.0 / pf))]

    # primes in (head_hi, P] divide no difference and all have |H mod p| = k
    logs.append(_TABLE.log_factor_sum(k, head_hi, P))
    for p in excluded:
        if head_hi < p <= P:
            logs.append(-(math.log1p(-k / p) - k * math.log1p(-1.0 / p)))
    log_value = math.fsum(logs)
    value = math.exp(log_value)

    # tail: explicit primes up to 2k, then |log f_k(p)| <= k(k-1)/(2p^2) + 2k^3/(3p^3)
    q = max(P, 2 * k)
    tail = 0.0
    for p in primes[np.searchsorted(primes, P, side="right") : np.searchsorted(primes, q, side="right")]:
        p = int(p)
        tail += abs(math.log1p(-k / p) - k * math.log1p(-1.0 / p))
    tail += k * (k - 1) / 2 * prime_reciprocal_square_tail(q) + (2 * k**3 / 3) / (2.0 * q * q)
    slack = value * (16 * _EPS + 4 * _EPS * sum(abs(v) for v in logs))
    return SeriesValue(value, value * math.expm1(tail) + slack)


def singular_series(H, prime_cutoff: int = DEFAULT_CUTOFF) -> SeriesValue:
    """Truncated Euler product for ``S(H)`` with a certified tail bound."""
    return _euler_product(_as_offsets(H).normalized(), prime_cutoff)


def singular_series_away_from_q(H, q: int, prime_cutoff: int = DEFAULT_CUTOFF) -> SeriesValue:
    """``S_q(H)``: the Euler product restricted to primes not dividing ``q``."""
    q = int(q)
    if q < 1:
        raise ValueError("q must be positive")
    return _euler_product(_as_offsets(H).normalized(), prime_cutoff, frozenset(_prime_divisors(q)))


def _prime_divisors(n: int) -> list[int]:
    out = []
    d = 2
    while d * d <= n:
        if n % d == 0:
            out.append(d)
            while n % d == 0:
                n //= d
        d += 1 if d == 2 else 2
    if n > 1:
        out.append(n)
    return out


def singular_series_pair(h: int) -> SeriesValue:
    """``S({0, h})`` from the twin prime constant and the odd prime divisors of h."""
    h = int(h)
    if h < 1:
        raise ValueError("h must be positive")
    if h % 2:
        return SeriesValue(0.0, 0.0)
    cst = constants()
    value = 2 * cst.twin_prime_constant
    n_fac = 0
    for p in _prime_divisors(h):
        if p > 2:
            value *= (p - 1) / (p - 2)
            n_fac += 1
    err = value * (cst.twin_prime_error / cst.twin_prime_constant + (2 * n_fac + 2) * _EPS)
    return SeriesValue(value, err)


@lru_cache(maxsize=8)
def _pair_table(n: int) -> np.ndarray:
    out = np.ones(n + 1, dtype=np.float64)
    for p in prime_table(max(n, 3)):
        p = int(p)
        if p > n:
            break
        if p > 2:
            out[p::p] *= (p - 1) / (p - 2)
    out *= 2 * constants().twin_prime_constant
    out[1::2] = 0.0
    out[0] = 1.0  # {0, 0} is the singleton {0}
    out.flags.writeable = False
    return out


def pair_table(n: int) -> np.ndarray:
    """Read-only array ``t`` with ``t[h] = S({0, h})`` for ``0 <= h <= n``."""
    if n < 1:
        raise ValueError("n must be positive")
    return _pair_table(int(n))


def modified_pair_table(n: int) -> np.ndarray:
    """``t[h] = S0({0, h}) = S({0, h}) - 1`` for ``1 <= h <= n`` (``t[0]`` unused)."""
    t = pair_table(n) - 1.0
    t[0] = 0.0
    return t


def modified_singular_series(H, prime_cutoff: int = DEFAULT_CUTOFF) -> SeriesValue:
    """``S0(H) = sum_{T subset H} (-1)^|H \\ T| S(T)``."""
    H = _as_offsets(H)
    k = len(H)
    if k > MAX_MODIFIED_OFFSETS:
        raise SubsetExplosion(f"{k} offsets exceed the limit of {MAX_MODIFIED_OFFSETS}")
    if k == 0:
        return SeriesValue(1.0, 0.0)
    values, errors = [], []
    for r in range(k + 1):
        sign = -1.0 if (k - r) % 2 else 1.0
        for T in itertools.combinations(H.offsets, r):
            sv = _cached_series(OffsetSet(T).normalized(), prime_cutoff)
            values.append(sign * sv.value)
            errors.append(sv.abs_error)
    value = math.fsum(values)
    slack = 4 * _EPS * math.fsum(abs(v) for v in values)
    return SeriesValue(value, math.fsum(errors) + slack)


@lru_cache(maxsize=4096)
def _cached_series(H: OffsetSet, P: int) -> SeriesValue:
    return _euler_product(H, P)


def avg_s0_prefix(h: int, table: np.ndarray | None = None) -> float:
    """``sum_{1 <= t <= h-1} S0({0, t})``."""
    h = int(h)
    if h < 2:
        raise ValueError("h must be at least 2")
    s0 = table if table is not None else modified_pair_table(h)
    return math.fsum(s0[1:h])


def avg_s0_pairs(h: int, table: np.ndarray | None = None) -> float:
    """``sum_{1 <= t1 < t2 <= h-1} S0({t1, t2}) = sum_d (h-1-d) S0({0, d})``."""
    h = int(h)
    if h < 3:
        raise ValueError("h must be at least 3")
    s0 = table if table is not None else modified_pair_table(h)
    d = np.arange(1, h - 1)
    return math.fsum((h - 1 - d) * s0[1 : h - 1])


def dirichlet_F(s: float, prime_cutoff: int = 10**7) -> SeriesValue:
    """``F(s) = zeta(s) zeta(s+1) / zeta(2s+2) * prod_p g_p(s)`` for real ``s > 1``."""
    s = float(s)
    if not s > 1.0:
        raise ValueError(f"F(s) needs real s > 1, got {s!r}")
    P = int(prime_cutoff)
    if P < 1000:
        raise ValueError("prime cutoff must be at least 1000")
    primes = prime_table(P)
    odd = primes[1 : int(np.searchsorted(primes, P, side="right"))].astype(np.float64)
    with np.errstate(over="ignore"):
        pm1sq = (odd - 1.0) ** 2
        g_minus_1 = -1.0 / pm1sq + 2.0 * odd / (pm1sq * (odd ** (s + 1) + 1.0))
    logs = np.log1p(g_minus_1)
    log_prod = math.fsum(logs) + math.log(4.0 / (2.0 ** (s + 1) + 1.0))

    z1, e1 = _zeta.zeta(s)
    z2, e2 = _zeta.zeta(s + 1)
    z3, e3 = _zeta.zeta(2 * s + 2)
    value = z1 * z2 / z3 * math.exp(log_prod)

    # |g_p - 1| <= 1/(p-1)^2 <= (P/(P-1))^2 / p^2 for p > P, and |log(1-y)| <= y/(1-y)
    y_sum = (P / (P - 1)) ** 2 * prime_reciprocal_square_tail(P)
    tail = y_sum / (1 - 1.0 / (P - 1) ** 2)
    rel = math.expm1(tail) + e1 / z1 + e2 / z2 + e3 / z3 + 64 * _EPS
    return SeriesValue(value, abs(value) * rel)


def dirichlet_direct_sum(s: float, h_max: int = 10**6) -> SeriesValue:
    """``sum_{h <= h_max} S({0,h}) h^-s`` plus a certified bound on the omitted tail.

    Writing ``S({0,h}) = 2 C2 sum_{d | h, d odd squarefree} g(d)`` with
    ``g(d) = prod_{p | d} 1/(p-2)``, the tail over ``h > h_max`` is bounded
    divisor by divisor with integral comparison.
    """
    s = float(s)
    if not s > 1.0:
        raise ValueError("s must exceed 1")
    H = int(h_max)
    tab = pair_table(H)
    h = np.arange(1, H + 1, dtype=np.float64)
    terms = tab[1:] * h**-s
    value = math.fsum(terms)

    half = H // 2
    g = np.ones(half + 1, dtype=np.float64)
    g[0::2] = 0.0
    for p in prime_table(max(half, 3)):
        p = int(p)
        if p > half:
            break
        if p == 2:
            continue
        g[p::p] /= p - 2
        g[p * p :: p * p] = 0.0
    d = np.arange(half + 1, dtype=np.float64)
    d[0] = 1.0
    g[0] = 0.0
    two_c2 = 2 * constants().twin_prime_constant
    near = math.fsum(g * (H**-s + H ** (1 - s) / (2 * d * (s - 1))))
    z, ez = _zeta.zeta(s)
    far = (z + ez) * 2.0**-s * ((H / 2) ** -s + (H / 2) ** (1 - s) / (s - 1))
    tail = two_c2 * (near + far) * (1 + 1e-12)
    slack = 8 * _EPS * math.fsum(terms) + H * _EPS * float(np.max(terms))
    return SeriesValue(value, tail + slack)


def write_pair_csv(stream: TextIO, h_max: int, *, even_only: bool = False) -> None:
    """CSV table ``h,s,s0`` of ``S({0,h})`` and ``S0({0,h})``."""
    tab = pair_table(h_max)
    stream.write("h,s,s0\n")
    for h in range(2 if even_only else 1, h_max + 1, 2 if even_only else 1):
        s = float(tab[h])
        stream.write(f"{h},{s!r},{s - 1.0!r}\n")


def pair_csv(h_max: int, *, even_only: bool = False) -> str:
    buf = io.StringIO()
    write_pair_csv(buf, h_max, even_only=even_only)
    return buf.getvalue()
