"""Numerical model objects for gap statistics between consecutive primes.

``nu(u) = 1 - 1/log u`` is the chance that an integer near ``u`` is composite
and ``nu^h`` weights a gap of length ``h``.  This module evaluates

* the weighted exponential sums ``R`` and ``S`` over even gaps, truncated with
  a certified geometric tail bound,
* the density terms ``D_{h,L}(u)`` for ``L <= 2`` and the resulting prediction
  for the number of prime gaps of length ``h`` up to ``x``,
* the main term for consecutive primes in two Piatetski-Shapiro sequences,
  logarithmic integrals and the Gamma function on ``[1, 2]``.
"""

from __future__ import annotations

import cmath
import io
import math
from dataclasses import dataclass
from typing import Iterable, TextIO

import numpy as np

from .ps_membership import PsExponent
from .quadrature import adaptive_simpson
from .singular_series import avg_s0_pairs, avg_s0_prefix, modified_pair_table

_EPS = 2.0**-52
TAIL_TARGET = 1e-12
TAIL_LIMIT = 1e-9

PHASE_FAMILIES = ("one", "conjugate")


class InsufficientTruncation(ValueError):
    """The requested truncation point cannot certify the tail."""


@dataclass(frozen=True)
class NuContext:
    u: float
    nu: float
    H: float

    def H_k(self, k: float) -> complex:
        return self.H / complex(1.0, -2 * math.pi * k * self.H)

    def power(self, h) -> np.ndarray | float:
        """``nu ** h`` computed as ``exp(-h / H)``."""
        return np.exp(-np.asarray(h, dtype=np.float64) / self.H)


def nu(u: float) -> NuContext:
    u = float(u)
    if not u >= 3.0:
        raise ValueError(f"u must be at least 3, got {u!r}")
    lu = math.log(u)
    log_nu = math.log1p(-1.0 / lu)
    return NuContext(u=u, nu=1.0 - 1.0 / lu, H=-1.0 / log_nu)


@dataclass(frozen=True)
class RSumParams:
    theta: float = 0.0
    vartheta: int = 0
    j: float = 0.0
    k: float = 0.0
    phase_family: str = "one"
    gamma1: float = 2 / 3
    gamma2: float = 2 / 3

    def __post_init__(self):
        if not 0.0 <= self.theta <= 1.0:
            raise ValueError("theta must lie in [0, 1]")
        if self.vartheta not in (0, 1):
            raise ValueError("vartheta must be 0 or 1")
        if self.phase_family not in PHASE_FAMILIES:
            raise ValueError(f"phase_family must be one of {PHASE_FAMILIES}")
        for g in (self.gamma1, self.gamma2):
            if not 0.5 < g < 1.0:
                raise ValueError("gamma1, gamma2 must lie in (1/2, 1)")


@dataclass(frozen=True)
class SumResult:
    re: float
    im: float
    abs_error: float
    h_max: int

    @property
    def value(self) -> complex:
        return complex(self.re, self.im)

    def __abs__(self) -> float:
        return math.hypot(self.re, self.im)


def _frac(a: np.ndarray) -> np.ndarray:
    return a - np.floor(a)


def _phase(params: RSumParams, u: float, h: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Real and imaginary parts of ``c(j,k,u,h) e(j u^g1 + k (u+h)^g2)``."""
    if params.phase_family == "conjugate" or (params.j == 0 and params.k == 0):
        return np.ones(h.shape), np.zeros(h.shape)
    base = _frac(np.array(params.j * u**params.gamma1))
    t = _frac(base + _frac(params.k * (u + h.astype(np.float64)) ** params.gamma2))
    ang = 2 * np.pi * t
    return np.cos(ang), np.sin(ang)


def _geometric_tail(ctx: NuContext, n: int, a: float, scale: float) -> float:
    """Bound for ``scale * sum_{h > n, h even} h^a nu^h``."""
    h0 = n + 2 if n % 2 == 0 else n + 1
    rho = (1 + 2 / h0) ** a * math.exp(-2 / ctx.H)
    if rho >= 1:
        return math.inf
    return scale * h0**a * math.exp(-h0 / ctx.H) / (1 - rho)


def default_h_max(u: float) -> int:
    return 2 * math.ceil(math.log(u) ** 3)


def _weighted_sum(kind: str, params: RSumParams, u: float, h_max: int | None) -> SumResult:
    ctx = nu(u)
    floor_h = default_h_max(u)
    if kind == "R":
        a, scale = params.theta + 0.5 * params.vartheta, 1.0
    else:
        # |S0({0,h})| <= 2 C2 2^omega(h) + 1 <= 4 sqrt(h)
        a, scale = 0.5, 4.0
    if h_max is None:
        h_max = floor_h
        while _geometric_tail(ctx, h_max, a, scale) > TAIL_TARGET:
            h_max *= 2
    else:
        h_max = int(h_max)
        if h_max < floor_h:
            raise InsufficientTruncation(f"h_max={h_max} below 2*ceil((log u)^3)={floor_h}")
    tail = _geometric_tail(ctx, h_max, a, scale)
    if tail > TAIL_LIMIT:
        raise InsufficientTruncation(f"tail bound {tail:.3g} at h_max={h_max} exceeds {TAIL_LIMIT}")

    h = np.arange(2, h_max + 1, 2, dtype=np.int64)
    hf = h.astype(np.float64)
    if kind == "R":
        w = hf**params.theta
        if params.vartheta:
            w = w * np.log(hf)
    else:
        w = modified_pair_table(h_max)[h]
    mag = w * ctx.power(hf)
    cr, ci = _phase(params, u, h)
    re_terms, im_terms = mag * cr, mag * ci
    re, im = math.fsum(re_terms), math.fsum(im_terms)
    slack = 8 * _EPS * float(np.sum(np.abs(mag))) * (1 + math.log(h_max))
    return SumResult(re, im, tail + slack, h_max)


def r_sum(params: RSumParams, u: float, h_max: int | None = None) -> SumResult:
    """``sum_{h even} h^theta (log h)^vartheta nu(u)^h c e(j u^g1 + k (u+h)^g2)``."""
    return _weighted_sum("R", params, u, h_max)


def s_sum(params: RSumParams, u: float, h_max: int | None = None) -> SumResult:
    """As :func:`r_sum` with weights ``S0({0,h})`` (``theta``/``vartheta`` unused)."""
    return _weighted_sum("S", params, u, h_max)


def r_closed_form(u: float) -> float:
    """``sum_{h even >= 2} nu^h = nu^2/(1 - nu^2)``."""
    v = nu(u).nu
    return v * v / (1 - v * v)


@dataclass(frozen=True)
class DhLTerm:
    h: int
    L: int
    u: float
    value: float


class _GapWeights:
    """``S0({0,h})``, its prefix sum and the pair sum for one gap length."""

    def __init__(self, h: int):
        tab = modified_pair_table(max(h, 2))
        self.s0_pair = float(tab[h])
        self.prefix = avg_s0_prefix(h, tab) if h >= 2 else 0.0
        self.pairs = avg_s0_pairs(h, tab) if h >= 3 else 0.0

    def density(self, h: int, L: int, ctx: NuContext) -> float:
        nl = ctx.nu * math.log(ctx.u)
        base = float(ctx.power(h))
        if L == 0:
            return base
        if L == 1:
            # every term carries S0 of a singleton, which vanishes
            return 0.0
        return base * (self.s0_pair - 2 * self.prefix / nl + self.pairs / (nl * nl))


def _check_h(h: int) -> int:
    h = int(h)
    if h < 2 or h % 2:
        raise ValueError("h must be an even integer >= 2")
    return h


def d_hL(h: int, L: int, u: float) -> DhLTerm:
    """``sum_{A subset {0,h}, T subset [1,h-1], |A|+|T|=L} (-1)^|T| S0(A u T) (nu log u)^-|T| nu^h``."""
    h = _check_h(h)
    if L not in (0, 1, 2):
        raise ValueError("only L in {0, 1, 2} is supported")
    ctx = nu(u)
    return DhLTerm(h, L, ctx.u, _GapWeights(h).density(h, L, ctx))


def gap_count_prediction(h: int, x: float, rel_tol: float = 1e-6) -> float:
    """``int_3^x nu^-1 (log u)^-2 sum_{L<=2} D_{h,L}(u) du`` by adaptive quadrature."""
    h = _check_h(h)
    x = float(x)
    if x < 10:
        raise ValueError("x must be at least 10")
    weights = _GapWeights(h)

    def integrand(v: float) -> float:
        ctx = nu(math.exp(v))
        dens = sum(weights.density(h, L, ctx) for L in (0, 1, 2))
        return math.exp(v) * dens / (ctx.nu * v * v)

    return adaptive_simpson(integrand, math.log(3.0), math.log(x), rel_tol=rel_tol, abs_floor=1e-15)


def conjecture_main_term(x: float, c1, c2) -> float:
    """``x^(g1+g2-1) / (c1 c2 log x)``."""
    e1 = c1 if isinstance(c1, PsExponent) else PsExponent(c1)
    e2 = c2 if isinstance(c2, PsExponent) else PsExponent(c2)
    x = float(x)
    if x < 3:
        raise ValueError("x must be at least 3")
    return x ** (e1.gamma + e2.gamma - 1) / (e1.c * e2.c * math.log(x))


def log_integral_power(x: float, k: int, rel_tol: float = 1e-9) -> float:
    """``int_2^x du / (log u)^k``, integrated in ``v = log u``."""
    x = float(x)
    k = int(k)
    if not x > 2:
        raise ValueError("x must exceed 2")
    if k < 1:
        raise ValueError("k must be positive")
    return adaptive_simpson(
        lambda v: math.exp(v) / v**k, math.log(2.0), math.log(x), rel_tol=rel_tol
    )


# Lanczos approximation, g = 7, n = 9
_LANCZOS_G = 7
_LANCZOS = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)


def gamma_function(z: float) -> float:
    """``Gamma(z)`` for ``1 <= z <= 2``."""
    z = float(z)
    if not 1.0 <= z <= 2.0:
        raise ValueError("gamma_function is defined here on [1, 2]")
    z -= 1.0
    acc = _LANCZOS[0]
    for i, c in enumerate(_LANCZOS[1:], start=1):
        acc += c / (z + i)
    t = z + _LANCZOS_G + 0.5
    return math.sqrt(2 * math.pi) * t ** (z + 0.5) * math.exp(-t) * acc


def decay_envelope(u: float, k: float) -> float:
    """``|H_k|^4 = (H^2 / (1 + 4 pi^2 k^2 H^2))^2``."""
    H = nu(u).H
    return (H * H / (1 + 4 * math.pi**2 * k * k * H * H)) ** 2


def write_decay_csv(stream: TextIO, rows: Iterable[tuple[float, float, SumResult]]) -> None:
    """CSV ``u,k,re,im,bound``; ``bound`` is the envelope ``|H_k|^4``."""
    stream.write("u,k,re,im,bound\n")
    for u, k, res in rows:
        stream.write(f"{u!r},{k!r},{res.re!r},{res.im!r},{decay_envelope(u, k)!r}\n")


def write_dhl_csv(stream: TextIO, terms: Iterable[DhLTerm]) -> None:
    stream.write("h,L,u,value\n")
    for t in terms:
        stream.write(f"{t.h},{t.L},{t.u!r},{t.value!r}\n")


def dhl_csv(terms: Iterable[DhLTerm]) -> str:
    buf = io.StringIO()
    write_dhl_csv(buf, terms)
    return buf.getvalue()
