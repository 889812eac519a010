"""End-to-end experiments.

* counting consecutive primes ``(p, p#)`` with ``p`` in one Piatetski-Shapiro
  sequence and ``p#`` in another, overall and split by gap,
* a brute-force oracle for small limits,
* residual reports for singular-series averages and for the weighted sums
  ``R`` and ``S``.
"""

from __future__ import annotations

import math
import statistics
import time
from dataclasses import asdict, dataclass, field
from decimal import ROUND_FLOOR, Decimal, localcontext
from typing import Iterable, Sequence

import numpy as np

from . import model
from .model import RSumParams, gamma_function, r_closed_form, r_sum, s_sum
from .prime_engine import run_tally
from .ps_membership import PsExponent, member_flags
from .singular_series import avg_s0_pairs, avg_s0_prefix, constants, modified_pair_table

BRUTE_FORCE_LIMIT = 10**6


@dataclass(frozen=True)
class PairExperimentConfig:
    x: int
    c1: PsExponent
    c2: PsExponent
    per_gap: bool = False
    threads: int = 1
    checkpoint_path: str | None = None

    def __post_init__(self):
        if int(self.x) < 2:
            raise ValueError("x must be at least 2")
        object.__setattr__(self, "x", int(self.x))
        for name in ("c1", "c2"):
            v = getattr(self, name)
            if not isinstance(v, PsExponent):
                object.__setattr__(self, name, PsExponent(v))
        if self.threads < 1:
            raise ValueError("threads must be positive")


@dataclass
class PairCountRecord:
    x: int
    c1: float
    c2: float
    count: int
    pi_c1: int
    pi_total: int
    main_term: float | None
    ratio: float | None
    band: float | None
    runtime_seconds: float | None
    checkpoint_used: bool

    def to_json_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class GapClassRecord:
    h: int
    count_h: int


@dataclass
class GapClassTable:
    """Per-gap counts for even ``h <= h_cap`` plus the aggregated overflow."""

    records: list[GapClassRecord]
    tail: int
    h_cap: int
    odd_excluded: int = 0

    def total(self) -> int:
        return sum(r.count_h for r in self.records) + self.tail

    def to_csv(self) -> str:
        lines = ["h,count_h"] + [f"{r.h},{r.count_h}" for r in self.records]
        lines.append(f"tail,{self.tail}")
        return "\n".join(lines) + "\n"


@dataclass
class PairRun:
    record: PairCountRecord
    gaps: GapClassTable


def gap_cap(x: int) -> int:
    """Largest recorded gap: ``(log x)^3``."""
    return int(math.log(x) ** 3)


def _annotator(c1: PsExponent, c2: PsExponent):
    def annotate(lo: int, hi: int, primes: np.ndarray):
        return (member_flags(primes, lo, hi, c1), member_flags(primes, lo, hi, c2))

    return annotate


def run_pair_experiment(cfg: PairExperimentConfig, *, timing: bool = True) -> PairRun:
    t0 = time.perf_counter()
    params = {"c1": cfg.c1.c, "c2": cfg.c2.c}
    tally, resumed = run_tally(
        cfg.x,
        n_flags=2,
        pair_rules=((0, 1),),
        annotate=_annotator(cfg.c1, cfg.c2),
        threads=cfg.threads,
        checkpoint_path=cfg.checkpoint_path,
        params=params,
    )
    count = tally.rule_total(0)
    main = band = ratio = None  # main term needs x >= 3
    if cfg.x >= 3:
        main = model.conjecture_main_term(cfg.x, cfg.c1, cfg.c2)
        band = main / math.sqrt(math.log(cfg.x))
        ratio = count / main
    record = PairCountRecord(
        x=cfg.x,
        c1=cfg.c1.c,
        c2=cfg.c2.c,
        count=count,
        pi_c1=tally.flag_counts[0],
        pi_total=tally.n_primes,
        main_term=main,
        ratio=ratio,
        band=band,
        runtime_seconds=(time.perf_counter() - t0) if timing else None,
        checkpoint_used=resumed,
    )
    hist = tally.rule_histogram(0)
    cap = gap_cap(max(cfg.x, 3))
    records = [GapClassRecord(h, hist.get(h, 0)) for h in range(2, cap + 1, 2)]
    tail = sum(c for h, c in hist.items() if h > cap and h % 2 == 0)
    odd = sum(c for h, c in hist.items() if h % 2)
    return PairRun(record, GapClassTable(records, tail, cap, odd))


def count_ps_pairs(cfg: PairExperimentConfig, *, timing: bool = True) -> PairCountRecord:
    """Number of primes ``p <= x`` with ``p`` in N^(c1) and ``p#`` in N^(c2)."""
    return run_pair_experiment(cfg, timing=timing).record


def count_per_gap(cfg: PairExperimentConfig) -> GapClassTable:
    """:func:`count_ps_pairs` split by even gap; the pair (2, 3) is left out."""
    return run_pair_experiment(cfg, timing=False).gaps


# ---------------------------------------------------------------------------
# brute-force oracle


def _trial_division_primes(limit: int) -> list[int]:
    primes: list[int] = []
    n = 2
    while True:
        if _no_divisor(n, primes, math.isqrt(n)):
            primes.append(n)
            if n > limit:
                return primes
        n += 1


def _no_divisor(n: int, primes: list[int], r: int) -> bool:
    for p in primes:
        if p > r:
            return True
        if n % p == 0:
            return False
    return True


def _decimal_sequence(c: float, upto: int) -> set[int]:
    out = set()
    with localcontext() as ctx:
        ctx.prec = 60
        dc = Decimal(c)
        n = 1
        while True:
            v = int((Decimal(n) ** dc).to_integral_value(rounding=ROUND_FLOOR))
            if v > upto:
                return out
            out.add(v)
            n += 1


def brute_force_count(x: int, c1: float, c2: float) -> int:
    """Reference count by trial division and 60-digit decimal powers."""
    x = int(x)
    if x > BRUTE_FORCE_LIMIT:
        raise ValueError(f"brute force is limited to x <= {BRUTE_FORCE_LIMIT}")
    if x < 2:
        return 0
    c1, c2 = float(PsExponent(c1).c), float(PsExponent(c2).c)
    primes = _trial_division_primes(x)  # ends with the first prime above x
    s1 = _decimal_sequence(c1, primes[-1])
    s2 = _decimal_sequence(c2, primes[-1])
    return sum(1 for p, q in zip(primes, primes[1:]) if p <= x and p in s1 and q in s2)


# ---------------------------------------------------------------------------
# verification reports


def geometric_grid(h_max: int, start_exp: int = 4) -> list[int]:
    """``round(10 ** (k/2))`` for ``k >= start_exp`` up to ``h_max``."""
    out = []
    k = start_exp
    while round(10 ** (k / 2)) <= h_max:
        out.append(round(10 ** (k / 2)))
        k += 1
    return out


@dataclass
class AveragesRow:
    h: int
    prefix: float
    prefix_norm: float
    pairs: float
    pair_residual: float
    pair_norm: float


@dataclass
class AveragesReport:
    A: float
    rows: list[AveragesRow]
    prefix_ratio: float
    pair_ratio: float
    growth_factor: float = 3.0

    @property
    def prefix_ok(self) -> bool:
        return self.prefix_ratio <= self.growth_factor

    @property
    def pairs_ok(self) -> bool:
        return self.pair_ratio <= self.growth_factor

    @property
    def passed(self) -> bool:
        return self.prefix_ok and self.pairs_ok


def _spread(values: Sequence[float]) -> float:
    """``max / median`` of absolute values."""
    a = [abs(v) for v in values]
    med = statistics.median(a)
    return max(a) / med if med > 0 else math.inf


def verify_lemma_averages(h_max: int, grid: Iterable[int] | None = None, exponent: float = 0.6) -> AveragesReport:
    """Normalised residuals of the prefix and pair averages of ``S0({0,t})``."""
    h_max = int(h_max)
    if h_max > 10**6:
        raise ValueError("h_max is limited to 10^6")
    hs = sorted(set(int(h) for h in grid)) if grid is not None else geometric_grid(h_max)
    if not hs:
        raise ValueError("empty grid")
    A = constants().A
    tab = modified_pair_table(max(hs))
    rows = []
    for h in hs:
        pre = avg_s0_prefix(h, tab)
        pairs = avg_s0_pairs(h, tab) if h >= 3 else math.nan
        res = pairs + 0.5 * h * math.log(h) - 0.5 * A * h
        scale = h**exponent
        rows.append(AveragesRow(h, pre, pre / scale, pairs, res, res / scale))
    return AveragesReport(
        A=A,
        rows=rows,
        prefix_ratio=_spread([r.prefix_norm for r in rows]),
        pair_ratio=_spread([r.pair_norm for r in rows]),
    )


@dataclass
class AsymptoticRow:
    u: float
    r00: float
    s00: float
    r_residual: float
    s_residual: float
    closed_form_error: float
    truncation_change: float


@dataclass
class ThetaRow:
    u: float
    theta: float
    vartheta: int
    value: float
    predicted: float
    residual: float


@dataclass
class DecayRow:
    family: str
    u: float
    j: float
    k: float
    re: float
    im: float
    magnitude: float
    normalized: float


@dataclass
class PropositionReport:
    asymptotics: list[AsymptoticRow]
    theta_rows: list[ThetaRow]
    k_decay: list[DecayRow]
    jk_decay: list[DecayRow]
    checks: dict[str, bool] = field(default_factory=dict)
    spans: dict[str, float] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def failing(self) -> list[str]:
        return [k for k, ok in self.checks.items() if not ok]


def _span(values: Sequence[float]) -> float:
    lo, hi = min(values), max(values)
    return hi / lo if lo > 0 else math.inf


def verify_proposition(
    u_grid: Sequence[float],
    k_grid: Sequence[float],
    theta_grid: Sequence[float] = (0.0, 0.5, 1.0),
    *,
    decay_u: Sequence[float] | None = None,
    jk_grid: Sequence[tuple[float, float]] | None = None,
    families: Sequence[str] = model.PHASE_FAMILIES,
    gamma1: float = 2 / 3,
    gamma2: float = 2 / 3,
) -> PropositionReport:
    """Asymptotics at ``j = k = 0`` and ``k^-4`` / ``(jk)^-4`` decay of ``S``."""
    u_grid = sorted(float(u) for u in u_grid)
    if not u_grid or not k_grid:
        raise ValueError("grids must be non-empty")
    decay_u = [math.exp(10.0)] if decay_u is None else [float(u) for u in decay_u]
    jk_grid = [(j, k) for j in (1, 2, 4) for k in (1, 2, 4)] if jk_grid is None else list(jk_grid)

    base = RSumParams(gamma1=gamma1, gamma2=gamma2)
    asym = []
    for u in u_grid:
        L = math.log(u)
        r = r_sum(base, u)
        s = s_sum(base, u)
        r2 = r_sum(base, u, 2 * r.h_max)
        s2 = s_sum(base, u, 2 * s.h_max)
        asym.append(AsymptoticRow(
            u=u,
            r00=r.re,
            s00=s.re,
            r_residual=r.re - 0.5 * L,
            s_residual=s.re - (0.5 * L - 0.5 * math.log(L)),
            closed_form_error=abs(r.re - r_closed_form(u)),
            truncation_change=max(abs(r2.value - r.value), abs(s2.value - s.value)),
        ))

    theta_rows = []
    for u in u_grid:
        L = math.log(u)
        for th in theta_grid:
            for vt in (0, 1):
                p = RSumParams(theta=th, vartheta=vt, gamma1=gamma1, gamma2=gamma2)
                val = r_sum(p, u).re
                pred = 0.5 * gamma_function(1 + th) * L ** (1 + th) * (math.log(2) if vt else 1.0)
                theta_rows.append(ThetaRow(u, th, vt, val, pred, val - pred))

    k_rows, jk_rows = [], []
    for fam in families:
        for u in decay_u:
            for k in k_grid:
                res = s_sum(RSumParams(k=k, phase_family=fam, gamma1=gamma1, gamma2=gamma2), u)
                m = abs(res)
                k_rows.append(DecayRow(fam, u, 0.0, k, res.re, res.im, m, m * abs(k) ** 4))
            for j, k in jk_grid:
                res = s_sum(RSumParams(j=j, k=k, phase_family=fam, gamma1=gamma1, gamma2=gamma2), u)
                m = abs(res)
                jk_rows.append(DecayRow(fam, u, j, k, res.re, res.im, m, m * abs(j * k) ** 4))

    rep = PropositionReport(asym, theta_rows, k_rows, jk_rows)
    r_res = [abs(a.r_residual) for a in asym]
    s_res = [abs(a.s_residual) for a in asym]
    rep.checks["closed_form"] = max(a.closed_form_error for a in asym) <= 1e-9
    rep.checks["r_bounded"] = max(r_res) <= r_res[0] + 1
    rep.checks["s_bounded"] = max(s_res) <= s_res[0] + 1
    rep.checks["truncation_stable"] = max(a.truncation_change for a in asym) < 1e-9
    for fam in families:
        for u in decay_u:
            kk = [r.normalized for r in k_rows if r.family == fam and r.u == u]
            jj = [r.normalized for r in jk_rows if r.family == fam and r.u == u]
            key = f"{fam}@u={u!r}"
            rep.spans[f"k_decay:{key}"] = _span(kk)
            rep.checks[f"k_decay:{key}"] = _span(kk) < 10
            if jj:
                rep.spans[f"jk_decay:{key}"] = _span(jj)
                rep.checks[f"jk_decay:{key}"] = _span(jj) < 10
    return rep


@dataclass
class ConjectureRow:
    record: PairCountRecord
    lower: float
    upper: float

    @property
    def within_band(self) -> bool:
        return self.lower <= self.record.count <= self.upper


def compare_with_conjecture(cfg: PairExperimentConfig, *, timing: bool = True) -> ConjectureRow:
    """Empirical count next to the main term and the band ``main / sqrt(log x)``."""
    if cfg.x < 3:
        raise ValueError("comparison needs x >= 3")
    rec = count_ps_pairs(cfg, timing=timing)
    return ConjectureRow(rec, rec.main_term - rec.band, rec.main_term + rec.band)
