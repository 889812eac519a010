"""Segmented prime sieve, consecutive-prime pairs and gap statistics.

The engine walks ``[2, x]`` in fixed-length segments.  Segments are sieved by a
pool of worker threads and handed to a single consumer in ascending order, so
every counter is updated in the same order regardless of the thread count.
Long runs can persist their counters to a checkpoint file at segment
boundaries and resume from it later.
"""

from __future__ import annotations

import hashlib
import io
import math
import os
import threading
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterator, NamedTuple, Sequence

import numpy as np

SEGMENT_LENGTH = 1 << 20
MAX_LIMIT = 1 << 62

CHECKPOINT_FORMAT = "psprimes-checkpoint/1"

# Odd primes whose multiples are removed by tiling a precomputed pattern.
_PATTERN_PRIMES = (3, 5, 7, 11, 13)
_PATTERN_PERIOD = 3 * 5 * 7 * 11 * 13


class CheckpointError(Exception):
    """A checkpoint file is unreadable, truncated or fails its integrity hash."""


class CheckpointMismatch(CheckpointError):
    """The checkpoint was written for different experiment parameters."""


class ConsecutivePairEvent(NamedTuple):
    p: int
    p_sharp: int
    gap: int


# ---------------------------------------------------------------------------
# sieving


def small_primes(limit: int) -> np.ndarray:
    """All primes ``<= limit`` as an int64 array (plain odd-only sieve)."""
    if limit < 2:
        return np.zeros(0, dtype=np.int64)
    n_odd = (limit - 1) // 2  # odd numbers 3, 5, ..., <= limit
    is_prime = np.ones(n_odd, dtype=bool)
    for i in range((math.isqrt(limit) - 1) // 2):
        if is_prime[i]:
            p = 2 * i + 3
            is_prime[(p * p - 3) // 2 :: p] = False
    odd = 2 * np.flatnonzero(is_prime).astype(np.int64) + 3
    return np.concatenate((np.array([2], dtype=np.int64), odd))


_base_lock = threading.Lock()
_base_cache: np.ndarray = small_primes(1 << 16)


def _base_primes(hi: int) -> np.ndarray:
    """Primes up to ``sqrt(hi)``, from a shared cache that only grows."""
    global _base_cache
    need = math.isqrt(hi) + 1
    cache = _base_cache
    if int(cache[-1]) < need:
        with _base_lock:
            if int(_base_cache[-1]) < need:
                _base_cache = small_primes(max(need, 2 * int(_base_cache[-1])))
            cache = _base_cache
    return cache[: int(np.searchsorted(cache, need, side="right"))]


def _odd_pattern() -> np.ndarray:
    # pattern[i] describes the odd number 2*i + 1, period _PATTERN_PERIOD
    pat = np.ones(_PATTERN_PERIOD, dtype=bool)
    for p in _PATTERN_PRIMES:
        pat[(p - 1) // 2 :: p] = False
    return pat


_PATTERN = _odd_pattern()


def _sieve_segment(lo: int, hi: int) -> np.ndarray:
    """Primes in ``[lo, hi)``; no argument checking."""
    out_two = lo <= 2 < hi
    first = lo | 1 if lo > 1 else 1
    if first >= hi:
        return np.array([2], dtype=np.int64) if out_two else np.zeros(0, dtype=np.int64)
    count = (hi - first + 1) // 2
    # odd index of `first` in the global numbering 1, 3, 5, ...
    start = ((first - 1) // 2) % _PATTERN_PERIOD
    reps = (start + count) // _PATTERN_PERIOD + 1
    mask = np.tile(_PATTERN, reps)[start : start + count]
    # the pattern struck out the pattern primes themselves and 1
    for p in (1,) + _PATTERN_PRIMES:
        if first <= p < hi:
            mask[(p - first) // 2] = p != 1

    base = _base_primes(hi - 1)
    base = base[base > _PATTERN_PRIMES[-1]]
    if base.size:
        starts = np.maximum(base * base, ((first + base - 1) // base) * base)
        starts += np.where(starts % 2 == 0, base, 0)
        keep = starts < hi
        offsets = ((starts[keep] - first) // 2).tolist()
        for p, off in zip(base[keep].tolist(), offsets):
            mask[off::p] = False

    primes = 2 * np.flatnonzero(mask).astype(np.int64) + first
    if out_two:
        primes = np.concatenate((np.array([2], dtype=np.int64), primes))
    return primes


def primes_in_range(lo: int, hi: int, segment_length: int = SEGMENT_LENGTH) -> np.ndarray:
    """Primes in ``[lo, hi)`` in ascending order.

    The window is limited to one segment; use :class:`SievePipeline` for
    longer ranges.
    """
    lo, hi = int(lo), int(hi)
    if lo < 2 or hi <= lo:
        raise ValueError(f"need 2 <= lo < hi, got lo={lo}, hi={hi}")
    if hi > MAX_LIMIT:
        raise OverflowError(f"hi={hi} exceeds the supported limit {MAX_LIMIT}")
    if hi - lo > segment_length:
        raise ValueError(f"range length {hi - lo} exceeds segment length {segment_length}")
    return _sieve_segment(lo, hi)


def next_prime_after(n: int) -> int:
    """Smallest prime strictly greater than ``n``."""
    lo = max(int(n) + 1, 2)
    width = 4096
    while True:
        found = _sieve_segment(lo, lo + width)
        if found.size:
            return int(found[0])
        lo += width
        width *= 2


# ---------------------------------------------------------------------------
# ordered parallel pipeline

Annotator = Callable[[int, int, np.ndarray], Sequence[np.ndarray]]


@dataclass
class SegmentResult:
    index: int
    lo: int
    hi: int
    primes: np.ndarray
    flags: tuple[np.ndarray, ...] = ()


class SievePipeline:
    """Sieve ``[2, x]`` segment by segment and deliver results in order.

    ``annotate(lo, hi, primes)`` runs inside the workers and may attach one
    boolean array per prime (for example sequence membership).  Results are
    yielded strictly by ascending segment index.
    """

    def __init__(
        self,
        x: int,
        *,
        segment_length: int = SEGMENT_LENGTH,
        threads: int = 1,
        annotate: Annotator | None = None,
    ):
        x = int(x)
        if x < 2:
            raise ValueError(f"limit must be >= 2, got {x}")
        if x >= MAX_LIMIT:
            raise OverflowError(f"limit {x} exceeds the supported range")
        if threads < 1:
            raise ValueError("threads must be positive")
        self.x = x
        self.segment_length = int(segment_length)
        self.threads = int(threads)
        self.annotate = annotate
        self.n_segments = (x + 1 + self.segment_length - 1) // self.segment_length

    def bounds(self, index: int) -> tuple[int, int]:
        lo = index * self.segment_length
        return lo, min(lo + self.segment_length, self.x + 1)

    def _work(self, index: int) -> SegmentResult:
        lo, hi = self.bounds(index)
        primes = _sieve_segment(max(lo, 2), hi) if hi > 2 else np.zeros(0, dtype=np.int64)
        flags: tuple[np.ndarray, ...] = ()
        if self.annotate is not None:
            flags = tuple(self.annotate(lo, hi, primes))
        return SegmentResult(index, lo, hi, primes, flags)

    def run(self, start: int = 0) -> Iterator[SegmentResult]:
        indices = range(start, self.n_segments)
        if self.threads == 1:
            for i in indices:
                yield self._work(i)
            return
        window = 2 * self.threads
        with ThreadPoolExecutor(max_workers=self.threads) as pool:
            pending: deque = deque()
            it = iter(indices)
            for i in it:
                pending.append(pool.submit(self._work, i))
                if len(pending) >= window:
                    break
            while pending:
                result = pending.popleft().result()
                nxt = next(it, None)
                if nxt is not None:
                    pending.append(pool.submit(self._work, nxt))
                yield result


# ---------------------------------------------------------------------------
# consecutive-pair tally


@dataclass
class PairTally:
    """Counters over consecutive pairs ``(p, p#)`` with ``p <= x``.

    ``n_flags`` boolean annotations travel with each prime.  ``pair_rules``
    lists ``(i, j)``: count pairs whose ``p`` carries flag ``i`` and whose
    ``p#`` carries flag ``j``, both in total and split by gap.
    """

    n_flags: int = 0
    pair_rules: tuple[tuple[int, int], ...] = ()
    n_primes: int = 0
    gap_counts: np.ndarray = field(default_factory=lambda: np.zeros(64, dtype=np.int64))
    flag_counts: list[int] = field(default_factory=list)
    rule_gap_counts: list[np.ndarray] = field(default_factory=list)
    last_prime: int | None = None
    last_flags: tuple[bool, ...] = ()
    completed_segment: int = -1
    finished: bool = False

    def __post_init__(self):
        if not self.flag_counts:
            self.flag_counts = [0] * self.n_flags
        if not self.rule_gap_counts:
            self.rule_gap_counts = [np.zeros(64, dtype=np.int64) for _ in self.pair_rules]

    @staticmethod
    def _add_bincount(acc: np.ndarray, gaps: np.ndarray) -> np.ndarray:
        if gaps.size == 0:
            return acc
        counts = np.bincount(gaps)
        if counts.size > acc.size:
            grown = np.zeros(max(counts.size, 2 * acc.size), dtype=np.int64)
            grown[: acc.size] = acc
            acc = grown
        acc[: counts.size] += counts
        return acc

    def _consume(self, primes: np.ndarray, flags: Sequence[np.ndarray]):
        # successor events for every prime before the last one in `primes`,
        # including the carried prime from the previous segment
        if self.last_prime is not None:
            primes = np.concatenate((np.array([self.last_prime], dtype=np.int64), primes))
            flags = [
                np.concatenate((np.array([self.last_flags[i]]), flags[i])) for i in range(self.n_flags)
            ]
        if primes.size < 2:
            return primes, flags
        gaps = np.diff(primes)
        self.gap_counts = self._add_bincount(self.gap_counts, gaps)
        for r, (i, j) in enumerate(self.pair_rules):
            hit = flags[i][:-1] & flags[j][1:]
            self.rule_gap_counts[r] = self._add_bincount(self.rule_gap_counts[r], gaps[hit])
        return primes, flags

    def apply(self, seg: SegmentResult):
        """Fold one segment (must be the next index in order)."""
        if seg.index != self.completed_segment + 1:
            raise RuntimeError(f"segment {seg.index} out of order (expected {self.completed_segment + 1})")
        if seg.primes.size:
            self.n_primes += int(seg.primes.size)
            for i in range(self.n_flags):
                self.flag_counts[i] += int(np.count_nonzero(seg.flags[i]))
            primes, flags = self._consume(seg.primes, seg.flags)
            self.last_prime = int(primes[-1])
            self.last_flags = tuple(bool(f[-1]) for f in flags)
        self.completed_segment = seg.index

    def finish(self, successor: int, successor_flags: Sequence[bool]):
        """Close the final pair using the first prime beyond the limit."""
        if self.finished:
            return
        if self.last_prime is not None:
            self._consume(
                np.array([successor], dtype=np.int64),
                [np.array([bool(f)]) for f in successor_flags],
            )
        self.finished = True

    # convenience views

    def histogram(self) -> dict[int, int]:
        nz = np.flatnonzero(self.gap_counts)
        return {int(h): int(self.gap_counts[h]) for h in nz}

    def rule_histogram(self, r: int = 0) -> dict[int, int]:
        acc = self.rule_gap_counts[r]
        return {int(h): int(acc[h]) for h in np.flatnonzero(acc)}

    def rule_total(self, r: int = 0) -> int:
        return int(self.rule_gap_counts[r].sum())

    # serialization as key=value records

    def to_records(self) -> list[tuple[str, str]]:
        rec = [
            ("n_flags", str(self.n_flags)),
            ("pair_rules", ";".join(f"{i},{j}" for i, j in self.pair_rules)),
            ("last_completed_segment", str(self.completed_segment)),
            ("finished", str(int(self.finished))),
            ("n_primes", str(self.n_primes)),
            ("last_prime", "" if self.last_prime is None else str(self.last_prime)),
            ("last_flags", ",".join(str(int(f)) for f in self.last_flags)),
            ("flag_counts", ",".join(str(c) for c in self.flag_counts)),
        ]
        for h in np.flatnonzero(self.gap_counts):
            rec.append((f"gap.{h}", str(int(self.gap_counts[h]))))
        for r, acc in enumerate(self.rule_gap_counts):
            for h in np.flatnonzero(acc):
                rec.append((f"rulegap.{r}.{h}", str(int(acc[h]))))
        return rec

    @classmethod
    def from_records(cls, rec: dict[str, str]) -> "PairTally":
        def ints(s: str) -> list[int]:
            return [int(v) for v in s.split(",")] if s else []

        rules = tuple(tuple(ints(r)) for r in rec["pair_rules"].split(";") if r)
        tally = cls(n_flags=int(rec["n_flags"]), pair_rules=rules)  # type: ignore[arg-type]
        tally.completed_segment = int(rec["last_completed_segment"])
        tally.finished = bool(int(rec["finished"]))
        tally.n_primes = int(rec["n_primes"])
        tally.last_prime = int(rec["last_prime"]) if rec["last_prime"] else None
        tally.last_flags = tuple(bool(v) for v in ints(rec["last_flags"]))
        tally.flag_counts = ints(rec["flag_counts"])
        for key, val in rec.items():
            if key.startswith("gap."):
                h = int(key[4:])
                if h >= tally.gap_counts.size:
                    grown = np.zeros(2 * h + 2, dtype=np.int64)
                    grown[: tally.gap_counts.size] = tally.gap_counts
                    tally.gap_counts = grown
                tally.gap_counts[h] = int(val)
            elif key.startswith("rulegap."):
                _, r, h = key.split(".")
                r, h = int(r), int(h)
                acc = tally.rule_gap_counts[r]
                if h >= acc.size:
                    grown = np.zeros(2 * h + 2, dtype=np.int64)
                    grown[: acc.size] = acc
                    acc = tally.rule_gap_counts[r] = grown
                acc[h] = int(val)
        return tally


# ---------------------------------------------------------------------------
# checkpoints


def fingerprint(params: dict) -> str:
    """Stable hash of experiment parameters (floats hashed by their exact hex)."""

    def canon(v):
        if isinstance(v, float):
            return v.hex()
        return repr(v)

    text = "\n".join(f"{k}={canon(params[k])}" for k in sorted(params))
    return hashlib.sha256(text.encode()).hexdigest()


@dataclass
class Checkpoint:
    limit: int
    segment_length: int
    config_fingerprint: str
    tally: PairTally

    @property
    def last_completed_segment(self) -> int:
        return self.tally.completed_segment


def save_checkpoint(path: str | os.PathLike, cp: Checkpoint) -> None:
    """Write ``cp`` atomically as key=value lines closed by a sha256 line."""
    buf = io.StringIO()
    buf.write(f"format={CHECKPOINT_FORMAT}\n")
    buf.write(f"fingerprint={cp.config_fingerprint}\n")
    buf.write(f"limit={cp.limit}\n")
    buf.write(f"segment_length={cp.segment_length}\n")
    for k, v in cp.tally.to_records():
        buf.write(f"{k}={v}\n")
    body = buf.getvalue()
    digest = hashlib.sha256(body.encode()).hexdigest()
    tmp = f"{os.fspath(path)}.tmp"
    with open(tmp, "w", encoding="ascii") as fh:
        fh.write(body)
        fh.write(f"sha256={digest}\n")
        fh.flush()
        os.fsync(fh.fileno())
    os.replace(tmp, path)


def restore_checkpoint(path: str | os.PathLike, expected_fingerprint: str | None = None) -> Checkpoint:
    try:
        with open(path, encoding="ascii") as fh:
            text = fh.read()
    except (OSError, UnicodeDecodeError) as exc:
        raise CheckpointError(f"cannot read checkpoint {path}: {exc}") from exc
    body, sep, last = text.rstrip("\n").rpartition("\n")
    if not sep or not last.startswith("sha256="):
        raise CheckpointError(f"checkpoint {path} is truncated (no integrity line)")
    body += "\n"
    if hashlib.sha256(body.encode()).hexdigest() != last[len("sha256=") :]:
        raise CheckpointError(f"checkpoint {path} failed its integrity check")
    rec: dict[str, str] = {}
    for line in body.splitlines():
        key, eq, val = line.partition("=")
        if not eq:
            raise CheckpointError(f"malformed line in checkpoint: {line!r}")
        rec[key] = val
    if rec.get("format") != CHECKPOINT_FORMAT:
        raise CheckpointError(f"unknown checkpoint format {rec.get('format')!r}")
    if expected_fingerprint is not None and rec["fingerprint"] != expected_fingerprint:
        raise CheckpointMismatch("checkpoint was written with different parameters")
    try:
        tally = PairTally.from_records(rec)
        return Checkpoint(int(rec["limit"]), int(rec["segment_length"]), rec["fingerprint"], tally)
    except (KeyError, ValueError, IndexError) as exc:
        raise CheckpointError(f"checkpoint {path} is incomplete: {exc}") from exc


# ---------------------------------------------------------------------------
# driver


def run_tally(
    x: int,
    *,
    n_flags: int = 0,
    pair_rules: tuple[tuple[int, int], ...] = (),
    annotate: Annotator | None = None,
    threads: int = 1,
    segment_length: int = SEGMENT_LENGTH,
    checkpoint_path: str | os.PathLike | None = None,
    checkpoint_every: int = 64,
    params: dict | None = None,
    on_segment: Callable[[PairTally], None] | None = None,
) -> tuple[PairTally, bool]:
    """Run the sieve over ``[2, x]`` and return ``(tally, resumed)``.

    With ``checkpoint_path`` set, an existing file is resumed (its fingerprint
    must match ``params``) and progress is saved every ``checkpoint_every``
    segments and whenever the run is interrupted.
    """
    pipe = SievePipeline(x, segment_length=segment_length, threads=threads, annotate=annotate)
    fp = fingerprint({**(params or {}), "x": pipe.x, "segment_length": pipe.segment_length,
                      "n_flags": n_flags, "pair_rules": pair_rules})
    tally = PairTally(n_flags=n_flags, pair_rules=pair_rules)
    resumed = False
    if checkpoint_path is not None and os.path.exists(checkpoint_path):
        cp = restore_checkpoint(checkpoint_path, fp)
        tally = cp.tally
        resumed = True

    def save():
        if checkpoint_path is not None:
            save_checkpoint(checkpoint_path, Checkpoint(pipe.x, pipe.segment_length, fp, tally))

    in_apply = False
    try:
        for seg in pipe.run(start=tally.completed_segment + 1):
            in_apply = True
            tally.apply(seg)
            in_apply = False
            if checkpoint_path is not None and (seg.index + 1) % checkpoint_every == 0:
                save()
            if on_segment is not None:
                on_segment(tally)
    except BaseException:
        # a half-applied segment must not be persisted
        if not in_apply:
            save()
        raise

    if not tally.finished:
        succ = next_prime_after(pipe.x)
        succ_flags: Sequence[bool] = ()
        if annotate is not None:
            arr = np.array([succ], dtype=np.int64)
            succ_flags = [bool(f[0]) for f in annotate(succ, succ + 1, arr)]
        tally.finish(succ, succ_flags)
    save()
    return tally, resumed


# ---------------------------------------------------------------------------
# public operations


def stream_consecutive_pairs(x: int) -> Iterator[ConsecutivePairEvent]:
    """Yield ``(p, p#, p# - p)`` for every prime ``p <= x`` in ascending order.

    The last event's successor may exceed ``x``.
    """
    pipe = SievePipeline(x)
    prev: int | None = None
    for seg in pipe.run():
        for q in seg.primes.tolist():
            if prev is not None:
                yield ConsecutivePairEvent(prev, q, q - prev)
            prev = q
    if prev is not None:
        q = next_prime_after(pipe.x)
        yield ConsecutivePairEvent(prev, q, q - prev)


@dataclass
class GapHistogram:
    limit: int
    counts: dict[int, int]

    def total(self) -> int:
        return sum(self.counts.values())

    def even_counts(self) -> dict[int, int]:
        """Counts restricted to even gaps (drops the pair (2, 3))."""
        return {h: c for h, c in self.counts.items() if h % 2 == 0}

    def to_csv(self) -> str:
        lines = ["h,count"] + [f"{h},{self.counts[h]}" for h in sorted(self.counts)]
        return "\n".join(lines) + "\n"


def gap_histogram(x: int, threads: int = 1, **kwargs) -> GapHistogram:
    """Histogram of successor gaps ``p# - p`` over all primes ``p <= x``."""
    if int(x) < 3:
        raise ValueError("gap histogram needs x >= 3")
    tally, _ = run_tally(int(x), threads=threads, **kwargs)
    return GapHistogram(int(x), tally.histogram())
