"""High-resolution monotonic timing, latency statistics, and core identification.

The clock is the process-wide monotonic performance counter read in integer
nanoseconds, so readings never go backwards and the tick frequency is fixed
for the process lifetime. Percentiles use the nearest-rank method (no
interpolation) so they are exactly reproducible by a sort-and-index oracle.
"""

from __future__ import annotations

import ctypes
import math
import time
from dataclasses import dataclass

__all__ = [
    "EmptySamplesError",
    "TickReading",
    "LatencyStats",
    "TICKS_PER_SECOND",
    "now",
    "ticks_ns",
    "elapsed",
    "calibrate_overhead",
    "deduct_overhead",
    "stats",
    "current_core_id",
    "core_id_supported",
]

TICKS_PER_SECOND = 1_000_000_000

ticks_ns = time.perf_counter_ns


class EmptySamplesError(ValueError):
    """Statistics requested over an empty sample list."""


@dataclass(frozen=True)
class TickReading:
    """A monotonic counter value plus its fixed tick frequency."""

    ticks: int
    frequency: int = TICKS_PER_SECOND


def now() -> TickReading:
    """Current monotonic reading; resolution well under a microsecond."""
    return TickReading(time.perf_counter_ns())


def elapsed(start: TickReading, stop: TickReading) -> float:
    """Seconds between two readings: (stop - start) / frequency."""
    return (stop.ticks - start.ticks) / start.frequency


def calibrate_overhead(iterations: int = 10_000) -> float:
    """Median cost in seconds of taking a pair of consecutive readings.

    Subtract this from measured durations when they approach the clock's own
    cost; the subtraction must be clamped at zero (see :func:`deduct_overhead`).
    """
    if iterations < 1000:
        raise ValueError(f"need at least 1000 iterations, got {iterations}")
    counter = time.perf_counter_ns
    deltas = []
    append = deltas.append
    for _ in range(iterations):
        a = counter()
        b = counter()
        append(b - a)
    deltas.sort()
    # Nearest-rank median, consistent with stats().
    median = deltas[math.ceil(0.5 * iterations) - 1]
    return max(0.0, median / TICKS_PER_SECOND)


def deduct_overhead(duration_s: float, overhead_s: float) -> float:
    """Overhead-corrected duration, clamped so it never goes negative."""
    return max(0.0, duration_s - overhead_s)


@dataclass(frozen=True)
class LatencyStats:
    """Distribution summary of a latency sample set, all values in seconds."""

    count: int
    mean: float
    stddev: float
    min: float
    p50: float
    p90: float
    p99: float
    max: float


def stats(samples) -> LatencyStats:
    """Summarize a non-empty sample list.

    Mean and population standard deviation over all samples; percentiles by
    nearest rank on the sorted list (rank ceil(p*n), 1-based). Permutation
    invariant by construction.
    """
    ordered = sorted(samples)
    n = len(ordered)
    if n == 0:
        raise EmptySamplesError("no samples")
    mean = math.fsum(ordered) / n
    var = math.fsum((x - mean) ** 2 for x in ordered) / n
    def rank(p: float) -> float:
        return ordered[max(1, math.ceil(p * n)) - 1]
    return LatencyStats(
        count=n,
        mean=mean,
        stddev=math.sqrt(var),
        min=ordered[0],
        p50=rank(0.50),
        p90=rank(0.90),
        p99=rank(0.99),
        max=ordered[-1],
    )


def _load_sched_getcpu():
    try:
        libc = ctypes.CDLL("libc.so.6", use_errno=True)
        fn = libc.sched_getcpu
        fn.restype = ctypes.c_int
        fn.argtypes = []
        if fn() < 0:
            return None
        return fn
    except (OSError, AttributeError):
        return None


_sched_getcpu = _load_sched_getcpu()


def current_core_id() -> int | None:
    """Core the calling thread is executing on, or None when unavailable."""
    if _sched_getcpu is None:
        return None
    cpu = _sched_getcpu()
    return cpu if cpu >= 0 else None


def core_id_supported() -> bool:
    return _sched_getcpu is not None
