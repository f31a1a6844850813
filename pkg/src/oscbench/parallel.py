"""Thread-per-equation RK4 engine with measurable synchronization choices.

One worker thread owns one or more of the ``2s`` first-order phase equations.
Each integration step runs five barrier generations: four derivative stages
and one state-combination phase. Within a generation every worker snapshots
the full stage input from a shared bank, computes the slopes of its owned
equations, publishes its components of the next stage input, and waits.
Two banks alternate as read/write targets so no cell is ever written while
another worker may still read it.

Because each equation's arithmetic goes through the exact helpers of
:mod:`oscbench.oscillator` on the same snapshot values, the produced
trajectory is bit-for-bit identical to the sequential integrator, for every
worker count, layout, pinning and barrier choice.

Shared cells live in real, address-controlled memory: the ``padded`` layout
gives every cell its own cache line, the ``packed`` layout lays all cells out
contiguously so independent writers share lines (the false-sharing case).
"""

from __future__ import annotations

import os
import threading
import time
from dataclasses import dataclass

import numpy as np

from . import timing
from .oscillator import (
    LengthMismatchError,
    NonFiniteStateError,
    OscillatorSystem,
    PhaseState,
    Trajectory,
    acceleration_at,
    combine_value,
    stage_value,
)
from math import isfinite

__all__ = [
    "LAYOUTS",
    "BARRIER_KINDS",
    "PIN_MODES",
    "PRIORITY_LEVELS",
    "InvalidLineSizeError",
    "InvalidCoreError",
    "PinUnsupportedError",
    "BarrierTimeoutError",
    "BarrierAbortedError",
    "ExclusiveWriteError",
    "SharedPhase",
    "make_shared",
    "StageBarrier",
    "pin_to_core",
    "pinning_supported",
    "PriorityOutcome",
    "set_priority",
    "BenchScenario",
    "WorkerMigration",
    "MigrationReport",
    "RunResult",
    "run_parallel",
]

LAYOUTS = ("packed", "padded")
BARRIER_KINDS = ("countdown-event", "spin")
PIN_MODES = ("none", "per-core")
PRIORITY_LEVELS = ("normal", "elevated")

ELEVATED_NICENESS = -5


class InvalidLineSizeError(ValueError):
    """Cache-line size is not a power of two of at least 8 bytes."""


class InvalidCoreError(ValueError):
    """Requested core id does not exist on this host."""


class PinUnsupportedError(RuntimeError):
    """This platform cannot pin threads to cores."""


class BarrierTimeoutError(RuntimeError):
    """Watchdog expired while waiting at a barrier."""


class BarrierAbortedError(RuntimeError):
    """The barrier was aborted because a participant failed."""


class ExclusiveWriteError(RuntimeError):
    """A shared cell saw a second writer; ownership must be exclusive."""


class SharedPhase:
    """Bank of shared 8-byte cells with controlled memory layout.

    ``padded`` places each cell at the start of its own cache line (addresses
    are ``line_size``-aligned and any two cells are at least ``line_size``
    apart); ``packed`` lays cells out contiguously so all of them fit in the
    minimum number of lines. Single-cell reads and writes are indivisible:
    cells are aligned 8-byte slots accessed under the interpreter lock, so no
    torn values can be observed.
    """

    __slots__ = ("layout", "nvars", "line_size", "_buffer", "_cells", "_writers")

    def __init__(self, layout: str, nvars: int, line_size: int = 64):
        if layout not in LAYOUTS:
            raise ValueError(f"layout must be one of {LAYOUTS}, got {layout!r}")
        if nvars < 2:
            raise ValueError(f"need at least 2 cells, got {nvars}")
        if line_size < 8 or line_size & (line_size - 1):
            raise InvalidLineSizeError(
                f"line_size must be a power of two >= 8, got {line_size}"
            )
        words_per_cell = line_size // 8 if layout == "padded" else 1
        # Over-allocate one line so the first cell can be shifted onto a
        # line_size-aligned address; numpy guarantees >= 8-byte alignment.
        buf = np.zeros(nvars * words_per_cell + line_size // 8, dtype=np.float64)
        shift = (-buf.ctypes.data) % line_size // 8
        cells = buf[shift : shift + nvars * words_per_cell : words_per_cell]
        assert cells.ctypes.data % 8 == 0 and len(cells) == nvars
        self.layout = layout
        self.nvars = nvars
        self.line_size = line_size
        self._buffer = buf
        self._cells = cells
        self._writers: dict[int, int] = {}

    def snapshot(self) -> list[float]:
        """Indivisible per-cell copy of all cells into a worker-local list."""
        return self._cells.tolist()

    def publish(self, index: int, value: float, writer: int | None = None):
        """Indivisibly store ``value`` into one cell.

        When ``writer`` is given, the cell is bound to that writer id on first
        publish and any later publish by a different id raises
        :class:`ExclusiveWriteError` (the engine's one-writer-per-cell check).
        """
        if not 0 <= index < self.nvars:
            raise IndexError(f"cell {index} out of range [0, {self.nvars})")
        if writer is not None:
            owner = self._writers.setdefault(index, writer)
            if owner != writer:
                raise ExclusiveWriteError(
                    f"cell {index} written by worker {writer}, owned by {owner}"
                )
        self._cells[index] = value

    def fill(self, values):
        if len(values) != self.nvars:
            raise LengthMismatchError(f"expected {self.nvars} values, got {len(values)}")
        for i, v in enumerate(values):
            self._cells[i] = v

    def cell_address(self, index: int) -> int:
        if not 0 <= index < self.nvars:
            raise IndexError(f"cell {index} out of range [0, {self.nvars})")
        return self._cells.ctypes.data + index * self._cells.strides[0]


def make_shared(layout: str, nvars: int, line_size: int = 64) -> SharedPhase:
    """Allocate a zero-initialized shared bank in the given layout."""
    return SharedPhase(layout, nvars, line_size)


class StageBarrier:
    """Reusable all-arrive-then-proceed barrier with a generation counter.

    The last arriver of each generation advances the counter and releases the
    rest, so the barrier is race-free across unbounded reuse: nobody can
    observe generation ``g+1`` effects before all parties completed ``g``.
    ``countdown-event`` sleeps waiters on a condition variable; ``spin``
    busy-waits on the generation counter, yielding the processor each probe
    so waiters cannot starve the arrivals they wait for. An optional watchdog
    timeout (default off) raises :class:`BarrierTimeoutError`.
    """

    __slots__ = ("kind", "parties", "_timeout", "_cond", "_count", "_generation", "_broken")

    def __init__(self, kind: str, parties: int, timeout: float | None = None):
        if kind not in BARRIER_KINDS:
            raise ValueError(f"kind must be one of {BARRIER_KINDS}, got {kind!r}")
        if parties < 1:
            raise ValueError(f"parties must be >= 1, got {parties}")
        self.kind = kind
        self.parties = parties
        self._timeout = timeout
        self._cond = threading.Condition(threading.Lock())
        self._count = parties
        self._generation = 0
        self._broken = False

    @property
    def generation(self) -> int:
        return self._generation

    def abort(self):
        """Break the barrier, waking all waiters with BarrierAbortedError."""
        with self._cond:
            self._broken = True
            self._cond.notify_all()

    def wait(self, timeout: float | None = None) -> int:
        """Block until all parties arrive; returns the completed generation (1, 2, ...)."""
        if timeout is None:
            timeout = self._timeout
        cond = self._cond
        with cond:
            if self._broken:
                raise BarrierAbortedError("barrier aborted")
            gen = self._generation
            self._count -= 1
            if self._count == 0:
                # Last arriver opens the next generation for everyone.
                self._count = self.parties
                self._generation = gen + 1
                cond.notify_all()
                return gen + 1
            if self.kind == "countdown-event":
                deadline = None if timeout is None else time.monotonic() + timeout
                while self._generation == gen and not self._broken:
                    remaining = None if deadline is None else deadline - time.monotonic()
                    if remaining is not None and remaining <= 0:
                        self._broken = True
                        cond.notify_all()
                        raise BarrierTimeoutError(
                            f"generation {gen} incomplete after {timeout} s"
                        )
                    cond.wait(remaining)
                if self._broken:
                    raise BarrierAbortedError("barrier aborted")
                return gen + 1
        # Spin path: probe the generation outside the lock. The unlocked int
        # read is safe under the interpreter lock; the yield keeps arrivals
        # scheduled even with more workers than cores.
        deadline = None if timeout is None else time.monotonic() + timeout
        yield_cpu = os.sched_yield if hasattr(os, "sched_yield") else lambda: time.sleep(0)
        while self._generation == gen:
            if self._broken:
                raise BarrierAbortedError("barrier aborted")
            if deadline is not None and time.monotonic() > deadline:
                self.abort()
                raise BarrierTimeoutError(f"generation {gen} incomplete after {timeout} s")
            yield_cpu()
        if self._broken:
            raise BarrierAbortedError("barrier aborted")
        return gen + 1


def pinning_supported() -> bool:
    return hasattr(os, "sched_setaffinity")


def pin_to_core(core: int):
    """Restrict the calling thread to one core.

    Raises :class:`InvalidCoreError` for a nonexistent core id and
    :class:`PinUnsupportedError` where the platform cannot pin; callers that
    can degrade should catch the latter and record pinning as unavailable.
    """
    if not pinning_supported():
        raise PinUnsupportedError("thread affinity is not available on this platform")
    ncores = os.cpu_count() or 1
    if not 0 <= core < ncores:
        raise InvalidCoreError(f"core {core} out of range (host has {ncores})")
    try:
        os.sched_setaffinity(0, {core})
    except OSError as exc:
        raise PinUnsupportedError(f"cannot pin to core {core}: {exc}") from exc


@dataclass(frozen=True)
class PriorityOutcome:
    """Whether a scheduling-priority request took effect."""

    level: str
    applied: bool
    detail: str = ""


def set_priority(level: str) -> PriorityOutcome:
    """Best-effort priority change for the calling thread; never fatal.

    ``elevated`` lowers the thread's niceness; insufficient privilege is
    reported as ``applied=False`` and the run continues.
    """
    if level not in PRIORITY_LEVELS:
        raise ValueError(f"level must be one of {PRIORITY_LEVELS}, got {level!r}")
    if level == "normal":
        return PriorityOutcome("normal", True)
    try:
        tid = threading.get_native_id()
        os.setpriority(os.PRIO_PROCESS, tid, ELEVATED_NICENESS)
        applied = os.getpriority(os.PRIO_PROCESS, tid) == ELEVATED_NICENESS
        return PriorityOutcome("elevated", applied)
    except (OSError, AttributeError) as exc:
        return PriorityOutcome("elevated", False, str(exc))


@dataclass(frozen=True)
class BenchScenario:
    """Execution plan for one measured run.

    ``workers=None`` means one worker per first-order equation (``2s``).
    ``pin="per-core"`` pins worker ``w`` to core ``pin_base + w`` (wrapping
    on hosts with fewer cores than workers, so every worker still sticks to a
    single core). ``warmup`` steps are excluded from latency statistics;
    core ids are sampled every ``sample_core_every`` steps.
    """

    name: str = "custom"
    workers: int | None = None
    pin: str = "none"
    pin_base: int = 0
    priority: str = "normal"
    layout: str = "padded"
    barrier: str = "countdown-event"
    dt: float = 1e-6
    nsteps: int = 100_000
    stride: int = 100
    warmup: int = 1000
    sample_core_every: int = 1
    line_size: int = 64
    barrier_timeout_s: float | None = None

    def __post_init__(self):
        if self.workers is not None and self.workers < 1:
            raise ValueError(f"workers must be >= 1, got {self.workers}")
        if self.pin not in PIN_MODES:
            raise ValueError(f"pin must be one of {PIN_MODES}, got {self.pin!r}")
        if self.priority not in PRIORITY_LEVELS:
            raise ValueError(f"priority must be one of {PRIORITY_LEVELS}")
        if self.layout not in LAYOUTS:
            raise ValueError(f"layout must be one of {LAYOUTS}, got {self.layout!r}")
        if self.barrier not in BARRIER_KINDS:
            raise ValueError(f"barrier must be one of {BARRIER_KINDS}")
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.nsteps < 1 or self.stride < 1 or self.sample_core_every < 1:
            raise ValueError("nsteps, stride and sample_core_every must be >= 1")
        if not 0 <= self.warmup < self.nsteps:
            raise ValueError(
                f"need 0 <= warmup < nsteps, got warmup={self.warmup} nsteps={self.nsteps}"
            )


@dataclass(frozen=True)
class WorkerMigration:
    """Core-id sampling outcome for one worker."""

    samples: int
    migrations: int
    cores_seen: frozenset[int]


@dataclass(frozen=True)
class MigrationReport:
    """Per-worker core-migration evidence; ``supported`` is False when the
    platform exposes no core ids (assertions are then skipped, not failed)."""

    per_worker: tuple[WorkerMigration, ...]
    supported: bool

    @property
    def total_migrations(self) -> int:
        return sum(w.migrations for w in self.per_worker)


@dataclass
class RunResult:
    """Everything one engine run produced."""

    trajectory: Trajectory
    latency: list[timing.LatencyStats]
    migration: MigrationReport
    step_latencies: list[list[float]]  # per worker, post-warmup, seconds
    step_cores: list[list[int]]        # per worker, per step, -1 = not sampled
    pin_cores: list[int | None]
    priority: list[PriorityOutcome]

    @property
    def pinned_distinct(self) -> bool:
        cores = [c for c in self.pin_cores if c is not None]
        return len(cores) == len(self.pin_cores) and len(set(cores)) == len(cores)


def run_parallel(
    system: OscillatorSystem,
    state0: PhaseState,
    scenario: BenchScenario,
) -> RunResult:
    """Integrate with cooperating workers and collect timing evidence.

    Equations are dealt round-robin over the workers. Per step the workers run
    four derivative stages and one combination phase, each ending at the stage
    barrier; the trajectory that comes out is bitwise identical to
    :func:`oscbench.oscillator.integrate` with the same inputs.
    """
    s = system.size
    if state0.size != s:
        raise LengthMismatchError(f"state has {state0.size} coordinates, system has {s}")
    nvars = 2 * s
    workers = scenario.workers if scenario.workers is not None else nvars
    if workers > nvars:
        raise ValueError(f"workers={workers} exceeds {nvars} equations")

    dt = scenario.dt
    nsteps = scenario.nsteps
    stride = scenario.stride
    warmup = scenario.warmup
    core_every = scenario.sample_core_every
    masses, springs = system.masses, system.springs

    # Bank A holds the committed state at step boundaries; the four stages
    # bounce the stage inputs A -> B -> A -> B, and the combination phase
    # commits back into A.
    bank_a = make_shared(scenario.layout, nvars, scenario.line_size)
    bank_b = make_shared(scenario.layout, nvars, scenario.line_size)
    bank_a.fill(state0.positions + state0.velocities)
    barrier = StageBarrier(scenario.barrier, workers, timeout=scenario.barrier_timeout_s)

    owned = [tuple(j for j in range(nvars) if j % workers == w) for w in range(workers)]
    ncores = os.cpu_count() or 1
    sampling = timing.core_id_supported()

    lat: list[list[float]] = [[] for _ in range(workers)]
    cores: list[list[int]] = [[] for _ in range(workers)]
    migration = [WorkerMigration(0, 0, frozenset())] * workers
    pin_cores: list[int | None] = [None] * workers
    priority: list[PriorityOutcome] = [PriorityOutcome("normal", True)] * workers
    traj_samples: list[PhaseState] = []
    failures: list[BaseException | None] = [None] * workers

    def worker_body(w: int):
        priority[w] = set_priority(scenario.priority)
        if scenario.pin == "per-core":
            try:
                core = (scenario.pin_base + w) % ncores
                pin_to_core(core)
                pin_cores[w] = core
            except (InvalidCoreError, PinUnsupportedError):
                pin_cores[w] = None

        my_eqs = owned[w]
        n_owned = len(my_eqs)
        y0 = [0.0] * n_owned
        k1 = [0.0] * n_owned
        k2 = [0.0] * n_owned
        k3 = [0.0] * n_owned
        record = w == 0
        t_sim = state0.time
        half_dt = 0.5 * dt
        my_lat = lat[w]
        my_cores = cores[w]
        n_samples = 0
        n_migrations = 0
        prev_core = -1
        seen: set[int] = set()
        wait = barrier.wait
        snap_a, snap_b = bank_a.snapshot, bank_b.snapshot
        pub_a, pub_b = bank_a.publish, bank_b.publish
        clock = time.perf_counter_ns

        try:
            for step in range(nsteps):
                t_start = clock()

                # Stage 1: derivative at the committed state.
                snap = snap_a()
                if record and step % stride == 0:
                    traj_samples.append(PhaseState(snap[:s], snap[s:], t_sim))
                for idx, j in enumerate(my_eqs):
                    yj = snap[j]
                    y0[idx] = yj
                    k = snap[s + j] if j < s else acceleration_at(masses, springs, snap, j - s)
                    k1[idx] = k
                    pub_b(j, stage_value(yj, half_dt, k), w)
                wait()

                # Stage 2: midpoint estimate.
                snap = snap_b()
                for idx, j in enumerate(my_eqs):
                    k = snap[s + j] if j < s else acceleration_at(masses, springs, snap, j - s)
                    k2[idx] = k
                    pub_a(j, stage_value(y0[idx], half_dt, k), w)
                wait()

                # Stage 3: refined midpoint.
                snap = snap_a()
                for idx, j in enumerate(my_eqs):
                    k = snap[s + j] if j < s else acceleration_at(masses, springs, snap, j - s)
                    k3[idx] = k
                    pub_b(j, stage_value(y0[idx], dt, k), w)
                wait()

                # Stage 4: endpoint estimate; slopes stay worker-local.
                snap = snap_b()
                k4 = [
                    snap[s + j] if j < s else acceleration_at(masses, springs, snap, j - s)
                    for j in my_eqs
                ]
                wait()

                # Combination phase: commit the step into bank A.
                for idx, j in enumerate(my_eqs):
                    v = combine_value(y0[idx], dt, k1[idx], k2[idx], k3[idx], k4[idx])
                    if not isfinite(v):
                        raise NonFiniteStateError(
                            f"equation {j} diverged at step {step + 1}", step=step + 1
                        )
                    pub_a(j, v, w)
                wait()

                t_sim += dt
                if step >= warmup:
                    my_lat.append((clock() - t_start) / 1e9)
                # Sampled outside the timed window so the (comparatively
                # expensive) core query does not pollute the measurement.
                if sampling and step % core_every == 0:
                    c = timing.current_core_id()
                    if c is None:
                        c = -1
                    else:
                        seen.add(c)
                        if prev_core >= 0 and c != prev_core:
                            n_migrations += 1
                        prev_core = c
                        n_samples += 1
                    my_cores.append(c)
                else:
                    my_cores.append(-1)

            if record and nsteps % stride == 0:
                snap = snap_a()
                traj_samples.append(PhaseState(snap[:s], snap[s:], t_sim))
        except BarrierAbortedError:
            pass  # a peer failed; its exception is the one to surface
        except BaseException as exc:
            failures[w] = exc
            barrier.abort()
        finally:
            migration[w] = WorkerMigration(n_samples, n_migrations, frozenset(seen))

    threads = [
        threading.Thread(target=worker_body, args=(w,), name=f"osc-worker-{w}")
        for w in range(workers)
    ]
    for t in threads:
        t.start()
    for t in threads:
        t.join()

    for exc in failures:
        if exc is not None:
            raise exc

    return RunResult(
        trajectory=Trajectory(tuple(traj_samples), dt, stride),
        latency=[timing.stats(samples) for samples in lat],
        migration=MigrationReport(tuple(migration), sampling),
        step_latencies=lat,
        step_cores=cores,
        pin_cores=pin_cores,
        priority=priority,
    )
