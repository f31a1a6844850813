"""Scenario-matrix execution, INI configuration, verification suite, CSV export.

The harness is the reproducible-experiment layer: it parses one config file
into a validated :class:`BenchConfig`, runs every scenario strictly
sequentially (so scenarios never perturb each other's timing), checks every
parallel trajectory bitwise against a cached sequential reference, and writes
two flat CSV files per run. :func:`verify` runs the full correctness suite
and reports one pass/fail/skip entry per named invariant; timing-direction
observations are report-only and never fail the suite.
"""

from __future__ import annotations

import configparser
import math
import os
import random
import tempfile
import threading
import time
from dataclasses import dataclass, field

import numpy as np

from . import timing
from .modal import (
    analytic_solution,
    characteristic_frequencies,
    compare,
    eval_analytic,
    mode_ratios,
)
from .oscillator import (
    OscillatorSystem,
    PhaseState,
    Trajectory,
    build_chain,
    derivative,
    energy,
    integrate,
    rk4_step,
)
from .parallel import (
    BARRIER_KINDS,
    LAYOUTS,
    PIN_MODES,
    PRIORITY_LEVELS,
    BenchScenario,
    InvalidCoreError,
    MigrationReport,
    PinUnsupportedError,
    PriorityOutcome,
    RunResult,
    SharedPhase,
    StageBarrier,
    WorkerMigration,
    pin_to_core,
    pinning_supported,
    run_parallel,
    set_priority,
)

__all__ = [
    "ConfigParseError",
    "ConfigValidationError",
    "BenchConfig",
    "STANDARD_SCENARIOS",
    "SUMMARY_HEADER",
    "SAMPLES_HEADER",
    "parse_config",
    "load_config",
    "equal_parameter_2dof",
    "trajectories_identical",
    "run_sequential",
    "ScenarioResult",
    "BenchRunner",
    "write_csv",
    "export_trajectory",
    "VerifyItem",
    "VerifyReport",
    "verify",
    "stress_barrier",
    "BarrierStressResult",
    "check_padded_invariants",
    "check_packed_invariants",
    "measure_derivative_time",
]

STANDARD_SCENARIOS = (
    "seq",
    "par-pin-padded",
    "par-pin-packed",
    "par-unpin-padded",
    "par-unpin-packed",
)

SUMMARY_HEADER = (
    "scenario,workers,pin,layout,barrier,priority,determinism,"
    "max_abs_err_m,rmse_m,energy_drift_rel,"
    "mean_step_s,p50_step_s,p90_step_s,p99_step_s,max_step_s,"
    "migrations_total,clock_overhead_s"
)
SAMPLES_HEADER = "scenario,worker,step,latency_s,core_id"

_RUN_DEFAULTS = {"dt": 1e-6, "nsteps": 100_000, "stride": 100, "line_size": 64,
                 "warmup": 1000, "sample_core_every": 1}

_KNOWN_KEYS = {
    "system": {"masses", "springs"},
    "initial": {"x0", "v0"},
    "run": {"dt", "nsteps", "stride", "line_size", "warmup", "sample_core_every", "output"},
    "scenario": {"workers", "pin", "pin_base", "priority", "layout", "barrier",
                 "dt", "nsteps", "stride", "warmup", "sample_core_every", "barrier_timeout"},
}


class ConfigParseError(ValueError):
    """Config text is not valid INI; carries the offending line number."""

    def __init__(self, message: str, line: int | None = None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


class ConfigValidationError(ValueError):
    """Config parsed but a field has an invalid value; names the field."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


@dataclass
class BenchConfig:
    """Fully validated benchmark configuration."""

    system: OscillatorSystem
    x0: tuple[float, ...]
    v0: tuple[float, ...]
    dt: float
    nsteps: int
    stride: int
    line_size: int
    warmup: int
    sample_core_every: int
    output: str
    scenarios: list[BenchScenario]

    @property
    def state0(self) -> PhaseState:
        return PhaseState(self.x0, self.v0, 0.0)


def _parse_float_list(text: str, field_name: str) -> tuple[float, ...]:
    try:
        values = tuple(float(tok) for tok in text.replace(",", " ").split())
    except ValueError:
        raise ConfigValidationError(field_name, f"cannot parse {text!r} as numbers")
    if not values:
        raise ConfigValidationError(field_name, "empty value")
    return values


def _parse_scalar(text: str, kind, field_name: str):
    try:
        if kind is int:
            return int(text)
        return float(text)
    except ValueError:
        raise ConfigValidationError(field_name, f"cannot parse {text!r}")


def _parse_choice(text: str, choices, field_name: str) -> str:
    if text not in choices:
        raise ConfigValidationError(field_name, f"{text!r} not in {choices}")
    return text


def _read_ini(text: str) -> dict[str, dict[str, str]]:
    cp = configparser.ConfigParser(
        inline_comment_prefixes=("#",), interpolation=None, strict=True
    )
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        line = getattr(exc, "lineno", None)
        if line is None and getattr(exc, "errors", None):
            line = exc.errors[0][0]
        raise ConfigParseError(str(exc.message if hasattr(exc, "message") else exc), line)
    return {section: dict(cp[section]) for section in cp.sections()}


def apply_overrides(raw: dict[str, dict[str, str]], overrides) -> None:
    """Apply ``section.key=value`` (or ``scenario.NAME.key=value``) overrides in place."""
    for item in overrides:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigValidationError(item, "override must look like section.key=value")
        parts = key.strip().split(".")
        if len(parts) == 2:
            section, option = parts
        elif len(parts) == 3 and parts[0] == "scenario":
            section, option = f"scenario {parts[1]}", parts[2]
        else:
            raise ConfigValidationError(key, "expected section.key or scenario.NAME.key")
        base = section.split(" ")[0]
        if base not in _KNOWN_KEYS or option not in _KNOWN_KEYS[base]:
            raise ConfigValidationError(key, "unknown config key")
        raw.setdefault(section, {})[option] = value.strip()


def _default_scenarios() -> dict[str, dict[str, str]]:
    return {
        "scenario seq": {},
        "scenario par-pin-padded": {"pin": "per-core", "layout": "padded"},
        "scenario par-pin-packed": {"pin": "per-core", "layout": "packed"},
        "scenario par-unpin-padded": {"pin": "none", "layout": "padded"},
        "scenario par-unpin-packed": {"pin": "none", "layout": "packed"},
    }


def parse_config(text: str, overrides=()) -> BenchConfig:
    """Parse INI-style config text into a validated :class:`BenchConfig`.

    Missing keys get the documented defaults; when no ``[scenario ...]``
    section is present the five standard scenarios are synthesized. The
    default warmup shrinks to ``nsteps // 2`` for short runs so the
    ``warmup < nsteps`` invariant holds without explicit configuration.
    """
    raw = _read_ini(text)

    for section, entries in raw.items():
        base = section.split(" ")[0]
        if base not in _KNOWN_KEYS:
            raise ConfigValidationError(section, "unknown section")
        for option in entries:
            if option not in _KNOWN_KEYS[base]:
                raise ConfigValidationError(f"{section}.{option}", "unknown key")
    apply_overrides(raw, overrides)

    if "system" not in raw or "masses" not in raw["system"] or "springs" not in raw["system"]:
        raise ConfigValidationError("system", "config needs [system] masses and springs")
    masses = _parse_float_list(raw["system"]["masses"], "system.masses")
    springs = _parse_float_list(raw["system"]["springs"], "system.springs")
    try:
        system = build_chain(masses, springs)
    except ValueError as exc:
        raise ConfigValidationError("system", str(exc))

    s = system.size
    initial = raw.get("initial", {})
    x0 = _parse_float_list(initial["x0"], "initial.x0") if "x0" in initial else (0.0,) * s
    v0 = _parse_float_list(initial["v0"], "initial.v0") if "v0" in initial else (0.0,) * s
    if len(x0) != s or len(v0) != s:
        raise ConfigValidationError("initial", f"x0/v0 must have {s} entries")

    run = raw.get("run", {})
    dt = _parse_scalar(run.get("dt", _RUN_DEFAULTS["dt"]), float, "run.dt")
    nsteps = _parse_scalar(run.get("nsteps", _RUN_DEFAULTS["nsteps"]), int, "run.nsteps")
    stride = _parse_scalar(run.get("stride", _RUN_DEFAULTS["stride"]), int, "run.stride")
    line_size = _parse_scalar(run.get("line_size", _RUN_DEFAULTS["line_size"]), int, "run.line_size")
    if "warmup" in run:
        warmup = _parse_scalar(run["warmup"], int, "run.warmup")
    else:
        warmup = min(_RUN_DEFAULTS["warmup"], max(0, nsteps // 2))
    sample_core_every = _parse_scalar(
        run.get("sample_core_every", _RUN_DEFAULTS["sample_core_every"]), int,
        "run.sample_core_every")
    output = run.get("output", "report")

    if not dt > 0:
        raise ConfigValidationError("run.dt", "must be positive")
    if nsteps < 1:
        raise ConfigValidationError("run.nsteps", "must be >= 1")
    if not 0 <= warmup < nsteps:
        raise ConfigValidationError("run.warmup", f"need 0 <= warmup < nsteps ({nsteps})")

    scenario_sections = {
        name.split(" ", 1)[1]: entries
        for name, entries in raw.items()
        if name.split(" ")[0] == "scenario"
    }
    if not scenario_sections:
        scenario_sections = {
            name.split(" ", 1)[1]: entries for name, entries in _default_scenarios().items()
        }

    scenarios = []
    for name, entries in scenario_sections.items():
        prefix = f"scenario.{name}"
        sc_nsteps = _parse_scalar(entries.get("nsteps", nsteps), int, f"{prefix}.nsteps")
        if "warmup" in entries:
            sc_warmup = _parse_scalar(entries["warmup"], int, f"{prefix}.warmup")
        elif sc_nsteps == nsteps:
            sc_warmup = warmup
        else:
            sc_warmup = min(_RUN_DEFAULTS["warmup"], max(0, sc_nsteps // 2))
        timeout_text = entries.get("barrier_timeout")
        kwargs = dict(
            name=name,
            workers=(1 if name == "seq" else None),
            pin=_parse_choice(entries.get("pin", "none"), PIN_MODES, f"{prefix}.pin"),
            pin_base=_parse_scalar(entries.get("pin_base", 0), int, f"{prefix}.pin_base"),
            priority=_parse_choice(entries.get("priority", "normal"), PRIORITY_LEVELS,
                                   f"{prefix}.priority"),
            layout=_parse_choice(entries.get("layout", "padded"), LAYOUTS, f"{prefix}.layout"),
            barrier=_parse_choice(entries.get("barrier", "countdown-event"), BARRIER_KINDS,
                                  f"{prefix}.barrier"),
            dt=_parse_scalar(entries.get("dt", dt), float, f"{prefix}.dt"),
            nsteps=sc_nsteps,
            stride=_parse_scalar(entries.get("stride", stride), int, f"{prefix}.stride"),
            warmup=sc_warmup,
            sample_core_every=_parse_scalar(
                entries.get("sample_core_every", sample_core_every), int,
                f"{prefix}.sample_core_every"),
            line_size=line_size,
            barrier_timeout_s=(float(timeout_text) if timeout_text else None),
        )
        if "workers" in entries:
            kwargs["workers"] = _parse_scalar(entries["workers"], int, f"{prefix}.workers")
        try:
            scenarios.append(BenchScenario(**kwargs))
        except ValueError as exc:
            raise ConfigValidationError(prefix, str(exc))

    return BenchConfig(
        system=system, x0=x0, v0=v0, dt=dt, nsteps=nsteps, stride=stride,
        line_size=line_size, warmup=warmup, sample_core_every=sample_core_every,
        output=output, scenarios=scenarios,
    )


def load_config(path, overrides=()) -> BenchConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read(), overrides)


def equal_parameter_2dof(system: OscillatorSystem) -> tuple[float, float] | None:
    """(m, C) when the chain is the equal-parameter two-mass case, else None."""
    if system.size != 2:
        return None
    if system.masses[0] != system.masses[1] or system.springs[0] != system.springs[1]:
        return None
    return system.masses[0], system.springs[0]


def trajectories_identical(a: Trajectory, b: Trajectory) -> bool:
    """Bitwise equality of two trajectories (same samples, same bits)."""
    if len(a.samples) != len(b.samples):
        return False
    for sa, sb in zip(a.samples, b.samples):
        if sa.positions != sb.positions or sa.velocities != sb.velocities:
            return False
        if sa.time != sb.time:
            return False
    return True


def run_sequential(system, state0, scenario: BenchScenario) -> RunResult:
    """Instrumented single-threaded run: the measured twin of the reference.

    Honors the scenario's pin/priority on the calling thread and restores
    both afterwards. Step latency covers exactly one rk4 step.
    """
    pin_core = None
    saved_affinity = None
    saved_nice = None
    tid = threading.get_native_id()
    priority_outcome = PriorityOutcome("normal", True)
    try:
        if scenario.pin == "per-core" and pinning_supported():
            try:
                saved_affinity = os.sched_getaffinity(0)
                core = scenario.pin_base % (os.cpu_count() or 1)
                pin_to_core(core)
                pin_core = core
            except (InvalidCoreError, PinUnsupportedError):
                pin_core = None
        if scenario.priority == "elevated":
            try:
                saved_nice = os.getpriority(os.PRIO_PROCESS, tid)
            except (OSError, AttributeError):
                saved_nice = None
        priority_outcome = set_priority(scenario.priority)

        nsteps, stride, warmup = scenario.nsteps, scenario.stride, scenario.warmup
        sampling = timing.core_id_supported()
        lat: list[float] = []
        cores: list[int] = []
        samples = [state0]
        state = state0
        n_samples = n_migrations = 0
        prev_core = -1
        seen: set[int] = set()
        clock = time.perf_counter_ns
        for step in range(nsteps):
            t_start = clock()
            state = rk4_step(system, state, scenario.dt)
            t_stop = clock()
            if (step + 1) % stride == 0:
                samples.append(state)
            if step >= warmup:
                lat.append((t_stop - t_start) / 1e9)
            if sampling and step % scenario.sample_core_every == 0:
                c = timing.current_core_id()
                if c is None:
                    c = -1
                else:
                    seen.add(c)
                    if prev_core >= 0 and c != prev_core:
                        n_migrations += 1
                    prev_core = c
                    n_samples += 1
                cores.append(c)
            else:
                cores.append(-1)
    finally:
        if saved_affinity is not None:
            os.sched_setaffinity(0, saved_affinity)
        if saved_nice is not None:
            try:
                os.setpriority(os.PRIO_PROCESS, tid, saved_nice)
            except OSError:
                pass

    report = MigrationReport(
        (WorkerMigration(n_samples, n_migrations, frozenset(seen)),), sampling
    )
    return RunResult(
        trajectory=Trajectory(tuple(samples), scenario.dt, stride),
        latency=[timing.stats(lat)],
        migration=report,
        step_latencies=[lat],
        step_cores=[cores],
        pin_cores=[pin_core],
        priority=[priority_outcome],
    )


@dataclass
class ScenarioResult:
    """One scenario's outcome: trajectory summary, stats, evidence, metadata."""

    name: str
    scenario: BenchScenario
    determinism: bool
    final_state: PhaseState
    max_abs_err: float | None
    rmse: float | None
    energy_drift_rel: float
    worker_stats: list[timing.LatencyStats]
    pooled: timing.LatencyStats
    migration: MigrationReport
    metadata: dict = field(default_factory=dict)
    run: RunResult | None = None


class BenchRunner:
    """Runs a config's scenarios against one cached sequential reference.

    The reference trajectory is computed at most once per distinct
    (dt, nsteps, stride) triple; every determinism verdict in the matrix
    compares against that single artifact. Scenario runs are strictly
    sequential.
    """

    def __init__(self, config: BenchConfig):
        self.config = config
        self._references: dict[tuple, Trajectory] = {}
        self._overhead: float | None = None
        self._analytic = None
        mc = equal_parameter_2dof(config.system)
        if mc is not None:
            self._analytic = analytic_solution(mc[0], mc[1], config.x0, config.v0)

    @property
    def clock_overhead(self) -> float:
        if self._overhead is None:
            self._overhead = timing.calibrate_overhead(5000)
        return self._overhead

    @property
    def analytic(self):
        return self._analytic

    def reference(self, dt: float, nsteps: int, stride: int) -> Trajectory:
        key = (dt, nsteps, stride)
        if key not in self._references:
            self._references[key] = integrate(
                self.config.system, self.config.state0, dt, nsteps, stride
            )
        return self._references[key]

    def run_scenario(self, scenario: BenchScenario) -> ScenarioResult:
        config = self.config
        ref = self.reference(scenario.dt, scenario.nsteps, scenario.stride)
        if scenario.name == "seq":
            run = run_sequential(config.system, config.state0, scenario)
        else:
            run = run_parallel(config.system, config.state0, scenario)

        determinism = trajectories_identical(run.trajectory, ref)
        max_err = rmse = None
        if self._analytic is not None:
            report = compare(run.trajectory, self._analytic)
            max_err, rmse = report.max_abs_error, report.rmse

        e0 = energy(config.system, run.trajectory.samples[0])
        deltas = [abs(energy(config.system, s) - e0) for s in run.trajectory.samples]
        drift = (max(deltas) / e0) if e0 > 0 else max(deltas)

        pooled = timing.stats([x for per in run.step_latencies for x in per])
        meta = {
            "host_cores": os.cpu_count() or 1,
            "clock_overhead_s": self.clock_overhead,
            "priority": ";".join(
                f"{p.level}:{'applied' if p.applied else 'denied'}" for p in run.priority
            ),
            "pin_cores": ",".join("-" if c is None else str(c) for c in run.pin_cores),
            "pin_distinct": run.pinned_distinct,
            "horizon_s": scenario.dt * scenario.nsteps,
        }
        return ScenarioResult(
            name=scenario.name,
            scenario=scenario,
            determinism=determinism,
            final_state=run.trajectory.final_state,
            max_abs_err=max_err,
            rmse=rmse,
            energy_drift_rel=drift,
            worker_stats=run.latency,
            pooled=pooled,
            migration=run.migration,
            metadata=meta,
            run=run,
        )

    def run_all(self) -> list[ScenarioResult]:
        return [self.run_scenario(sc) for sc in self.config.scenarios]


def _fmt(value) -> str:
    if value is None:
        return "nan"
    return f"{value:.9g}"


def _atomic_write(path: str, content: str):
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".oscbench-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(content)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_csv(results, path: str) -> tuple[str, str]:
    """Write ``<path>.summary.csv`` and ``<path>.samples.csv`` atomically."""
    if not results:
        raise ValueError("no results to write")
    summary_lines = [SUMMARY_HEADER]
    for r in results:
        sc = r.scenario
        summary_lines.append(",".join([
            r.name,
            str(len(r.worker_stats)),
            sc.pin,
            sc.layout,
            sc.barrier,
            sc.priority,
            "pass" if r.determinism else "fail",
            _fmt(r.max_abs_err),
            _fmt(r.rmse),
            _fmt(r.energy_drift_rel),
            _fmt(r.pooled.mean),
            _fmt(r.pooled.p50),
            _fmt(r.pooled.p90),
            _fmt(r.pooled.p99),
            _fmt(r.pooled.max),
            str(r.migration.total_migrations),
            _fmt(r.metadata.get("clock_overhead_s", 0.0)),
        ]))

    sample_lines = [SAMPLES_HEADER]
    for r in results:
        if r.run is None:
            continue
        warmup = r.scenario.warmup
        for w, per_worker in enumerate(r.run.step_latencies):
            worker_cores = r.run.step_cores[w]
            for i, latency in enumerate(per_worker):
                step = warmup + i
                core = worker_cores[step] if step < len(worker_cores) else -1
                sample_lines.append(f"{r.name},{w},{step},{latency:.9g},{core}")

    summary_path = f"{path}.summary.csv"
    samples_path = f"{path}.samples.csv"
    _atomic_write(summary_path, "\n".join(summary_lines) + "\n")
    _atomic_write(samples_path, "\n".join(sample_lines) + "\n")
    return summary_path, samples_path


def export_trajectory(traj: Trajectory, path: str):
    """Write a trajectory as CSV: time, positions, velocities."""
    s = traj.samples[0].size
    if s == 2:
        header = "t_s,x1_m,x2_m,v1_mps,v2_mps"
    else:
        cols = [f"x{i + 1}_m" for i in range(s)] + [f"v{i + 1}_mps" for i in range(s)]
        header = "t_s," + ",".join(cols)
    lines = [header]
    for sample in traj.samples:
        row = [f"{sample.time:.9g}"]
        row += [f"{x:.9g}" for x in sample.positions]
        row += [f"{v:.9g}" for v in sample.velocities]
        lines.append(",".join(row))
    _atomic_write(path, "\n".join(lines) + "\n")


# --------------------------------------------------------------------------
# verification suite
# --------------------------------------------------------------------------

_PHI_SQ = (3.0 + math.sqrt(5.0)) / 2.0  # omega1/omega2 for every (m, C)
_SQRT5 = math.sqrt(5.0)


@dataclass
class VerifyItem:
    name: str
    status: str  # pass | fail | skip
    measured: str
    detail: str = ""


@dataclass
class VerifyReport:
    items: list[VerifyItem]

    @property
    def passed(self) -> bool:
        return all(item.status != "fail" for item in self.items)

    def item(self, name: str) -> VerifyItem:
        for it in self.items:
            if it.name == name:
                return it
        raise KeyError(name)


def _item(name, ok, measured, detail=""):
    return VerifyItem(name, "pass" if ok else "fail", measured, detail)


@dataclass
class BarrierStressResult:
    kind: str
    parties: int
    generations: int
    skew_violations: int
    final_generation: int
    elapsed_s: float


def stress_barrier(kind: str, parties: int, generations: int,
                   timeout: float = 120.0) -> BarrierStressResult:
    """Hammer one barrier: every worker bumps a stage counter, checks that no
    counter leads another by >= 2, and waits; any skew or deadlock fails."""
    barrier = StageBarrier(kind, parties, timeout=timeout)
    counters = [0] * parties
    violations = [0] * parties

    def body(w: int):
        v = 0
        wait = barrier.wait
        for _ in range(generations):
            counters[w] += 1
            snap = list(counters)
            if max(snap) - min(snap) >= 2:
                v += 1
            wait()
        violations[w] = v

    threads = [threading.Thread(target=body, args=(w,)) for w in range(parties)]
    t0 = time.perf_counter()
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    elapsed = time.perf_counter() - t0
    return BarrierStressResult(
        kind, parties, generations, sum(violations), barrier.generation, elapsed
    )


def check_padded_invariants(shared: SharedPhase) -> bool:
    """Every cell line-aligned and every pair at least one line apart."""
    addrs = [shared.cell_address(i) for i in range(shared.nvars)]
    if any(a % shared.line_size for a in addrs):
        return False
    ordered = sorted(addrs)
    return all(b - a >= shared.line_size for a, b in zip(ordered, ordered[1:]))


def check_packed_invariants(shared: SharedPhase) -> bool:
    """Cells contiguous and confined to the minimum number of lines."""
    addrs = [shared.cell_address(i) for i in range(shared.nvars)]
    if any(b - a != 8 for a, b in zip(addrs, addrs[1:])):
        return False
    lines_spanned = (addrs[-1] + 8 - 1) // shared.line_size - addrs[0] // shared.line_size + 1
    return lines_spanned == math.ceil(shared.nvars * 8 / shared.line_size)


def measure_derivative_time(system, state, iterations: int = 20000) -> float:
    """Mean seconds per single phase-equation evaluation, overhead-corrected."""
    overhead = timing.calibrate_overhead(2000)
    t0 = timing.ticks_ns()
    for _ in range(iterations):
        derivative(system, state)
    total = (timing.ticks_ns() - t0) / 1e9
    per_call = timing.deduct_overhead(total / iterations, overhead / iterations)
    return per_call / (2 * system.size)


def verify(config: BenchConfig) -> VerifyReport:
    """Run the full verification suite for a config; never raises on failures.

    Numerical items use the module oracles at their specified magnitudes;
    platform-dependent items (pinning) report skipped where unsupported, and
    the false-sharing direction is recorded but can never fail the suite.
    """
    items: list[VerifyItem] = []
    runner = BenchRunner(config)
    system = config.system
    mc = equal_parameter_2dof(system)

    if mc is None:
        items.append(VerifyItem("eigenfrequencies", "skip", "-",
                                "system is not the equal-parameter 2-DOF chain"))
    else:
        m, c = mc
        omega1, omega2 = characteristic_frequencies(m, c)
        # Independent route: numeric roots of the characteristic quartic.
        roots = np.roots([m * m, 0.0, 3.0 * m * c, 0.0, c * c])
        mags = sorted({abs(complex(r).imag) for r in roots}, reverse=True)
        ok = (abs(omega1 - mags[0]) <= 1e-9 * mags[0]
              and abs(omega2 - mags[1]) <= 1e-9 * mags[1])
        items.append(_item("eigenfrequencies", ok,
                           f"omega1={omega1:.6f} omega2={omega2:.6f}",
                           f"quartic roots {mags[0]:.6f}/{mags[1]:.6f}"))

        ratio = omega1 / omega2
        items.append(_item("frequency-ratio",
                           abs(ratio - _PHI_SQ) <= 1e-9 * _PHI_SQ,
                           f"{ratio:.12f}"))

        r1, r2 = mode_ratios(m, c)
        row2_res = max(
            abs(-c + (c - m * omega1 * omega1) * r1) / c,
            abs(-c + (c - m * omega2 * omega2) * r2) / c,
        )
        ok = (abs(r1 - (1.0 - _SQRT5) / 2.0) <= 1e-9
              and abs(r2 - (1.0 + _SQRT5) / 2.0) <= 1e-9
              and abs(r1 * r2 + 1.0) <= 1e-12
              and abs((r2 - r1) - _SQRT5) <= 1e-12
              and row2_res <= 1e-12)
        items.append(_item("mode-ratios", ok, f"r1={r1:.9f} r2={r2:.9f}",
                           f"row2 residual {row2_res:.3e}"))

        sol = analytic_solution(m, c, config.x0, config.v0)
        residual = max(
            abs(sol.a1c + sol.a2c - config.x0[0]),
            abs(sol.r1 * sol.a1c + sol.r2 * sol.a2c - config.x0[1]),
            abs(sol.omega1 * sol.a1s + sol.omega2 * sol.a2s - config.v0[0]),
            abs(sol.r1 * sol.omega1 * sol.a1s + sol.r2 * sol.omega2 * sol.a2s - config.v0[1]),
        )
        items.append(_item("modal-coefficients", residual < 1e-12,
                           f"residual={residual:.3e}",
                           f"a1c={sol.a1c:.6f} a2c={sol.a2c:.6f}"))

        items.append(_verify_convergence(system, sol, config, omega1))
        items.append(_verify_accuracy_and_drift(runner, system, sol, config, "accuracy"))
        items.append(_verify_accuracy_and_drift(runner, system, sol, config, "energy-drift"))
        items.append(_verify_mode_purity(system, m, c, omega1, omega2, r2))

    items.append(_verify_determinism(runner))
    for kind in BARRIER_KINDS:
        res = stress_barrier(kind, 4, 100_000)
        ok = res.skew_violations == 0 and res.final_generation == res.generations
        items.append(_item(f"barrier-safety-{kind}", ok,
                           f"generations={res.final_generation} "
                           f"violations={res.skew_violations} elapsed={res.elapsed_s:.1f}s"))

    rng = random.Random(20250)
    bad = 0
    for _ in range(1000):
        nvars = rng.randint(2, 16)
        line = rng.choice((64, 128, 256))
        if not check_padded_invariants(SharedPhase("padded", nvars, line)):
            bad += 1
    packed_ok = check_packed_invariants(SharedPhase("packed", 4, 64))
    items.append(_item("layout-addresses", bad == 0 and packed_ok,
                       f"padded failures={bad}/1000 packed-one-line={packed_ok}"))

    items.append(_verify_pinning(config))
    overhead = runner.clock_overhead
    items.append(_item("clock-overhead", overhead < 1e-6, f"{overhead:.3e} s"))
    per_component = measure_derivative_time(system, config.state0)
    items.append(_item("derivative-timing", 1e-8 <= per_component <= 1e-5,
                       f"{per_component:.3e} s/component"))
    items.append(_verify_false_sharing(config))
    return VerifyReport(items)


def _verify_convergence(system, sol, config, omega1) -> VerifyItem:
    dt = config.dt
    if omega1 * dt > 0.5:
        return VerifyItem("convergence-order", "fail",
                          f"omega1*dt={omega1 * dt:.3g}",
                          "dt too large for stability margin")
    horizon = 0.01
    errors = []
    for step in (2.0 * dt, dt):
        nsteps = max(1, round(horizon / step))
        traj = integrate(system, config.state0, step, nsteps, stride=1)
        errors.append(compare(traj, sol).max_abs_error)
    ratio = errors[0] / errors[1] if errors[1] > 0 else math.inf
    return _item("convergence-order", 12.0 <= ratio <= 20.0,
                 f"ratio={ratio:.2f}",
                 f"err(2dt)={errors[0]:.3e} err(dt)={errors[1]:.3e}")


def _verify_accuracy_and_drift(runner, system, sol, config, which) -> VerifyItem:
    traj = runner.reference(config.dt, 10_000, 1)
    if which == "accuracy":
        err = compare(traj, sol).max_abs_error
        return _item("accuracy", err < 1e-6, f"max_abs_err={err:.3e} m")
    e0 = energy(system, traj.samples[0])
    deltas = [abs(energy(system, s) - e0) for s in traj.samples]
    drift = (max(deltas) / e0) if e0 > 0 else max(deltas)
    return _item("energy-drift", drift < 1e-6, f"rel_drift={drift:.3e}")


def _verify_mode_purity(system, m, c, omega1, omega2, r2) -> VerifyItem:
    period = 2.0 * math.pi / omega2
    sol = analytic_solution(m, c, (1.0, r2), (0.0, 0.0))
    analytic_impurity = 0.0
    for i in range(201):
        x1, x2 = eval_analytic(sol, i * period / 200)
        analytic_impurity = max(analytic_impurity, abs(x2 - r2 * x1))
    dt = 1e-6 if omega1 * 1e-6 <= 0.5 else period / 3200
    nsteps = max(1, math.ceil(period / dt))
    traj = integrate(system, PhaseState((1.0, r2), (0.0, 0.0)), dt, nsteps, stride=10)
    rk4_impurity = max(abs(s.positions[1] - r2 * s.positions[0]) for s in traj.samples)
    ok = analytic_impurity <= 1e-9 and rk4_impurity <= 1e-4
    return _item("mode-purity", ok,
                 f"analytic={analytic_impurity:.3e} rk4={rk4_impurity:.3e}")


def _verify_determinism(runner) -> VerifyItem:
    mismatches = 0
    checked = 0
    for scenario in runner.config.scenarios:
        result = runner.run_scenario(scenario)
        checked += 1
        if not result.determinism:
            mismatches += 1
    return _item("determinism", mismatches == 0,
                 f"{checked - mismatches}/{checked} scenarios bitwise-identical")


def _verify_pinning(config) -> VerifyItem:
    if not pinning_supported() or not timing.core_id_supported():
        return VerifyItem("pinning", "skip", "-", "platform cannot pin or sample cores")
    ncores = os.cpu_count() or 1
    workers = min(2 * config.system.size, ncores)
    if workers < 1:
        return VerifyItem("pinning", "skip", "-", "no cores available")
    scenario = BenchScenario(
        name="verify-pin", workers=workers, pin="per-core", layout="padded",
        dt=config.dt, nsteps=2000, stride=2000, warmup=0, sample_core_every=1,
        line_size=config.line_size,
    )
    run = run_parallel(config.system, config.state0, scenario)
    total = sum(w.samples for w in run.migration.per_worker)
    migrations = run.migration.total_migrations
    return _item("pinning", migrations == 0,
                 f"workers={workers} samples={total} migrations={migrations}")


def _verify_false_sharing(config) -> VerifyItem:
    if (os.cpu_count() or 1) < 2:
        return VerifyItem("false-sharing-direction", "skip", "-", "needs >= 2 cores")
    medians = {}
    for layout in ("padded", "packed"):
        scenario = BenchScenario(
            name=f"verify-{layout}", pin="per-core", layout=layout,
            dt=config.dt, nsteps=600, stride=600, warmup=100,
            sample_core_every=600, line_size=config.line_size,
        )
        run = run_parallel(config.system, config.state0, scenario)
        medians[layout] = timing.stats(
            [x for per in run.step_latencies for x in per]).p50
    ratio = medians["padded"] / medians["packed"] if medians["packed"] > 0 else math.inf
    # Report-only: hardware- and load-dependent, never fails the suite.
    return VerifyItem("false-sharing-direction", "pass",
                      f"p50 padded/packed = {ratio:.3f}",
                      f"padded={medians['padded']:.3e}s packed={medians['packed']:.3e}s")
