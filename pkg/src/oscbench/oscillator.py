"""Spring-mass chain mechanics and fixed-step RK4 integration.

A chain of ``s`` masses is coupled by ``s`` springs in a line; spring ``i``
connects mass ``i`` to mass ``i-1``, and spring ``0`` anchors mass ``0`` to a
rigid wall. All quantities are SI (kg, N/m, m, s).

Every per-component formula lives in a small named helper
(:func:`acceleration_at`, :func:`stage_value`, :func:`combine_value`) and is
evaluated in index-ascending order. The thread-per-equation engine reuses the
same helpers, which is what makes its output bit-for-bit identical to
:func:`integrate`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = [
    "NonPositiveParameterError",
    "LengthMismatchError",
    "NonFiniteStateError",
    "DimensionMismatchError",
    "OscillatorSystem",
    "PhaseState",
    "PhaseDerivative",
    "Trajectory",
    "build_chain",
    "acceleration_at",
    "stage_value",
    "combine_value",
    "derivative",
    "rk4_step",
    "integrate",
    "energy",
]


class NonPositiveParameterError(ValueError):
    """A mass or spring rate is zero, negative, or non-finite."""


class LengthMismatchError(ValueError):
    """Vector lengths disagree with the system's degree-of-freedom count."""


class NonFiniteStateError(ArithmeticError):
    """Integration produced a NaN or infinity."""

    def __init__(self, message: str, step: int | None = None):
        super().__init__(message)
        self.step = step


class DimensionMismatchError(ValueError):
    """Operation is defined only for a two-mass chain."""


@dataclass(frozen=True)
class OscillatorSystem:
    """Validated wall-anchored chain: ``masses[i]`` kg, ``springs[i]`` N/m."""

    masses: tuple[float, ...]
    springs: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "masses", tuple(float(m) for m in self.masses))
        object.__setattr__(self, "springs", tuple(float(c) for c in self.springs))
        if not self.masses:
            raise NonPositiveParameterError("chain needs at least one mass")
        if len(self.masses) != len(self.springs):
            raise LengthMismatchError(
                f"{len(self.masses)} masses vs {len(self.springs)} springs"
            )
        for label, values in (("masses", self.masses), ("springs", self.springs)):
            for i, v in enumerate(values):
                if not math.isfinite(v) or v <= 0.0:
                    raise NonPositiveParameterError(
                        f"{label}[{i}] = {v!r}; must be positive and finite"
                    )

    @property
    def size(self) -> int:
        return len(self.masses)


def build_chain(masses, springs) -> OscillatorSystem:
    """Build a validated chain from mass and spring-rate sequences."""
    return OscillatorSystem(tuple(masses), tuple(springs))


@dataclass(frozen=True)
class PhaseState:
    """Positions, velocities and elapsed simulated time of a chain."""

    positions: tuple[float, ...]
    velocities: tuple[float, ...]
    time: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "positions", tuple(float(x) for x in self.positions))
        object.__setattr__(self, "velocities", tuple(float(v) for v in self.velocities))
        if len(self.positions) != len(self.velocities):
            raise LengthMismatchError(
                f"{len(self.positions)} positions vs {len(self.velocities)} velocities"
            )
        for v in self.positions + self.velocities:
            if not math.isfinite(v):
                raise NonFiniteStateError(f"non-finite phase entry {v!r}")

    @property
    def size(self) -> int:
        return len(self.positions)


@dataclass(frozen=True)
class PhaseDerivative:
    """Time derivative of a phase state: dpos in m/s, dvel in m/s^2."""

    dpos: tuple[float, ...]
    dvel: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "dpos", tuple(float(x) for x in self.dpos))
        object.__setattr__(self, "dvel", tuple(float(v) for v in self.dvel))
        if len(self.dpos) != len(self.dvel):
            raise LengthMismatchError("dpos/dvel length mismatch")
        for v in self.dpos + self.dvel:
            if not math.isfinite(v):
                raise NonFiniteStateError(f"non-finite derivative entry {v!r}")


@dataclass(frozen=True)
class Trajectory:
    """States retained every ``stride`` steps, starting with the initial one."""

    samples: tuple[PhaseState, ...]
    dt: float
    stride: int

    def __post_init__(self):
        object.__setattr__(self, "samples", tuple(self.samples))

    @property
    def final_state(self) -> PhaseState:
        return self.samples[-1]

    def times(self) -> list[float]:
        return [s.time for s in self.samples]


def acceleration_at(masses, springs, positions, i: int) -> float:
    """Acceleration of mass ``i``: (-C_i (x_i - x_{i-1}) + C_{i+1} (x_{i+1} - x_i)) / m_i.

    ``x_{-1}`` is the wall (zero). ``positions`` may be any indexable holding
    at least the chain's positions in its first ``s`` slots. This is the one
    place the coupling force is evaluated; sequential and parallel paths must
    both call it so their arithmetic is identical.
    """
    left = positions[i] - (positions[i - 1] if i > 0 else 0.0)
    a = -springs[i] * left
    if i + 1 < len(masses):
        a += springs[i + 1] * (positions[i + 1] - positions[i])
    return a / masses[i]


def stage_value(base: float, coeff: float, slope: float) -> float:
    """One component of an RK4 stage input: ``base + coeff * slope``."""
    return base + coeff * slope


def combine_value(base: float, dt: float, k1: float, k2: float, k3: float, k4: float) -> float:
    """One component of the RK4 update: ``base + dt/6 * (k1 + 2 k2 + 2 k3 + k4)``."""
    return base + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _check_lengths(system: OscillatorSystem, state: PhaseState):
    if state.size != system.size:
        raise LengthMismatchError(
            f"state has {state.size} coordinates, system has {system.size}"
        )


def derivative(system: OscillatorSystem, state: PhaseState) -> PhaseDerivative:
    """First-order derivative of the phase state: dpos = velocities, dvel = accelerations."""
    _check_lengths(system, state)
    masses, springs, pos = system.masses, system.springs, state.positions
    dvel = tuple(
        acceleration_at(masses, springs, pos, i) for i in range(system.size)
    )
    return PhaseDerivative(state.velocities, dvel)


def rk4_step(system: OscillatorSystem, state: PhaseState, dt: float) -> PhaseState:
    """Advance one classical RK4 step of size ``dt``.

    Stage weights are the classical 1/6, 1/3, 1/3, 1/6 tableau. Components are
    evaluated in index-ascending order so repeated runs are bit-reproducible.
    Raises :class:`NonFiniteStateError` if the step diverges.
    """
    if not (isinstance(dt, (int, float)) and math.isfinite(dt) and dt > 0.0):
        raise ValueError(f"dt must be positive and finite, got {dt!r}")
    _check_lengths(system, state)
    masses, springs = system.masses, system.springs
    pos, vel = state.positions, state.velocities
    s = system.size
    rng = range(s)
    half_dt = 0.5 * dt

    # k1: derivative at the step start; position slopes are the velocities.
    k1v = [acceleration_at(masses, springs, pos, i) for i in rng]
    y2p = [stage_value(pos[i], half_dt, vel[i]) for i in rng]
    y2v = [stage_value(vel[i], half_dt, k1v[i]) for i in rng]

    # k2 at the midpoint estimate; y2v doubles as the k2 position slopes.
    k2v = [acceleration_at(masses, springs, y2p, i) for i in rng]
    y3p = [stage_value(pos[i], half_dt, y2v[i]) for i in rng]
    y3v = [stage_value(vel[i], half_dt, k2v[i]) for i in rng]

    # k3 at the refined midpoint.
    k3v = [acceleration_at(masses, springs, y3p, i) for i in rng]
    y4p = [stage_value(pos[i], dt, y3v[i]) for i in rng]
    y4v = [stage_value(vel[i], dt, k3v[i]) for i in rng]

    # k4 at the endpoint estimate, then the weighted combination.
    k4v = [acceleration_at(masses, springs, y4p, i) for i in rng]
    new_pos = [combine_value(pos[i], dt, vel[i], y2v[i], y3v[i], y4v[i]) for i in rng]
    new_vel = [combine_value(vel[i], dt, k1v[i], k2v[i], k3v[i], k4v[i]) for i in rng]

    # PhaseState construction rejects NaN/Inf.
    return PhaseState(new_pos, new_vel, state.time + dt)


def integrate(
    system: OscillatorSystem,
    state0: PhaseState,
    dt: float,
    nsteps: int,
    stride: int = 1,
) -> Trajectory:
    """Single-threaded reference integration.

    Retains the initial state plus every ``stride``-th step. This is the
    determinism oracle for the parallel engine: any parallel run with the
    same inputs must reproduce these samples bit for bit.
    """
    if nsteps < 1:
        raise ValueError(f"nsteps must be >= 1, got {nsteps}")
    if stride < 1:
        raise ValueError(f"stride must be >= 1, got {stride}")
    _check_lengths(system, state0)
    samples = [state0]
    state = state0
    for k in range(nsteps):
        try:
            state = rk4_step(system, state, dt)
        except NonFiniteStateError as exc:
            raise NonFiniteStateError(
                f"integration diverged at step {k + 1}: {exc}", step=k + 1
            ) from exc
        if (k + 1) % stride == 0:
            samples.append(state)
    return Trajectory(tuple(samples), dt, stride)


def energy(system: OscillatorSystem, state: PhaseState) -> float:
    """Total mechanical energy: sum of 1/2 m v^2 and 1/2 C (extension)^2 terms."""
    _check_lengths(system, state)
    masses, springs = system.masses, system.springs
    pos, vel = state.positions, state.velocities
    total = 0.0
    for i in range(system.size):
        total += 0.5 * masses[i] * vel[i] * vel[i]
        ext = pos[i] - (pos[i - 1] if i > 0 else 0.0)
        total += 0.5 * springs[i] * ext * ext
    return total
