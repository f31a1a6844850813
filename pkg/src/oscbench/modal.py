"""Closed-form analysis of the equal-parameter two-mass chain.

For masses ``m`` and spring rates ``C`` (both springs equal), the chain has
two normal modes. Their circular frequencies are the imaginary-root
magnitudes of the quartic ``m^2 L^4 + 3 m C L^2 + C^2 = 0``:

    omega1^2 = C (3 + sqrt 5) / (2 m)      (fast mode)
    omega2^2 = C (3 - sqrt 5) / (2 m)      (slow mode)

and the amplitude ratio of mass 2 to mass 1 within each mode is
``r = 2 - m omega^2 / C``. The exact solution is a four-coefficient
combination of both modes, fitted to the initial positions and velocities by
two 2x2 linear solves. It is the accuracy oracle for the RK4 integrator.

Unequal parameters are out of this module's scope; callers fall back to RK4
plus energy diagnostics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .oscillator import (
    DimensionMismatchError,
    NonPositiveParameterError,
    Trajectory,
)

__all__ = [
    "Analytic2DOF",
    "ErrorReport",
    "characteristic_frequencies",
    "mode_ratios",
    "analytic_solution",
    "eval_analytic",
    "compare",
]

_SQRT5 = math.sqrt(5.0)


@dataclass(frozen=True)
class Analytic2DOF:
    """Frequencies, mode ratios and fitted coefficients of the exact solution.

    ``a1c``/``a1s`` are the cosine/sine amplitudes of the fast mode, ``a2c``/
    ``a2s`` of the slow mode, all in meters on mass 1; mass 2 follows with
    ratios ``r1`` and ``r2``.
    """

    omega1: float
    omega2: float
    r1: float
    r2: float
    a1c: float
    a1s: float
    a2c: float
    a2s: float


@dataclass(frozen=True)
class ErrorReport:
    """Pointwise numeric-vs-analytic error summary over a trajectory."""

    max_abs_error: float
    rmse: float
    at_time: float


def _require_positive(value: float, name: str):
    if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
        raise NonPositiveParameterError(f"{name} = {value!r}; must be positive and finite")


def characteristic_frequencies(m: float, c: float) -> tuple[float, float]:
    """Both eigenfrequencies in rad/s, fast one first."""
    _require_positive(m, "m")
    _require_positive(c, "c")
    omega1 = math.sqrt(c * (3.0 + _SQRT5) / (2.0 * m))
    omega2 = math.sqrt(c * (3.0 - _SQRT5) / (2.0 * m))
    return omega1, omega2


def mode_ratios(m: float, c: float) -> tuple[float, float]:
    """Mass-2/mass-1 amplitude ratio within each mode: ``2 - m omega^2 / C``.

    Parameter-free in value: (1 - sqrt 5)/2 for the fast mode and
    (1 + sqrt 5)/2 for the slow one; the fast mode moves the masses in
    opposition (r1 < 0), the slow one in sympathy (r2 > 0).
    """
    omega1, omega2 = characteristic_frequencies(m, c)
    r1 = 2.0 - m * (omega1 * omega1) / c
    r2 = 2.0 - m * (omega2 * omega2) / c
    return r1, r2


def analytic_solution(
    m: float,
    c: float,
    x0: tuple[float, float],
    v0: tuple[float, float],
) -> Analytic2DOF:
    """Fit the two-mode solution to initial positions ``x0`` and velocities ``v0``.

    The cosine pair solves ``a1c + a2c = x0[0]`` and
    ``r1 a1c + r2 a2c = x0[1]``; the sine pair solves the same system for the
    velocity amplitudes ``omega_k * a_ks``. Both 2x2 systems are solved in
    closed form (determinant r2 - r1 = sqrt 5 never vanishes).
    """
    if len(x0) != 2 or len(v0) != 2:
        raise DimensionMismatchError("analytic solution requires two coordinates")
    omega1, omega2 = characteristic_frequencies(m, c)
    r1, r2 = mode_ratios(m, c)
    det = r2 - r1
    a1c = (r2 * x0[0] - x0[1]) / det
    a2c = (x0[1] - r1 * x0[0]) / det
    u1 = (r2 * v0[0] - v0[1]) / det
    u2 = (v0[1] - r1 * v0[0]) / det
    return Analytic2DOF(omega1, omega2, r1, r2, a1c, u1 / omega1, a2c, u2 / omega2)


def eval_analytic(sol: Analytic2DOF, t: float) -> tuple[float, float]:
    """Exact positions ``(x1, x2)`` at time ``t`` seconds."""
    if not (isinstance(t, (int, float)) and math.isfinite(t) and t >= 0.0):
        raise ValueError(f"t must be finite and non-negative, got {t!r}")
    mode1 = sol.a1c * math.cos(sol.omega1 * t) + sol.a1s * math.sin(sol.omega1 * t)
    mode2 = sol.a2c * math.cos(sol.omega2 * t) + sol.a2s * math.sin(sol.omega2 * t)
    return mode1 + mode2, sol.r1 * mode1 + sol.r2 * mode2


def eval_analytic_velocity(sol: Analytic2DOF, t: float) -> tuple[float, float]:
    """Exact velocities ``(v1, v2)`` at time ``t`` seconds."""
    if not (isinstance(t, (int, float)) and math.isfinite(t) and t >= 0.0):
        raise ValueError(f"t must be finite and non-negative, got {t!r}")
    d1 = sol.omega1 * (sol.a1s * math.cos(sol.omega1 * t) - sol.a1c * math.sin(sol.omega1 * t))
    d2 = sol.omega2 * (sol.a2s * math.cos(sol.omega2 * t) - sol.a2c * math.sin(sol.omega2 * t))
    return d1 + d2, sol.r1 * d1 + sol.r2 * d2


def compare(traj: Trajectory, sol: Analytic2DOF) -> ErrorReport:
    """Pointwise |numeric - analytic| over both coordinates of a trajectory."""
    if not traj.samples:
        raise ValueError("empty trajectory")
    max_err = -1.0
    at_time = 0.0
    sum_sq = 0.0
    count = 0
    for sample in traj.samples:
        if sample.size != 2:
            raise DimensionMismatchError(
                f"analytic comparison requires 2 coordinates, got {sample.size}"
            )
        xa = eval_analytic(sol, sample.time)
        for num, ana in zip(sample.positions, xa):
            err = abs(num - ana)
            sum_sq += err * err
            count += 1
            if err > max_err:
                max_err = err
                at_time = sample.time
    return ErrorReport(max_err, math.sqrt(sum_sq / count), at_time)
