import math

import pytest

from oscbench import (
    LengthMismatchError,
    NonFiniteStateError,
    NonPositiveParameterError,
    PhaseState,
    build_chain,
    derivative,
    energy,
    integrate,
    rk4_step,
)
from oscbench.modal import analytic_solution, compare, eval_analytic

from conftest import C, M, V0, X0


class TestBuildChain:
    def test_canonical_two_mass(self):
        system = build_chain([0.002, 0.002], [20250, 20250])
        assert system.size == 2
        assert system.masses == (0.002, 0.002)
        assert system.springs == (20250.0, 20250.0)

    def test_single_oscillator(self):
        assert build_chain([1], [1]).size == 1

    def test_negative_mass_rejected(self):
        with pytest.raises(NonPositiveParameterError):
            build_chain([1, -1], [1, 1])

    def test_zero_spring_rejected(self):
        with pytest.raises(NonPositiveParameterError):
            build_chain([1], [0])

    def test_nan_rejected(self):
        with pytest.raises(NonPositiveParameterError):
            build_chain([float("nan")], [1])

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatchError):
            build_chain([1, 1], [1])

    def test_empty_rejected(self):
        with pytest.raises(NonPositiveParameterError):
            build_chain([], [])


class TestDerivative:
    def test_equilibrium_is_zero(self, canonical_system):
        d = derivative(canonical_system, PhaseState((0.0, 0.0), (0.0, 0.0)))
        assert d.dpos == (0.0, 0.0)
        assert d.dvel == (0.0, 0.0)

    def test_canonical_displacement(self, canonical_system):
        # Independent hand evaluation: dvel = (C/m)(x2 - 2 x1, x1 - x2).
        d = derivative(canonical_system, PhaseState(X0, V0))
        assert d.dpos == V0
        assert d.dvel[0] == pytest.approx((C / M) * (X0[1] - 2 * X0[0]), rel=1e-14)
        assert d.dvel[1] == pytest.approx((C / M) * (X0[0] - X0[1]), rel=1e-14)
        assert d.dvel == pytest.approx((-70_875_000.0, 50_625_000.0), rel=1e-12)

    def test_single_mass(self):
        d = derivative(build_chain([1], [1]), PhaseState((1.0,), (0.0,)))
        assert d.dvel == (-1.0,)

    def test_length_mismatch(self, canonical_system):
        with pytest.raises(LengthMismatchError):
            derivative(canonical_system, PhaseState((1.0,), (0.0,)))

    def test_three_mass_chain_matches_finite_difference(self):
        # Oracle: second differences of the potential energy.
        system = build_chain([0.5, 1.0, 2.0], [3.0, 4.0, 5.0])
        pos, vel = (0.3, -0.2, 0.7), (0.0, 0.0, 0.0)
        d = derivative(system, PhaseState(pos, vel))
        h = 1e-6
        for i in range(3):
            def potential(q):
                total = 0.0
                for k in range(3):
                    ext = q[k] - (q[k - 1] if k > 0 else 0.0)
                    total += 0.5 * system.springs[k] * ext * ext
                return total
            bumped_up = list(pos)
            bumped_dn = list(pos)
            bumped_up[i] += h
            bumped_dn[i] -= h
            force = -(potential(bumped_up) - potential(bumped_dn)) / (2 * h)
            assert d.dvel[i] == pytest.approx(force / system.masses[i], rel=1e-6)


class TestRk4Step:
    def test_equilibrium_unchanged(self, canonical_system):
        state = PhaseState((0.0, 0.0), (0.0, 0.0), 1.5)
        out = rk4_step(canonical_system, state, 0.25)
        assert out.positions == (0.0, 0.0)
        assert out.velocities == (0.0, 0.0)
        assert out.time == 1.75

    def test_single_oscillator_tracks_cosine(self):
        system = build_chain([1.0], [1.0])
        out = rk4_step(system, PhaseState((1.0,), (0.0,)), 0.1)
        assert abs(out.positions[0] - math.cos(0.1)) < 1e-7

    def test_one_step_matches_analytic(self, canonical_system, canonical_solution):
        out = rk4_step(canonical_system, PhaseState(X0, V0), 1e-6)
        exact = eval_analytic(canonical_solution, 1e-6)
        assert abs(out.positions[0] - exact[0]) < 1e-12
        assert abs(out.positions[1] - exact[1]) < 1e-12

    def test_bad_dt_rejected(self, canonical_system, canonical_state):
        for dt in (0.0, -1.0, float("nan"), float("inf")):
            with pytest.raises(ValueError):
                rk4_step(canonical_system, canonical_state, dt)

    def test_divergence_raises(self, canonical_system, canonical_state):
        state = canonical_state
        with pytest.raises(NonFiniteStateError):
            for _ in range(100):
                state = rk4_step(canonical_system, state, 1e3)


class TestIntegrate:
    def test_single_step_two_samples(self, canonical_system, canonical_state):
        traj = integrate(canonical_system, canonical_state, 1e-6, 1, 1)
        assert len(traj.samples) == 2
        assert traj.samples[0] == canonical_state

    def test_stride_retention(self, canonical_system, canonical_state):
        traj = integrate(canonical_system, canonical_state, 1e-6, 1000, 100)
        assert len(traj.samples) == 11
        times = traj.times()
        spacing = [b - a for a, b in zip(times, times[1:])]
        assert all(abs(d - 1e-4) < 1e-15 for d in spacing)

    def test_accuracy_against_analytic(self, canonical_system, canonical_state,
                                       canonical_solution):
        traj = integrate(canonical_system, canonical_state, 1e-6, 10_000, 100)
        report = compare(traj, canonical_solution)
        assert report.max_abs_error < 1e-6

    def test_order_four_convergence(self, canonical_system, canonical_state,
                                    canonical_solution):
        # Halving dt divides the max error by ~16 at a fixed 0.01 s horizon.
        err_fine = compare(
            integrate(canonical_system, canonical_state, 1e-6, 10_000, 1),
            canonical_solution).max_abs_error
        err_coarse = compare(
            integrate(canonical_system, canonical_state, 2e-6, 5_000, 1),
            canonical_solution).max_abs_error
        assert 12.0 <= err_coarse / err_fine <= 20.0

    def test_divergence_reports_step(self, canonical_system, canonical_state):
        with pytest.raises(NonFiniteStateError) as err:
            integrate(canonical_system, canonical_state, 1e9, 1000, 1)
        assert err.value.step is not None and err.value.step >= 1

    def test_bad_args(self, canonical_system, canonical_state):
        with pytest.raises(ValueError):
            integrate(canonical_system, canonical_state, 1e-6, 0, 1)
        with pytest.raises(ValueError):
            integrate(canonical_system, canonical_state, 1e-6, 10, 0)


class TestEnergy:
    def test_equilibrium_zero(self, canonical_system):
        assert energy(canonical_system, PhaseState((0.0, 0.0), (0.0, 0.0))) == 0.0

    def test_canonical_value(self, canonical_system, canonical_state):
        # 1/2 * 20250 * 2^2 + 1/2 * 20250 * (-5)^2 by hand.
        assert energy(canonical_system, canonical_state) == pytest.approx(293_625.0, rel=1e-14)

    def test_drift_small_over_long_run(self, canonical_system, canonical_state):
        traj = integrate(canonical_system, canonical_state, 1e-6, 10_000, 100)
        e0 = energy(canonical_system, traj.samples[0])
        drift = max(abs(energy(canonical_system, s) - e0) for s in traj.samples) / e0
        assert drift < 1e-6

    def test_drift_shrinks_at_least_fourth_order(self, canonical_system, canonical_state):
        # Calibrated: the measured decay is ~dt^5 at fixed horizon (ratio ~32
        # when dt doubles); assert at least fourth order with headroom above.
        def drift(dt, nsteps):
            traj = integrate(canonical_system, canonical_state, dt, nsteps, 50)
            e0 = energy(canonical_system, traj.samples[0])
            return max(abs(energy(canonical_system, s) - e0) for s in traj.samples) / e0
        ratio = drift(2e-6, 5_000) / drift(1e-6, 10_000)
        assert 12.0 <= ratio <= 100.0


class TestTrajectoryProperties:
    def test_reversal_symmetry(self, canonical_system, canonical_state):
        forward = integrate(canonical_system, canonical_state, 1e-6, 5000, 5000)
        turn = forward.final_state
        back = integrate(
            canonical_system,
            PhaseState(turn.positions, tuple(-v for v in turn.velocities), 0.0),
            1e-6, 5000, 5000,
        ).final_state
        for came_back, started in zip(back.positions, canonical_state.positions):
            assert abs(came_back - started) < 1e-6

    def test_linearity(self, canonical_system):
        alpha, beta = 0.7, -1.3
        s1 = PhaseState((1.0, 0.5), (0.0, 2.0))
        s2 = PhaseState((-0.2, 1.0), (3.0, 0.0))
        mixed = PhaseState(
            tuple(alpha * a + beta * b for a, b in zip(s1.positions, s2.positions)),
            tuple(alpha * a + beta * b for a, b in zip(s1.velocities, s2.velocities)),
        )
        t1 = integrate(canonical_system, s1, 1e-6, 2000, 200)
        t2 = integrate(canonical_system, s2, 1e-6, 2000, 200)
        tm = integrate(canonical_system, mixed, 1e-6, 2000, 200)
        for a, b, m_ in zip(t1.samples, t2.samples, tm.samples):
            for va, vb, vm in zip(a.positions + a.velocities,
                                  b.positions + b.velocities,
                                  m_.positions + m_.velocities):
                expect = alpha * va + beta * vb
                assert abs(vm - expect) <= 1e-9 * max(1.0, abs(expect))

    def test_mode_purity_under_rk4(self, canonical_system):
        from oscbench import characteristic_frequencies, mode_ratios
        _, omega2 = characteristic_frequencies(M, C)
        _, r2 = mode_ratios(M, C)
        period = 2 * math.pi / omega2
        nsteps = math.ceil(period / 1e-6)
        traj = integrate(canonical_system, PhaseState((1.0, r2), (0.0, 0.0)),
                         1e-6, nsteps, 10)
        impurity = max(abs(s.positions[1] - r2 * s.positions[0]) for s in traj.samples)
        assert impurity < 1e-4
