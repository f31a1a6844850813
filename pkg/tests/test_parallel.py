import math
import os
import threading

import pytest

from oscbench import PhaseState, build_chain, integrate
from oscbench.parallel import (
    BarrierTimeoutError,
    BenchScenario,
    ExclusiveWriteError,
    InvalidCoreError,
    InvalidLineSizeError,
    SharedPhase,
    StageBarrier,
    make_shared,
    pin_to_core,
    pinning_supported,
    run_parallel,
    set_priority,
)
from oscbench.harness import trajectories_identical
from oscbench.timing import core_id_supported, current_core_id

from conftest import X0, V0, trajectory_bits


class TestSharedPhase:
    def test_padded_addresses(self):
        shared = make_shared("padded", 4, 64)
        addrs = [shared.cell_address(i) for i in range(4)]
        assert all(a % 64 == 0 for a in addrs)
        deltas = [abs(a - b) for i, a in enumerate(addrs) for b in addrs[i + 1:]]
        assert all(d >= 64 for d in deltas)

    def test_packed_within_one_line(self):
        shared = make_shared("packed", 4, 64)
        addrs = [shared.cell_address(i) for i in range(4)]
        assert [b - a for a, b in zip(addrs, addrs[1:])] == [8, 8, 8]
        assert addrs[0] // 64 == (addrs[3] + 7) // 64

    def test_randomized_padded_invariants(self):
        import random
        from oscbench.harness import check_padded_invariants, check_packed_invariants
        rng = random.Random(3)
        for _ in range(200):
            nvars = rng.randint(2, 16)
            line = rng.choice((64, 128, 256))
            assert check_padded_invariants(make_shared("padded", nvars, line))
            assert check_packed_invariants(make_shared("packed", nvars, line))

    def test_invalid_line_size(self):
        with pytest.raises(InvalidLineSizeError):
            make_shared("padded", 4, 7)
        with pytest.raises(InvalidLineSizeError):
            make_shared("packed", 4, 4)

    def test_starts_zeroed(self):
        assert make_shared("padded", 6, 64).snapshot() == [0.0] * 6

    def test_publish_then_snapshot(self):
        shared = make_shared("packed", 4, 64)
        shared.publish(2, 7.5)
        snap = shared.snapshot()
        assert snap == [0.0, 0.0, 7.5, 0.0]
        assert isinstance(snap[2], float)

    def test_publish_out_of_range(self):
        shared = make_shared("padded", 4, 64)
        with pytest.raises(IndexError):
            shared.publish(9, 1.0)
        with pytest.raises(IndexError):
            shared.publish(-1, 1.0)

    def test_exclusive_writer_enforced(self):
        shared = make_shared("padded", 4, 64)
        shared.publish(1, 1.0, writer=0)
        shared.publish(1, 2.0, writer=0)
        with pytest.raises(ExclusiveWriteError):
            shared.publish(1, 3.0, writer=1)

    def test_concurrent_snapshots_identical(self):
        shared = make_shared("padded", 4, 64)
        for i, v in enumerate((1.0, 2.0, 3.0, 4.0)):
            shared.publish(i, v)
        barrier = StageBarrier("countdown-event", 4)
        copies = [None] * 4

        def worker(w):
            barrier.wait()
            copies[w] = shared.snapshot()

        threads = [threading.Thread(target=worker, args=(w,)) for w in range(4)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert all(c == [1.0, 2.0, 3.0, 4.0] for c in copies)

    def test_concurrent_distinct_writers_no_lost_updates(self):
        # Two writers own one cell each; every generation both publish and
        # both must observe each other's value after the barrier.
        shared = make_shared("packed", 2, 64)
        barrier = StageBarrier("countdown-event", 2)
        iterations = 10_000
        losses = [0, 0]

        def worker(w):
            lost = 0
            for i in range(1, iterations + 1):
                shared.publish(w, float(i), writer=w)
                barrier.wait()
                snap = shared.snapshot()
                if snap[0] != float(i) or snap[1] != float(i):
                    lost += 1
                barrier.wait()
            losses[w] = lost

        threads = [threading.Thread(target=worker, args=(w,)) for w in range(2)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert losses == [0, 0]


class TestStageBarrier:
    def test_single_party_counts_generations(self):
        barrier = StageBarrier("countdown-event", 1)
        assert [barrier.wait() for _ in range(5)] == [1, 2, 3, 4, 5]

    @pytest.mark.parametrize("kind", ["countdown-event", "spin"])
    def test_generation_agreement(self, kind):
        barrier = StageBarrier(kind, 4)
        rounds = 500
        log = [[] for _ in range(4)]

        def worker(w):
            for _ in range(rounds):
                log[w].append(barrier.wait())

        threads = [threading.Thread(target=worker, args=(w,)) for w in range(4)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        expected = list(range(1, rounds + 1))
        assert all(entries == expected for entries in log)

    @pytest.mark.parametrize("kind", ["countdown-event", "spin"])
    def test_no_skew_small_stress(self, kind):
        from oscbench.harness import stress_barrier
        result = stress_barrier(kind, 4, 3000)
        assert result.skew_violations == 0
        assert result.final_generation == 3000

    @pytest.mark.parametrize("kind", ["countdown-event", "spin"])
    def test_watchdog_timeout(self, kind):
        barrier = StageBarrier(kind, 2, timeout=0.05)
        with pytest.raises(BarrierTimeoutError):
            barrier.wait()

    def test_abort_unblocks_waiters(self):
        from oscbench.parallel import BarrierAbortedError
        barrier = StageBarrier("countdown-event", 2)
        seen = []

        def waiter():
            try:
                barrier.wait()
            except BarrierAbortedError:
                seen.append("aborted")

        t = threading.Thread(target=waiter)
        t.start()
        barrier.abort()
        t.join(timeout=5)
        assert not t.is_alive()
        assert seen == ["aborted"]

    def test_rejects_bad_arguments(self):
        with pytest.raises(ValueError):
            StageBarrier("bogus", 2)
        with pytest.raises(ValueError):
            StageBarrier("spin", 0)


class TestPinningAndPriority:
    @pytest.mark.skipif(not pinning_supported(), reason="no affinity control")
    def test_pin_to_core_sticks(self):
        saved = os.sched_getaffinity(0)
        try:
            target = min(saved)
            pin_to_core(target)
            if core_id_supported():
                assert all(current_core_id() == target for _ in range(1000))
        finally:
            os.sched_setaffinity(0, saved)

    @pytest.mark.skipif(not pinning_supported(), reason="no affinity control")
    def test_invalid_core_rejected(self):
        with pytest.raises(InvalidCoreError):
            pin_to_core((os.cpu_count() or 1) + 64)
        with pytest.raises(InvalidCoreError):
            pin_to_core(-1)

    def test_priority_normal_applies(self):
        outcome = set_priority("normal")
        assert outcome.applied and outcome.level == "normal"

    def test_priority_elevated_reports_outcome(self):
        done = {}

        def worker():
            done["outcome"] = set_priority("elevated")

        t = threading.Thread(target=worker)
        t.start()
        t.join()
        outcome = done["outcome"]
        assert outcome.level == "elevated"
        assert isinstance(outcome.applied, bool)

    def test_priority_rejects_unknown_level(self):
        with pytest.raises(ValueError):
            set_priority("realtime")


class TestBenchScenario:
    def test_defaults_valid(self):
        sc = BenchScenario()
        assert sc.workers is None and sc.nsteps > sc.warmup

    def test_warmup_must_stay_below_nsteps(self):
        with pytest.raises(ValueError):
            BenchScenario(nsteps=10, warmup=10)

    def test_rejects_unknown_enums(self):
        with pytest.raises(ValueError):
            BenchScenario(layout="sparse")
        with pytest.raises(ValueError):
            BenchScenario(barrier="mutex")
        with pytest.raises(ValueError):
            BenchScenario(pin="sometimes")


class TestRunParallel:
    @pytest.fixture
    def system(self, canonical_system):
        return canonical_system

    @pytest.fixture
    def state(self):
        return PhaseState(X0, V0, 0.0)

    def reference(self, system, state, dt=1e-6, nsteps=120, stride=10):
        return integrate(system, state, dt, nsteps, stride)

    def test_single_worker_matches_sequential(self, system, state):
        sc = BenchScenario(workers=1, nsteps=120, stride=10, warmup=20)
        run = run_parallel(system, state, sc)
        ref = self.reference(system, state)
        assert trajectories_identical(run.trajectory, ref)
        assert trajectory_bits(run.trajectory) == trajectory_bits(ref)

    @pytest.mark.parametrize("workers", [2, 3, 4])
    def test_worker_counts_bitwise_identical(self, system, state, workers):
        sc = BenchScenario(workers=workers, nsteps=120, stride=10, warmup=20)
        run = run_parallel(system, state, sc)
        assert trajectory_bits(run.trajectory) == trajectory_bits(
            self.reference(system, state))

    @pytest.mark.parametrize("layout", ["packed", "padded"])
    @pytest.mark.parametrize("barrier", ["countdown-event", "spin"])
    @pytest.mark.parametrize("pin", ["none", "per-core"])
    def test_all_scenario_axes_bitwise_identical(self, system, state, layout, barrier, pin):
        sc = BenchScenario(workers=4, pin=pin, layout=layout, barrier=barrier,
                           nsteps=80, stride=8, warmup=10)
        run = run_parallel(system, state, sc)
        ref = self.reference(system, state, nsteps=80, stride=8)
        assert trajectory_bits(run.trajectory) == trajectory_bits(ref)

    def test_three_mass_chain_with_uneven_ownership(self):
        system = build_chain([0.5, 1.0, 2.0], [3.0, 4.0, 5.0])
        state = PhaseState((0.3, -0.2, 0.7), (0.1, 0.0, -0.4))
        sc = BenchScenario(workers=4, dt=1e-3, nsteps=100, stride=10, warmup=10)
        run = run_parallel(system, state, sc)
        ref = integrate(system, state, 1e-3, 100, 10)
        assert trajectory_bits(run.trajectory) == trajectory_bits(ref)

    def test_latency_sample_counts(self, system, state):
        sc = BenchScenario(workers=2, nsteps=100, stride=100, warmup=30)
        run = run_parallel(system, state, sc)
        assert all(len(per) == 70 for per in run.step_latencies)
        assert all(s.count == 70 for s in run.latency)
        assert all(s.min <= s.p50 <= s.p99 <= s.max for s in run.latency)

    @pytest.mark.skipif(not pinning_supported() or not core_id_supported(),
                        reason="needs pinning and core sampling")
    def test_pinned_run_has_zero_migrations(self, system, state):
        workers = min(2, os.cpu_count() or 1)
        sc = BenchScenario(workers=workers, pin="per-core", nsteps=400,
                           stride=400, warmup=0)
        run = run_parallel(system, state, sc)
        assert run.migration.supported
        for worker in run.migration.per_worker:
            assert worker.migrations == 0
            assert len(worker.cores_seen) == 1
            assert worker.migrations < worker.samples

    def test_unpinned_run_reports_samples(self, system, state):
        sc = BenchScenario(workers=2, pin="none", nsteps=50, stride=50, warmup=0)
        run = run_parallel(system, state, sc)
        if run.migration.supported:
            assert all(w.samples > 0 for w in run.migration.per_worker)

    def test_divergence_propagates_without_deadlock(self, system, state):
        from oscbench import NonFiniteStateError
        sc = BenchScenario(workers=4, dt=1e6, nsteps=60, stride=10, warmup=0)
        with pytest.raises(NonFiniteStateError):
            run_parallel(system, state, sc)

    def test_too_many_workers_rejected(self, system, state):
        with pytest.raises(ValueError):
            run_parallel(system, state, BenchScenario(workers=5, nsteps=10, stride=1, warmup=0))

    def test_time_accumulation_matches_sequential(self, system, state):
        sc = BenchScenario(workers=4, nsteps=97, stride=1, warmup=0)
        run = run_parallel(system, state, sc)
        ref = integrate(system, state, sc.dt, 97, 1)
        assert run.trajectory.times() == ref.times()

    def test_exclusive_ownership_holds_at_scale(self, system, state):
        # Writer tracking is always on inside the engine; 6 250 steps of a
        # 4-variable system is 100 000 tracked publishes with zero violations
        # expected (a violation raises ExclusiveWriteError).
        sc = BenchScenario(workers=4, nsteps=6_250, stride=625, warmup=0,
                           sample_core_every=10_000)
        run = run_parallel(system, state, sc)
        ref = integrate(system, state, sc.dt, 6_250, 625)
        assert trajectory_bits(run.trajectory) == trajectory_bits(ref)
