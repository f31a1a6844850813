"""oscbench: coupled spring-mass simulator and multi-core latency benchmark.

The package pairs an exact modal oracle with a fixed-step RK4 integrator,
runs the integration on a thread-per-equation engine with configurable
barriers, memory layout and core pinning, and measures per-step latency,
jitter and core migration along the way.
"""

from .oscillator import (
    DimensionMismatchError,
    LengthMismatchError,
    NonFiniteStateError,
    NonPositiveParameterError,
    OscillatorSystem,
    PhaseDerivative,
    PhaseState,
    Trajectory,
    build_chain,
    derivative,
    energy,
    integrate,
    rk4_step,
)
from .modal import (
    Analytic2DOF,
    ErrorReport,
    analytic_solution,
    characteristic_frequencies,
    compare,
    eval_analytic,
    mode_ratios,
)
from .timing import (
    EmptySamplesError,
    LatencyStats,
    TickReading,
    calibrate_overhead,
    current_core_id,
    elapsed,
    now,
    stats,
)
from .parallel import (
    BarrierTimeoutError,
    BenchScenario,
    InvalidCoreError,
    InvalidLineSizeError,
    MigrationReport,
    PinUnsupportedError,
    RunResult,
    SharedPhase,
    StageBarrier,
    make_shared,
    pin_to_core,
    run_parallel,
    set_priority,
)
from .harness import (
    BenchConfig,
    BenchRunner,
    ConfigParseError,
    ConfigValidationError,
    ScenarioResult,
    VerifyReport,
    load_config,
    parse_config,
    verify,
    write_csv,
)

__version__ = "0.1.0"
