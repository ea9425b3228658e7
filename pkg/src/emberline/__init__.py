"""emberline: overhead-line fire-detection simulator and analysis toolkit.

The package simulates a two-terminal PMU installation on an overhead line
segment while a nearby ground fire heats the surrounding air, and runs a
slope-of-tan-delta trip logic against the synthetic measurement streams.
It also ships a Monte-Carlo sweep harness and a small decision-tree miner
for extracting trip conditions from sweep datasets.
"""

from .exceptions import (
    CalibrationError,
    ConfigError,
    DomainError,
    EmberlineError,
    InfeasibleLoadError,
)
from .phasors import (
    LineSegment,
    OperatingPoint,
    Phasor,
    SteadyState,
    line_resistance,
    receiving_power,
    solve_rect,
    solve_steady_state,
    true_tan_delta,
)
from .thermal import (
    ConductorThermalParams,
    FireCalibration,
    FireSource,
    calibrate_from_table,
    conductor_catalogue,
    default_fire_calibration,
    equilibrium_temperature,
    fire_delta_ta,
    heat_rate,
    load_fire_table,
    step_conductor_temp,
)
from .measurement import (
    MeasurementSpec,
    apply_measurement_errors,
    build_noise,
    tan_delta_from_phasors,
    tan_delta_from_scalars,
)
from .detector import DetectorConfig, DetectorResult, SlopeRatioDetector, run_detector
from .kernel import ACTIVE_BACKEND, compiled_available
from .simrunner import (
    ReactanceEvent,
    RunResult,
    RunSpec,
    TimingFault,
    Weather,
    benchmark_backends,
    example_run_spec,
    run,
)
from .montecarlo import GridDimension, SweepConfig, SweepResult, run_sweep, summarize
from .dtree import DecisionTree, entropy, extract_rules, fit_tree
from .configio import load_run_spec, load_sweep_config

__version__ = "0.1.0"

__all__ = [
    "ACTIVE_BACKEND",
    "CalibrationError",
    "ConductorThermalParams",
    "ConfigError",
    "DecisionTree",
    "DetectorConfig",
    "DetectorResult",
    "DomainError",
    "EmberlineError",
    "FireCalibration",
    "FireSource",
    "GridDimension",
    "InfeasibleLoadError",
    "LineSegment",
    "MeasurementSpec",
    "OperatingPoint",
    "Phasor",
    "ReactanceEvent",
    "RunResult",
    "RunSpec",
    "SlopeRatioDetector",
    "SteadyState",
    "SweepConfig",
    "SweepResult",
    "TimingFault",
    "Weather",
    "apply_measurement_errors",
    "benchmark_backends",
    "build_noise",
    "calibrate_from_table",
    "compiled_available",
    "conductor_catalogue",
    "default_fire_calibration",
    "entropy",
    "equilibrium_temperature",
    "example_run_spec",
    "extract_rules",
    "fire_delta_ta",
    "fit_tree",
    "heat_rate",
    "line_resistance",
    "load_fire_table",
    "load_run_spec",
    "load_sweep_config",
    "receiving_power",
    "run",
    "run_detector",
    "run_sweep",
    "solve_rect",
    "solve_steady_state",
    "step_conductor_temp",
    "summarize",
    "tan_delta_from_phasors",
    "tan_delta_from_scalars",
    "true_tan_delta",
    "__version__",
]
