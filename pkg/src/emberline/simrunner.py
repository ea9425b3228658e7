"""Single-run driver: scenario description in, detector verdict out.

A :class:`RunSpec` describes one observation window — line, conductor,
operating point, weather, an optional ground fire, optional series-reactance
switching events, an optional PMU timing fault, and the measurement/detector
configuration.  :func:`run` packs it into the flat arrays the simulation
kernel consumes, executes the kernel, and wraps the outputs.

Everything that involves rounding, random draws, or data-dependent control
flow happens here in the driver, identically for both kernel backends; the
kernels themselves are pure sample loops over pre-built arrays.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import _kernel_layout as L
from . import constants as C
from . import kernel as kernel_mod
from .kernel import backend_module
from .detector import MA_DEN_FLOOR, DetectorConfig
from .exceptions import ConfigError, DomainError, InfeasibleLoadError
from .measurement import DEN_EPS_REL, MeasurementSpec, build_noise
from .phasors import LineSegment, solve_rect
from .thermal import (
    ConductorThermalParams,
    FireCalibration,
    FireSource,
    default_fire_calibration,
    equilibrium_temperature,
)

FAULT_MODES = ("frozen", "delay")
FAULT_STREAMS = ("sending", "receiving", "both")


@dataclass(frozen=True)
class Weather:
    """Ambient conditions, held constant apart from fire heating."""

    t_ambient: float = 25.0
    wind_speed: float = 0.61
    elevation: float = 0.0
    q_solar: float = 0.0

    def __post_init__(self) -> None:
        if not -60.0 <= self.t_ambient <= 60.0:
            raise DomainError(f"t_ambient {self.t_ambient} C out of range")
        if self.wind_speed < 0.0:
            raise DomainError("wind_speed must be >= 0 m/s")
        if self.elevation < 0.0:
            raise DomainError("elevation must be >= 0 m")
        if self.q_solar < 0.0:
            raise DomainError("q_solar must be >= 0 W/m")


@dataclass(frozen=True)
class ReactanceEvent:
    """Series-reactance step: at ``time_s`` the total X becomes ``factor`` x base."""

    time_s: float
    factor: float

    def __post_init__(self) -> None:
        if self.time_s < 0.0:
            raise DomainError("event time must be >= 0 s")
        if self.factor <= 0.0:
            raise DomainError("reactance factor must be > 0")


@dataclass(frozen=True)
class TimingFault:
    """A PMU stream misbehaving in time.

    ``frozen``: from ``onset_s`` the stream repeats its last pre-onset sample.
    ``delay``: from ``onset_s`` the stream serves samples ``delay_s`` old.
    ``stream`` picks which end of the line is affected.
    """

    mode: str
    stream: str = "receiving"
    onset_s: float = 0.0
    delay_s: float = 0.0

    def __post_init__(self) -> None:
        if self.mode not in FAULT_MODES:
            raise ConfigError(f"timing fault mode must be one of {FAULT_MODES}")
        if self.stream not in FAULT_STREAMS:
            raise ConfigError(f"timing fault stream must be one of {FAULT_STREAMS}")
        if self.onset_s < 0.0:
            raise DomainError("fault onset must be >= 0 s")
        if self.mode == "delay" and self.delay_s <= 0.0:
            raise DomainError("delay faults need delay_s > 0")


@dataclass(frozen=True)
class RunSpec:
    """One simulated observation window."""

    line: LineSegment
    conductor: ConductorThermalParams
    load_p: float
    load_q: float
    source_voltage: float = C.DEFAULT_VOLTAGE_PHASE
    shunt_compensation: float = 0.0
    weather: Weather = field(default_factory=Weather)
    fire: FireSource | None = None
    fire_calibration: FireCalibration | None = None
    duration_s: float = 0.5
    initial_conductor_temp: float | None = None
    measurement: MeasurementSpec = field(default_factory=MeasurementSpec)
    detector: DetectorConfig = field(default_factory=DetectorConfig)
    reactance_events: tuple[ReactanceEvent, ...] = ()
    timing_fault: TimingFault | None = None
    seed: int | None = None

    def __post_init__(self) -> None:
        if self.source_voltage <= 0.0:
            raise DomainError("source_voltage must be > 0 V")
        if self.load_p < 0.0:
            raise DomainError("load_p must be >= 0 W")
        if self.shunt_compensation < 0.0:
            raise DomainError("shunt_compensation must be >= 0 S")
        if self.duration_s <= 0.0:
            raise DomainError("duration_s must be > 0")

    def n_samples(self) -> int:
        return int(round(self.duration_s * self.detector.sample_rate))


@dataclass
class RunResult:
    """Outputs of one simulated window."""

    backend: str
    sample_rate: float
    n_samples: int
    n_done: int
    t_c_start: float
    t_c_end: float
    tan_true_start: float
    tan_true_end: float
    p_r0: float
    q_r0: float
    i_rms0: float
    ma_last: float
    control1_trip_index: int | None
    control2_trip_index: int | None
    restart_count: int
    first_restart_index: int | None
    invalid_samples: int
    infeasible_at: int | None
    initial_temp_from_equilibrium: bool
    trace: dict[str, np.ndarray] | None = None

    @property
    def delta_t_c(self) -> float:
        return self.t_c_end - self.t_c_start

    @property
    def tripped(self) -> bool:
        return self.control1_trip_index is not None or self.control2_trip_index is not None

    def trip_time(self, control: int = 1) -> float | None:
        if control == 1:
            idx = self.control1_trip_index
        elif control == 2:
            idx = self.control2_trip_index
        else:
            raise ConfigError("control must be 1 or 2")
        return None if idx is None else idx / self.sample_rate

    @property
    def completed(self) -> bool:
        return self.infeasible_at is None and self.n_done == self.n_samples


class Workspace:
    """Reusable kernel scratch arrays, grown on demand."""

    def __init__(self) -> None:
        self.dp = np.zeros(L.DP_SIZE)
        self.ip = np.zeros(L.IP_SIZE, dtype=np.int64)
        self.out_f = np.zeros(L.OUT_F_SIZE)
        self.out_i = np.zeros(L.OUT_I_SIZE, dtype=np.int64)
        self._n = 0
        self._w = 0
        self._ring = 0
        self._traced = 0
        self.meas = np.zeros((0, L.MEAS_COLS))
        self.ta = np.zeros(0)
        self.raw_ring = np.zeros(0)
        self.raw_valid = np.zeros(0, dtype=np.uint8)
        self.ma_ring = np.zeros(0)
        self.trace = np.zeros((1, L.TRACE_COLS))

    def ensure(self, n: int, window: int, max_lag: int, want_trace: bool) -> None:
        if n > self._n:
            self.meas = np.zeros((n, L.MEAS_COLS))
            self.ta = np.zeros(n)
            self._n = n
        if window > self._w:
            self.raw_ring = np.zeros(window)
            self.raw_valid = np.zeros(window, dtype=np.uint8)
            self._w = window
        if max_lag + 1 > self._ring:
            self.ma_ring = np.zeros(max_lag + 1)
            self._ring = max_lag + 1
        if want_trace and n > self._traced:
            self.trace = np.full((n, L.TRACE_COLS), np.nan)
            self._traced = n


def _series_current_magnitude(spec: RunSpec, t_c: float) -> float:
    """True series current at conductor temperature t_c, A (for init only)."""
    r = spec.line.r_ref * (1.0 + spec.line.alpha * (t_c - spec.line.t_ref))
    b_node = 0.5 * spec.line.b_shunt + spec.shunt_compensation
    ok, _, _, ir_re, ir_im = solve_rect(
        spec.source_voltage, 0.0, r, spec.line.x, b_node, spec.load_p, spec.load_q
    )
    if not ok:
        raise InfeasibleLoadError(
            f"no steady state for load ({spec.load_p:.6g} W, {spec.load_q:.6g} var) "
            f"at t_c={t_c:.3g} C during initialisation"
        )
    return float(np.hypot(ir_re, ir_im))


def resolve_initial_temp(spec: RunSpec) -> float:
    """Initial conductor temperature: explicit, or pre-window thermal equilibrium.

    The equilibrium is computed at the base ambient (no fire contribution:
    the window starts in whatever state the line reached before anything was
    burning) with a fixed-point iteration between the electrical solve and
    the heat balance, since the current depends on the resistance and the
    resistance on the temperature.
    """
    if spec.initial_conductor_temp is not None:
        return spec.initial_conductor_temp
    w = spec.weather
    t = w.t_ambient
    for _ in range(60):
        i_mag = _series_current_magnitude(spec, t)
        t_new = equilibrium_temperature(
            spec.conductor, spec.line, i_mag, w.t_ambient, w.wind_speed, w.q_solar, w.elevation
        )
        if abs(t_new - t) < 1e-9:
            return t_new
        t = t_new
    return t


def _ambient_series(spec: RunSpec, n: int) -> np.ndarray:
    dt = 1.0 / spec.detector.sample_rate
    ta = np.full(n, spec.weather.t_ambient)
    if spec.fire is not None:
        cal = spec.fire_calibration or default_fire_calibration()
        factor = cal.factor_at(spec.fire.distance)
        t_axis = np.arange(n) * dt
        burn = np.maximum(t_axis - spec.fire.ignition_time, 0.0)
        ta += factor * np.sqrt(burn)
    return ta


def _pack(spec: RunSpec, ws: Workspace, t_c0: float, want_trace: bool) -> tuple[np.ndarray, np.ndarray]:
    """Fill dp/ip and the event arrays; returns (ev_idx, ev_fac)."""
    det = spec.detector
    meas = spec.measurement
    fs = det.sample_rate
    n = spec.n_samples()
    if n < 1:
        raise DomainError("window too short for one sample")

    dp = ws.dp
    dp[L.DP_DT] = 1.0 / fs
    dp[L.DP_VS_MAG] = spec.source_voltage
    dp[L.DP_R_REF] = spec.line.r_ref
    dp[L.DP_ALPHA] = spec.line.alpha
    dp[L.DP_T_REF] = spec.line.t_ref
    dp[L.DP_X0] = spec.line.x
    dp[L.DP_B_R_NODE] = 0.5 * spec.line.b_shunt + spec.shunt_compensation
    dp[L.DP_B_S_NODE] = 0.5 * spec.line.b_shunt
    dp[L.DP_P_LOAD] = spec.load_p
    dp[L.DP_Q_LOAD] = spec.load_q
    dp[L.DP_T_C0] = t_c0
    dp[L.DP_T_A0] = spec.weather.t_ambient
    dp[L.DP_V_W] = spec.weather.wind_speed
    dp[L.DP_ELEVATION] = spec.weather.elevation
    dp[L.DP_Q_SOLAR] = spec.weather.q_solar
    dp[L.DP_DIAM] = spec.conductor.diameter
    dp[L.DP_EMISS] = spec.conductor.emissivity
    dp[L.DP_M_CP] = spec.conductor.m_cp
    dp[L.DP_LEN_M] = spec.line.length * 1000.0
    dp[L.DP_V_MAG_LIM] = meas.v_mag_limit
    dp[L.DP_I_MAG_LIM] = meas.i_mag_limit
    dp[L.DP_I_MAG_LIM_LOW] = meas.i_mag_limit_low
    thr = meas.i_low_threshold * meas.nominal_current
    dp[L.DP_I_LOW_THR_SQ] = thr * thr
    dp[L.DP_ANG_LIM_RAD] = meas.angle_limit_rad
    dp[L.DP_TVE_LIM] = meas.tve_limit
    dp[L.DP_RATIO_MARGIN] = det.ratio_margin
    dp[L.DP_STEP_THRESH] = det.step_change_threshold
    dp[L.DP_DEN_EPS_REL] = DEN_EPS_REL
    dp[L.DP_MA_DEN_FLOOR] = MA_DEN_FLOOR

    ip = ws.ip
    ip[L.IP_N] = n
    ip[L.IP_NOISE_IID] = 1 if meas.time_structure == "iid" else 0
    ip[L.IP_WANT_TRACE] = 1 if want_trace else 0
    fault = spec.timing_fault
    if fault is None:
        ip[L.IP_FAULT_MODE] = L.FAULT_NONE
        ip[L.IP_FAULT_ONSET] = 0
        ip[L.IP_FAULT_DELAY] = 0
        ip[L.IP_FAULT_MASK] = 0
    else:
        ip[L.IP_FAULT_MODE] = L.FAULT_FROZEN if fault.mode == "frozen" else L.FAULT_DELAY
        ip[L.IP_FAULT_ONSET] = int(round(fault.onset_s * fs))
        ip[L.IP_FAULT_DELAY] = int(round(fault.delay_s * fs))
        mask = 0
        if fault.stream in ("sending", "both"):
            mask |= L.MASK_SENDING
        if fault.stream in ("receiving", "both"):
            mask |= L.MASK_RECEIVING
        ip[L.IP_FAULT_MASK] = mask
    lag1, lag_a, lag_b, lag_c = det.lag_table
    ip[L.IP_LAG1] = lag1
    ip[L.IP_LAG_A] = lag_a
    ip[L.IP_LAG_B] = lag_b
    ip[L.IP_LAG_C] = lag_c
    ip[L.IP_WINDOW] = det.window_samples

    events = sorted(spec.reactance_events, key=lambda e: e.time_s)
    ev_idx = np.array([int(round(e.time_s * fs)) for e in events], dtype=np.int64)
    ev_fac = np.array([e.factor for e in events], dtype=float)
    return ev_idx, ev_fac


def _trace_dict(spec: RunSpec, ws: Workspace, n_done: int) -> dict[str, np.ndarray]:
    det = spec.detector
    dt = 1.0 / det.sample_rate
    tr = ws.trace
    out: dict[str, np.ndarray] = {"t": np.arange(n_done) * dt}
    names = [
        ("t_a", L.T_TA),
        ("t_c", L.T_TC),
        ("r_ohm", L.T_R),
        ("x_ohm", L.T_X),
        ("tan_true", L.T_TAN_TRUE),
        ("tan_meas", L.T_TAN_MEAS),
        ("tan_held", L.T_TAN_HELD),
        ("ma", L.T_MA),
        (f"ratio_{det.ratio_lags_cycles[0]}cyc", L.T_RATIO_A),
        (f"ratio_{det.ratio_lags_cycles[1]}cyc", L.T_RATIO_B),
        (f"ratio_{det.ratio_lags_cycles[2]}cyc", L.T_RATIO_C),
        ("i_mag", L.T_I_MAG),
    ]
    for name, col in names:
        out[name] = tr[:n_done, col].copy()
    for name, col in [
        ("vs_re", L.M_VS_RE),
        ("vs_im", L.M_VS_IM),
        ("vr_re", L.M_VR_RE),
        ("vr_im", L.M_VR_IM),
        ("ir_re", L.M_IR_RE),
        ("ir_im", L.M_IR_IM),
    ]:
        out[f"meas_{name}"] = ws.meas[:n_done, col].copy()
    return out


def run(
    spec: RunSpec,
    *,
    want_trace: bool = False,
    rng: np.random.Generator | None = None,
    workspace: Workspace | None = None,
    backend=None,
) -> RunResult:
    """Simulate one window and return the wrapped kernel outputs.

    ``rng`` overrides the spec seed (used by the sweep driver, which manages
    seeding); ``workspace`` allows scratch reuse across many runs;
    ``backend`` pins a kernel: a name ("compiled", "python", "auto") or an
    already-imported kernel module (default: the active backend).
    """
    if backend is None:
        impl = kernel_mod
    elif isinstance(backend, str):
        impl = backend_module(backend)
    else:
        impl = backend
    ws = workspace if workspace is not None else Workspace()
    det = spec.detector
    n = spec.n_samples()
    max_lag = det.lag_samples(det.ratio_lags_cycles[-1])
    ws.ensure(n, det.window_samples, max_lag, want_trace)

    t_c0 = resolve_initial_temp(spec)
    ev_idx, ev_fac = _pack(spec, ws, t_c0, want_trace)
    ws.ta[:n] = _ambient_series(spec, n)
    if rng is None:
        rng = np.random.default_rng(spec.seed)
    noise = build_noise(spec.measurement, n, rng)

    impl.run_kernel(
        ws.dp,
        ws.ip,
        noise,
        ev_idx,
        ev_fac,
        ws.ta[:n],
        ws.meas[:n],
        ws.raw_ring[: det.window_samples],
        ws.raw_valid[: det.window_samples],
        ws.ma_ring[: max_lag + 1],
        ws.trace[:n] if want_trace else ws.trace[:1],
        ws.out_f,
        ws.out_i,
    )

    of = ws.out_f
    oi = ws.out_i
    n_done = int(oi[L.OI_N_DONE])

    def _opt(idx: int) -> int | None:
        v = int(oi[idx])
        return None if v < 0 else v

    return RunResult(
        backend=getattr(impl, "BACKEND", None) or getattr(impl, "ACTIVE_BACKEND"),
        sample_rate=det.sample_rate,
        n_samples=n,
        n_done=n_done,
        t_c_start=float(of[L.OF_T_C_START]),
        t_c_end=float(of[L.OF_T_C_END]),
        tan_true_start=float(of[L.OF_TAN_TRUE_START]),
        tan_true_end=float(of[L.OF_TAN_TRUE_END]),
        p_r0=float(of[L.OF_P_R0]),
        q_r0=float(of[L.OF_Q_R0]),
        i_rms0=float(of[L.OF_I_RMS0]),
        ma_last=float(of[L.OF_MA_LAST]),
        control1_trip_index=_opt(L.OI_TRIP1),
        control2_trip_index=_opt(L.OI_TRIP2),
        restart_count=int(oi[L.OI_RESTART_COUNT]),
        first_restart_index=_opt(L.OI_FIRST_RESTART),
        invalid_samples=int(oi[L.OI_INVALID_COUNT]),
        infeasible_at=_opt(L.OI_INFEASIBLE_AT),
        initial_temp_from_equilibrium=spec.initial_conductor_temp is None,
        trace=_trace_dict(spec, ws, n_done) if want_trace else None,
    )


# --------------------------------------------------------------------------
# Backend benchmark
# --------------------------------------------------------------------------


def benchmark_backends(spec: RunSpec | None = None, repeats: int = 5) -> dict:
    """Time both kernel backends on identical pre-packed inputs.

    The timing covers only the kernel call (driver packing runs once up
    front), so the numbers reflect the sample loop itself.  Returns
    per-sample timings in nanoseconds plus the speedup; the ``identical``
    flag reports whether every output array matched bit-for-bit (NaNs
    compared positionally).
    """
    if spec is None:
        spec = example_run_spec(seed=7)
    names = ["python"]
    if kernel_mod.compiled_available():
        names.insert(0, "compiled")

    det = spec.detector
    n = spec.n_samples()
    max_lag = det.lag_samples(det.ratio_lags_cycles[-1])
    ws = Workspace()
    ws.ensure(n, det.window_samples, max_lag, False)
    t_c0 = resolve_initial_temp(spec)
    ev_idx, ev_fac = _pack(spec, ws, t_c0, False)
    ws.ta[:n] = _ambient_series(spec, n)
    noise = build_noise(spec.measurement, n, np.random.default_rng(spec.seed))
    args = (
        ws.dp,
        ws.ip,
        noise,
        ev_idx,
        ev_fac,
        ws.ta[:n],
        ws.meas[:n],
        ws.raw_ring[: det.window_samples],
        ws.raw_valid[: det.window_samples],
        ws.ma_ring[: max_lag + 1],
        ws.trace[:1],
        ws.out_f,
        ws.out_i,
    )

    results: dict[str, dict] = {}
    outputs: dict[str, tuple] = {}
    for name in names:
        impl = kernel_mod.backend_module(name)
        best = None
        for _ in range(max(1, repeats)):
            t0 = time.perf_counter_ns()
            impl.run_kernel(*args)
            elapsed = time.perf_counter_ns() - t0
            best = elapsed if best is None else min(best, elapsed)
        outputs[name] = (ws.out_f.copy(), ws.out_i.copy(), ws.meas[:n].copy())
        results[name] = {"ns_per_sample": best / n, "run_ms": best / 1e6}

    identical = None
    if len(names) == 2:
        identical = all(
            np.array_equal(left, right, equal_nan=True)
            for left, right in zip(outputs[names[0]], outputs[names[1]])
        )
    return {
        "n_samples": n,
        "backends": results,
        "identical": identical,
        "speedup": (
            results["python"]["ns_per_sample"] / results["compiled"]["ns_per_sample"]
            if "compiled" in results
            else None
        ),
    }


def example_run_spec(seed: int | None = 7, fire_distance: float | None = 2.0) -> RunSpec:
    """A plausible fully-specified scenario (used by docs, demos, benchmarks)."""
    line = LineSegment(r_ref=1.4, x=2.8, length=10.0, b_shunt=3.2e-5)
    conductor = ConductorThermalParams(diameter=0.02814, m_cp=1310.0, emissivity=0.5, rated_current=900.0)
    fire = None if fire_distance is None else FireSource(distance=fire_distance, ignition_time=0.0)
    v = C.DEFAULT_VOLTAGE_PHASE
    return RunSpec(
        line=line,
        conductor=conductor,
        load_p=0.95 * v * 750.0,
        load_q=0.31 * v * 750.0,
        source_voltage=v,
        weather=Weather(t_ambient=25.0, wind_speed=0.61),
        fire=fire,
        seed=seed,
    )
