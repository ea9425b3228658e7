"""Config-file loading: YAML (or JSON) documents into run/sweep objects.

Documents carry a ``schema: emberline/<kind> v1`` header so a file can't be
fed to the wrong subcommand silently.  Unknown keys are rejected by name —
a typo in an error bound should fail loudly, not quietly simulate defaults.
"""

from __future__ import annotations

import json
from dataclasses import fields

import yaml

from .detector import DetectorConfig
from .exceptions import ConfigError
from .measurement import MeasurementSpec
from .montecarlo import DEFAULT_GRID, GridDimension, SweepConfig
from .phasors import LineSegment
from .simrunner import ReactanceEvent, RunSpec, TimingFault, Weather
from .thermal import ConductorThermalParams, FireSource, conductor_catalogue

RUN_SCHEMA = "emberline/run v1"
SWEEP_SCHEMA = "emberline/sweep-config v1"


def _load_doc(path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    stripped = text.lstrip()
    if stripped.startswith("{"):
        doc = json.loads(text)
    else:
        doc = yaml.safe_load(text)
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: expected a mapping at top level")
    return doc


def _check_schema(doc: dict, want: str, path) -> None:
    got = doc.get("schema")
    if got != want:
        raise ConfigError(f"{path}: schema must be {want!r}, got {got!r}")


def _take(doc: dict, allowed: dict[str, object], ctx: str) -> dict:
    """Return doc merged over defaults, rejecting unknown keys by name."""
    if not isinstance(doc, dict):
        raise ConfigError(f"{ctx}: expected a mapping, got {type(doc).__name__}")
    unknown = sorted(set(doc) - set(allowed))
    if unknown:
        raise ConfigError(f"{ctx}: unknown key {unknown[0]!r} (allowed: {', '.join(sorted(allowed))})")
    merged = dict(allowed)
    merged.update(doc)
    return merged


def _sub(doc: dict, key: str, ctx: str) -> dict:
    val = doc.get(key) or {}
    if not isinstance(val, dict):
        raise ConfigError(f"{ctx}: {key!r} must be a mapping")
    return val


def _line_from(doc: dict, ctx: str) -> LineSegment:
    d = _take(
        doc,
        {"r_ref": None, "x": None, "length_km": None, "b_shunt": 0.0, "alpha": 0.004, "t_ref": 20.0},
        ctx,
    )
    for key in ("r_ref", "x", "length_km"):
        if d[key] is None:
            raise ConfigError(f"{ctx}: {key!r} is required")
    return LineSegment(
        r_ref=float(d["r_ref"]),
        x=float(d["x"]),
        length=float(d["length_km"]),
        b_shunt=float(d["b_shunt"]),
        alpha=float(d["alpha"]),
        t_ref=float(d["t_ref"]),
    )


def _conductor_from(val, ctx: str) -> ConductorThermalParams:
    if isinstance(val, str):
        catalogue = conductor_catalogue()
        if val not in catalogue:
            raise ConfigError(f"{ctx}: unknown conductor {val!r} (catalogue: {', '.join(sorted(catalogue))})")
        return catalogue[val]
    if not isinstance(val, dict):
        raise ConfigError(f"{ctx}: conductor must be a catalogue name or a mapping")
    d = _take(
        val,
        {"diameter_m": None, "m_cp_j_per_m_c": None, "emissivity": 0.5, "rated_current_a": 0.0},
        ctx,
    )
    for key in ("diameter_m", "m_cp_j_per_m_c"):
        if d[key] is None:
            raise ConfigError(f"{ctx}: {key!r} is required")
    return ConductorThermalParams(
        diameter=float(d["diameter_m"]),
        m_cp=float(d["m_cp_j_per_m_c"]),
        emissivity=float(d["emissivity"]),
        rated_current=float(d["rated_current_a"]),
    )


def _weather_from(doc: dict, ctx: str) -> Weather:
    d = _take(doc, {"t_ambient": 25.0, "wind_speed": 0.61, "elevation": 0.0, "q_solar": 0.0}, ctx)
    return Weather(
        t_ambient=float(d["t_ambient"]),
        wind_speed=float(d["wind_speed"]),
        elevation=float(d["elevation"]),
        q_solar=float(d["q_solar"]),
    )


def _measurement_from(doc: dict, ctx: str) -> MeasurementSpec:
    defaults = {f.name: getattr(MeasurementSpec(), f.name) for f in fields(MeasurementSpec)}
    d = _take(doc, defaults, ctx)
    return MeasurementSpec(
        v_mag_limit=float(d["v_mag_limit"]),
        i_mag_limit=float(d["i_mag_limit"]),
        i_mag_limit_low=float(d["i_mag_limit_low"]),
        i_low_threshold=float(d["i_low_threshold"]),
        angle_limit_deg=float(d["angle_limit_deg"]),
        tve_limit=float(d["tve_limit"]),
        nominal_current=float(d["nominal_current"]),
        distribution=str(d["distribution"]),
        time_structure=str(d["time_structure"]),
    )


def _detector_from(doc: dict, ctx: str) -> DetectorConfig:
    defaults = {f.name: getattr(DetectorConfig(), f.name) for f in fields(DetectorConfig)}
    d = _take(doc, defaults, ctx)
    return DetectorConfig(
        sample_rate=float(d["sample_rate"]),
        system_frequency=float(d["system_frequency"]),
        ratio_lags_cycles=tuple(int(v) for v in d["ratio_lags_cycles"]),
        ratio_margin=float(d["ratio_margin"]),
        step_change_threshold=float(d["step_change_threshold"]),
    )


def load_run_spec(path) -> RunSpec:
    doc = _load_doc(path)
    _check_schema(doc, RUN_SCHEMA, path)
    allowed = {
        "schema": RUN_SCHEMA,
        "line": None,
        "conductor": None,
        "operating": None,
        "weather": {},
        "fire": None,
        "duration_s": 0.5,
        "initial_conductor_temp": None,
        "measurement": {},
        "detector": {},
        "reactance_events": [],
        "timing_fault": None,
        "seed": None,
    }
    d = _take(doc, allowed, str(path))
    if d["line"] is None or d["conductor"] is None or d["operating"] is None:
        raise ConfigError(f"{path}: 'line', 'conductor' and 'operating' are required")

    op = _take(
        _sub(d, "operating", str(path)),
        {"source_voltage": None, "load_p": None, "load_q": None, "shunt_compensation": 0.0},
        f"{path}:operating",
    )
    for key in ("source_voltage", "load_p", "load_q"):
        if op[key] is None:
            raise ConfigError(f"{path}:operating: {key!r} is required")

    fire = None
    if d["fire"] is not None:
        f = _take(
            _sub(d, "fire", str(path)),
            {"distance_m": None, "ignition_time_s": 0.0},
            f"{path}:fire",
        )
        if f["distance_m"] is None:
            raise ConfigError(f"{path}:fire: 'distance_m' is required")
        fire = FireSource(distance=float(f["distance_m"]), ignition_time=float(f["ignition_time_s"]))

    fault = None
    if d["timing_fault"] is not None:
        tf = _take(
            _sub(d, "timing_fault", str(path)),
            {"mode": None, "stream": "receiving", "onset_s": 0.0, "delay_s": 0.0},
            f"{path}:timing_fault",
        )
        if tf["mode"] is None:
            raise ConfigError(f"{path}:timing_fault: 'mode' is required")
        fault = TimingFault(
            mode=str(tf["mode"]),
            stream=str(tf["stream"]),
            onset_s=float(tf["onset_s"]),
            delay_s=float(tf["delay_s"]),
        )

    events = []
    raw_events = d["reactance_events"] or []
    if not isinstance(raw_events, list):
        raise ConfigError(f"{path}: 'reactance_events' must be a list")
    for i, ev in enumerate(raw_events):
        e = _take(ev, {"time_s": None, "factor": None}, f"{path}:reactance_events[{i}]")
        if e["time_s"] is None or e["factor"] is None:
            raise ConfigError(f"{path}:reactance_events[{i}]: 'time_s' and 'factor' are required")
        events.append(ReactanceEvent(time_s=float(e["time_s"]), factor=float(e["factor"])))

    return RunSpec(
        line=_line_from(_sub(d, "line", str(path)), f"{path}:line"),
        conductor=_conductor_from(d["conductor"], f"{path}:conductor"),
        load_p=float(op["load_p"]),
        load_q=float(op["load_q"]),
        source_voltage=float(op["source_voltage"]),
        shunt_compensation=float(op["shunt_compensation"]),
        weather=_weather_from(_sub(d, "weather", str(path)), f"{path}:weather"),
        fire=fire,
        duration_s=float(d["duration_s"]),
        initial_conductor_temp=(
            None if d["initial_conductor_temp"] is None else float(d["initial_conductor_temp"])
        ),
        measurement=_measurement_from(_sub(d, "measurement", str(path)), f"{path}:measurement"),
        detector=_detector_from(_sub(d, "detector", str(path)), f"{path}:detector"),
        reactance_events=tuple(events),
        timing_fault=fault,
        seed=None if d["seed"] is None else int(d["seed"]),
    )


_SWEEP_SIMPLE_FIELDS = {
    "levels": int,
    "tests_per_cell": int,
    "seed": int,
    "strategy": str,
    "subsample": int,
    "workers": int,
    "duration_s": float,
    "v_nominal": float,
    "static_rating_current_a": float,
    "natural_pf": float,
    "xr_low": float,
    "xr_high": float,
    "z_per_km": float,
    "burn_time_low": float,
    "burn_time_high": float,
    "min_length_km": float,
    "distribution": str,
    "time_structure": str,
    "angle_limit_deg": float,
    "tve_limit": float,
    "nominal_current": float,
    "cond_delta_ta_strong": float,
    "cond_wind_calm": float,
    "cond_loading_high": float,
    "cond_t_s_cool": float,
    "cond_loading_mid": float,
    "cond_delta_ta_mid": float,
    "cond_min_delta_t_c": float,
}


def load_sweep_config(path) -> SweepConfig:
    doc = _load_doc(path)
    _check_schema(doc, SWEEP_SCHEMA, path)
    base = SweepConfig()
    allowed: dict[str, object] = {"schema": SWEEP_SCHEMA, "grid": None, "conductor": None, "detector": {}}
    for name in _SWEEP_SIMPLE_FIELDS:
        allowed[name] = getattr(base, name)
    d = _take(doc, allowed, str(path))

    grid = DEFAULT_GRID
    if d["grid"] is not None:
        if not isinstance(d["grid"], list) or not d["grid"]:
            raise ConfigError(f"{path}: 'grid' must be a non-empty list")
        dims = []
        for i, g in enumerate(d["grid"]):
            e = _take(g, {"name": None, "low": None, "high": None}, f"{path}:grid[{i}]")
            if e["name"] is None or e["low"] is None or e["high"] is None:
                raise ConfigError(f"{path}:grid[{i}]: 'name', 'low' and 'high' are required")
            dims.append(GridDimension(str(e["name"]), float(e["low"]), float(e["high"])))
        grid = tuple(dims)

    kwargs = {name: conv(d[name]) for name, conv in _SWEEP_SIMPLE_FIELDS.items()}
    return SweepConfig(
        grid=grid,
        conductor=base.conductor if d["conductor"] is None else _conductor_from(d["conductor"], f"{path}:conductor"),
        detector=_detector_from(_sub(d, "detector", str(path)), f"{path}:detector"),
        **kwargs,
    )


def default_run_yaml() -> str:
    """A complete, commented run document with the shipped defaults."""
    return """\
schema: emberline/run v1
# Two-bus pi-model segment. Impedances are totals in ohms, length in km.
line:
  r_ref: 1.4
  x: 2.8
  length_km: 10.0
  b_shunt: 3.2e-05
  alpha: 0.004
  t_ref: 20.0
# Catalogue name (drake, hawk, bluebird) or a mapping with diameter_m,
# m_cp_j_per_m_c, emissivity, rated_current_a.
conductor: drake
operating:
  source_voltage: 79674.34
  load_p: 5.677e+07
  load_q: 1.852e+07
  shunt_compensation: 0.0
weather:
  t_ambient: 25.0
  wind_speed: 0.61
  elevation: 0.0
  q_solar: 0.0
# Remove this block for a no-fire run. Negative ignition time means the fire
# was already burning when the window opens.
fire:
  distance_m: 2.0
  ignition_time_s: 0.0
duration_s: 0.5
# null: start from pre-window thermal equilibrium.
initial_conductor_temp: null
measurement:
  v_mag_limit: 0.003
  i_mag_limit: 0.003
  i_mag_limit_low: 0.006
  i_low_threshold: 0.2
  angle_limit_deg: 0.021
  tve_limit: 0.01
  nominal_current: 2100.0
  distribution: uniform
  time_structure: constant
detector:
  sample_rate: 5000.0
  system_frequency: 60.0
  ratio_lags_cycles: [3, 4, 6]
  ratio_margin: 1.0e-07
  step_change_threshold: 0.05
reactance_events: []
timing_fault: null
seed: 7
"""


def default_sweep_yaml() -> str:
    """A complete sweep-config document with the shipped defaults."""
    base = SweepConfig()
    lines = [
        "schema: emberline/sweep-config v1",
        "# Omit 'grid' to sweep the shipped nine-dimension study grid.",
        "# Intervals per dimension; cell count is levels ** 9.",
        "levels: %d" % base.levels,
        "tests_per_cell: %d" % base.tests_per_cell,
        "seed: %d" % base.seed,
        "# full | stratified (random cells) | lhs (latin hypercube points)",
        "strategy: full",
        "subsample: 0",
        "workers: 1",
        "duration_s: %s" % base.duration_s,
        "v_nominal: %s" % base.v_nominal,
        "static_rating_current_a: %s" % base.static_rating_current_a,
        "natural_pf: %s" % base.natural_pf,
        "xr_low: %s" % base.xr_low,
        "xr_high: %s" % base.xr_high,
        "z_per_km: %s" % base.z_per_km,
        "burn_time_low: %s" % base.burn_time_low,
        "burn_time_high: %s" % base.burn_time_high,
        "min_length_km: %s" % base.min_length_km,
        "distribution: %s" % base.distribution,
        "time_structure: %s" % base.time_structure,
        "angle_limit_deg: %s" % base.angle_limit_deg,
        "tve_limit: %s" % base.tve_limit,
        "nominal_current: %s" % base.nominal_current,
        "conductor: drake",
        "detector:",
        "  sample_rate: %s" % base.detector.sample_rate,
        "  system_frequency: %s" % base.detector.system_frequency,
        "  ratio_lags_cycles: [3, 4, 6]",
        "  ratio_margin: %s" % base.detector.ratio_margin,
        "  step_change_threshold: %s" % base.detector.step_change_threshold,
        "# Reference detectability conditions used by the sweep summary.",
        "cond_delta_ta_strong: %s" % base.cond_delta_ta_strong,
        "cond_wind_calm: %s" % base.cond_wind_calm,
        "cond_loading_high: %s" % base.cond_loading_high,
        "cond_t_s_cool: %s" % base.cond_t_s_cool,
        "cond_loading_mid: %s" % base.cond_loading_mid,
        "cond_delta_ta_mid: %s" % base.cond_delta_ta_mid,
        "cond_min_delta_t_c: %s" % base.cond_min_delta_t_c,
    ]
    return "\n".join(lines) + "\n"
