"""Factorial Monte Carlo sweep over fire, weather, loading and instrument error.

The study grid has nine dimensions, three levels each; a level is one third
of the dimension's range and every test draws uniformly inside its cell's
subrange.  Each (cell, test) pair owns a private RNG seeded from
``(base_seed, cell_ordinal, test_index)``, so any subset of the sweep can be
reproduced in isolation and the aggregated table is byte-identical no matter
how work was chunked across processes.

Three sampling strategies share that realization path: ``full`` visits every
cell, ``stratified`` visits a seeded random subset of cells, and ``lhs``
replaces the cell grid with a Latin hypercube over the same ranges.

A run's fire is characterised by the ambient temperature rise it produces at
the end of the window (the quantity the grid actually controls): the fire's
age is drawn, and the distance that yields the requested rise at that age is
solved from the heating calibration.  Cells whose rise subrange starts at
zero draw "no fire at all" with probability one half, so the dataset carries
a clean negative class instead of a sliver of vanishing fires.
"""

from __future__ import annotations

import concurrent.futures
import csv
import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import constants as C
from .detector import DetectorConfig
from .exceptions import ConfigError, DomainError
from .measurement import MeasurementSpec
from .phasors import LineSegment
from .simrunner import RunSpec, Weather, Workspace, run
from .thermal import ConductorThermalParams, FireCalibration, FireSource, default_fire_calibration

#: Default intervals per dimension (desk scale; the full-campaign value is 5).
DEFAULT_LEVELS = 3
_CELL_PERM_SALT = 101159
_LHS_PERM_SALT = 52361


@dataclass(frozen=True)
class GridDimension:
    """One swept factor: a name and its closed range."""

    name: str
    low: float
    high: float

    def __post_init__(self) -> None:
        if not self.low < self.high:
            raise DomainError(f"grid dimension {self.name}: low must be < high")

    def cell_bounds(self, level: int, levels: int = DEFAULT_LEVELS) -> tuple[float, float]:
        if not 0 <= level < levels:
            raise DomainError(f"level must be in [0, {levels})")
        width = (self.high - self.low) / levels
        return self.low + level * width, self.low + (level + 1) * width


#: The nine swept factors. Order matters: it fixes cell-ordinal encoding and
#: the RNG draw order inside a run realization.
DEFAULT_GRID: tuple[GridDimension, ...] = (
    GridDimension("delta_ta", 0.0, 225.5),  # ambient rise at window end, C
    GridDimension("t_a", 10.0, 40.0),  # base ambient, C
    GridDimension("v_w", 0.0, 6.5),  # wind speed, m/s
    GridDimension("t_s", 10.0, 100.0),  # initial conductor temperature, C
    GridDimension("length_km", 0.0, 20.0),  # segment length, km
    GridDimension("current_a", 0.0, 1600.0),  # target load current, A
    GridDimension("pf_correction", 0.0, 1.0),  # compensation depth
    GridDimension("v_err", 0.0, 0.003),  # voltage magnitude error bound
    GridDimension("i_err", 0.0, 0.006),  # low-range current error bound
)


@dataclass(frozen=True)
class SweepConfig:
    """Everything the sweep needs besides the grid itself."""

    grid: tuple[GridDimension, ...] = DEFAULT_GRID
    levels: int = DEFAULT_LEVELS
    tests_per_cell: int = 10
    seed: int = 0
    strategy: str = "full"  # full | stratified | lhs
    subsample: int = 0  # cells (stratified) or points (lhs)
    workers: int = 1
    duration_s: float = 0.5
    v_nominal: float = C.DEFAULT_VOLTAGE_PHASE
    static_rating_current_a: float = C.DEFAULT_RATING_CURRENT_A
    natural_pf: float = 0.7
    xr_low: float = 0.13
    xr_high: float = 4.26
    z_per_km: float = 0.4
    burn_time_low: float = 10.0
    burn_time_high: float = 100.0
    min_length_km: float = 1e-3
    distribution: str = "uniform"
    time_structure: str = "constant"
    angle_limit_deg: float = 0.021
    tve_limit: float = 0.01
    nominal_current: float = C.DEFAULT_NOMINAL_CURRENT_A
    conductor: ConductorThermalParams = field(
        default_factory=lambda: ConductorThermalParams(
            diameter=0.02814, m_cp=1310.0, emissivity=0.5, rated_current=900.0
        )
    )
    detector: DetectorConfig = field(default_factory=DetectorConfig)
    fire_calibration: FireCalibration | None = None
    # Reference detectability conditions used by summarize().
    cond_delta_ta_strong: float = 76.0
    cond_wind_calm: float = 1.35
    cond_loading_high: float = 0.9
    cond_t_s_cool: float = 57.0
    cond_loading_mid: float = 0.5
    cond_delta_ta_mid: float = 46.0
    cond_min_delta_t_c: float = 2.87

    def __post_init__(self) -> None:
        if self.levels < 1:
            raise ConfigError("levels must be >= 1")
        if self.tests_per_cell < 1:
            raise ConfigError("tests_per_cell must be >= 1")
        if self.strategy not in ("full", "stratified", "lhs"):
            raise ConfigError("strategy must be full, stratified or lhs")
        if self.strategy in ("stratified", "lhs") and self.subsample < 1:
            raise ConfigError(f"strategy {self.strategy!r} needs subsample >= 1")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if not 0.0 < self.natural_pf < 1.0:
            raise ConfigError("natural_pf must be in (0, 1)")
        names = [d.name for d in self.grid]
        if len(set(names)) != len(names):
            raise ConfigError("grid dimension names must be unique")

    @property
    def n_cells(self) -> int:
        return self.levels ** len(self.grid)

    def dim(self, name: str) -> GridDimension:
        for d in self.grid:
            if d.name == name:
                return d
        raise ConfigError(f"no grid dimension named {name!r}")


def encode_cell(level_indices: tuple[int, ...], levels: int = DEFAULT_LEVELS) -> int:
    """Cell ordinal from per-dimension levels (first dimension least significant)."""
    ordinal = 0
    for i, lv in enumerate(level_indices):
        ordinal += lv * (levels**i)
    return ordinal


def decode_cell(ordinal: int, n_dims: int, levels: int = DEFAULT_LEVELS) -> tuple[int, ...]:
    out = []
    for _ in range(n_dims):
        out.append(ordinal % levels)
        ordinal //= levels
    return tuple(out)


#: Output table column order (fixed: exports must be byte-stable).
COLUMNS: tuple[str, ...] = (
    "cell",
    "test",
    "delta_ta_target",
    "delta_ta",
    "t_a",
    "v_w",
    "t_s",
    "length_km",
    "current_a",
    "pf_correction",
    "v_err",
    "i_err",
    "xr_ratio",
    "fire_present",
    "fire_distance_m",
    "burn_time_s",
    "loading",
    "delta_t_c",
    "tan_true_start",
    "trip1",
    "trip2",
    "trip1_time",
    "trip2_time",
    "restarts",
    "invalid_samples",
    "infeasible",
)


def _draw_in(rng: np.random.Generator, lo: float, hi: float) -> float:
    return float(rng.uniform(lo, hi))


def realize_run(
    cfg: SweepConfig,
    values: dict[str, float],
    rng: np.random.Generator,
    cal: FireCalibration,
) -> tuple[RunSpec, dict[str, float]]:
    """Build the RunSpec for one sampled point and the feature row going with it.

    ``values`` holds the nine grid draws; this function adds the per-run
    nuisance draws (X/R ratio, fire age) in a fixed order so that a row is
    reproducible from its seed alone.
    """
    xr = _draw_in(rng, cfg.xr_low, cfg.xr_high)
    burn = _draw_in(rng, cfg.burn_time_low, cfg.burn_time_high)

    length = max(values["length_km"], cfg.min_length_km)
    z_tot = cfg.z_per_km * length
    r_ref = z_tot / math.sqrt(1.0 + xr * xr)
    x = r_ref * xr
    line = LineSegment(r_ref=r_ref, x=x, length=length, b_shunt=0.0)

    v = cfg.v_nominal
    current = values["current_a"]
    p_load = cfg.natural_pf * v * current
    q_nat = math.sqrt(1.0 - cfg.natural_pf * cfg.natural_pf) * v * current
    pf_target = cfg.natural_pf + (1.0 - cfg.natural_pf) * values["pf_correction"]
    q_target = p_load * math.sqrt(1.0 - pf_target * pf_target) / pf_target
    b_bank = (q_nat - q_target) / (v * v)
    if b_bank < 0.0:
        b_bank = 0.0

    target = values["delta_ta"]
    if target > 0.0:
        factor = target / math.sqrt(burn)
        dist = cal.invert_factor(factor)
        achieved = cal.factor_at(dist) * math.sqrt(burn)
        fire = FireSource(distance=dist, ignition_time=cfg.duration_s - burn)
    else:
        dist = math.nan
        achieved = 0.0
        fire = None

    meas = MeasurementSpec(
        v_mag_limit=values["v_err"],
        i_mag_limit=0.5 * values["i_err"],
        i_mag_limit_low=values["i_err"],
        i_low_threshold=0.2,
        angle_limit_deg=cfg.angle_limit_deg,
        tve_limit=cfg.tve_limit,
        nominal_current=cfg.nominal_current,
        distribution=cfg.distribution,
        time_structure=cfg.time_structure,
    )
    spec = RunSpec(
        line=line,
        conductor=cfg.conductor,
        load_p=p_load,
        load_q=q_nat,
        source_voltage=v,
        shunt_compensation=b_bank,
        weather=Weather(t_ambient=values["t_a"], wind_speed=values["v_w"]),
        fire=fire,
        fire_calibration=cal,
        duration_s=cfg.duration_s,
        initial_conductor_temp=values["t_s"],
        measurement=meas,
        detector=cfg.detector,
    )
    feats = {
        "delta_ta_target": target,
        "delta_ta": achieved,
        "t_a": values["t_a"],
        "v_w": values["v_w"],
        "t_s": values["t_s"],
        "length_km": length,
        "current_a": current,
        "pf_correction": values["pf_correction"],
        "v_err": values["v_err"],
        "i_err": values["i_err"],
        "xr_ratio": xr,
        "fire_present": 1.0 if target > 0.0 else 0.0,
        "fire_distance_m": dist,
        "burn_time_s": burn if target > 0.0 else math.nan,
    }
    return spec, feats


def _grid_values(cfg: SweepConfig, levels: tuple[int, ...], rng: np.random.Generator) -> dict[str, float]:
    """Draw the nine grid values for one cell, in grid order.

    The fire-rise dimension owns an atom at exactly zero: cells whose
    subrange starts at the grid's zero edge put half their mass on "no fire".
    """
    values: dict[str, float] = {}
    for d, lv in zip(cfg.grid, levels):
        lo, hi = d.cell_bounds(lv, cfg.levels)
        if d.name == "delta_ta" and lo == 0.0:
            if rng.uniform() < 0.5:
                values[d.name] = 0.0
                continue
        values[d.name] = _draw_in(rng, lo, hi)
    return values


def _lhs_values(
    cfg: SweepConfig, strata: tuple[int, ...], n: int, rng: np.random.Generator
) -> dict[str, float]:
    """Draw one Latin-hypercube point given its per-dimension strata (of n)."""
    values: dict[str, float] = {}
    for d, s in zip(cfg.grid, strata):
        width = (d.high - d.low) / n
        lo = d.low + s * width
        if d.name == "delta_ta" and s == 0 and d.low == 0.0:
            if rng.uniform() < 0.5:
                values[d.name] = 0.0
                continue
        values[d.name] = _draw_in(rng, lo, lo + width)
    return values


def _row_from_run(cfg: SweepConfig, ordinal: int, test: int, cal: FireCalibration, ws: Workspace, lhs_strata=None, lhs_n: int = 0) -> list[float]:
    ss = np.random.SeedSequence((cfg.seed, ordinal, test))
    rng = np.random.default_rng(ss)
    if lhs_strata is None:
        levels = decode_cell(ordinal, len(cfg.grid), cfg.levels)
        values = _grid_values(cfg, levels, rng)
    else:
        values = _lhs_values(cfg, lhs_strata, lhs_n, rng)
    spec, feats = realize_run(cfg, values, rng, cal)
    res = run(spec, rng=rng, workspace=ws)

    s_rating = cfg.v_nominal * cfg.static_rating_current_a
    if math.isnan(res.p_r0) or s_rating <= 0.0:
        loading = math.nan
    else:
        loading = math.hypot(res.p_r0, res.q_r0) / s_rating
    t1 = res.trip_time(1)
    t2 = res.trip_time(2)
    row = {
        "cell": float(ordinal),
        "test": float(test),
        "loading": loading,
        "delta_t_c": res.delta_t_c,
        "tan_true_start": res.tan_true_start,
        "trip1": 1.0 if res.control1_trip_index is not None else 0.0,
        "trip2": 1.0 if res.control2_trip_index is not None else 0.0,
        "trip1_time": math.nan if t1 is None else t1,
        "trip2_time": math.nan if t2 is None else t2,
        "restarts": float(res.restart_count),
        "invalid_samples": float(res.invalid_samples),
        "infeasible": 0.0 if res.infeasible_at is None else 1.0,
    }
    row.update(feats)
    return [row[c] for c in COLUMNS]


def _run_chunk(cfg: SweepConfig, ordinals: list[int], lhs_table) -> list[list[float]]:
    """Worker entry: simulate every (ordinal, test) in the chunk."""
    cal = cfg.fire_calibration or default_fire_calibration()
    ws = Workspace()
    rows: list[list[float]] = []
    if lhs_table is None:
        for ordinal in ordinals:
            for test in range(cfg.tests_per_cell):
                rows.append(_row_from_run(cfg, ordinal, test, cal, ws))
    else:
        n = len(lhs_table)
        for ordinal in ordinals:
            strata = tuple(int(v) for v in lhs_table[ordinal])
            rows.append(_row_from_run(cfg, ordinal, 0, cal, ws, lhs_strata=strata, lhs_n=n))
    return rows


def _plan(cfg: SweepConfig) -> tuple[list[int], np.ndarray | None]:
    """Ordinals to visit, plus the LHS strata table when applicable."""
    if cfg.strategy == "full":
        return list(range(cfg.n_cells)), None
    if cfg.strategy == "stratified":
        if cfg.subsample > cfg.n_cells:
            raise ConfigError(f"subsample {cfg.subsample} exceeds cell count {cfg.n_cells}")
        perm_rng = np.random.default_rng(np.random.SeedSequence((cfg.seed, _CELL_PERM_SALT)))
        perm = perm_rng.permutation(cfg.n_cells)
        return [int(v) for v in perm[: cfg.subsample]], None
    # lhs: one run per point; "ordinal" is the point index.
    n = cfg.subsample
    perm_rng = np.random.default_rng(np.random.SeedSequence((cfg.seed, _LHS_PERM_SALT)))
    table = np.empty((n, len(cfg.grid)), dtype=np.int64)
    for dcol in range(len(cfg.grid)):
        table[:, dcol] = perm_rng.permutation(n)
    return list(range(n)), table


@dataclass
class SweepResult:
    """Aggregated sweep table plus the metadata to reproduce it."""

    columns: tuple[str, ...]
    data: np.ndarray  # shape (n_rows, n_columns), float64
    meta: dict

    def column(self, name: str) -> np.ndarray:
        return self.data[:, self.columns.index(name)]

    @property
    def n_rows(self) -> int:
        return int(self.data.shape[0])

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write("# emberline/sweep v1\n")
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(self.columns)
            for row in self.data:
                writer.writerow([repr(float(v)) for v in row])

    def to_json(self, path) -> None:
        doc = {
            "schema": "emberline/sweep v1",
            "meta": self.meta,
            "columns": list(self.columns),
            "rows": [[float(v) for v in row] for row in self.data],
        }
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, sort_keys=True, separators=(",", ":"))
            fh.write("\n")


def run_sweep(cfg: SweepConfig) -> SweepResult:
    """Execute the sweep and return the aggregated, ordinal-sorted table."""
    ordinals, lhs_table = _plan(cfg)
    chunks: list[list[int]]
    if cfg.workers <= 1 or len(ordinals) < 2 * cfg.workers:
        chunks = [ordinals]
        chunk_rows = [_run_chunk(cfg, ordinals, lhs_table)]
    else:
        n_chunks = min(len(ordinals), cfg.workers * 8)
        chunks = [[int(v) for v in part] for part in np.array_split(np.array(ordinals), n_chunks)]
        with concurrent.futures.ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            chunk_rows = list(pool.map(_run_chunk, [cfg] * len(chunks), chunks, [lhs_table] * len(chunks)))

    rows = [row for chunk in chunk_rows for row in chunk]
    data = np.array(rows, dtype=float) if rows else np.zeros((0, len(COLUMNS)))
    if len(data):
        order = np.lexsort((data[:, COLUMNS.index("test")], data[:, COLUMNS.index("cell")]))
        data = data[order]
    meta = {
        "schema": "emberline/sweep v1",
        "seed": cfg.seed,
        "strategy": cfg.strategy,
        "subsample": cfg.subsample,
        "levels": cfg.levels,
        "tests_per_cell": cfg.tests_per_cell if cfg.strategy != "lhs" else 1,
        "n_cells": cfg.n_cells,
        "n_rows": int(data.shape[0]),
        "grid": [[d.name, d.low, d.high] for d in cfg.grid],
    }
    return SweepResult(columns=COLUMNS, data=data, meta=meta)


#: External reference statistics (percent of filtered runs) for side-by-side
#: comparison in reports: Control 1 under the conductor-temperature-rise
#: filter.  Not reproducible exactly at desk scale; reported, never asserted.
REFERENCE_STATISTICS = {
    "filter": "thermal_response",
    "control": 1,
    "tp_pct": 99.32,
    "tn_pct": 0.29,
    "fp_pct": 0.29,
    "fn_pct": 0.10,
}


def confusion_matrix(result: SweepResult, control: int, mask: np.ndarray | None = None) -> dict:
    """TP/TN/FP/FN counts and rates for one control over (a filter of) the table.

    A trip with fire present is a true positive; a trip without fire a false
    positive, and so on.  Rows whose power flow was infeasible are discarded:
    excluded from the counts, reported separately.  Rates are fractions of
    the classified (non-discarded) filtered rows; with nothing classified the
    rates are ``None`` rather than a division by zero.
    """
    if control not in (1, 2):
        raise ConfigError("control must be 1 or 2")
    fire = result.column("fire_present") > 0.5
    trip = result.column(f"trip{control}") > 0.5
    feasible = result.column("infeasible") < 0.5
    base = np.ones(result.n_rows, dtype=bool) if mask is None else np.asarray(mask, dtype=bool)
    classified = base & feasible
    n = int(classified.sum())
    counts = {
        "tp": int((classified & fire & trip).sum()),
        "tn": int((classified & ~fire & ~trip).sum()),
        "fp": int((classified & ~fire & trip).sum()),
        "fn": int((classified & fire & ~trip).sum()),
    }
    out: dict = dict(counts)
    out["n"] = n
    out["discarded"] = int((base & ~feasible).sum())
    for key, value in counts.items():
        out[f"{key}_rate"] = (value / n) if n else None
    return out


def summarize(result: SweepResult, cfg: SweepConfig | None = None) -> dict:
    """Detection summary under the reference detectability conditions.

    Trip rates are reported per control for fire rows matching each named
    condition (plus false-positive rates over the no-fire rows), and full
    confusion matrices are reported for the unfiltered table and for the
    conductor-temperature-rise filter, alongside the external reference
    statistics for that filter.  Empty selections report ``None`` rates.
    """
    cfg = cfg or SweepConfig()
    col = result.column
    fire = col("fire_present") > 0.5
    feasible = col("infeasible") < 0.5
    loading = col("loading")
    with np.errstate(invalid="ignore"):
        conditions = {
            "strong_fire": fire & (col("delta_ta") > cfg.cond_delta_ta_strong),
            "calm_high_load": fire
            & (col("v_w") < cfg.cond_wind_calm)
            & (loading > cfg.cond_loading_high),
            "cool_loaded_fire": fire
            & (col("t_s") < cfg.cond_t_s_cool)
            & (loading > cfg.cond_loading_mid)
            & (col("delta_ta") > cfg.cond_delta_ta_mid),
        }
        thermal_mask = col("delta_t_c") > cfg.cond_min_delta_t_c

    def rates(mask: np.ndarray) -> dict:
        m = mask & feasible
        n = int(m.sum())
        entry: dict = {"n": n}
        for control in ("trip1", "trip2"):
            entry[f"{control}_rate"] = float(col(control)[m].mean()) if n else None
        return entry

    out: dict = {
        "n_rows": result.n_rows,
        "n_fire": int(fire.sum()),
        "n_no_fire": int((~fire).sum()),
        "n_discarded": int((~feasible).sum()),
        "conditions": {name: rates(mask) for name, mask in conditions.items()},
        "no_fire": rates(~fire),
        "matrices": {
            "all": {
                "control1": confusion_matrix(result, 1),
                "control2": confusion_matrix(result, 2),
            },
            "thermal_response": {
                "control1": confusion_matrix(result, 1, thermal_mask),
                "control2": confusion_matrix(result, 2, thermal_mask),
            },
        },
        "reference_statistics": dict(REFERENCE_STATISTICS),
    }
    return out


def with_overrides(cfg: SweepConfig, **kwargs) -> SweepConfig:
    """Convenience: a copy of ``cfg`` with fields replaced."""
    return replace(cfg, **kwargs)
