"""Shared helpers for the test suite: random-but-feasible scenario builders."""

from __future__ import annotations

import math

import numpy as np

from emberline import constants as C
from emberline.phasors import LineSegment, OperatingPoint, Phasor
from emberline.simrunner import RunSpec, Weather
from emberline.thermal import ConductorThermalParams


def random_segment(rng: np.random.Generator, *, b_shunt_max: float = 5e-5) -> LineSegment:
    """A random segment inside the covered X/R family and length range."""
    length = float(rng.uniform(0.5, 20.0))
    xr = float(rng.uniform(0.13, 4.26))
    z_tot = 0.4 * length
    r_ref = z_tot / math.sqrt(1.0 + xr * xr)
    return LineSegment(
        r_ref=r_ref,
        x=r_ref * xr,
        length=length,
        b_shunt=float(rng.uniform(0.0, b_shunt_max)),
    )


def random_operating_point(
    rng: np.random.Generator,
    *,
    i_max: float = 1600.0,
    v: float = C.DEFAULT_VOLTAGE_PHASE,
) -> OperatingPoint:
    """A PQ load drawn from a 0.7+ power-factor family, scaled by current."""
    current = float(rng.uniform(50.0, i_max))
    pf = float(rng.uniform(0.7, 0.999))
    p = pf * v * current
    q = math.sqrt(1.0 - pf * pf) * v * current
    return OperatingPoint(source_voltage=Phasor(v), load_p=p, load_q=q)


def drake() -> ConductorThermalParams:
    return ConductorThermalParams(diameter=0.02814, m_cp=1310.0, emissivity=0.5, rated_current=900.0)


def bluebird() -> ConductorThermalParams:
    return ConductorThermalParams(diameter=0.04475, m_cp=3110.0, emissivity=0.5, rated_current=1600.0)


def basic_run_spec(
    rng: np.random.Generator | None = None,
    *,
    current: float = 700.0,
    pf: float = 0.95,
    seed: int | None = 11,
    **overrides,
) -> RunSpec:
    """A feasible, moderately loaded drake scenario; overrides patch fields."""
    v = C.DEFAULT_VOLTAGE_PHASE
    if rng is not None:
        current = float(rng.uniform(300.0, 900.0))
        pf = float(rng.uniform(0.8, 0.99))
    fields = dict(
        line=LineSegment(r_ref=1.4, x=2.8, length=10.0, b_shunt=3.2e-5),
        conductor=drake(),
        load_p=pf * v * current,
        load_q=math.sqrt(1.0 - pf * pf) * v * current,
        source_voltage=v,
        weather=Weather(t_ambient=25.0, wind_speed=0.61),
        seed=seed,
    )
    fields.update(overrides)
    return RunSpec(**fields)
