"""Heat-balance and fire-heating tests: frozen oracle, calibration, laws."""

import math

import numpy as np
import pytest

from conftest import bluebird, drake
from emberline.exceptions import CalibrationError, DomainError
from emberline.phasors import LineSegment
from emberline.thermal import (
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

# One explicit-Euler step at the documented mid-range point, evaluated once
# by a standalone scalar walk through the correlation set (drake conductor,
# 1.4 ohm / 10 km segment, I = 800 A, t_c = t_s = 50 C, t_a = 40 C,
# v_w = 1 m/s, dt = 0.01 s, sea level, no sun) and frozen here.
FROZEN_STEP_T_C = 50.00060670947735


def _seg() -> LineSegment:
    return LineSegment(r_ref=1.4, x=2.8, length=10.0, b_shunt=0.0)


def test_params_validation():
    with pytest.raises(DomainError):
        ConductorThermalParams(diameter=0.0, m_cp=100.0)
    with pytest.raises(DomainError):
        ConductorThermalParams(diameter=0.03, m_cp=0.0)
    with pytest.raises(DomainError):
        ConductorThermalParams(diameter=0.03, m_cp=100.0, emissivity=1.5)


def test_frozen_midrange_step():
    out = step_conductor_temp(drake(), _seg(), 50.0, 800.0, 40.0, 1.0, 0.01)
    assert out == pytest.approx(FROZEN_STEP_T_C, rel=1e-12, abs=1e-9)


def test_step_trivial_cases():
    # No current, no temperature difference: every term vanishes.
    out = step_conductor_temp(drake(), _seg(), 40.0, 0.0, 40.0, 3.0, 0.01)
    assert out == pytest.approx(40.0, abs=1e-15)
    # Current with no temperature difference: pure joule heating, dT > 0.
    out = step_conductor_temp(drake(), _seg(), 40.0, 500.0, 40.0, 3.0, 0.01)
    assert out > 40.0


def test_step_rejects_bad_dt():
    with pytest.raises(DomainError):
        step_conductor_temp(drake(), _seg(), 40.0, 0.0, 40.0, 1.0, 0.0)


def test_step_monotone_in_drivers():
    # dT_c increases with ambient and current, decreases with wind (t_s > t_a).
    base = step_conductor_temp(drake(), _seg(), 60.0, 600.0, 30.0, 1.0, 0.01)
    hotter_air = step_conductor_temp(drake(), _seg(), 60.0, 600.0, 35.0, 1.0, 0.01)
    more_current = step_conductor_temp(drake(), _seg(), 60.0, 700.0, 30.0, 1.0, 0.01)
    more_wind = step_conductor_temp(drake(), _seg(), 60.0, 600.0, 30.0, 2.0, 0.01)
    assert hotter_air > base
    assert more_current > base
    assert more_wind < base


def test_convection_is_sign_symmetric():
    # Air hotter than the conductor must *heat* it.  Swapping conductor and
    # air temperatures keeps the film temperature (hence the air properties)
    # fixed, so the convective magnitude mirrors exactly (radiation is
    # silenced via emissivity 0).
    params = ConductorThermalParams(diameter=0.02814, m_cp=1310.0, emissivity=0.0)
    hot_air = heat_rate(params, 50.0, 0.0, 0.0, 80.0, 1.5)
    cold_air = heat_rate(params, 80.0, 0.0, 0.0, 50.0, 1.5)
    assert hot_air > 0.0
    assert cold_air < 0.0
    assert hot_air == pytest.approx(-cold_air, rel=1e-12)


def test_radiation_reverses_sign_with_gap():
    params = ConductorThermalParams(diameter=0.02814, m_cp=1310.0, emissivity=0.9)
    # Zero wind, zero current: only natural convection and radiation remain;
    # both push toward ambient from either side.
    assert heat_rate(params, 20.0, 0.0, 0.0, 60.0, 0.0) > 0.0
    assert heat_rate(params, 100.0, 0.0, 0.0, 60.0, 0.0) < 0.0


def test_equilibrium_is_a_fixed_point():
    rng = np.random.default_rng(404)
    for _ in range(25):
        params = drake() if rng.uniform() < 0.5 else bluebird()
        seg = _seg()
        i = float(rng.uniform(0.0, 0.9 * params.rated_current))
        t_a = float(rng.uniform(-10.0, 45.0))
        v_w = float(rng.uniform(0.0, 6.5))
        t_eq = equilibrium_temperature(params, seg, i, t_a, v_w)
        dt = 0.01
        t_next = step_conductor_temp(params, seg, t_eq, i, t_a, v_w, dt)
        assert abs(t_next - t_eq) / dt < 1e-6  # C/s
        assert t_eq >= t_a - 1e-9


def test_repeated_stepping_converges_to_equilibrium():
    params = drake()
    seg = _seg()
    t_eq = equilibrium_temperature(params, seg, 700.0, 25.0, 1.0)
    t_c = 25.0
    for _ in range(400000):
        t_c = step_conductor_temp(params, seg, t_c, 700.0, 25.0, 1.0, 0.05)
    assert t_c == pytest.approx(t_eq, abs=1e-5)


def test_hotter_ambient_gives_pointwise_hotter_trajectory():
    params = drake()
    seg = _seg()
    t_lo, t_hi = 30.0, 30.0
    for _ in range(5000):
        t_lo = step_conductor_temp(params, seg, t_lo, 650.0, 25.0, 0.8, 0.002)
        t_hi = step_conductor_temp(params, seg, t_hi, 650.0, 35.0, 0.8, 0.002)
        assert t_hi > t_lo


def test_equilibrium_rejects_impossible_current():
    tiny = ConductorThermalParams(diameter=0.005, m_cp=50.0, emissivity=0.2)
    with pytest.raises(DomainError):
        equilibrium_temperature(tiny, _seg(), 5000.0, 25.0, 0.0)


# --------------------------------------------------------------------------
# Fire heating
# --------------------------------------------------------------------------


def test_reference_table_calibrates_within_one_percent():
    rows = load_fire_table()
    assert len(rows) == 12
    cal = calibrate_from_table(rows, rel_tol=0.01)
    assert cal.distances == (1.0, 5.0, 10.0, 50.0)


def test_calibration_from_short_burn_column_predicts_longer_burns():
    rows = load_fire_table()
    short = [r for r in rows if r[1] == 10.0]
    cal = calibrate_from_table(short)
    # Frozen factors implied by the 10 s column.
    for d, expect in ((1.0, 22.645), (5.0, 9.800), (10.0, 1.837), (50.0, 2.603e-5)):
        assert cal.factor_at(d) == pytest.approx(expect, rel=2e-3)
    # The remaining eight (30 s, 60 s) rows are predicted within 1%.
    for d, t_f, dta in rows:
        if t_f == 10.0:
            continue
        assert fire_delta_ta(cal, d, t_f) == pytest.approx(dta, rel=0.01)


def test_single_distance_calibration_gives_one_point_grid():
    cal = calibrate_from_table([(5.0, 10.0, 31.0), (5.0, 40.0, 62.0), (5.0, 90.0, 93.0)])
    assert len(cal.distances) == 1
    expect = (31.0 / math.sqrt(10.0) + 62.0 / math.sqrt(40.0) + 93.0 / math.sqrt(90.0)) / 3.0
    assert cal.factor_at(5.0) == pytest.approx(expect, rel=1e-12)
    with pytest.raises(CalibrationError):
        cal.factor_at(6.0)


def test_calibration_rejects_sqrt_law_violations_naming_rows():
    rows = [(5.0, 10.0, 31.0), (5.0, 40.0, 70.0)]  # second implies f=11.07 vs 9.80
    with pytest.raises(CalibrationError) as err:
        calibrate_from_table(rows)
    assert "row 1" in str(err.value)


def test_calibration_rejects_nonpositive_rows():
    with pytest.raises(CalibrationError):
        calibrate_from_table([(5.0, 0.0, 31.0)])
    with pytest.raises(CalibrationError):
        calibrate_from_table([])


def test_sqrt_time_law_is_exact():
    cal = default_fire_calibration()
    for d in (1.0, 2.5, 5.0, 20.0, 50.0):
        for t in (1.0, 7.3, 30.0):
            assert fire_delta_ta(cal, d, 4.0 * t) == pytest.approx(
                2.0 * fire_delta_ta(cal, d, t), rel=1e-12
            )
    assert fire_delta_ta(cal, 5.0, 0.0) == 0.0


def test_fire_delta_monotonicity():
    cal = default_fire_calibration()
    dists = [1.0, 2.0, 5.0, 9.0, 10.0, 30.0, 50.0]
    factors = [cal.factor_at(d) for d in dists]
    assert all(b < a for a, b in zip(factors, factors[1:]))
    assert fire_delta_ta(cal, 5.0, 30.0) > fire_delta_ta(cal, 5.0, 10.0)


def test_fire_delta_rejects_out_of_grid_distance():
    cal = default_fire_calibration()
    with pytest.raises(CalibrationError):
        fire_delta_ta(cal, 0.5, 10.0)
    with pytest.raises(CalibrationError):
        fire_delta_ta(cal, 51.0, 10.0)
    with pytest.raises(DomainError):
        fire_delta_ta(cal, 5.0, -1.0)


def test_invert_factor_round_trips_and_clamps():
    cal = default_fire_calibration()
    for d in (1.0, 1.7, 5.0, 24.0, 50.0):
        f = cal.factor_at(d)
        assert cal.invert_factor(f) == pytest.approx(d, rel=1e-9)
    assert cal.invert_factor(1e9) == 1.0
    assert cal.invert_factor(1e-12) == 50.0


def test_fire_source_window_behaviour():
    cal = default_fire_calibration()
    src = FireSource(distance=5.0, ignition_time=0.2)
    assert src.ambient_delta(cal, 0.1) == 0.0
    assert src.ambient_delta(cal, 0.2) == 0.0
    assert src.ambient_delta(cal, 1.2) == pytest.approx(cal.factor_at(5.0), rel=1e-12)
    # A fire burning since before the window opened.
    old = FireSource(distance=5.0, ignition_time=-99.0)
    assert old.ambient_delta(cal, 1.0) == pytest.approx(cal.factor_at(5.0) * 10.0, rel=1e-12)
    with pytest.raises(DomainError):
        FireSource(distance=0.0)


def test_conductor_catalogue_entries():
    cat = conductor_catalogue()
    assert set(cat) >= {"drake", "hawk", "bluebird"}
    d = cat["drake"]
    assert d.diameter == pytest.approx(0.02814)
    assert d.m_cp == pytest.approx(1310.0)
    assert cat["bluebird"].rated_current == pytest.approx(1600.0)


def test_load_fire_table_rejects_malformed(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("distance_m,burn_time_s\n1,10\n")
    with pytest.raises(CalibrationError):
        load_fire_table(p)
