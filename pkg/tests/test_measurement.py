"""Measurement-error model and impedance-angle estimator tests."""

import math

import numpy as np
import pytest

from conftest import random_operating_point, random_segment
from emberline.exceptions import DomainError, InfeasibleLoadError
from emberline.measurement import (
    NOISE_COLS,
    MeasurementSpec,
    apply_measurement_errors,
    build_noise,
    current_mag_bound,
    tan_delta_from_phasors,
    tan_delta_from_scalars,
)
from emberline.phasors import (
    LineSegment,
    OperatingPoint,
    Phasor,
    line_resistance,
    solve_steady_state,
)


def _solved(xr: float, *, current: float = 400.0, t_c: float = 20.0):
    r_ref = 1.0
    seg = LineSegment(r_ref=r_ref, x=r_ref * xr, length=10.0, b_shunt=0.0)
    v = 80000.0
    op = OperatingPoint(
        source_voltage=Phasor(v),
        load_p=0.9 * v * current,
        load_q=0.3 * v * current,
    )
    return seg, solve_steady_state(seg, op, t_c)


def test_spec_validation():
    with pytest.raises(DomainError):
        MeasurementSpec(v_mag_limit=-0.1)
    with pytest.raises(DomainError):
        MeasurementSpec(tve_limit=1.0)
    with pytest.raises(DomainError):
        MeasurementSpec(distribution="normal")
    with pytest.raises(DomainError):
        MeasurementSpec(time_structure="random-walk")
    with pytest.raises(DomainError):
        MeasurementSpec(nominal_current=0.0)
    assert MeasurementSpec(angle_limit_deg=0.021).angle_limit_rad == pytest.approx(
        math.radians(0.021)
    )


def test_noise_shape_follows_time_structure():
    rng = np.random.default_rng(0)
    const = build_noise(MeasurementSpec(), 500, rng)
    assert const.shape == (1, NOISE_COLS)
    iid = build_noise(MeasurementSpec(time_structure="iid"), 500, rng)
    assert iid.shape == (500, NOISE_COLS)
    with pytest.raises(DomainError):
        build_noise(MeasurementSpec(), 0, rng)


def test_unit_draw_bounds_and_mean():
    # Large-sample statistical check of the raw unit draws: hard bound
    # respected exactly, empirical mean within 3 sigma of zero.
    n = 1_000_000
    for dist, sigma in (("uniform", 1.0 / math.sqrt(3.0)), ("truncated_gaussian", 1.0 / 3.0)):
        rng = np.random.default_rng(42)
        noise = build_noise(
            MeasurementSpec(distribution=dist, time_structure="iid"), n, rng
        )
        mags = noise[:, 0]
        assert np.abs(mags).max() <= 1.0
        assert abs(mags.mean()) < 3.0 * sigma / math.sqrt(n)


def test_tve_draws_stay_in_unit_disc():
    rng = np.random.default_rng(9)
    for dist in ("uniform", "truncated_gaussian"):
        noise = build_noise(
            MeasurementSpec(distribution=dist, time_structure="iid"), 200_000, rng
        )
        for base in (0, 4, 8, 12):
            r2 = noise[:, base + 2] ** 2 + noise[:, base + 3] ** 2
            assert r2.max() <= 1.0
    # The uniform disc is actually filled (not collapsed to the centre).
    assert r2.max() > 0.9


def test_applied_error_respects_envelope():
    # |measured| / |true| - 1 must stay within mag bound + tve bound, and the
    # angle shift within angle bound + arcsin(tve / (1 - limits)).
    spec = MeasurementSpec(time_structure="iid")
    rng = np.random.default_rng(123)
    n = 20000
    noise = build_noise(spec, n, rng)
    z = complex(5000.0, -2500.0)
    worst_mag = 0.0
    worst_ang = 0.0
    for k in range(n):
        m_vs, *_ = apply_measurement_errors(spec, z, z, z, z, noise[k])
        rel = abs(m_vs) / abs(z) - 1.0
        worst_mag = max(worst_mag, abs(rel))
        dphi = math.remainder(math.atan2(m_vs.imag, m_vs.real) - math.atan2(z.imag, z.real), 2 * math.pi)
        worst_ang = max(worst_ang, abs(dphi))
    mag_cap = spec.v_mag_limit + spec.tve_limit
    ang_cap = spec.angle_limit_rad + math.asin(spec.tve_limit / (1.0 - spec.v_mag_limit))
    assert worst_mag <= mag_cap + 1e-12
    assert worst_mag > 0.5 * mag_cap  # the envelope is actually exercised
    assert worst_ang <= ang_cap + 1e-12


def test_zero_bounds_passthrough():
    spec = MeasurementSpec(
        v_mag_limit=0.0, i_mag_limit=0.0, i_mag_limit_low=0.0, angle_limit_deg=0.0, tve_limit=0.0
    )
    rng = np.random.default_rng(5)
    noise = build_noise(spec, 1, rng)
    vs, vr, i_s, ir = apply_measurement_errors(
        spec, 1 + 2j, 3 - 4j, 5 + 6j, -7 + 8j, noise[0]
    )
    assert vs == 1 + 2j and vr == 3 - 4j and i_s == 5 + 6j and ir == -7 + 8j


def test_current_range_switch_is_strict():
    spec = MeasurementSpec()  # nominal 2100 A, threshold fraction 0.2 -> 420 A
    thr = 0.2 * 2100.0
    assert current_mag_bound(spec, thr, 0.0) == spec.i_mag_limit_low  # at threshold: low range
    assert current_mag_bound(spec, math.nextafter(thr, math.inf), 0.0) == spec.i_mag_limit
    assert current_mag_bound(spec, 0.0, -thr) == spec.i_mag_limit_low
    assert current_mag_bound(spec, 3000.0, 100.0) == spec.i_mag_limit


def test_noise_row_shape_checked():
    spec = MeasurementSpec()
    with pytest.raises(DomainError):
        apply_measurement_errors(spec, 1j, 1j, 1j, 1j, np.zeros(7))


# --------------------------------------------------------------------------
# tan-delta estimator
# --------------------------------------------------------------------------


def test_estimator_matches_phasor_division_at_family_edges():
    for xr in (4.0, 0.13):
        seg, st = _solved(xr)
        got = tan_delta_from_phasors(
            st.v_s.to_complex(), st.v_r.to_complex(), st.i_r.to_complex()
        )
        assert got == pytest.approx(xr, rel=1e-9)


def test_estimator_equals_oracle_over_random_states():
    rng = np.random.default_rng(77)
    checked = 0
    for _ in range(400):
        seg = random_segment(rng)
        op = random_operating_point(rng)
        t_c = float(rng.uniform(0.0, 150.0))
        try:
            st = solve_steady_state(seg, op, t_c)
        except InfeasibleLoadError:
            continue
        vs, vr, ir = st.v_s.to_complex(), st.v_r.to_complex(), st.i_r.to_complex()
        oracle = ((vs - vr) / ir).imag / ((vs - vr) / ir).real
        got = tan_delta_from_phasors(vs, vr, ir)
        assert got == pytest.approx(oracle, rel=1e-9)
        assert got == pytest.approx(seg.x / line_resistance(seg, t_c), rel=1e-9)
        checked += 1
    assert checked > 300


def test_scalar_and_phasor_forms_agree():
    rng = np.random.default_rng(15)
    for _ in range(200):
        seg = random_segment(rng)
        op = random_operating_point(rng)
        try:
            st = solve_steady_state(seg, op, 40.0)
        except InfeasibleLoadError:
            continue
        vs, vr, ir = st.v_s.to_complex(), st.v_r.to_complex(), st.i_r.to_complex()
        p = (vr * ir.conjugate()).real
        q = (vr * ir.conjugate()).imag
        theta = math.atan2(vs.imag, vs.real) - math.atan2(vr.imag, vr.real)
        a = tan_delta_from_phasors(vs, vr, ir)
        b = tan_delta_from_scalars(abs(vs), abs(vr), theta, p, q)
        assert a == pytest.approx(b, rel=1e-9)


def test_estimator_flags_singular_samples():
    # No current -> no power -> scale 0.
    assert tan_delta_from_phasors(100 + 0j, 100 + 0j, 0j) is None
    # Identical terminal voltages with load current: zero series drop.
    assert tan_delta_from_phasors(100 + 0j, 100 + 0j, 10 + 1j) is None
    assert tan_delta_from_scalars(0.0, 100.0, 0.1, 1.0, 1.0) is None
    assert tan_delta_from_scalars(100.0, 100.0, 0.0, 1.0, 0.0) is None


def test_estimator_survives_measurement_noise_scale():
    # Noise perturbs the estimate but must keep it finite and near X/R at
    # realistic magnitudes (regression guard for catastrophic cancellation).
    seg, st = _solved(2.0, current=800.0)
    spec = MeasurementSpec(time_structure="iid")
    rng = np.random.default_rng(31)
    noise = build_noise(spec, 2000, rng)
    vals = []
    for k in range(2000):
        vs, vr, _, ir = apply_measurement_errors(
            spec,
            st.v_s.to_complex(),
            st.v_r.to_complex(),
            st.i_s.to_complex(),
            st.i_r.to_complex(),
            noise[k],
        )
        td = tan_delta_from_phasors(vs, vr, ir)
        if td is not None:
            vals.append(td)
    vals = np.array(vals)
    assert len(vals) > 1900
    assert np.isfinite(vals).all()
    assert abs(np.median(vals) - 2.0) < 0.5
