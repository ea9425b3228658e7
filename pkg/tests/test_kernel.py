"""Kernel backend tests.

Two layers:

* backend equivalence — the compiled extension and the pure-Python fallback
  must produce bit-equal outputs (results, measured phasors, full traces) on
  a matrix of scenarios covering fires, noise structures, timing faults,
  reactance switching and infeasibility;
* reference cross-checks — the kernel's per-sample arithmetic must agree
  with the standalone reference functions (two-bus solve, heat-balance step,
  tan-delta estimator, slope-ratio detector) when replayed over the trace.
"""

from __future__ import annotations

import math
import os

import numpy as np
import pytest

from conftest import basic_run_spec
from emberline.detector import run_detector
from emberline.exceptions import ConfigError
from emberline.kernel import ACTIVE_BACKEND, backend_module, compiled_available
from emberline.measurement import MeasurementSpec, tan_delta_from_phasors
from emberline.phasors import solve_rect
from emberline.simrunner import ReactanceEvent, TimingFault, run
from emberline.thermal import FireSource, step_conductor_temp

ZERO_NOISE = MeasurementSpec(
    v_mag_limit=0.0,
    i_mag_limit=0.0,
    i_mag_limit_low=0.0,
    angle_limit_deg=0.0,
    tve_limit=0.0,
)

SCENARIOS = {
    "baseline": {},
    "fire_close": {"fire": FireSource(distance=2.0, ignition_time=0.0)},
    "fire_preburn": {"fire": FireSource(distance=5.0, ignition_time=-30.0)},
    "iid_noise": {"measurement": MeasurementSpec(time_structure="iid"), "seed": 23},
    "zero_noise_fire": {
        "measurement": ZERO_NOISE,
        "fire": FireSource(distance=1.5, ignition_time=0.1),
    },
    "frozen_receiving": {
        "timing_fault": TimingFault(mode="frozen", stream="receiving", onset_s=0.25)
    },
    "delay_both": {
        "timing_fault": TimingFault(mode="delay", stream="both", onset_s=0.2, delay_s=0.1)
    },
    "reactance_steps": {
        "reactance_events": (ReactanceEvent(0.15, 1.5), ReactanceEvent(0.3, 0.75))
    },
    "compensated": {"shunt_compensation": 2.5e-5},
    "explicit_init": {"initial_conductor_temp": 55.0},
    "mid_run_infeasible": {
        "reactance_events": (ReactanceEvent(0.3, 50.0),),
        "fire": FireSource(distance=3.0, ignition_time=0.0),
    },
}

needs_compiled = pytest.mark.skipif(
    not compiled_available(), reason="compiled kernel not built"
)


def _result_scalars(res) -> np.ndarray:
    return np.array(
        [
            res.t_c_start,
            res.t_c_end,
            res.tan_true_start,
            res.tan_true_end,
            res.p_r0,
            res.q_r0,
            res.i_rms0,
            res.ma_last,
        ]
    )


def _result_ints(res) -> tuple:
    return (
        res.n_samples,
        res.n_done,
        res.control1_trip_index,
        res.control2_trip_index,
        res.restart_count,
        res.first_restart_index,
        res.invalid_samples,
        res.infeasible_at,
    )


# ---------------------------------------------------------------------------
# Backend selection plumbing
# ---------------------------------------------------------------------------


def test_backend_module_lookup():
    py = backend_module("python")
    assert py.BACKEND == "python"
    assert callable(py.run_kernel)
    auto = backend_module("auto")
    assert callable(auto.run_kernel)
    with pytest.raises(ConfigError):
        backend_module("fortran")


def test_active_backend_is_a_known_name():
    assert ACTIVE_BACKEND in ("python", "compiled")
    forced = os.environ.get("EMBERLINE_BACKEND", "").strip().lower()
    if not forced or forced == "auto":
        # Default selection prefers the compiled kernel when present.
        assert ACTIVE_BACKEND == ("compiled" if compiled_available() else "python")


@needs_compiled
def test_compiled_module_reports_its_name():
    assert backend_module("compiled").BACKEND == "compiled"


# ---------------------------------------------------------------------------
# Bit-equality between backends
# ---------------------------------------------------------------------------


@needs_compiled
@pytest.mark.parametrize("name", sorted(SCENARIOS))
def test_backends_bit_identical(name):
    spec = basic_run_spec(**SCENARIOS[name])
    res_py = run(spec, want_trace=True, backend="python")
    res_c = run(spec, want_trace=True, backend="compiled")
    assert res_py.backend == "python"
    assert res_c.backend == "compiled"
    assert _result_ints(res_py) == _result_ints(res_c)
    assert np.array_equal(_result_scalars(res_py), _result_scalars(res_c), equal_nan=True)
    assert res_py.trace.keys() == res_c.trace.keys()
    for key in res_py.trace:
        assert np.array_equal(res_py.trace[key], res_c.trace[key], equal_nan=True), key


@needs_compiled
def test_run_accepts_module_objects():
    spec = basic_run_spec()
    by_name = run(spec, backend="compiled")
    by_module = run(spec, backend=backend_module("compiled"))
    assert np.array_equal(_result_scalars(by_name), _result_scalars(by_module), equal_nan=True)
    assert _result_ints(by_name) == _result_ints(by_module)


# ---------------------------------------------------------------------------
# Cross-checks against the reference implementations
# ---------------------------------------------------------------------------


def test_kernel_solve_matches_reference():
    # Zero error bounds make the measured phasors equal the true solution,
    # so the traced measurement columns must reproduce the standalone
    # two-bus solve exactly at the traced (r, x) of every sample.
    spec = basic_run_spec(measurement=ZERO_NOISE, fire=FireSource(distance=2.0, ignition_time=0.0))
    res = run(spec, want_trace=True, backend="python")
    tr = res.trace
    b_node = 0.5 * spec.line.b_shunt + spec.shunt_compensation
    v = spec.source_voltage
    for k in range(0, res.n_done, 37):
        ok, vr_re, vr_im, ir_re, ir_im = solve_rect(
            v, 0.0, tr["r_ohm"][k], tr["x_ohm"][k], b_node, spec.load_p, spec.load_q
        )
        assert ok
        assert tr["meas_vs_re"][k] == v
        assert tr["meas_vs_im"][k] == 0.0
        assert tr["meas_vr_re"][k] == vr_re
        assert tr["meas_vr_im"][k] == vr_im
        assert tr["meas_ir_re"][k] == ir_re
        assert tr["meas_ir_im"][k] == ir_im
        assert tr["i_mag"][k] == pytest.approx(math.hypot(ir_re, ir_im), rel=1e-12)


def test_kernel_thermal_matches_reference():
    # Replay the heat balance outside the kernel: each traced conductor
    # temperature must equal one explicit Euler step from the previous one,
    # driven by the previous sample's current and this sample's ambient.
    spec = basic_run_spec(fire=FireSource(distance=1.5, ignition_time=0.0))
    res = run(spec, want_trace=True, backend="python")
    tr = res.trace
    w = spec.weather
    dt = 1.0 / spec.detector.sample_rate
    assert tr["t_c"][0] == res.t_c_start
    t_c = res.t_c_start
    for k in range(1, res.n_done):
        t_c = step_conductor_temp(
            spec.conductor,
            spec.line,
            t_c,
            tr["i_mag"][k - 1],
            tr["t_a"][k],
            w.wind_speed,
            dt,
            w.q_solar,
            w.elevation,
        )
        assert t_c == pytest.approx(tr["t_c"][k], rel=1e-12), k
    assert res.t_c_end == tr["t_c"][res.n_done - 1]


def test_kernel_resistance_tracks_traced_temperature():
    spec = basic_run_spec(fire=FireSource(distance=2.0, ignition_time=0.0))
    res = run(spec, want_trace=True, backend="python")
    tr = res.trace
    seg = spec.line
    expected = seg.r_ref * (1.0 + seg.alpha * (tr["t_c"] - seg.t_ref))
    assert np.allclose(tr["r_ohm"], expected, rtol=1e-14, atol=0.0)
    assert np.allclose(tr["tan_true"], tr["x_ohm"] / tr["r_ohm"], rtol=1e-14, atol=0.0)


def test_kernel_tan_delta_matches_reference():
    # With no timing fault the detector input is exactly the measured
    # phasor set, so the standalone estimator must reproduce the traced
    # per-sample tan-delta, including which samples are singular.
    spec = basic_run_spec(measurement=MeasurementSpec(time_structure="iid"), seed=91)
    res = run(spec, want_trace=True, backend="python")
    tr = res.trace
    for k in range(0, res.n_done, 13):
        got = tan_delta_from_phasors(
            complex(tr["meas_vs_re"][k], tr["meas_vs_im"][k]),
            complex(tr["meas_vr_re"][k], tr["meas_vr_im"][k]),
            complex(tr["meas_ir_re"][k], tr["meas_ir_im"][k]),
        )
        if math.isnan(tr["tan_meas"][k]):
            assert got is None
        else:
            assert got == tr["tan_meas"][k]


@pytest.mark.parametrize("name", ["iid_noise", "frozen_receiving", "fire_close"])
def test_kernel_detector_matches_reference(name):
    # Feeding the traced per-sample tan-delta stream (NaN on singular
    # samples) through the standalone streaming detector must reproduce the
    # kernel's verdicts: trip indices, restarts, invalid count.
    spec = basic_run_spec(**SCENARIOS[name])
    res = run(spec, want_trace=True, backend="python")
    det = run_detector(res.trace["tan_meas"], spec.detector)
    assert det.control1_trip == res.control1_trip_index
    assert det.control2_trip == res.control2_trip_index
    assert len(det.restarts) == res.restart_count
    if res.restart_count:
        assert det.restarts[0] == res.first_restart_index
    assert det.invalid_samples == res.invalid_samples


# ---------------------------------------------------------------------------
# Infeasibility handling
# ---------------------------------------------------------------------------


def test_infeasible_from_first_sample():
    # An explicit initial temperature skips the driver-side equilibrium solve,
    # so an impossible load reaches the kernel and must stop it at sample 0.
    v = basic_run_spec().source_voltage
    spec = basic_run_spec(
        load_p=0.95 * v * 60000.0,
        load_q=0.31 * v * 60000.0,
        initial_conductor_temp=40.0,
    )
    res = run(spec, want_trace=True, backend="python")
    assert res.infeasible_at == 0
    assert res.n_done == 0
    assert not res.completed
    assert not res.tripped
    assert len(res.trace["t"]) == 0


def test_infeasible_mid_run_stops_cleanly():
    # A severe series-reactance step mid-window makes the load unservable;
    # the run must stop at the switching sample with everything before it
    # intact.
    spec = basic_run_spec(**SCENARIOS["mid_run_infeasible"])
    res = run(spec, want_trace=True, backend="python")
    k_sw = int(round(0.3 * spec.detector.sample_rate))
    assert res.infeasible_at == k_sw
    assert res.n_done == k_sw
    assert not res.completed
    assert len(res.trace["t"]) == k_sw
    assert np.isfinite(res.trace["t_c"]).all()
