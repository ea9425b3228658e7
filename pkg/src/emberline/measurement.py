"""PMU measurement-error model and the impedance-angle estimator.

The error model treats instrument-class limits as hard bounds and draws the
actual error inside them: magnitude errors are multiplicative-of-reading,
angle errors rotate the phasor, and the total-vector-error term adds a small
complex fraction of the reading in an arbitrary direction.  Current-channel
magnitude accuracy degrades below a fraction of nominal current, as burden
class accuracies do.

Draws can be frozen per run (``time_structure="constant"``, the default:
one realization of each instrument's bias is held for the whole window, which
is how calibration-class errors behave on PMU time scales) or redrawn per
sample (``"iid"``, a pessimistic jitter model).

All phasor arithmetic in this module is written out in explicit re/im float
operations.  The simulation kernel mirrors these expressions op-for-op; the
cross-check tests require bit-equal results, so keep the shapes aligned.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import DomainError

DISTRIBUTIONS = ("uniform", "truncated_gaussian")
TIME_STRUCTURES = ("constant", "iid")

#: Noise-array column offsets, one group of four per phasor, in this order.
PHASOR_ORDER = ("v_s", "v_r", "i_s", "i_r")
COL_MAG = 0
COL_ANG = 1
COL_TVE_RE = 2
COL_TVE_IM = 3
NOISE_COLS = 4 * len(PHASOR_ORDER)

#: Relative floor under which the estimator denominator counts as singular.
DEN_EPS_REL = 1e-12


@dataclass(frozen=True)
class MeasurementSpec:
    """Instrument error bounds and draw behaviour.

    Attributes:
        v_mag_limit: voltage magnitude bound, fraction of reading.
        i_mag_limit: current magnitude bound above the low-range threshold.
        i_mag_limit_low: current magnitude bound at or below the threshold.
        i_low_threshold: low-range boundary as a fraction of nominal current.
        angle_limit_deg: phase-angle bound, degrees.
        tve_limit: total-vector-error bound, fraction of reading.
        nominal_current: instrument nominal current, A.
        distribution: how draws fill the bounds ("uniform" or
            "truncated_gaussian", sigma = bound/3 clipped to the bound).
        time_structure: "constant" (one draw per run) or "iid" (per sample).
    """

    v_mag_limit: float = 0.003
    i_mag_limit: float = 0.003
    i_mag_limit_low: float = 0.006
    i_low_threshold: float = 0.2
    angle_limit_deg: float = 0.021
    tve_limit: float = 0.01
    nominal_current: float = 2100.0
    distribution: str = "uniform"
    time_structure: str = "constant"

    def __post_init__(self) -> None:
        for name in ("v_mag_limit", "i_mag_limit", "i_mag_limit_low", "angle_limit_deg", "tve_limit"):
            val = getattr(self, name)
            if not 0.0 <= val < 1.0:
                raise DomainError(f"{name} must be within [0, 1): got {val}")
        if not 0.0 <= self.i_low_threshold <= 1.0:
            raise DomainError("i_low_threshold must be within [0, 1]")
        if self.nominal_current <= 0.0:
            raise DomainError("nominal_current must be > 0 A")
        if self.distribution not in DISTRIBUTIONS:
            raise DomainError(f"distribution must be one of {DISTRIBUTIONS}")
        if self.time_structure not in TIME_STRUCTURES:
            raise DomainError(f"time_structure must be one of {TIME_STRUCTURES}")

    @property
    def angle_limit_rad(self) -> float:
        return math.radians(self.angle_limit_deg)

    def noise_rows(self, n_samples: int) -> int:
        return 1 if self.time_structure == "constant" else n_samples


def _unit_draws(rng: np.random.Generator, shape: tuple[int, ...], distribution: str) -> np.ndarray:
    """Draws in [-1, 1]: uniform, or a gaussian (sigma=1/3) truncated by rejection."""
    if distribution == "uniform":
        return rng.uniform(-1.0, 1.0, size=shape)
    out = rng.normal(0.0, 1.0 / 3.0, size=shape)
    bad = np.abs(out) > 1.0
    while bad.any():
        out[bad] = rng.normal(0.0, 1.0 / 3.0, size=int(bad.sum()))
        bad = np.abs(out) > 1.0
    return out


def _disc_draws(rng: np.random.Generator, n: int, distribution: str) -> np.ndarray:
    """(n, 2) points in the closed unit disc, by rejection from the square."""
    out = np.empty((n, 2))
    if distribution == "uniform":
        draw = lambda m: rng.uniform(-1.0, 1.0, size=(m, 2))  # noqa: E731
    else:
        draw = lambda m: rng.normal(0.0, 1.0 / 3.0, size=(m, 2))  # noqa: E731
    filled = 0
    while filled < n:
        cand = draw(n - filled)
        keep = cand[(cand * cand).sum(axis=1) <= 1.0]
        out[filled : filled + len(keep)] = keep
        filled += len(keep)
    return out


def build_noise(spec: MeasurementSpec, n_samples: int, rng: np.random.Generator) -> np.ndarray:
    """Unit-scaled draws, shape ``(rows, 16)``.

    One row when the structure is constant, one per sample otherwise.  Columns
    come in groups of four per phasor (see :data:`PHASOR_ORDER`):
    magnitude unit, angle unit, and a unit-disc pair for the TVE term.
    The physical bounds are applied at use time, not here, so the same draw
    array can be reused across error-bound settings.
    """
    if n_samples < 1:
        raise DomainError("n_samples must be >= 1")
    rows = spec.noise_rows(n_samples)
    noise = np.empty((rows, NOISE_COLS))
    for p in range(len(PHASOR_ORDER)):
        base = 4 * p
        noise[:, base + COL_MAG] = _unit_draws(rng, (rows,), spec.distribution)
        noise[:, base + COL_ANG] = _unit_draws(rng, (rows,), spec.distribution)
        noise[:, base + COL_TVE_RE : base + COL_TVE_IM + 1] = _disc_draws(rng, rows, spec.distribution)
    return noise


def _apply_factor(
    v_re: float,
    v_im: float,
    mag_bound: float,
    ang_bound_rad: float,
    tve_bound: float,
    u_mag: float,
    u_ang: float,
    u_tre: float,
    u_tim: float,
) -> tuple[float, float]:
    """Plain-float error application; mirrored inside the simulation kernel."""
    e_mag = mag_bound * u_mag
    e_ang = ang_bound_rad * u_ang
    f_re = (1.0 + e_mag) * math.cos(e_ang) + tve_bound * u_tre
    f_im = (1.0 + e_mag) * math.sin(e_ang) + tve_bound * u_tim
    return v_re * f_re - v_im * f_im, v_re * f_im + v_im * f_re


def current_mag_bound(spec: MeasurementSpec, i_re: float, i_im: float) -> float:
    """Magnitude bound for a current reading, honouring the low-range class."""
    thr = spec.i_low_threshold * spec.nominal_current
    if i_re * i_re + i_im * i_im > thr * thr:
        return spec.i_mag_limit
    return spec.i_mag_limit_low


def apply_measurement_errors(
    spec: MeasurementSpec,
    v_s: complex,
    v_r: complex,
    i_s: complex,
    i_r: complex,
    noise_row: np.ndarray,
) -> tuple[complex, complex, complex, complex]:
    """Corrupt one set of true phasors with one noise row.

    The low/high current-range decision uses the true reading, as a real
    instrument's range is set by the signal actually flowing through it.
    """
    if noise_row.shape != (NOISE_COLS,):
        raise DomainError(f"noise_row must have shape ({NOISE_COLS},)")
    ang = spec.angle_limit_rad
    tve = spec.tve_limit
    out = []
    for p, z in enumerate((v_s, v_r, i_s, i_r)):
        base = 4 * p
        if p < 2:
            mag_bound = spec.v_mag_limit
        else:
            mag_bound = current_mag_bound(spec, z.real, z.imag)
        re, im = _apply_factor(
            z.real,
            z.imag,
            mag_bound,
            ang,
            tve,
            noise_row[base + COL_MAG],
            noise_row[base + COL_ANG],
            noise_row[base + COL_TVE_RE],
            noise_row[base + COL_TVE_IM],
        )
        out.append(complex(re, im))
    return out[0], out[1], out[2], out[3]


# --------------------------------------------------------------------------
# Impedance-angle (tan delta) estimation
# --------------------------------------------------------------------------


def tan_delta_terms(
    vs_re: float, vs_im: float, vr_re: float, vr_im: float, ir_re: float, ir_im: float
) -> tuple[float, float, float]:
    """Numerator, denominator and scale of the tan-delta ratio (plain floats).

    tan delta = Im((v_s - v_r)/i_r) / Re((v_s - v_r)/i_r), rearranged into the
    receiving-end quantities a PMU pair actually reports (bus voltage
    magnitudes, the angle between them, and received P/Q), with the trig
    eliminated: it is numerically the same ratio, computed without resolving
    any angles.  The simulation kernel mirrors these exact operations.
    """
    v_mag = math.sqrt(vr_re * vr_re + vr_im * vr_im)
    if v_mag <= 0.0:
        return 0.0, 0.0, 0.0
    # v_s * conj(v_r), resolved along/across v_r.
    cross_re = vs_re * vr_re + vs_im * vr_im
    cross_im = vs_im * vr_re - vs_re * vr_im
    c_along = cross_re / v_mag
    s_across = cross_im / v_mag
    # Received complex power v_r * conj(i_r).
    p_r = vr_re * ir_re + vr_im * ir_im
    q_r = vr_im * ir_re - vr_re * ir_im
    num = p_r * s_across + q_r * c_along - q_r * v_mag
    den = p_r * c_along - q_r * s_across - p_r * v_mag
    ap = p_r if p_r >= 0.0 else -p_r
    aq = q_r if q_r >= 0.0 else -q_r
    scale = v_mag * (ap + aq)
    return num, den, scale


def tan_delta_from_phasors(v_s: complex, v_r: complex, i_r: complex) -> float | None:
    """tan delta of the series path from one synchronized sample, or None.

    None marks a singular sample (no load current, or sending and receiving
    voltages indistinguishable), which callers should exclude rather than
    propagate.
    """
    num, den, scale = tan_delta_terms(v_s.real, v_s.imag, v_r.real, v_r.imag, i_r.real, i_r.imag)
    if scale <= 0.0:
        return None
    ad = den if den >= 0.0 else -den
    if ad <= DEN_EPS_REL * scale:
        return None
    return num / den


def tan_delta_from_scalars(
    v_s_mag: float, v_r_mag: float, theta: float, p_r: float, q_r: float
) -> float | None:
    """tan delta from the five scalar readings of a PMU pair.

    ``theta`` is the angle of the sending voltage ahead of the receiving
    voltage, radians.  Same estimator as
    :func:`tan_delta_from_phasors`, expressed in scalar form.
    """
    if v_r_mag <= 0.0 or v_s_mag <= 0.0:
        return None
    c_along = v_s_mag * math.cos(theta)
    s_across = v_s_mag * math.sin(theta)
    num = p_r * s_across + q_r * c_along - q_r * v_r_mag
    den = p_r * c_along - q_r * s_across - p_r * v_r_mag
    scale = v_r_mag * (abs(p_r) + abs(q_r))
    if scale <= 0.0 or abs(den) <= DEN_EPS_REL * scale:
        return None
    return num / den
