"""Two-bus pi-model electrics for a monitored overhead-line segment.

The monitored segment runs from a sending terminal S (stiff source) to a
receiving terminal R that serves a constant-PQ load plus an optional
switchable shunt-capacitor bank.  Everything here is single-conductor
(per-phase) and steady-state: the thermal loop re-solves this network every
sample as the conductor resistance drifts.

The solver core (:func:`solve_rect`) is written against plain floats with an
explicit operation order because the compiled simulation kernel mirrors it
op-for-op; an equivalence test keeps the two in lock step.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

from .exceptions import DomainError, InfeasibleLoadError

log = logging.getLogger(__name__)

_TWO_PI = 2.0 * math.pi

# Validity window of the linear resistance-temperature law, degrees C.
RESISTANCE_T_MIN = -40.0
RESISTANCE_T_MAX = 300.0

# Impedance-angle family covered by the shipped study (X/R of common ACSR
# sizes).  Ratios outside it are permitted but logged, since several shipped
# defaults (error envelopes, rating bases) were chosen for this family.
XR_RATIO_MIN = 0.13
XR_RATIO_MAX = 4.26

MAX_SEGMENT_LENGTH_KM = 20.0


@dataclass(frozen=True)
class Phasor:
    """Polar representation of a 60 Hz quantity.

    Attributes:
        magnitude: RMS magnitude, in the unit of the quantity (V, A, ...).
        angle: radians, normalised to (-pi, pi].
    """

    magnitude: float
    angle: float = 0.0

    def __post_init__(self) -> None:
        if not math.isfinite(self.magnitude) or self.magnitude < 0.0:
            raise DomainError(f"phasor magnitude must be finite and >= 0, got {self.magnitude!r}")
        if not math.isfinite(self.angle):
            raise DomainError(f"phasor angle must be finite, got {self.angle!r}")
        a = math.remainder(self.angle, _TWO_PI)
        if a <= -math.pi:
            a = math.pi
        object.__setattr__(self, "angle", a)

    @classmethod
    def from_complex(cls, z: complex) -> "Phasor":
        return cls(abs(z), math.atan2(z.imag, z.real))

    def to_complex(self) -> complex:
        return complex(self.magnitude * math.cos(self.angle), self.magnitude * math.sin(self.angle))


@dataclass(frozen=True)
class LineSegment:
    """Series/shunt parameters of the monitored segment.

    Attributes:
        r_ref: total series resistance at ``t_ref``, ohm.
        x: total series reactance, ohm.
        length: route length, km (0 < length <= 20).
        b_shunt: total shunt susceptance of the segment, siemens (pi model
            splits it half per terminal).
        alpha: linear temperature coefficient of resistance, 1/C.
        t_ref: reference conductor temperature for ``r_ref``, C.
    """

    r_ref: float
    x: float
    length: float
    b_shunt: float = 0.0
    alpha: float = 0.004
    t_ref: float = 20.0

    def __post_init__(self) -> None:
        if self.r_ref <= 0.0:
            raise DomainError(f"r_ref must be > 0 ohm, got {self.r_ref}")
        if self.x <= 0.0:
            raise DomainError(f"x must be > 0 ohm, got {self.x}")
        if not 0.0 < self.length <= MAX_SEGMENT_LENGTH_KM:
            raise DomainError(f"length must be in (0, {MAX_SEGMENT_LENGTH_KM}] km, got {self.length}")
        if self.b_shunt < 0.0:
            raise DomainError(f"b_shunt must be >= 0 S, got {self.b_shunt}")
        if not 0.0 < self.alpha < 0.1:
            raise DomainError(f"alpha out of plausible range: {self.alpha}")
        ratio = self.x / self.r_ref
        if not XR_RATIO_MIN <= ratio <= XR_RATIO_MAX:
            log.warning("segment X/R = %.4g outside the covered family [%g, %g]", ratio, XR_RATIO_MIN, XR_RATIO_MAX)


@dataclass(frozen=True)
class OperatingPoint:
    """Boundary conditions for the two-bus solve.

    Attributes:
        source_voltage: stiff source phasor behind terminal S, volts.
        load_p: constant active power drawn at terminal R, W (>= 0).
        load_q: constant reactive power drawn at terminal R, var
            (positive = inductive).
        shunt_compensation: switchable capacitor-bank susceptance at the load
            bus, siemens (>= 0; injects vars).
    """

    source_voltage: Phasor
    load_p: float
    load_q: float
    shunt_compensation: float = 0.0

    def __post_init__(self) -> None:
        if self.source_voltage.magnitude <= 0.0:
            raise DomainError("source voltage magnitude must be > 0")
        if self.load_p < 0.0:
            raise DomainError(f"load_p must be >= 0 W, got {self.load_p}")
        if self.shunt_compensation < 0.0:
            raise DomainError(f"shunt_compensation must be >= 0 S, got {self.shunt_compensation}")
        for name in ("load_p", "load_q", "shunt_compensation"):
            if not math.isfinite(getattr(self, name)):
                raise DomainError(f"{name} must be finite")


@dataclass(frozen=True)
class SteadyState:
    """Solved terminal quantities.

    ``i_r`` is the series-branch current delivered at terminal R (the pi
    model's own charging legs are accounted inside the solve), so
    ``(v_s - v_r) / i_r`` recovers the series impedance exactly.  ``i_s`` is
    the total current injected at terminal S, including the S-side charging
    leg.
    """

    v_s: Phasor
    v_r: Phasor
    i_s: Phasor
    i_r: Phasor

    def per_unit(self, v_base: float, i_base: float) -> dict[str, complex]:
        """Rectangular per-unit view of the four terminal phasors."""
        if v_base <= 0.0 or i_base <= 0.0:
            raise DomainError("per-unit bases must be > 0")
        return {
            "v_s": self.v_s.to_complex() / v_base,
            "v_r": self.v_r.to_complex() / v_base,
            "i_s": self.i_s.to_complex() / i_base,
            "i_r": self.i_r.to_complex() / i_base,
        }


def line_resistance(seg: LineSegment, t_c: float) -> float:
    """Series resistance of the segment at conductor temperature ``t_c`` (C).

    Linear law ``r_ref * (1 + alpha * (t_c - t_ref))``, valid for t_c in
    [-40, 300] C; outside that window the linearisation is not trustworthy
    and a :class:`DomainError` is raised.
    """
    if not RESISTANCE_T_MIN <= t_c <= RESISTANCE_T_MAX:
        raise DomainError(f"t_c = {t_c} C outside resistance-law domain [{RESISTANCE_T_MIN}, {RESISTANCE_T_MAX}]")
    return seg.r_ref * (1.0 + seg.alpha * (t_c - seg.t_ref))


def true_tan_delta(seg: LineSegment, t_c: float) -> float:
    """Ground-truth impedance-angle tangent X/R at conductor temperature t_c."""
    return seg.x / line_resistance(seg, t_c)


def solve_rect(
    vs_re: float,
    vs_im: float,
    r: float,
    x: float,
    b_node: float,
    p: float,
    q: float,
) -> tuple[bool, float, float, float, float]:
    """Closed-form two-bus solve in rectangular coordinates.

    ``b_node`` is the total shunt susceptance hanging at the receiving node
    (the line's own half plus any compensation bank).  The constant-PQ load
    is reduced against the Thevenin equivalent seen from the load node; the
    magnitude quadratic is solved on the higher-voltage branch.

    Returns ``(feasible, vr_re, vr_im, iser_re, iser_im)`` with the series
    branch current ``iser = (v_s - v_r) / (r + jx)``.  Plain-float body with
    naive complex division: the compiled kernel mirrors this function
    op-for-op.
    """
    # Thevenin reduction across the node shunt: den = 1 + Z*y, y = j*b_node.
    den_re = 1.0 - x * b_node
    den_im = r * b_node
    dmag2 = den_re * den_re + den_im * den_im
    if dmag2 <= 0.0:
        return False, 0.0, 0.0, 0.0, 0.0
    vth_re = (vs_re * den_re + vs_im * den_im) / dmag2
    vth_im = (vs_im * den_re - vs_re * den_im) / dmag2
    zth_re = (r * den_re + x * den_im) / dmag2
    zth_im = (x * den_re - r * den_im) / dmag2

    # G = conj(S_load) * Z_th.
    g_re = p * zth_re + q * zth_im
    g_im = p * zth_im - q * zth_re

    e2 = vth_re * vth_re + vth_im * vth_im
    e = math.sqrt(e2)
    if e <= 0.0:
        return False, 0.0, 0.0, 0.0, 0.0

    # In the frame where V_th is real: conj(W) * (E - W) = G.
    w_im = -g_im / e
    disc = e2 - 4.0 * (w_im * w_im + g_re)
    if disc < 0.0:
        return False, 0.0, 0.0, 0.0, 0.0
    w_re = 0.5 * (e + math.sqrt(disc))
    if w_re <= 0.0:
        return False, 0.0, 0.0, 0.0, 0.0

    u_re = vth_re / e
    u_im = vth_im / e
    vr_re = w_re * u_re - w_im * u_im
    vr_im = w_re * u_im + w_im * u_re

    dv_re = vs_re - vr_re
    dv_im = vs_im - vr_im
    zmag2 = r * r + x * x
    iser_re = (dv_re * r + dv_im * x) / zmag2
    iser_im = (dv_im * r - dv_re * x) / zmag2
    return True, vr_re, vr_im, iser_re, iser_im


def solve_steady_state(seg: LineSegment, op: OperatingPoint, t_c: float) -> SteadyState:
    """Solve the pi-model two-bus network at conductor temperature ``t_c``.

    Raises :class:`InfeasibleLoadError` when the constant-PQ load exceeds the
    transfer capability (no real positive-voltage root); the lower-voltage
    root is always rejected.
    """
    r = line_resistance(seg, t_c)
    b_half = 0.5 * seg.b_shunt
    b_node = b_half + op.shunt_compensation
    vs = op.source_voltage.to_complex()
    ok, vr_re, vr_im, iser_re, iser_im = solve_rect(
        vs.real, vs.imag, r, seg.x, b_node, op.load_p, op.load_q
    )
    if not ok:
        raise InfeasibleLoadError(
            f"no steady-state solution for load ({op.load_p:.6g} W, {op.load_q:.6g} var) "
            f"behind R={r:.6g}, X={seg.x:.6g} ohm at |Vs|={op.source_voltage.magnitude:.6g} V"
        )
    log.debug("two-bus solve: higher-voltage root selected, lower root rejected")
    # Terminal-S injection includes the sending-side charging leg.
    is_re = iser_re - b_half * vs.imag
    is_im = iser_im + b_half * vs.real
    return SteadyState(
        v_s=op.source_voltage,
        v_r=Phasor.from_complex(complex(vr_re, vr_im)),
        i_s=Phasor.from_complex(complex(is_re, is_im)),
        i_r=Phasor.from_complex(complex(iser_re, iser_im)),
    )


def receiving_power(v_r: Phasor, i_r: Phasor) -> tuple[float, float]:
    """Complex power delivered at terminal R, as ``(P, Q)`` in (W, var).

    Computed as ``v_r * conj(i_r)``; positive P flows into the load bus.
    """
    s = v_r.to_complex() * i_r.to_complex().conjugate()
    return s.real, s.imag
