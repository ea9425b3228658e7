"""Conductor heat balance and ground-fire ambient heating.

Two models live here:

* a lumped-capacitance conductor temperature update (joule gain, forced and
  natural convection, radiation; solar optional and zero by default, the
  conservative night case), integrated with explicit Euler at the PMU
  sample step, and
* an empirical fire-heating law ``delta_t_ambient = f(d) * sqrt(t_burn)``
  whose distance factor ``f`` is calibrated from a measured table of ambient
  temperature rises.

The heat-rate arithmetic is mirrored op-for-op inside the simulation kernel;
change one and the kernel equivalence test will fail until the other side is
updated to match.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from importlib import resources

from . import constants as C
from .exceptions import CalibrationError, DomainError
from .phasors import LineSegment, line_resistance

_MAX_EQUILIBRIUM_T = 3000.0


@dataclass(frozen=True)
class ConductorThermalParams:
    """Per-conductor data for the heat balance.

    Attributes:
        diameter: outer diameter, m.
        m_cp: heat capacity per unit length, J/(m.C).
        emissivity: surface emissivity, dimensionless in [0, 1].
        rated_current: nameplate continuous rating, A (informational).
    """

    diameter: float
    m_cp: float
    emissivity: float = 0.5
    rated_current: float = 0.0

    def __post_init__(self) -> None:
        if not 0.001 <= self.diameter <= 0.2:
            raise DomainError(f"conductor diameter {self.diameter} m out of range")
        if self.m_cp <= 0.0:
            raise DomainError("m_cp must be > 0 J/(m.C)")
        if not 0.0 <= self.emissivity <= 1.0:
            raise DomainError("emissivity must be within [0, 1]")


@dataclass(frozen=True)
class FireCalibration:
    """Distance factors for the ambient-heating law.

    ``factors[i]`` is f(distances[i]) in C/sqrt(s); queries between grid
    points interpolate log(f) linearly in distance.  No extrapolation is
    offered: the empirical table simply says nothing outside its range.
    """

    distances: tuple[float, ...]
    factors: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.distances) < 1 or len(self.distances) != len(self.factors):
            raise CalibrationError("calibration needs >= 1 (distance, factor) pair")
        if any(d2 <= d1 for d1, d2 in zip(self.distances, self.distances[1:])):
            raise CalibrationError("calibration distances must be strictly increasing")
        if any(f <= 0.0 for f in self.factors):
            raise CalibrationError("calibration factors must be > 0")
        if any(f2 >= f1 for f1, f2 in zip(self.factors, self.factors[1:])):
            raise CalibrationError("heating factors must decrease strictly with distance")

    def factor_at(self, distance: float) -> float:
        """Interpolated f(distance), C/sqrt(s); raises outside the grid."""
        d = self.distances
        if not d[0] <= distance <= d[-1]:
            raise CalibrationError(
                f"distance {distance} m outside calibrated range [{d[0]}, {d[-1]}] m"
            )
        if distance >= d[-1]:
            return self.factors[-1]
        for i in range(len(d) - 1):
            if distance <= d[i + 1]:
                w = (distance - d[i]) / (d[i + 1] - d[i])
                lf = (1.0 - w) * math.log(self.factors[i]) + w * math.log(self.factors[i + 1])
                return math.exp(lf)
        raise AssertionError("unreachable")

    def invert_factor(self, factor: float) -> float:
        """Distance whose heating factor equals ``factor``, clamped to the grid."""
        if factor >= self.factors[0]:
            return self.distances[0]
        if factor <= self.factors[-1]:
            return self.distances[-1]
        lf = math.log(factor)
        for i in range(len(self.distances) - 1):
            f_hi, f_lo = self.factors[i], self.factors[i + 1]
            if f_lo <= factor <= f_hi:
                w = (math.log(f_hi) - lf) / (math.log(f_hi) - math.log(f_lo))
                return self.distances[i] + w * (self.distances[i + 1] - self.distances[i])
        raise AssertionError("unreachable")


@dataclass(frozen=True)
class FireSource:
    """A ground fire near the line.

    Attributes:
        distance: horizontal distance to the conductor, m (within the
            calibration grid).
        ignition_time: seconds relative to the simulation window start.
            Negative values describe a fire that was already burning when the
            window opens — needed to reach large ambient rises within a short
            observation window.
    """

    distance: float
    ignition_time: float = 0.0

    def __post_init__(self) -> None:
        if self.distance <= 0.0:
            raise DomainError("fire distance must be > 0 m")

    def ambient_delta(self, cal: FireCalibration, t: float) -> float:
        """Ambient temperature rise at window time ``t`` (s), in C."""
        burn = t - self.ignition_time
        if burn <= 0.0:
            return 0.0
        return cal.factor_at(self.distance) * math.sqrt(burn)


def fire_delta_ta(cal: FireCalibration, distance: float, burn_time: float) -> float:
    """Ambient temperature rise (C) at ``distance`` m after ``burn_time`` s."""
    if burn_time < 0.0:
        raise DomainError("burn_time must be >= 0 s")
    if burn_time == 0.0:
        return 0.0
    return cal.factor_at(distance) * math.sqrt(burn_time)


def calibrate_from_table(
    rows: list[tuple[float, float, float]],
    rel_tol: float = 0.01,
) -> FireCalibration:
    """Fit the distance factors from measured (distance, burn_time, delta_ta) rows.

    Each row contributes an implied factor ``delta_ta / sqrt(burn_time)``;
    per-distance factors must agree within ``rel_tol`` (the sqrt-time law is a
    modelling commitment, not a free fit) or a :class:`CalibrationError`
    naming the offending rows is raised.
    """
    if not rows:
        raise CalibrationError("calibration table is empty")
    by_distance: dict[float, list[tuple[int, float]]] = {}
    for idx, (d, t_f, dta) in enumerate(rows):
        if d <= 0.0 or t_f <= 0.0 or dta <= 0.0:
            raise CalibrationError(f"row {idx}: ({d}, {t_f}, {dta}) must all be > 0")
        by_distance.setdefault(d, []).append((idx, dta / math.sqrt(t_f)))
    distances = sorted(by_distance)
    factors = []
    bad: list[str] = []
    for d in distances:
        pairs = by_distance[d]
        mean = sum(f for _, f in pairs) / len(pairs)
        for idx, f in pairs:
            if abs(f / mean - 1.0) > rel_tol:
                bad.append(f"row {idx} (distance {d} m): implied factor {f:.6g} vs mean {mean:.6g}")
        factors.append(mean)
    if bad:
        raise CalibrationError(
            "sqrt-time law violated beyond %.2g relative tolerance:\n  " % rel_tol + "\n  ".join(bad)
        )
    return FireCalibration(tuple(distances), tuple(factors))


# --------------------------------------------------------------------------
# Heat balance
# --------------------------------------------------------------------------


def heat_rate(
    params: ConductorThermalParams,
    t_c: float,
    r_per_m: float,
    i_rms: float,
    t_a: float,
    v_w: float,
    q_solar: float = 0.0,
    elevation: float = 0.0,
) -> float:
    """Net heating power per unit length, W/m, at surface temperature t_c.

    Positive means the conductor is warming.  The lumped model takes the
    surface temperature equal to the core temperature.
    """
    return _heat_rate(
        params.diameter,
        params.emissivity,
        t_c,
        t_a,
        v_w,
        elevation,
        r_per_m,
        i_rms * i_rms,
        q_solar,
    )


def _heat_rate(
    diam: float,
    emiss: float,
    t_s: float,
    t_a: float,
    v_w: float,
    elevation: float,
    r_per_m: float,
    i_sq: float,
    q_solar: float,
) -> float:
    # Film air properties. Mirrored in the simulation kernel: keep the exact
    # expression shapes (T*sqrt(T) for ^1.5, squared squares for ^4).
    t_film = 0.5 * (t_s + t_a)
    k_f = C.AIR_K_C0 + C.AIR_K_C1 * t_film + C.AIR_K_C2 * (t_film * t_film)
    t_film_k = t_film + C.MU_KELVIN_OFFSET
    mu_f = C.AIR_MU_C * (t_film_k * math.sqrt(t_film_k)) / (t_film + C.AIR_MU_OFF)
    rho_f = (C.AIR_RHO_N0 + C.AIR_RHO_N1 * elevation + C.AIR_RHO_N2 * (elevation * elevation)) / (
        1.0 + C.AIR_RHO_D * t_film
    )

    dt_air = t_s - t_a
    re = diam * rho_f * v_w / mu_f
    q_forced = (C.FORCED_CONV_A + C.FORCED_CONV_B * re**C.FORCED_CONV_EXP) * k_f * dt_air
    ad = dt_air if dt_air >= 0.0 else -dt_air
    q_nat = C.NATURAL_CONV_C * math.sqrt(rho_f) * diam**C.NATURAL_CONV_DIAM_EXP * ad**C.NATURAL_CONV_DT_EXP
    if dt_air < 0.0:
        q_nat = -q_nat
    # Take the dominant convective exchange, sign-symmetrically (a fire-heated
    # air mass convects heat INTO the conductor).
    if abs(q_forced) >= abs(q_nat):
        q_conv = q_forced
    else:
        q_conv = q_nat

    a_s = (t_s + C.KELVIN_OFFSET) * 0.01
    a_s2 = a_s * a_s
    a_a = (t_a + C.KELVIN_OFFSET) * 0.01
    a_a2 = a_a * a_a
    q_rad = C.RADIATION_C * diam * emiss * (a_s2 * a_s2 - a_a2 * a_a2)

    return r_per_m * i_sq + q_solar - q_conv - q_rad


def step_conductor_temp(
    params: ConductorThermalParams,
    seg: LineSegment,
    t_c: float,
    i_rms: float,
    t_a: float,
    v_w: float,
    dt: float,
    q_solar: float = 0.0,
    elevation: float = 0.0,
) -> float:
    """One explicit-Euler step of the conductor temperature, returning the new t_c.

    The joule term uses the segment resistance evaluated at the *current*
    temperature (per-metre), so the update is continuous in all inputs.
    """
    if dt <= 0.0:
        raise DomainError("dt must be > 0 s")
    r_per_m = line_resistance(seg, t_c) / (seg.length * 1000.0)
    rate = _heat_rate(
        params.diameter, params.emissivity, t_c, t_a, v_w, elevation, r_per_m, i_rms * i_rms, q_solar
    )
    return t_c + dt * (rate / params.m_cp)


def equilibrium_temperature(
    params: ConductorThermalParams,
    seg: LineSegment,
    i_rms: float,
    t_a: float,
    v_w: float,
    q_solar: float = 0.0,
    elevation: float = 0.0,
) -> float:
    """Steady conductor temperature for constant current and weather.

    Bisection on the net heat rate; the balance is monotone because losses
    grow much faster with surface temperature than the joule term does.
    """

    def net(t: float) -> float:
        # Raw resistance law, bypassing the domain guard: bracket expansion
        # probes hypothetical trial temperatures, possibly beyond the range a
        # real conductor would be operated at.
        r_per_m = seg.r_ref * (1.0 + seg.alpha * (t - seg.t_ref)) / (seg.length * 1000.0)
        return _heat_rate(
            params.diameter, params.emissivity, t, t_a, v_w, elevation, r_per_m, i_rms * i_rms, q_solar
        )

    lo = t_a
    f_lo = net(lo)
    if f_lo == 0.0:
        return lo
    if f_lo < 0.0:
        # Ambient alone would cool the conductor below t_a: not physical for
        # this model (losses vanish at t_c == t_a when there is no sun).
        raise DomainError("net heat rate negative at t_c == t_a; check inputs")
    hi = t_a + 10.0
    while net(hi) > 0.0:
        hi = t_a + 2.0 * (hi - t_a)
        if hi > _MAX_EQUILIBRIUM_T:
            raise DomainError("no equilibrium below %.0f C; current too high" % _MAX_EQUILIBRIUM_T)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if net(mid) > 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-11:
            break
    return 0.5 * (lo + hi)


# --------------------------------------------------------------------------
# Bundled data
# --------------------------------------------------------------------------


def load_fire_table(path=None) -> list[tuple[float, float, float]]:
    """Read a fire-heating table CSV: distance_m, burn_time_s, delta_ta_c.

    With no path the packaged reference table is returned.
    """
    if path is None:
        ref = resources.files("emberline.data").joinpath("fire_table.csv")
        with ref.open("r", encoding="utf-8") as fh:
            return _parse_fire_table(fh)
    with open(path, "r", encoding="utf-8", newline="") as fh:
        return _parse_fire_table(fh)


def _parse_fire_table(fh) -> list[tuple[float, float, float]]:
    rows: list[tuple[float, float, float]] = []
    reader = csv.reader(line for line in fh if not line.lstrip().startswith("#"))
    header = next(reader, None)
    if header is None or [h.strip() for h in header] != ["distance_m", "burn_time_s", "delta_ta_c"]:
        raise CalibrationError("fire table must have header distance_m,burn_time_s,delta_ta_c")
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 3:
            raise CalibrationError(f"fire table row {lineno}: expected 3 columns, got {len(row)}")
        try:
            rows.append((float(row[0]), float(row[1]), float(row[2])))
        except ValueError as exc:
            raise CalibrationError(f"fire table row {lineno}: {exc}") from exc
    return rows


def default_fire_calibration() -> FireCalibration:
    """Calibration fitted from the packaged reference heating table."""
    return calibrate_from_table(load_fire_table())


def conductor_catalogue() -> dict[str, ConductorThermalParams]:
    """Named conductor entries from the packaged catalogue file.

    The values are representative for each conductor family; edit the
    packaged ``conductors.yaml`` (or supply params inline in a run spec) to
    match actual hardware.
    """
    import yaml

    ref = resources.files("emberline.data").joinpath("conductors.yaml")
    with ref.open("r", encoding="utf-8") as fh:
        doc = yaml.safe_load(fh)
    out: dict[str, ConductorThermalParams] = {}
    for name, row in doc["conductors"].items():
        out[name] = ConductorThermalParams(
            diameter=float(row["diameter_m"]),
            m_cp=float(row["m_cp_j_per_m_c"]),
            emissivity=float(row.get("emissivity", 0.5)),
            rated_current=float(row.get("rated_current_a", 0.0)),
        )
    return out
