"""Slope-ratio trip logic on the impedance-angle series.

A fire under the line heats the air, the conductor resistance rises, and the
series-path tan delta (X/R) falls.  The detector watches a moving average of
the per-sample tan delta estimate and compares it against its own recent
past at fixed cycle lags: when the older average exceeds the newer one by
more than a margin, the angle is sliding and a trip latches.

Two controls with different selectivity/speed trade-offs run side by side:

* control 1 (selective): the 6-cycle ratio AND one of the 4- or 3-cycle
  ratios must exceed the margin together;
* control 2 (fast): the 6-cycle ratio alone suffices.

A large instantaneous step between consecutive valid samples is the
signature of a switching event (reactive compensation in or out), not of a
fire; the detector then restarts its statistics so pre-switch history cannot
fake a slide.  Latched trips survive a restart.

The streaming class below is the reference implementation; the simulation
kernel mirrors it decision-for-decision and the equivalence tests hold both
to identical outputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import DomainError

#: Ratio denominators below this magnitude are treated as unusable.
MA_DEN_FLOOR = 1e-30


@dataclass(frozen=True)
class DetectorConfig:
    """Sampling geometry and trip thresholds.

    Attributes:
        sample_rate: phasor stream rate, Hz.
        system_frequency: power frequency, Hz; ratios are spaced in cycles
            of this frequency.
        ratio_lags_cycles: cycle lags of the numerator averages (the
            denominator always sits one cycle back).
        ratio_margin: a ratio must exceed ``1 + ratio_margin`` to count.
            The default is a guard against rounding, not a sensitivity knob:
            with per-run-constant instrument errors the no-fire ratio is 1 to
            machine precision, so anything materially above double rounding
            separates the classes.
        step_change_threshold: relative jump between consecutive valid
            samples that triggers a statistics restart.
    """

    sample_rate: float = 5000.0
    system_frequency: float = 60.0
    ratio_lags_cycles: tuple[int, ...] = (3, 4, 6)
    ratio_margin: float = 1e-7
    step_change_threshold: float = 0.05

    def __post_init__(self) -> None:
        if self.sample_rate <= 0.0 or self.system_frequency <= 0.0:
            raise DomainError("sample_rate and system_frequency must be > 0")
        if self.sample_rate < 4.0 * self.system_frequency:
            raise DomainError("sample_rate must cover several samples per cycle")
        if len(self.ratio_lags_cycles) != 3 or sorted(self.ratio_lags_cycles) != list(
            self.ratio_lags_cycles
        ):
            raise DomainError("ratio_lags_cycles must be three ascending cycle counts")
        if self.ratio_lags_cycles[0] <= 1:
            raise DomainError("ratio lags must exceed the 1-cycle denominator lag")
        if self.ratio_margin < 0.0:
            raise DomainError("ratio_margin must be >= 0")
        if not 0.0 < self.step_change_threshold < 10.0:
            raise DomainError("step_change_threshold must be in (0, 10)")

    @property
    def samples_per_cycle(self) -> int:
        return round(self.sample_rate / self.system_frequency)

    @property
    def window_samples(self) -> int:
        """Moving-average width: one power cycle of samples."""
        return self.samples_per_cycle

    def lag_samples(self, cycles: int) -> int:
        return round(cycles * self.sample_rate / self.system_frequency)

    @property
    def lag_table(self) -> tuple[int, int, int, int]:
        """(denominator lag, numerator lags...) in samples."""
        return (
            self.lag_samples(1),
            self.lag_samples(self.ratio_lags_cycles[0]),
            self.lag_samples(self.ratio_lags_cycles[1]),
            self.lag_samples(self.ratio_lags_cycles[2]),
        )

    @property
    def warmup_samples(self) -> int:
        """Samples after a (re)start before the slowest ratio exists."""
        return self.lag_samples(self.ratio_lags_cycles[-1]) + self.window_samples


@dataclass
class DetectorResult:
    """Outcome of a detector pass over one record."""

    control1_trip: int | None = None
    control2_trip: int | None = None
    restarts: list[int] = field(default_factory=list)
    invalid_samples: int = 0
    n_samples: int = 0

    @property
    def tripped(self) -> bool:
        return self.control1_trip is not None or self.control2_trip is not None


class SlopeRatioDetector:
    """Streaming detector; feed one tan-delta estimate per sample.

    Invalid samples (None or NaN) are excluded from the moving average and
    from step detection, but time still advances: lags are wall-clock lags,
    not valid-sample counts.
    """

    def __init__(self, config: DetectorConfig) -> None:
        self.config = config
        w = config.window_samples
        max_lag = config.lag_samples(config.ratio_lags_cycles[-1])
        self._w = w
        self._max_lag = max_lag
        self._raw_ring = np.zeros(w)
        self._raw_valid = np.zeros(w, dtype=bool)
        self._ma_ring = np.full(max_lag + 1, math.nan)
        self.reset()

    def reset(self) -> None:
        """Full reset: statistics, latched trips, and counters."""
        self._k = 0
        self._hist_start = 0
        self._sum = 0.0
        self._count = 0
        self._last_valid = math.nan
        self._raw_valid[:] = False
        self._ma_ring[:] = math.nan
        self.result = DetectorResult()

    def _restart(self, k: int) -> None:
        self._hist_start = k
        self._sum = 0.0
        self._count = 0
        self.result.restarts.append(k)

    def update(self, value: float | None) -> tuple[float, float, float]:
        """Advance one sample; returns the three ratios (NaN when undefined)."""
        cfg = self.config
        k = self._k
        w = self._w
        x = math.nan if value is None else float(value)
        valid = not math.isnan(x)

        if valid:
            lv = self._last_valid
            if not math.isnan(lv):
                alv = lv if lv >= 0.0 else -lv
                dx = x - lv
                adx = dx if dx >= 0.0 else -dx
                if alv > 0.0 and adx > cfg.step_change_threshold * alv:
                    self._restart(k)
            self._last_valid = x
        else:
            self.result.invalid_samples += 1

        # Evict the sample falling out of the window, then admit this one.
        slot = k % w
        if k - w >= self._hist_start and self._raw_valid[slot]:
            self._sum -= self._raw_ring[slot]
            self._count -= 1
        self._raw_ring[slot] = x if valid else 0.0
        self._raw_valid[slot] = valid
        if valid:
            self._sum += x
            self._count += 1

        if k - self._hist_start + 1 >= w and self._count > 0:
            ma = self._sum / self._count
        else:
            ma = math.nan
        self._ma_ring[k % (self._max_lag + 1)] = ma

        ratios = self._ratios(k, ma)
        self._decide(k, ratios)
        self._k = k + 1
        self.result.n_samples = self._k
        return ratios

    def _ma_at(self, idx: int) -> float:
        if idx < self._hist_start or idx < 0:
            return math.nan
        return self._ma_ring[idx % (self._max_lag + 1)]

    def _ratios(self, k: int, ma_now: float) -> tuple[float, float, float]:
        cfg = self.config
        lag1, lag_a, lag_b, lag_c = cfg.lag_table
        den = self._ma_at(k - lag1)
        out = []
        for lag in (lag_a, lag_b, lag_c):
            num = self._ma_at(k - lag)
            if math.isnan(num) or math.isnan(den) or abs(den) <= MA_DEN_FLOOR:
                out.append(math.nan)
            else:
                out.append(num / den)
        return out[0], out[1], out[2]

    def _decide(self, k: int, ratios: tuple[float, float, float]) -> None:
        r3, r4, r6 = ratios
        gate = 1.0 + self.config.ratio_margin
        hit3 = not math.isnan(r3) and r3 > gate
        hit4 = not math.isnan(r4) and r4 > gate
        hit6 = not math.isnan(r6) and r6 > gate
        res = self.result
        if res.control1_trip is None and hit6 and (hit4 or hit3):
            res.control1_trip = k
        if res.control2_trip is None and hit6:
            res.control2_trip = k


def run_detector(values: np.ndarray, config: DetectorConfig | None = None) -> DetectorResult:
    """Run the streaming detector over a full record (NaN marks invalid)."""
    cfg = config or DetectorConfig()
    det = SlopeRatioDetector(cfg)
    for v in np.asarray(values, dtype=float):
        det.update(v)
    return det.result
