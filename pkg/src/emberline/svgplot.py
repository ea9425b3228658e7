"""Minimal SVG line plots, dependency-free.

Just enough plotting for run traces and sweep summaries: multiple named
series, automatic bounds, light grid, tick labels, a legend, NaN gaps.
Output is deterministic text so plots can be diffed run-to-run.
"""

from __future__ import annotations

import math
from html import escape

import numpy as np

from .exceptions import DomainError

PALETTE = ("#1f6f8b", "#c05746", "#5a9367", "#7d5ba6", "#b8860b", "#556b7f")


def _nice_ticks(lo: float, hi: float, target: int = 5) -> list[float]:
    if not (math.isfinite(lo) and math.isfinite(hi)):
        return []
    if lo == hi:
        pad = 1.0 if lo == 0.0 else abs(lo) * 0.1
        lo, hi = lo - pad, hi + pad
    raw = (hi - lo) / max(target, 1)
    mag = 10.0 ** math.floor(math.log10(raw))
    for mult in (1.0, 2.0, 2.5, 5.0, 10.0):
        if raw <= mult * mag:
            step = mult * mag
            break
    else:
        step = 10.0 * mag
    first = math.ceil(lo / step) * step
    ticks = []
    t = first
    while t <= hi + 1e-9 * step:
        ticks.append(0.0 if abs(t) < 1e-12 * step else t)
        t += step
    return ticks


def _fmt(v: float) -> str:
    s = f"{v:.6g}"
    return s


def line_plot(
    series: list[tuple[str, np.ndarray, np.ndarray]],
    path,
    *,
    title: str = "",
    x_label: str = "",
    y_label: str = "",
    width: int = 900,
    height: int = 420,
) -> None:
    """Write a multi-series line plot to ``path`` as standalone SVG.

    Each series is ``(name, x, y)``; NaNs in ``y`` break the line.
    """
    if not series:
        raise DomainError("line_plot needs at least one series")
    margin_l, margin_r, margin_t, margin_b = 64, 16, 34, 46

    xs_all = np.concatenate([np.asarray(x, dtype=float) for _, x, _ in series])
    ys_all = np.concatenate([np.asarray(y, dtype=float) for _, _, y in series])
    finite_x = xs_all[np.isfinite(xs_all)]
    finite_y = ys_all[np.isfinite(ys_all)]
    if finite_x.size == 0 or finite_y.size == 0:
        raise DomainError("line_plot: no finite data")
    x_lo, x_hi = float(finite_x.min()), float(finite_x.max())
    y_lo, y_hi = float(finite_y.min()), float(finite_y.max())
    if x_lo == x_hi:
        x_lo, x_hi = x_lo - 0.5, x_hi + 0.5
    if y_lo == y_hi:
        pad = 1.0 if y_lo == 0.0 else abs(y_lo) * 0.05
        y_lo, y_hi = y_lo - pad, y_hi + pad
    else:
        pad = 0.04 * (y_hi - y_lo)
        y_lo, y_hi = y_lo - pad, y_hi + pad

    plot_w = width - margin_l - margin_r
    plot_h = height - margin_t - margin_b

    def sx(v: float) -> float:
        return margin_l + (v - x_lo) / (x_hi - x_lo) * plot_w

    def sy(v: float) -> float:
        return margin_t + (y_hi - v) / (y_hi - y_lo) * plot_h

    parts: list[str] = []
    parts.append(
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">'
    )
    parts.append(f'<rect width="{width}" height="{height}" fill="white"/>')
    if title:
        parts.append(
            f'<text x="{width / 2:.1f}" y="20" text-anchor="middle" font-size="14">{escape(title)}</text>'
        )

    for t in _nice_ticks(x_lo, x_hi):
        px = sx(t)
        parts.append(
            f'<line x1="{px:.2f}" y1="{margin_t}" x2="{px:.2f}" y2="{margin_t + plot_h}" '
            f'stroke="#dddddd" stroke-width="1"/>'
        )
        parts.append(
            f'<text x="{px:.2f}" y="{margin_t + plot_h + 16}" text-anchor="middle">{_fmt(t)}</text>'
        )
    for t in _nice_ticks(y_lo, y_hi):
        py = sy(t)
        parts.append(
            f'<line x1="{margin_l}" y1="{py:.2f}" x2="{margin_l + plot_w}" y2="{py:.2f}" '
            f'stroke="#dddddd" stroke-width="1"/>'
        )
        parts.append(
            f'<text x="{margin_l - 6}" y="{py + 4:.2f}" text-anchor="end">{_fmt(t)}</text>'
        )
    parts.append(
        f'<rect x="{margin_l}" y="{margin_t}" width="{plot_w}" height="{plot_h}" '
        f'fill="none" stroke="#333333"/>'
    )
    if x_label:
        parts.append(
            f'<text x="{margin_l + plot_w / 2:.1f}" y="{height - 10}" text-anchor="middle">'
            f"{escape(x_label)}</text>"
        )
    if y_label:
        cx, cy = 16, margin_t + plot_h / 2
        parts.append(
            f'<text x="{cx}" y="{cy:.1f}" text-anchor="middle" '
            f'transform="rotate(-90 {cx} {cy:.1f})">{escape(y_label)}</text>'
        )

    for i, (name, x, y) in enumerate(series):
        color = PALETTE[i % len(PALETTE)]
        xa = np.asarray(x, dtype=float)
        ya = np.asarray(y, dtype=float)
        pts: list[str] = []
        chunks: list[list[str]] = []
        for xv, yv in zip(xa, ya):
            if math.isfinite(xv) and math.isfinite(yv):
                pts.append(f"{sx(xv):.2f},{sy(yv):.2f}")
            elif pts:
                chunks.append(pts)
                pts = []
        if pts:
            chunks.append(pts)
        for chunk in chunks:
            if len(chunk) == 1:
                cxp, cyp = chunk[0].split(",")
                parts.append(f'<circle cx="{cxp}" cy="{cyp}" r="2" fill="{color}"/>')
            else:
                parts.append(
                    f'<polyline points="{" ".join(chunk)}" fill="none" stroke="{color}" '
                    f'stroke-width="1.5"/>'
                )
        ly = margin_t + 14 + 16 * i
        lx = margin_l + plot_w - 150
        parts.append(
            f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 22}" y2="{ly - 4}" stroke="{color}" '
            f'stroke-width="2"/>'
        )
        parts.append(f'<text x="{lx + 28}" y="{ly}">{escape(str(name))}</text>')

    parts.append("</svg>")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(parts))
        fh.write("\n")
