"""Dependency-free SVG line charts with mean +/- sd bands.

The CSV outputs are the contract; these charts are a convenience mirror of
them, so the drawing stays deliberately small: fixed canvas, a handful of
ticks, one polyline and one translucent band per series.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

__all__ = ["Series", "line_chart_svg", "write_line_chart"]

_COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b", "#e377c2"]

_MARGIN_LEFT = 64.0
_MARGIN_RIGHT = 16.0
_MARGIN_TOP = 34.0
_MARGIN_BOTTOM = 46.0


@dataclass(frozen=True)
class Series:
    label: str
    mean: Sequence[float]
    sd: Sequence[float] | None = None


def _ticks(lo: float, hi: float, count: int = 5) -> list[float]:
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / max(count - 1, 1)
    mag = 10.0 ** math.floor(math.log10(raw))
    for step in (1.0, 2.0, 2.5, 5.0, 10.0):
        if raw <= step * mag:
            raw = step * mag
            break
    start = math.floor(lo / raw) * raw
    ticks = []
    t = start
    while t <= hi + 1e-9 * raw:
        if t >= lo - 1e-9 * raw:
            ticks.append(round(t, 12))
        t += raw
    return ticks


def _fmt_num(v: float) -> str:
    if v == int(v) and abs(v) < 1e6:
        return str(int(v))
    return f"{v:g}"


def line_chart_svg(
    x: Sequence[float],
    series: Sequence[Series],
    *,
    title: str = "",
    xlabel: str = "",
    ylabel: str = "",
    width: int = 640,
    height: int = 420,
) -> str:
    xs = [float(v) for v in x]
    if not xs or not series:
        raise ValueError("need at least one x value and one series")
    y_lo, y_hi = math.inf, -math.inf
    for s in series:
        means = [float(v) for v in s.mean]
        if len(means) != len(xs):
            raise ValueError(f"series {s.label!r} length {len(means)} != {len(xs)}")
        sds = [0.0] * len(xs) if s.sd is None else [float(v) for v in s.sd]
        for m, d in zip(means, sds):
            if math.isfinite(m):
                y_lo = min(y_lo, m - d)
                y_hi = max(y_hi, m + d)
    if not math.isfinite(y_lo):
        y_lo, y_hi = 0.0, 1.0
    y_lo = min(y_lo, 0.0)
    if y_hi <= y_lo:
        y_hi = y_lo + 1.0
    x_lo, x_hi = min(xs), max(xs)
    if x_hi <= x_lo:
        x_hi = x_lo + 1.0

    plot_w = width - _MARGIN_LEFT - _MARGIN_RIGHT
    plot_h = height - _MARGIN_TOP - _MARGIN_BOTTOM

    def px(v: float) -> float:
        return _MARGIN_LEFT + (v - x_lo) / (x_hi - x_lo) * plot_w

    def py(v: float) -> float:
        return _MARGIN_TOP + (y_hi - v) / (y_hi - y_lo) * plot_h

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
    ]
    if title:
        parts.append(f'<text x="{width / 2:.1f}" y="20" text-anchor="middle" font-size="14">{title}</text>')
    for t in _ticks(x_lo, x_hi):
        parts.append(
            f'<line x1="{px(t):.2f}" y1="{_MARGIN_TOP + plot_h:.2f}" x2="{px(t):.2f}" '
            f'y2="{_MARGIN_TOP + plot_h + 5:.2f}" stroke="black"/>'
        )
        parts.append(
            f'<text x="{px(t):.2f}" y="{_MARGIN_TOP + plot_h + 18:.2f}" text-anchor="middle">{_fmt_num(t)}</text>'
        )
    for t in _ticks(y_lo, y_hi):
        parts.append(
            f'<line x1="{_MARGIN_LEFT - 5:.2f}" y1="{py(t):.2f}" x2="{_MARGIN_LEFT:.2f}" y2="{py(t):.2f}" stroke="black"/>'
        )
        parts.append(
            f'<text x="{_MARGIN_LEFT - 8:.2f}" y="{py(t) + 4:.2f}" text-anchor="end">{_fmt_num(t)}</text>'
        )
    parts.append(
        f'<rect x="{_MARGIN_LEFT:.2f}" y="{_MARGIN_TOP:.2f}" width="{plot_w:.2f}" height="{plot_h:.2f}" '
        f'fill="none" stroke="black"/>'
    )
    if xlabel:
        parts.append(
            f'<text x="{_MARGIN_LEFT + plot_w / 2:.1f}" y="{height - 8}" text-anchor="middle">{xlabel}</text>'
        )
    if ylabel:
        cy = _MARGIN_TOP + plot_h / 2
        parts.append(
            f'<text x="16" y="{cy:.1f}" text-anchor="middle" transform="rotate(-90 16 {cy:.1f})">{ylabel}</text>'
        )
    for si, s in enumerate(series):
        color = _COLORS[si % len(_COLORS)]
        means = [float(v) for v in s.mean]
        sds = [0.0] * len(xs) if s.sd is None else [float(v) for v in s.sd]
        shown = [
            (xv, m, d)
            for xv, m, d in zip(xs, means, sds)
            if math.isfinite(m) and math.isfinite(d)
        ]
        if not shown:
            continue
        if any(d > 0 for _, _, d in shown):
            upper = [(px(xv), py(m + d)) for xv, m, d in shown]
            lower = [(px(xv), py(m - d)) for xv, m, d in shown]
            pts = " ".join(f"{a:.2f},{b:.2f}" for a, b in upper + lower[::-1])
            parts.append(f'<polygon points="{pts}" fill="{color}" fill-opacity="0.15" stroke="none"/>')
        pts = " ".join(f"{px(xv):.2f},{py(m):.2f}" for xv, m, _ in shown)
        parts.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.8"/>')
        for xv, m, _ in shown:
            parts.append(f'<circle cx="{px(xv):.2f}" cy="{py(m):.2f}" r="2.6" fill="{color}"/>')
        ly = _MARGIN_TOP + 14 + 16 * si
        lx = _MARGIN_LEFT + plot_w - 130
        parts.append(f'<line x1="{lx:.1f}" y1="{ly - 4:.1f}" x2="{lx + 22:.1f}" y2="{ly - 4:.1f}" stroke="{color}" stroke-width="2"/>')
        parts.append(f'<text x="{lx + 27:.1f}" y="{ly:.1f}">{s.label}</text>')
    parts.append("</svg>")
    return "\n".join(parts)


def write_line_chart(path, x, series, **kwargs) -> None:
    with open(path, "w") as fh:
        fh.write(line_chart_svg(x, series, **kwargs))
        fh.write("\n")
