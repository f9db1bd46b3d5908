"""Minimal hand-emitted SVG line charts.

The figures this library produces are plain line plots (bad-pair fraction
versus temperature, loss and test objective versus epoch), so the charts are
written directly as SVG text: axes, ticks, one polyline per series, and a
legend.  No plotting dependency.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

PALETTE = (
    "#1f77b4",
    "#d62728",
    "#2ca02c",
    "#9467bd",
    "#ff7f0e",
    "#8c564b",
    "#e377c2",
    "#17becf",
)


@dataclass(frozen=True)
class Series:
    label: str
    xs: tuple
    ys: tuple

    def __post_init__(self):
        if len(self.xs) != len(self.ys) or len(self.xs) == 0:
            raise ValueError("series needs matching, non-empty xs and ys")
        if not (np.isfinite(self.xs).all() and np.isfinite(self.ys).all()):
            raise ValueError("series values must be finite")


def _ticks(lo: float, hi: float) -> list[float]:
    if lo == hi:
        lo, hi = lo - 1.0, hi + 1.0
    return list(np.linspace(lo, hi, 5))


def _log_ticks(lo: float, hi: float) -> list[float]:
    low = math.floor(math.log10(lo))
    high = math.ceil(math.log10(hi))
    return [10.0**e for e in range(low, high + 1)]


def _fmt(value: float) -> str:
    return f"{value:g}"


def line_chart(
    series: list[Series],
    *,
    title: str = "",
    x_label: str = "",
    y_label: str = "",
    log_x: bool = False,
    width: int = 720,
    height: int = 480,
) -> str:
    """An SVG document with one polyline per series."""
    if not series:
        raise ValueError("at least one series is required")
    left, right, top, bottom = 70, 160, 40, 55
    plot_w = width - left - right
    plot_h = height - top - bottom

    xs_all = np.concatenate([np.asarray(s.xs, dtype=np.float64) for s in series])
    ys_all = np.concatenate([np.asarray(s.ys, dtype=np.float64) for s in series])
    if log_x:
        if (xs_all <= 0).any():
            raise ValueError("log-scale x requires positive x values")
        xs_all = np.log10(xs_all)
    x_lo, x_hi = float(xs_all.min()), float(xs_all.max())
    y_lo, y_hi = float(ys_all.min()), float(ys_all.max())
    if x_lo == x_hi:
        x_lo, x_hi = x_lo - 1.0, x_hi + 1.0
    if y_lo == y_hi:
        y_lo, y_hi = y_lo - 1.0, y_hi + 1.0
    pad = 0.04 * (y_hi - y_lo)
    y_lo, y_hi = y_lo - pad, y_hi + pad

    def px(x: float) -> float:
        v = math.log10(x) if log_x else x
        return left + (v - x_lo) / (x_hi - x_lo) * plot_w

    def py(y: float) -> float:
        return top + (y_hi - y) / (y_hi - y_lo) * plot_h

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2:.1f}" y="22" text-anchor="middle" font-size="15" '
        f'font-family="sans-serif">{escape(title)}</text>',
        f'<line x1="{left}" y1="{top + plot_h}" x2="{left + plot_w}" '
        f'y2="{top + plot_h}" stroke="black"/>',
        f'<line x1="{left}" y1="{top}" x2="{left}" y2="{top + plot_h}" stroke="black"/>',
    ]

    x_ticks = (
        _log_ticks(10.0 ** x_lo, 10.0 ** x_hi) if log_x else _ticks(x_lo, x_hi)
    )
    for tick in x_ticks:
        tx = px(tick)
        if tx < left - 0.5 or tx > left + plot_w + 0.5:
            continue
        parts.append(
            f'<line x1="{tx:.1f}" y1="{top + plot_h}" x2="{tx:.1f}" '
            f'y2="{top + plot_h + 5}" stroke="black"/>'
        )
        parts.append(
            f'<text x="{tx:.1f}" y="{top + plot_h + 20}" text-anchor="middle" '
            f'font-size="11" font-family="sans-serif">{_fmt(tick)}</text>'
        )
    for tick in _ticks(y_lo, y_hi):
        ty = py(tick)
        parts.append(
            f'<line x1="{left - 5}" y1="{ty:.1f}" x2="{left}" y2="{ty:.1f}" stroke="black"/>'
        )
        parts.append(
            f'<text x="{left - 9}" y="{ty + 4:.1f}" text-anchor="end" '
            f'font-size="11" font-family="sans-serif">{_fmt(tick)}</text>'
        )
    parts.append(
        f'<text x="{left + plot_w / 2:.1f}" y="{height - 12}" text-anchor="middle" '
        f'font-size="13" font-family="sans-serif">{escape(x_label)}</text>'
    )
    parts.append(
        f'<text x="18" y="{top + plot_h / 2:.1f}" text-anchor="middle" font-size="13" '
        f'font-family="sans-serif" transform="rotate(-90 18 {top + plot_h / 2:.1f})">'
        f"{escape(y_label)}</text>"
    )

    for i, s in enumerate(series):
        color = PALETTE[i % len(PALETTE)]
        points = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in zip(s.xs, s.ys))
        parts.append(
            f'<polyline fill="none" stroke="{color}" stroke-width="1.8" points="{points}"/>'
        )
        ly = top + 16 + 18 * i
        lx = left + plot_w + 14
        parts.append(
            f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 22}" y2="{ly - 4}" '
            f'stroke="{color}" stroke-width="1.8"/>'
        )
        parts.append(
            f'<text x="{lx + 28}" y="{ly}" font-size="12" '
            f'font-family="sans-serif">{escape(s.label)}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def write_svg(path, svg_text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(svg_text)
    return path
