"""Static, self-contained SVG charts: grouped boxplots, line charts, path fans.

Output is a pure function of the input data (fixed palette, fixed number
formatting), so plots are byte-deterministic like the CSVs.
"""

from __future__ import annotations

import math
from html import escape
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#17becf", "#bcbd22")
FONT = 'font-family="Helvetica,Arial,sans-serif"'

W, H = 860, 460
LEFT, RIGHT, TOP, BOTTOM = 70, 150, 50, 60


def _n(x: float) -> str:
    return f"{x:.2f}"


def _nice_ticks(lo: float, hi: float, count: int = 6) -> list[float]:
    if not (math.isfinite(lo) and math.isfinite(hi)) or hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / max(count - 1, 1)
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw), default=10 * mag)
    start = math.floor(lo / step) * step
    ticks = []
    v = start
    while v <= hi + 1e-9 * step:
        ticks.append(round(v, 12))
        v += step
    return ticks


class _Canvas:
    def __init__(self, title: str, xlabel: str, ylabel: str, ylim: tuple[float, float]):
        self.parts = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">',
            '<rect width="100%" height="100%" fill="#ffffff"/>',
            f'<text x="{W / 2}" y="28" text-anchor="middle" font-size="17" {FONT}>{escape(title)}</text>',
            f'<text x="{LEFT + (W - LEFT - RIGHT) / 2}" y="{H - 14}" text-anchor="middle" font-size="13" {FONT}>'
            f"{escape(xlabel)}</text>",
            f'<text x="18" y="{TOP + (H - TOP - BOTTOM) / 2}" text-anchor="middle" font-size="13" {FONT} '
            f'transform="rotate(-90 18 {TOP + (H - TOP - BOTTOM) / 2})">{escape(ylabel)}</text>',
        ]
        ticks = _nice_ticks(*ylim)
        self.y0, self.y1 = min(ticks[0], ylim[0]), max(ticks[-1], ylim[1])
        self.plot_w = W - LEFT - RIGHT
        self.plot_h = H - TOP - BOTTOM
        for t in ticks:
            y = self.sy(t)
            self.parts.append(f'<line x1="{LEFT}" y1="{_n(y)}" x2="{LEFT + self.plot_w}" y2="{_n(y)}" stroke="#e6e6e6"/>')
            self.parts.append(
                f'<text x="{LEFT - 6}" y="{_n(y + 4)}" text-anchor="end" font-size="11" {FONT}>{t:g}</text>'
            )
        self.parts.append(
            f'<rect x="{LEFT}" y="{TOP}" width="{self.plot_w}" height="{self.plot_h}" fill="none" stroke="#333333"/>'
        )

    def sy(self, v: float) -> float:
        return TOP + self.plot_h * (1.0 - (v - self.y0) / (self.y1 - self.y0))

    def legend(self, labels: Sequence[str], colors: Sequence[str] | None = None, opacities=None):
        x = LEFT + self.plot_w + 14
        for k, label in enumerate(labels):
            y = TOP + 10 + 18 * k
            color = colors[k] if colors else PALETTE[k % len(PALETTE)]
            alpha = opacities[k] if opacities else 1.0
            self.parts.append(f'<rect x="{x}" y="{y - 9}" width="12" height="12" fill="{color}" fill-opacity="{alpha}"/>')
            self.parts.append(f'<text x="{x + 18}" y="{y + 2}" font-size="12" {FONT}>{escape(label)}</text>')

    def text(self) -> str:
        return "\n".join(self.parts + ["</svg>"]) + "\n"


def _finite(values) -> np.ndarray:
    v = np.asarray(values, dtype=np.float64).ravel()
    return v[np.isfinite(v)]


def _limits(arrays, pad: float = 0.05) -> tuple[float, float]:
    allv = np.concatenate([_finite(a) for a in arrays] + [np.zeros(0)])
    if allv.size == 0:
        return 0.0, 1.0
    lo, hi = float(allv.min()), float(allv.max())
    span = hi - lo if hi > lo else max(abs(hi), 1.0)
    return lo - pad * span, hi + pad * span


def boxplot_svg(
    data: Mapping[str, Mapping[str, Sequence[float]]],
    title: str = "",
    ylabel: str = "",
    xlabel: str = "",
) -> str:
    """``data[series][category]`` -> replication values; one box per (category, series).

    Whiskers span 1.5 IQR (Tukey); points beyond are drawn as outliers.
    """
    series = list(data)
    categories: list[str] = []
    for s in series:
        for c in data[s]:
            if c not in categories:
                categories.append(c)
    cv = _Canvas(title, xlabel, ylabel, _limits([v for s in series for v in data[s].values()]))
    slot = cv.plot_w / max(len(categories), 1)
    box_w = min(28.0, 0.8 * slot / max(len(series), 1))
    for i, cat in enumerate(categories):
        cx = LEFT + slot * (i + 0.5)
        cv.parts.append(
            f'<text x="{_n(cx)}" y="{TOP + cv.plot_h + 18}" text-anchor="middle" font-size="12" {FONT}>'
            f"{escape(cat)}</text>"
        )
        for k, s in enumerate(series):
            v = _finite(data[s].get(cat, []))
            if v.size == 0:
                continue
            color = PALETTE[k % len(PALETTE)]
            x = cx + (k - (len(series) - 1) / 2) * box_w * 1.15
            q1, med, q3 = np.percentile(v, [25, 50, 75])
            iqr = q3 - q1
            inside = v[(v >= q1 - 1.5 * iqr) & (v <= q3 + 1.5 * iqr)]
            lo, hi = inside.min(), inside.max()
            cv.parts.append(
                f'<line x1="{_n(x)}" y1="{_n(cv.sy(lo))}" x2="{_n(x)}" y2="{_n(cv.sy(hi))}" stroke="{color}"/>'
            )
            cv.parts.append(
                f'<rect x="{_n(x - box_w / 2)}" y="{_n(cv.sy(q3))}" width="{_n(box_w)}" '
                f'height="{_n(max(cv.sy(q1) - cv.sy(q3), 0.5))}" fill="{color}" fill-opacity="0.25" stroke="{color}"/>'
            )
            cv.parts.append(
                f'<line x1="{_n(x - box_w / 2)}" y1="{_n(cv.sy(med))}" x2="{_n(x + box_w / 2)}" '
                f'y2="{_n(cv.sy(med))}" stroke="{color}" stroke-width="2"/>'
            )
            for o in v[(v < lo) | (v > hi)]:
                cv.parts.append(
                    f'<circle cx="{_n(x)}" cy="{_n(cv.sy(o))}" r="2.5" fill="none" stroke="{color}"/>'
                )
    cv.legend(series)
    return cv.text()


def _x_axis(cv: _Canvas, x0: float, x1: float):
    for t in _nice_ticks(x0, x1):
        if x0 - 1e-9 <= t <= x1 + 1e-9:
            px = LEFT + cv.plot_w * (t - x0) / (x1 - x0)
            cv.parts.append(
                f'<text x="{_n(px)}" y="{TOP + cv.plot_h + 18}" text-anchor="middle" font-size="11" {FONT}>{t:g}</text>'
            )


def _polyline(cv: _Canvas, x, y, x0, x1, color, width=1.5, opacity=1.0) -> None:
    # nan values split the curve into separate segments
    seg: list[str] = []
    segments = []
    for xi, yi in zip(x, y):
        if math.isfinite(yi):
            px = LEFT + cv.plot_w * (xi - x0) / (x1 - x0)
            seg.append(f"{_n(px)},{_n(cv.sy(yi))}")
        elif seg:
            segments.append(seg)
            seg = []
    if seg:
        segments.append(seg)
    for s in segments:
        cv.parts.append(
            f'<polyline points="{" ".join(s)}" fill="none" stroke="{color}" stroke-width="{width}" '
            f'stroke-opacity="{opacity}"/>'
        )


def line_chart_svg(
    x: Sequence[float],
    series: Mapping[str, Sequence[float]],
    title: str = "",
    xlabel: str = "",
    ylabel: str = "",
) -> str:
    """One curve per series over a shared x grid; nan leaves a gap."""
    x = np.asarray(x, dtype=np.float64)
    x0, x1 = (float(x.min()), float(x.max())) if x.size else (0.0, 1.0)
    if x1 <= x0:
        x1 = x0 + 1.0
    cv = _Canvas(title, xlabel, ylabel, _limits(list(series.values())))
    _x_axis(cv, x0, x1)
    for k, (name, y) in enumerate(series.items()):
        _polyline(cv, x, np.asarray(y, dtype=np.float64), x0, x1, PALETTE[k % len(PALETTE)])
    cv.legend(list(series))
    return cv.text()


def fan_svg(
    grid: Sequence[float],
    paths: np.ndarray,
    title: str = "",
    xlabel: str = "time",
    ylabel: str = "",
    shown: int = 20,
) -> str:
    """Quantile bands (5-95 %, 25-75 %) and median of ``paths`` (runs x grid),
    with the first ``shown`` runs overlaid as thin lines."""
    grid = np.asarray(grid, dtype=np.float64)
    paths = np.asarray(paths, dtype=np.float64)
    x0, x1 = float(grid.min()), float(grid.max())
    if x1 <= x0:
        x1 = x0 + 1.0
    cv = _Canvas(title, xlabel, ylabel, _limits([paths]))
    _x_axis(cv, x0, x1)
    q = np.percentile(paths, [5, 25, 50, 75, 95], axis=0)
    px = LEFT + cv.plot_w * (grid - x0) / (x1 - x0)
    for lo, hi, alpha in ((q[0], q[4], 0.15), (q[1], q[3], 0.3)):
        pts = [f"{_n(a)},{_n(cv.sy(b))}" for a, b in zip(px, hi)]
        pts += [f"{_n(a)},{_n(cv.sy(b))}" for a, b in zip(px[::-1], lo[::-1])]
        cv.parts.append(f'<polygon points="{" ".join(pts)}" fill="{PALETTE[0]}" fill-opacity="{alpha}" stroke="none"/>')
    for run in paths[:shown]:
        _polyline(cv, grid, run, x0, x1, "#555555", width=0.6, opacity=0.5)
    _polyline(cv, grid, q[2], x0, x1, PALETTE[1], width=2.0)
    cv.legend(["5-95 %", "25-75 %", "median"], [PALETTE[0], PALETTE[0], PALETTE[1]], [0.15, 0.3, 1.0])
    return cv.text()


def write_svg(text: str, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    return path
