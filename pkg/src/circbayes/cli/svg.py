"""Minimal deterministic SVG charts (fixed 800x600 canvas, 3-decimal coordinates).

Circular charts use the compass convention: north up, angles clockwise.
"""

from __future__ import annotations

import math
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ..errors import InputError

WIDTH, HEIGHT = 800, 600
MARGIN = (70, 30, 50, 60)  # left, right, top, bottom
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f")
STYLES = ("linear-curve", "multi-curve", "histogram", "rose", "polar-curve", "band-plot")


def _f(v: float) -> str:
    s = f"{v:.3f}"
    return "0.000" if s == "-0.000" else s


def _esc(text: str) -> str:
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;").replace('"', "&quot;")


class _Doc:
    def __init__(self, title: str):
        self.parts: List[str] = [
            '<?xml version="1.0" encoding="UTF-8"?>',
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
            f'viewBox="0 0 {WIDTH} {HEIGHT}">',
            f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
            f'<text x="{WIDTH / 2:.3f}" y="28.000" text-anchor="middle" font-family="sans-serif" '
            f'font-size="16">{_esc(title)}</text>',
        ]

    def add(self, line: str):
        self.parts.append(line)

    def text(self, x, y, s, anchor="middle", size=11):
        self.add(
            f'<text x="{_f(x)}" y="{_f(y)}" text-anchor="{anchor}" font-family="sans-serif" '
            f'font-size="{size}">{_esc(s)}</text>'
        )

    def render(self) -> str:
        return "\n".join(self.parts + ["</svg>"]) + "\n"


def _nice_range(lo: float, hi: float) -> Tuple[float, float]:
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise InputError("cannot plot non-finite values")
    if hi - lo < 1e-12:
        pad = max(abs(hi), 1.0) * 0.1
        return lo - pad, hi + pad
    pad = 0.05 * (hi - lo)
    return lo - pad, hi + pad


class _Axes:
    def __init__(self, doc: _Doc, xlim, ylim, xlabel="", ylabel=""):
        self.doc = doc
        self.x0, self.x1 = xlim
        self.y0, self.y1 = ylim
        left, right, top, bottom = MARGIN
        self.px0, self.px1 = left, WIDTH - right
        self.py0, self.py1 = HEIGHT - bottom, top
        doc.add(
            f'<rect x="{_f(self.px0)}" y="{_f(self.py1)}" width="{_f(self.px1 - self.px0)}" '
            f'height="{_f(self.py0 - self.py1)}" fill="none" stroke="black" stroke-width="1"/>'
        )
        for v in np.linspace(self.x0, self.x1, 5):
            px = self.sx(v)
            doc.add(f'<line x1="{_f(px)}" y1="{_f(self.py0)}" x2="{_f(px)}" y2="{_f(self.py0 + 5)}" stroke="black"/>')
            doc.text(px, self.py0 + 18, f"{v:.3g}")
        for v in np.linspace(self.y0, self.y1, 5):
            py = self.sy(v)
            doc.add(f'<line x1="{_f(self.px0 - 5)}" y1="{_f(py)}" x2="{_f(self.px0)}" y2="{_f(py)}" stroke="black"/>')
            doc.text(self.px0 - 8, py + 4, f"{v:.3g}", anchor="end")
        if xlabel:
            doc.text((self.px0 + self.px1) / 2, HEIGHT - 15, xlabel)
        if ylabel:
            doc.add(
                f'<text x="18.000" y="{_f((self.py0 + self.py1) / 2)}" text-anchor="middle" '
                f'font-family="sans-serif" font-size="12" transform="rotate(-90 18.000 '
                f'{_f((self.py0 + self.py1) / 2)})">{_esc(ylabel)}</text>'
            )

    def sx(self, v):
        return self.px0 + (v - self.x0) / (self.x1 - self.x0) * (self.px1 - self.px0)

    def sy(self, v):
        return self.py0 + (v - self.y0) / (self.y1 - self.y0) * (self.py1 - self.py0)

    def polyline(self, xs, ys, color, width=1.5, dash: Optional[str] = None):
        pts = " ".join(f"{_f(self.sx(x))},{_f(self.sy(y))}" for x, y in zip(xs, ys))
        extra = f' stroke-dasharray="{dash}"' if dash else ""
        self.doc.add(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="{width}"{extra}/>')

    def hline(self, y, color="#888888"):
        self.polyline([self.x0, self.x1], [y, y], color, width=1, dash="4,3")


def _check_series(series):
    if not series:
        raise InputError("nothing to plot: empty curve list")
    for x, y, _ in series:
        if len(x) == 0 or len(x) != len(y):
            raise InputError("each curve needs equally long, non-empty x and y")


def curves_svg(series: Sequence[Tuple[Sequence[float], Sequence[float], str]], title: str,
               xlabel: str = "direction [rad]", ylabel: str = "", points=None) -> str:
    """Overlay of curves ``(x, y, label)``; ``points`` adds one scatter series."""
    _check_series(series)
    allx = np.concatenate([np.asarray(s[0], dtype=float) for s in series])
    ally = np.concatenate([np.asarray(s[1], dtype=float) for s in series])
    if points is not None:
        allx = np.concatenate((allx, points[0]))
        ally = np.concatenate((ally, points[1]))
    doc = _Doc(title)
    ax = _Axes(doc, (float(allx.min()), float(allx.max())), _nice_range(float(ally.min()), float(ally.max())),
               xlabel, ylabel)
    if ax.y0 < 0 < ax.y1:
        ax.hline(0.0)
    for i, (x, y, label) in enumerate(series):
        ax.polyline(x, y, PALETTE[i % len(PALETTE)])
    if points is not None:
        for x, y in zip(points[0], points[1]):
            doc.add(f'<circle cx="{_f(ax.sx(x))}" cy="{_f(ax.sy(y))}" r="2.500" fill="black"/>')
    labels = [s[2] for s in series if s[2]]
    if 0 < len(labels) <= 12:
        for i, label in enumerate(labels):
            y = MARGIN[2] + 16 + 14 * i
            doc.add(f'<line x1="{_f(WIDTH - 190)}" y1="{_f(y - 4)}" x2="{_f(WIDTH - 170)}" y2="{_f(y - 4)}" '
                    f'stroke="{PALETTE[i % len(PALETTE)]}" stroke-width="2"/>')
            doc.text(WIDTH - 165, y, label, anchor="start", size=10)
    return doc.render()


def histogram_svg(rel_freq: Sequence[float], title: str) -> str:
    """Linear histogram cut at north (0 rad)."""
    p = np.asarray(rel_freq, dtype=float)
    if p.size == 0:
        raise InputError("nothing to plot: empty histogram")
    m = p.size
    h = 2 * math.pi / m
    doc = _Doc(title)
    ax = _Axes(doc, (0.0, 2 * math.pi), (0.0, float(p.max()) * 1.05 or 1.0), "direction [rad]", "relative frequency")
    for j, v in enumerate(p):
        x0, x1 = ax.sx(j * h), ax.sx((j + 1) * h)
        y = ax.sy(v)
        doc.add(f'<rect x="{_f(x0)}" y="{_f(y)}" width="{_f(x1 - x0)}" height="{_f(ax.py0 - y)}" '
                f'fill="#9ecae1" stroke="#3182bd" stroke-width="0.5"/>')
    return doc.render()


def _polar_frame(doc: _Doc, cx: float, cy: float, radius: float):
    for frac in (0.25, 0.5, 0.75, 1.0):
        doc.add(f'<circle cx="{_f(cx)}" cy="{_f(cy)}" r="{_f(radius * frac)}" fill="none" '
                f'stroke="#cccccc" stroke-width="1"/>')
    for label, ang in (("N", 0.0), ("E", 90.0), ("S", 180.0), ("W", 270.0)):
        t = math.radians(ang)
        doc.text(cx + (radius + 16) * math.sin(t), cy - (radius + 16) * math.cos(t) + 4, label, size=13)


ROSE_CENTER = (WIDTH / 2, HEIGHT / 2 + 15)
ROSE_RADIUS = 230.0


def rose_svg(rel_freq: Sequence[float], title: str) -> str:
    """Rose diagram: sector ``j`` covers ``[j h, (j+1) h)`` clockwise from north and
    its area is proportional to the relative frequency (radius ~ sqrt)."""
    p = np.asarray(rel_freq, dtype=float)
    if p.size == 0 or np.any(p < 0) or p.max() <= 0:
        raise InputError("rose diagram needs non-negative frequencies with a positive maximum")
    m = p.size
    h = 2 * math.pi / m
    cx, cy = ROSE_CENTER
    doc = _Doc(title)
    _polar_frame(doc, cx, cy, ROSE_RADIUS)
    for j, v in enumerate(p):
        r = ROSE_RADIUS * math.sqrt(v / p.max())
        t0, t1 = j * h, (j + 1) * h
        x0, y0 = cx + r * math.sin(t0), cy - r * math.cos(t0)
        x1, y1 = cx + r * math.sin(t1), cy - r * math.cos(t1)
        doc.add(
            f'<path class="sector" d="M {_f(cx)} {_f(cy)} L {_f(x0)} {_f(y0)} A {_f(r)} {_f(r)} 0 0 1 '
            f'{_f(x1)} {_f(y1)} Z" fill="#9ecae1" stroke="#3182bd" stroke-width="0.5"/>'
        )
    return doc.render()


def polar_svg(series: Sequence[Tuple[Sequence[float], Sequence[float], str]], title: str) -> str:
    """Curves ``r(theta)`` in compass orientation, scaled to the common maximum."""
    _check_series(series)
    rmax = max(float(np.max(s[1])) for s in series)
    if not rmax > 0:
        raise InputError("polar plot needs positive radii")
    cx, cy = ROSE_CENTER
    doc = _Doc(title)
    _polar_frame(doc, cx, cy, ROSE_RADIUS)
    for i, (th, r, _label) in enumerate(series):
        rr = ROSE_RADIUS * np.asarray(r, dtype=float) / rmax
        th = np.asarray(th, dtype=float)
        pts = [f"{_f(cx + a * math.sin(t))},{_f(cy - a * math.cos(t))}" for t, a in zip(th, rr)]
        doc.add(f'<polygon points="{" ".join(pts)}" fill="none" stroke="{PALETTE[i % len(PALETTE)]}" '
                f'stroke-width="1.5"/>')
    return doc.render()


def band_svg(x, estimate, lower, upper, title: str, ylabel: str = "", extra_band=None) -> str:
    """Point estimate with a shaded band; ``extra_band=(lo, hi)`` is drawn dashed."""
    x = np.asarray(x, dtype=float)
    if x.size == 0:
        raise InputError("nothing to plot: empty band")
    arrays = [np.asarray(a, dtype=float) for a in (estimate, lower, upper)]
    if extra_band is not None:
        arrays += [np.asarray(a, dtype=float) for a in extra_band]
    ally = np.concatenate(arrays)
    doc = _Doc(title)
    ax = _Axes(doc, (float(x.min()), float(x.max())), _nice_range(float(ally.min()), float(ally.max())),
               "direction [rad]", ylabel)
    upper_pts = [f"{_f(ax.sx(a))},{_f(ax.sy(b))}" for a, b in zip(x, arrays[2])]
    lower_pts = [f"{_f(ax.sx(a))},{_f(ax.sy(b))}" for a, b in zip(x[::-1], arrays[1][::-1])]
    doc.add(f'<polygon points="{" ".join(upper_pts + lower_pts)}" fill="#cccccc" stroke="none"/>')
    if ax.y0 < 0 < ax.y1:
        ax.hline(0.0)
    if extra_band is not None:
        ax.polyline(x, arrays[3], "#555555", width=1, dash="5,3")
        ax.polyline(x, arrays[4], "#555555", width=1, dash="5,3")
    ax.polyline(x, arrays[0], "black", width=2)
    return doc.render()
