"""Minimal static SVG renderer: axes, ticks, polylines, point markers.

Only what the experiment artifacts need; deliberately not a charting stack.
"""
from __future__ import annotations

import math

_W, _H = 640, 440
_ML, _MR, _MT, _MB = 70, 20, 36, 52
_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def _ticks(lo: float, hi: float, n: int = 5):
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / n
    mag = 10.0 ** math.floor(math.log10(raw))
    step = min(s for s in (mag, 2 * mag, 2.5 * mag, 5 * mag, 10 * mag) if s >= raw)
    start = math.ceil(lo / step) * step
    out = []
    v = start
    while v <= hi + 1e-12 * step:
        out.append(0.0 if abs(v) < 1e-12 * step else v)
        v += step
    return out


def _fmt(v: float) -> str:
    return f"{v:.6g}"


class _Canvas:
    def __init__(self, x_range, y_range, title, x_label, y_label):
        self.x0, self.x1 = x_range
        self.y0, self.y1 = y_range
        if self.x1 <= self.x0:
            self.x1 = self.x0 + 1.0
        if self.y1 <= self.y0:
            self.y1 = self.y0 + 1.0
        self.parts = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
            f'viewBox="0 0 {_W} {_H}" font-family="monospace" font-size="12">',
            f'<rect width="{_W}" height="{_H}" fill="white"/>',
            f'<text x="{_W / 2}" y="20" text-anchor="middle" font-size="14">{title}</text>',
        ]
        self._axes(x_label, y_label)

    def px(self, x):
        return _ML + (x - self.x0) / (self.x1 - self.x0) * (_W - _ML - _MR)

    def py(self, y):
        return _H - _MB - (y - self.y0) / (self.y1 - self.y0) * (_H - _MT - _MB)

    def _axes(self, x_label, y_label):
        p = self.parts
        p.append(f'<rect x="{_ML}" y="{_MT}" width="{_W - _ML - _MR}" '
                 f'height="{_H - _MT - _MB}" fill="none" stroke="black"/>')
        for v in _ticks(self.x0, self.x1):
            x = self.px(v)
            p.append(f'<line x1="{x:.1f}" y1="{_H - _MB}" x2="{x:.1f}" y2="{_H - _MB + 5}" stroke="black"/>')
            p.append(f'<text x="{x:.1f}" y="{_H - _MB + 18}" text-anchor="middle">{_fmt(v)}</text>')
        for v in _ticks(self.y0, self.y1):
            y = self.py(v)
            p.append(f'<line x1="{_ML - 5}" y1="{y:.1f}" x2="{_ML}" y2="{y:.1f}" stroke="black"/>')
            p.append(f'<text x="{_ML - 8}" y="{y + 4:.1f}" text-anchor="end">{_fmt(v)}</text>')
        p.append(f'<text x="{(_ML + _W - _MR) / 2}" y="{_H - 14}" text-anchor="middle">{x_label}</text>')
        p.append(f'<text x="16" y="{(_MT + _H - _MB) / 2}" text-anchor="middle" '
                 f'transform="rotate(-90 16 {(_MT + _H - _MB) / 2})">{y_label}</text>')

    def polyline(self, xs, ys, color, width=1.5, dash=""):
        pts = " ".join(f"{self.px(x):.2f},{self.py(y):.2f}" for x, y in zip(xs, ys))
        d = f' stroke-dasharray="{dash}"' if dash else ""
        self.parts.append(f'<polyline points="{pts}" fill="none" stroke="{color}" '
                          f'stroke-width="{width}"{d}/>')

    def marker(self, x, y, color, label=""):
        self.parts.append(f'<circle cx="{self.px(x):.2f}" cy="{self.py(y):.2f}" r="4" fill="{color}"/>')
        if label:
            self.parts.append(f'<text x="{self.px(x) + 7:.2f}" y="{self.py(y) - 6:.2f}" '
                              f'fill="{color}">{label}</text>')

    def legend(self, entries):
        y = _MT + 14
        for name, color in entries:
            self.parts.append(f'<line x1="{_ML + 10}" y1="{y - 4}" x2="{_ML + 34}" y2="{y - 4}" '
                              f'stroke="{color}" stroke-width="2"/>')
            self.parts.append(f'<text x="{_ML + 40}" y="{y}">{name}</text>')
            y += 16

    def write(self, path):
        self.parts.append("</svg>")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("\n".join(self.parts))


def _span(values, pad=0.06):
    lo, hi = min(values), max(values)
    if hi == lo:
        lo, hi = lo - 1.0, hi + 1.0
    w = (hi - lo) * pad
    return lo - w, hi + w


def line_chart(path, series, title, x_label, y_label):
    """series: list of (name, xs, ys)."""
    all_x = [x for _, xs, _ in series for x in xs]
    all_y = [y for _, _, ys in series for y in ys]
    c = _Canvas(_span(all_x), _span(all_y), title, x_label, y_label)
    for i, (name, xs, ys) in enumerate(series):
        c.polyline(xs, ys, _COLORS[i % len(_COLORS)])
    if len(series) > 1:
        c.legend([(name, _COLORS[i % len(_COLORS)]) for i, (name, _, _) in enumerate(series)])
    c.write(path)


def trajectory_chart(path, waypoints, nodes, title):
    """Top-down flight path with labelled ground nodes.

    nodes: mapping label -> 3D position.
    """
    xs = [float(w[0]) for w in waypoints] + [float(p[0]) for p in nodes.values()]
    ys = [float(w[1]) for w in waypoints] + [float(p[1]) for p in nodes.values()]
    c = _Canvas(_span(xs), _span(ys), title, "x [m]", "y [m]")
    c.polyline([float(w[0]) for w in waypoints], [float(w[1]) for w in waypoints], _COLORS[0])
    for i, (label, p) in enumerate(nodes.items()):
        c.marker(float(p[0]), float(p[1]), _COLORS[(i + 1) % len(_COLORS)], label)
    c.write(path)
