"""Self-contained SVG log2-log2 plots of epsilon-uniform errors against N."""

from __future__ import annotations

import math
from pathlib import Path
from typing import Sequence
from xml.sax.saxutils import escape

import numpy as np

from .analysis import ConvergenceTable

_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")
_W, _H = 640, 440
_LEFT, _RIGHT, _TOP, _BOTTOM = 70, 180, 30, 50


def convergence_svg(tables: Sequence[ConvergenceTable], path=None, title: str | None = None) -> str:
    """One polyline per table through (log2 N, log2 E_uniform), plus N^-1 and N^-2 guides.

    The guides pass through the first point of the first table. Only those
    polylines are drawn as ``<polyline>`` elements; axes and legend use other shapes.
    """
    if not tables:
        raise ValueError("nothing to plot")
    series = []
    for tab in tables:
        Eu = tab.E_uniform
        pts = [(math.log2(N), math.log2(E)) for N, E in zip(tab.n_list, Eu) if np.isfinite(E) and E > 0]
        series.append((tab.scheme.value, pts))
    xs = [x for _, pts in series for x, _ in pts] or [5.0, 6.0]
    ys = [y for _, pts in series for _, y in pts] or [-5.0, -4.0]
    x0, x1 = min(xs), max(xs)
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5

    anchor = next((pts[0] for _, pts in series if pts), (x0, max(ys)))
    refs = []
    for slope, label in ((-1.0, "N^-1"), (-2.0, "N^-2")):
        line = [(x, anchor[1] + slope * (x - anchor[0])) for x in (x0, x1)]
        refs.append((label, line))
        ys += [y for _, y in line]
    y0, y1 = math.floor(min(ys)), math.ceil(max(ys))
    if y1 == y0:
        y1 += 1

    pw, ph = _W - _LEFT - _RIGHT, _H - _TOP - _BOTTOM

    def px(x, y):
        return (_LEFT + (x - x0) / (x1 - x0) * pw, _TOP + (y1 - y) / (y1 - y0) * ph)

    def pts_attr(pts):
        return " ".join(f"{a:.2f},{b:.2f}" for a, b in (px(x, y) for x, y in pts))

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}" font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{_W}" height="{_H}" fill="white"/>',
        f'<rect x="{_LEFT}" y="{_TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    if title:
        out.append(f'<text x="{_LEFT + pw / 2:.1f}" y="{_TOP - 10}" text-anchor="middle">{escape(title)}</text>')
    for k in range(math.ceil(x0), math.floor(x1) + 1):
        X, _ = px(k, y0)
        out.append(f'<line x1="{X:.2f}" y1="{_TOP + ph}" x2="{X:.2f}" y2="{_TOP + ph + 5}" stroke="black"/>')
        out.append(f'<text x="{X:.2f}" y="{_TOP + ph + 18}" text-anchor="middle">{2 ** k}</text>')
    for k in range(y0, y1 + 1):
        _, Y = px(x0, k)
        out.append(f'<line x1="{_LEFT - 5}" y1="{Y:.2f}" x2="{_LEFT}" y2="{Y:.2f}" stroke="black"/>')
        out.append(f'<text x="{_LEFT - 8}" y="{Y + 4:.2f}" text-anchor="end">2^{k}</text>')
    out.append(f'<text x="{_LEFT + pw / 2:.1f}" y="{_H - 12}" text-anchor="middle">N</text>')
    out.append(f'<text x="16" y="{_TOP + ph / 2:.1f}" text-anchor="middle" '
               f'transform="rotate(-90 16 {_TOP + ph / 2:.1f})">max over eps of E</text>')

    legend = []
    for (label, line), dash in zip(refs, ("6,4", "2,3")):
        out.append(f'<polyline points="{pts_attr(line)}" fill="none" stroke="gray" stroke-dasharray="{dash}"/>')
        legend.append((label, "gray", dash))
    for (label, pts), color in zip(series, _COLORS * (len(series) // len(_COLORS) + 1)):
        out.append(f'<polyline points="{pts_attr(pts)}" fill="none" stroke="{color}" stroke-width="2"/>')
        for x, y in pts:
            cx, cy = px(x, y)
            out.append(f'<circle cx="{cx:.2f}" cy="{cy:.2f}" r="3" fill="{color}"/>')
        legend.append((label, color, None))

    lx = _LEFT + pw + 15
    for j, (label, color, dash) in enumerate(legend):
        ly = _TOP + 15 + 20 * j
        dash_attr = f' stroke-dasharray="{dash}"' if dash else ""
        out.append(f'<line x1="{lx}" y1="{ly}" x2="{lx + 25}" y2="{ly}" stroke="{color}" stroke-width="2"{dash_attr}/>')
        out.append(f'<text x="{lx + 30}" y="{ly + 4}">{escape(label)}</text>')
    out.append("</svg>")
    text = "\n".join(out) + "\n"
    if path is not None:
        Path(path).write_text(text)
    return text
