"""SVG 1.1 rendering of planar scenes (window disc, chords, zero cell, points)."""
from __future__ import annotations

import math

import numpy as np

from .tessellation import CellPolygon

SIZE = 1000
RADIUS_PX = 480.0


def _xy(p, T):
    return 500.0 + RADIUS_PX * p[0] / T, 500.0 - RADIUS_PX * p[1] / T


def _f(v):
    return f"{v:.3f}"


def render_scene(U, t, R, cell: CellPolygon | None = None, points=None, highlight=(), header: str | None = None) -> str:
    T = math.tanh(R)
    out = []
    if header:
        out.append(f"<!-- {header.replace('--', '-')} -->")
    out.append(f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{SIZE}" height="{SIZE}" '
               f'viewBox="0 0 {SIZE} {SIZE}">')
    out.append(f'<rect width="{SIZE}" height="{SIZE}" fill="white"/>')
    out.append(f'<circle cx="500" cy="500" r="{_f(RADIUS_PX)}" fill="#f4f4f4" stroke="black" stroke-width="2"/>')
    if cell is not None:
        out.append(_cell_path(cell, T))
    for u, ti in zip(np.asarray(U), np.asarray(t)):
        half = math.sqrt(max(T * T - ti * ti, 0.0))
        v = np.array([-u[1], u[0]])
        a, b = ti * u + half * v, ti * u - half * v
        (x1, y1), (x2, y2) = _xy(a, T), _xy(b, T)
        out.append(f'<line x1="{_f(x1)}" y1="{_f(y1)}" x2="{_f(x2)}" y2="{_f(y2)}" stroke="#1f4e9c" stroke-width="1"/>')
    if points is not None:
        hl = set(int(i) for i in highlight)
        for i, p in enumerate(np.atleast_2d(points)):
            if len(p) < 2:
                continue
            x, y = _xy(p, T)
            col, rad = ("#c0392b", 6) if i in hl else ("#333333", 2.5)
            out.append(f'<circle cx="{_f(x)}" cy="{_f(y)}" r="{rad}" fill="{col}"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _cell_path(cell: CellPolygon, T: float) -> str:
    style = 'fill="#f5b041" fill-opacity="0.6" stroke="#d35400" stroke-width="2"'
    if cell.full:
        return f'<circle cx="500" cy="500" r="{_f(RADIUS_PX)}" {style}/>'
    V = cell.vertices
    n = len(V)
    x0, y0 = _xy(V[0], T)
    parts = [f"M {_f(x0)} {_f(y0)}"]
    for i in range(n):
        x, y = _xy(V[(i + 1) % n], T)
        if cell.arc[i]:
            # counter-clockwise in the model is clockwise on screen (y flipped)
            a0 = math.atan2(V[i][1], V[i][0])
            a1 = math.atan2(V[(i + 1) % n][1], V[(i + 1) % n][0])
            large = 1 if (a1 - a0) % (2 * math.pi) > math.pi else 0
            parts.append(f"A {_f(RADIUS_PX)} {_f(RADIUS_PX)} 0 {large} 0 {_f(x)} {_f(y)}")
        else:
            parts.append(f"L {_f(x)} {_f(y)}")
    parts.append("Z")
    return f'<path d="{" ".join(parts)}" {style}/>'
