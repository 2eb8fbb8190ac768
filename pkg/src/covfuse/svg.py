"""Deterministic SVG rendering of 2D 1-sigma contours.

Polyline vertices are written in data coordinates (shortest round-trip float
repr) inside a group whose transform maps data to pixels, so the figure can be
parsed back exactly.
"""
from __future__ import annotations

import math
import re
from typing import Optional, Sequence
from xml.sax.saxutils import escape

import numpy as np

from .errors import DimensionError
from .estimates import Estimate

SEGMENTS = 64
SIZE = 640
MARGIN = 48
INPUT_STYLE = 'stroke="#1f77b4" stroke-width="1.5"'
SOLUTION_STYLE = 'stroke="#d62728" stroke-width="2.5" stroke-dasharray="8 4"'
AXIS_STYLE = 'stroke="#555555" stroke-width="1"'


def _factor(cov: np.ndarray) -> np.ndarray:
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        # singular covariance: any square root maps the circle onto the same contour
        w, Q = np.linalg.eigh(cov)
        return Q * np.sqrt(np.clip(w, 0.0, None))


def contour(e: Estimate, segments: int = SEGMENTS) -> np.ndarray:
    """``segments + 1`` closed-polyline vertices of ``{mean + L z : |z| = 1}`` with ``L L^T = cov``."""
    if e.dim != 2:
        raise DimensionError(f"plotting is 2D only, got dimension {e.dim}")
    theta = 2.0 * np.pi * np.arange(segments + 1) / segments
    circle = np.stack([np.cos(theta), np.sin(theta)], axis=1)
    circle[-1] = circle[0]
    return e.mean + circle @ _factor(e.cov).T


def _nice_step(span: float) -> float:
    raw = span / 6.0
    mag = 10.0 ** math.floor(math.log10(raw))
    for k in (1.0, 2.0, 5.0, 10.0):
        if k * mag >= raw:
            return k * mag
    return 10.0 * mag


def _points(xy: np.ndarray) -> str:
    return " ".join(f"{float(x)!r},{float(y)!r}" for x, y in xy)


def _tick_label(v: float) -> str:
    return f"{v:.6g}"


def render(inputs: Sequence[Estimate], solution: Estimate, labels: Optional[Sequence[str]] = None) -> str:
    """SVG text with each input contour, the solution contour and coordinate axes."""
    if solution.dim != 2 or any(e.dim != 2 for e in inputs):
        raise DimensionError("plotting is 2D only")
    curves = [contour(e) for e in inputs]
    sol = contour(solution)
    pts = np.vstack(curves + [sol])
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    span = float(max(hi - lo)) or 1.0
    center = (lo + hi) / 2.0
    lo, hi = center - 0.55 * span, center + 0.55 * span
    scale = (SIZE - 2 * MARGIN) / (1.1 * span)
    tx = MARGIN - scale * lo[0]
    ty = SIZE - MARGIN + scale * lo[1]

    def px(x, y):
        return scale * x + tx, -scale * y + ty

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" '
        f'viewBox="0 0 {SIZE} {SIZE}">',
        f'<rect x="0" y="0" width="{SIZE}" height="{SIZE}" fill="#ffffff"/>',
    ]
    # axes along the left and bottom edges of the data window, with ticks
    step = _nice_step(1.1 * span)
    x0, y0 = px(lo[0], lo[1])
    x1, y1 = px(hi[0], hi[1])
    out.append('<g id="axes" font-family="sans-serif" font-size="11" fill="#333333">')
    out.append(f'<line x1="{x0:.3f}" y1="{y0:.3f}" x2="{x1:.3f}" y2="{y0:.3f}" {AXIS_STYLE}/>')
    out.append(f'<line x1="{x0:.3f}" y1="{y0:.3f}" x2="{x0:.3f}" y2="{y1:.3f}" {AXIS_STYLE}/>')
    for k in range(math.ceil(lo[0] / step), math.floor(hi[0] / step) + 1):
        v = k * step
        x, _ = px(v, lo[1])
        out.append(f'<line x1="{x:.3f}" y1="{y0:.3f}" x2="{x:.3f}" y2="{y0 + 5:.3f}" {AXIS_STYLE}/>')
        out.append(f'<text x="{x:.3f}" y="{y0 + 18:.3f}" text-anchor="middle">{_tick_label(v)}</text>')
    for k in range(math.ceil(lo[1] / step), math.floor(hi[1] / step) + 1):
        v = k * step
        _, y = px(lo[0], v)
        out.append(f'<line x1="{x0 - 5:.3f}" y1="{y:.3f}" x2="{x0:.3f}" y2="{y:.3f}" {AXIS_STYLE}/>')
        out.append(f'<text x="{x0 - 8:.3f}" y="{y + 4:.3f}" text-anchor="end">{_tick_label(v)}</text>')
    out.append("</g>")
    out.append(
        f'<g id="contours" fill="none" transform="matrix({scale!r} 0 0 {-scale!r} {tx!r} {ty!r})">'
    )
    for i, c in enumerate(curves):
        name = escape(labels[i], {"\"": "&quot;"}) if labels and i < len(labels) and labels[i] else f"input {i}"
        out.append(
            f'<polyline class="input" data-label="{name}" {INPUT_STYLE} '
            f'vector-effect="non-scaling-stroke" points="{_points(c)}"/>'
        )
    out.append(
        f'<polyline class="solution" {SOLUTION_STYLE} vector-effect="non-scaling-stroke" points="{_points(sol)}"/>'
    )
    out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"


def parse_polylines(svg: str) -> dict:
    """Vertices of every polyline in an SVG written by :func:`render`, keyed by class."""
    found: dict = {"input": [], "solution": []}
    for m in re.finditer(r'<polyline class="(\w+)"[^>]*points="([^"]*)"', svg):
        xy = np.array([[float(v) for v in p.split(",")] for p in m.group(2).split()])
        found.setdefault(m.group(1), []).append(xy)
    return found
