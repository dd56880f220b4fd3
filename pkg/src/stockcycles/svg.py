"""Minimal static SVG line charts (polylines, stems, axes, markers)."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence
from xml.sax.saxutils import escape

import numpy as np

PALETTE = ("#1f4e99", "#c0392b", "#2e8b57", "#8e44ad", "#d68910", "#555555")


@dataclass
class Trace:
    x: Sequence[float]
    y: Sequence[float]
    label: str = ""
    color: Optional[str] = None
    dash: Optional[str] = None  # stroke-dasharray
    kind: str = "line"  # line | stem | points


def _nice_ticks(lo: float, hi: float, count: int = 5) -> list[float]:
    if not math.isfinite(lo) or not math.isfinite(hi):
        return []
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / count
    mag = 10 ** math.floor(math.log10(raw))
    step = next(m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw)
    first = math.ceil(lo / step) * step
    ticks = []
    v = first
    while v <= hi + 1e-9 * step:
        ticks.append(0.0 if abs(v) < 1e-12 * step else v)
        v += step
    return ticks


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _label(v: float) -> str:
    return f"{v:g}"


def line_chart(traces: Sequence[Trace], title: str = "", xlabel: str = "", ylabel: str = "",
               vlines: Sequence[tuple[float, str]] = (), hlines: Sequence[tuple[float, str]] = (),
               width: int = 900, height: int = 420, xtick_labels=None) -> str:
    """Render ``traces`` to an SVG document string.

    ``vlines`` / ``hlines`` are ``(position, label)`` pairs drawn dotted.
    ``xtick_labels`` optionally maps an x tick value to display text.
    """
    left, right, top, bottom = 70, 20, 40, 55
    pw, ph = width - left - right, height - top - bottom

    xs = [np.asarray(t.x, dtype=float) for t in traces if len(t.x)]
    ys = [np.asarray(t.y, dtype=float) for t in traces if len(t.y)]
    xs += [np.array([v]) for v, _ in vlines]
    ys += [np.array([v]) for v, _ in hlines]
    if any(t.kind == "stem" for t in traces):
        ys.append(np.array([0.0]))
    xall = np.concatenate(xs) if xs else np.array([0.0, 1.0])
    yall = np.concatenate(ys) if ys else np.array([0.0, 1.0])
    xall, yall = xall[np.isfinite(xall)], yall[np.isfinite(yall)]
    x0, x1 = (float(xall.min()), float(xall.max())) if xall.size else (0.0, 1.0)
    y0, y1 = (float(yall.min()), float(yall.max())) if yall.size else (0.0, 1.0)
    if x1 == x0:
        x0, x1 = x0 - 1, x1 + 1
    if y1 == y0:
        y0, y1 = y0 - 1, y1 + 1
    pad = 0.05 * (y1 - y0)
    y0, y1 = y0 - pad, y1 + pad

    def px(v):
        return left + (v - x0) / (x1 - x0) * pw

    def py(v):
        return top + (y1 - v) / (y1 - y0) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
    ]
    if title:
        out.append(f'<text x="{width / 2:.1f}" y="22" text-anchor="middle" font-size="15">{escape(title)}</text>')
    out.append(
        f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="#333" stroke-width="1"/>'
    )
    for v in _nice_ticks(x0, x1):
        X = px(v)
        text = xtick_labels(v) if xtick_labels else _label(v)
        out.append(f'<line x1="{_fmt(X)}" y1="{top + ph}" x2="{_fmt(X)}" y2="{top + ph + 5}" stroke="#333"/>')
        out.append(f'<text x="{_fmt(X)}" y="{top + ph + 18}" text-anchor="middle">{escape(text)}</text>')
    for v in _nice_ticks(y0, y1):
        Y = py(v)
        out.append(f'<line x1="{left - 5}" y1="{_fmt(Y)}" x2="{left}" y2="{_fmt(Y)}" stroke="#333"/>')
        out.append(f'<line x1="{left}" y1="{_fmt(Y)}" x2="{left + pw}" y2="{_fmt(Y)}" stroke="#eee"/>')
        out.append(f'<text x="{left - 8}" y="{_fmt(Y + 4)}" text-anchor="end">{escape(_label(v))}</text>')
    if xlabel:
        out.append(f'<text x="{left + pw / 2:.1f}" y="{height - 12}" text-anchor="middle">{escape(xlabel)}</text>')
    if ylabel:
        out.append(
            f'<text x="16" y="{top + ph / 2:.1f}" text-anchor="middle" '
            f'transform="rotate(-90 16 {top + ph / 2:.1f})">{escape(ylabel)}</text>'
        )

    for v, label in hlines:
        Y = py(v)
        out.append(f'<line x1="{left}" y1="{_fmt(Y)}" x2="{left + pw}" y2="{_fmt(Y)}" '
                   f'stroke="#777" stroke-dasharray="2,3"/>')
        if label:
            out.append(f'<text x="{left + pw - 4}" y="{_fmt(Y - 4)}" text-anchor="end" fill="#777">{escape(label)}</text>')
    for v, label in vlines:
        X = px(v)
        out.append(f'<line x1="{_fmt(X)}" y1="{top}" x2="{_fmt(X)}" y2="{top + ph}" '
                   f'stroke="#333" stroke-dasharray="2,3"/>')
        if label:
            out.append(f'<text x="{_fmt(X + 4)}" y="{top + 14}" fill="#333">{escape(label)}</text>')

    for i, t in enumerate(traces):
        color = t.color or PALETTE[i % len(PALETTE)]
        x = np.asarray(t.x, dtype=float)
        y = np.asarray(t.y, dtype=float)
        ok = np.isfinite(x) & np.isfinite(y)
        x, y = x[ok], y[ok]
        dash = f' stroke-dasharray="{t.dash}"' if t.dash else ""
        if t.kind == "stem":
            base = py(0.0)
            for a, b in zip(x, y):
                out.append(f'<line x1="{_fmt(px(a))}" y1="{_fmt(base)}" x2="{_fmt(px(a))}" '
                           f'y2="{_fmt(py(b))}" stroke="{color}" stroke-width="1.5"/>')
        elif t.kind == "points":
            for a, b in zip(x, y):
                out.append(f'<circle cx="{_fmt(px(a))}" cy="{_fmt(py(b))}" r="1.8" fill="{color}"/>')
        else:
            pts = " ".join(f"{_fmt(px(a))},{_fmt(py(b))}" for a, b in zip(x, y))
            out.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.3"{dash}/>')

    labelled = [(i, t) for i, t in enumerate(traces) if t.label]
    for row, (i, t) in enumerate(labelled):
        color = t.color or PALETTE[i % len(PALETTE)]
        Y = top + 14 + 16 * row
        out.append(f'<line x1="{left + 10}" y1="{Y - 4}" x2="{left + 30}" y2="{Y - 4}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{left + 36}" y="{Y}">{escape(t.label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
