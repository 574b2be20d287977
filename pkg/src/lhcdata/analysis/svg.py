"""Minimal static SVG rendering of histograms: axes, bars, legend."""

from __future__ import annotations

import math
from html import escape
from typing import Sequence

import numpy as np

from .histogram import Histogram1D

PALETTE = ("#4c72b0", "#dd8452", "#55a868", "#c44e52", "#8172b3", "#937860")

_W, _H = 640, 420
_L, _R, _T, _B = 70, 20, 40, 50


def _fmt(x: float) -> str:
    return f"{x:.2f}"


def _ticks(lo, hi, n=5):
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / n
    mag = 10 ** math.floor(math.log10(raw))
    step = min((s * mag for s in (1, 2, 5, 10) if s * mag >= raw), default=raw)
    start = math.ceil(lo / step) * step
    out, t = [], start
    while t <= hi + 1e-9 * step:
        out.append(round(t, 10))
        t += step
    return out


def render_svg(stack: Sequence[tuple[str, Histogram1D]], data: tuple[str, Histogram1D] | None = None,
               title: str = "", xlabel: str = "", ylabel: str = "events") -> str:
    """Draw histograms stacked bottom-up; ``data`` is drawn as points with error bars."""
    hists = [h for _, h in stack] + ([data[1]] if data else [])
    if not hists:
        raise ValueError("nothing to draw")
    edges = hists[0].edges
    cum = np.zeros(len(edges) - 1)
    layers = []
    for label, h in stack:
        lower = cum.copy()
        cum = cum + h.contents
        layers.append((label, lower, cum.copy()))
    ymax = max(float(cum.max()) if len(stack) else 0.0,
               float((data[1].contents + data[1].errors).max()) if data else 0.0)
    ymax = ymax * 1.1 if ymax > 0 else 1.0
    x0, x1 = float(edges[0]), float(edges[-1])

    def sx(x):
        return _L + (x - x0) / (x1 - x0) * (_W - _L - _R)

    def sy(y):
        return _H - _B - y / ymax * (_H - _T - _B)

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
           f'viewBox="0 0 {_W} {_H}" font-family="sans-serif" font-size="12">',
           f'<rect width="{_W}" height="{_H}" fill="white"/>']
    for k, (label, lower, upper) in enumerate(layers):
        colour = PALETTE[k % len(PALETTE)]
        for i in range(len(edges) - 1):
            if upper[i] <= lower[i]:
                continue
            out.append(f'<rect x="{_fmt(sx(edges[i]))}" y="{_fmt(sy(upper[i]))}" '
                       f'width="{_fmt(sx(edges[i + 1]) - sx(edges[i]))}" '
                       f'height="{_fmt(sy(lower[i]) - sy(upper[i]))}" fill="{colour}" stroke="none"/>')
    if data:
        h = data[1]
        for c, y, err in zip(h.centers, h.contents, h.errors):
            if y <= 0:
                continue
            out.append(f'<line x1="{_fmt(sx(c))}" x2="{_fmt(sx(c))}" y1="{_fmt(sy(y - err))}" '
                       f'y2="{_fmt(sy(y + err))}" stroke="black"/>')
            out.append(f'<circle cx="{_fmt(sx(c))}" cy="{_fmt(sy(y))}" r="2.5" fill="black"/>')
    # axes
    out.append(f'<line x1="{_L}" y1="{_H - _B}" x2="{_W - _R}" y2="{_H - _B}" stroke="black"/>')
    out.append(f'<line x1="{_L}" y1="{_T}" x2="{_L}" y2="{_H - _B}" stroke="black"/>')
    for t in _ticks(x0, x1):
        out.append(f'<line x1="{_fmt(sx(t))}" x2="{_fmt(sx(t))}" y1="{_H - _B}" y2="{_H - _B + 5}" stroke="black"/>')
        out.append(f'<text x="{_fmt(sx(t))}" y="{_H - _B + 18}" text-anchor="middle">{t:g}</text>')
    for t in _ticks(0.0, ymax):
        out.append(f'<line x1="{_L - 5}" x2="{_L}" y1="{_fmt(sy(t))}" y2="{_fmt(sy(t))}" stroke="black"/>')
        out.append(f'<text x="{_L - 8}" y="{_fmt(sy(t) + 4)}" text-anchor="end">{t:g}</text>')
    out.append(f'<text x="{(_L + _W - _R) / 2:.1f}" y="{_H - 12}" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(f'<text x="16" y="{(_T + _H - _B) / 2:.1f}" text-anchor="middle" '
               f'transform="rotate(-90 16 {(_T + _H - _B) / 2:.1f})">{escape(ylabel)}</text>')
    if title:
        out.append(f'<text x="{_W / 2:.1f}" y="22" text-anchor="middle" font-size="14">{escape(title)}</text>')
    # legend
    entries = [(label, PALETTE[k % len(PALETTE)]) for k, (label, _) in enumerate(stack)]
    y = _T + 8
    for label, colour in entries:
        out.append(f'<rect x="{_W - _R - 140}" y="{y - 9}" width="12" height="12" fill="{colour}"/>')
        out.append(f'<text x="{_W - _R - 122}" y="{y + 1}">{escape(label)}</text>')
        y += 18
    if data:
        out.append(f'<circle cx="{_W - _R - 134}" cy="{y - 3}" r="3" fill="black"/>')
        out.append(f'<text x="{_W - _R - 122}" y="{y + 1}">{escape(data[0])}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
