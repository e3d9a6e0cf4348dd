"""Minimal deterministic SVG figures.

Hand-rolled line and scatter plots so report output does not depend on
a plotting library. Every coordinate goes through one fixed format and
nothing varies between runs (no timestamps, no ids), so regenerating a
figure from the same CSV input reproduces it byte for byte.
"""

from __future__ import annotations

import math

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")

_FONT = "Helvetica, Arial, sans-serif"

# sampled viridis stops for scatter coloring
_CMAP_STOPS = (
    (0.0, (68, 1, 84)),
    (0.25, (59, 82, 139)),
    (0.5, (33, 145, 140)),
    (0.75, (94, 201, 98)),
    (1.0, (253, 231, 37)),
)


def _f(value):
    """Fixed float formatting for all emitted coordinates."""
    text = "%.6g" % float(value)
    return "0" if text == "-0" else text


def _esc(text):
    return (str(text).replace("&", "&amp;").replace("<", "&lt;")
            .replace(">", "&gt;"))


def _nice_step(span, target=6):
    raw = span / max(target, 1)
    mag = 10.0 ** math.floor(math.log10(raw))
    for mult in (1.0, 2.0, 5.0, 10.0):
        if raw <= mult * mag * (1 + 1e-12):
            return mult * mag
    return 10.0 * mag


def _linear_ticks(lo, hi):
    if hi <= lo:
        hi = lo + 1.0
    step = _nice_step(hi - lo)
    first = math.ceil(lo / step - 1e-9) * step
    ticks = []
    t = first
    while t <= hi + 1e-9 * step:
        ticks.append(0.0 if abs(t) < 1e-12 * step else t)
        t += step
    return ticks


def _log_ticks(lo, hi):
    d0 = math.floor(math.log10(lo) + 1e-12)
    d1 = math.ceil(math.log10(hi) - 1e-12)
    decades = [10.0 ** d for d in range(int(d0), int(d1) + 1)]
    ticks = [d for d in decades if lo / 1.001 <= d <= hi * 1.001]
    if len(ticks) < 3:
        extra = []
        for d in decades:
            for m in (2.0, 5.0):
                v = m * d
                if lo / 1.001 <= v <= hi * 1.001:
                    extra.append(v)
        ticks = sorted(ticks + extra)
    return ticks


def _fmt_tick(v):
    a = abs(v)
    if v != 0 and (a < 1e-3 or a >= 1e4):
        exp = math.floor(math.log10(a) + 1e-12)
        mant = v / 10.0 ** exp
        if abs(abs(mant) - 1.0) < 1e-9:
            sign = "-" if v < 0 else ""
            return f"{sign}1e{int(exp)}"
        return f"{_f(mant)}e{int(exp)}"
    return _f(v)


class _Axes:
    """Maps data coordinates into the pixel frame of one plot box."""

    def __init__(self, xlim, ylim, logx, logy, width, height,
                 left=72.0, right=30.0, top=44.0, bottom=58.0):
        self.logx, self.logy = logx, logy
        self.x0, self.x1 = self._span(xlim, logx)
        self.y0, self.y1 = self._span(ylim, logy)
        self.px0, self.px1 = left, width - right
        self.py0, self.py1 = height - bottom, top

    @staticmethod
    def _span(lim, log):
        lo, hi = lim
        if log:
            lo = max(lo, 1e-300)
            hi = max(hi, lo * 1.0001)
            llo, lhi = math.log10(lo), math.log10(hi)
            pad = 0.05 * (lhi - llo) or 0.5
            return 10.0 ** (llo - pad), 10.0 ** (lhi + pad)
        if hi <= lo:
            hi = lo + 1.0
        pad = 0.05 * (hi - lo)
        return lo - pad, hi + pad

    def px(self, x):
        if self.logx:
            t = ((math.log10(max(x, 1e-300)) - math.log10(self.x0))
                 / (math.log10(self.x1) - math.log10(self.x0)))
        else:
            t = (x - self.x0) / (self.x1 - self.x0)
        return self.px0 + t * (self.px1 - self.px0)

    def py(self, y):
        if self.logy:
            t = ((math.log10(max(y, 1e-300)) - math.log10(self.y0))
                 / (math.log10(self.y1) - math.log10(self.y0)))
        else:
            t = (y - self.y0) / (self.y1 - self.y0)
        return self.py0 + t * (self.py1 - self.py0)

    def xticks(self):
        return (_log_ticks(self.x0, self.x1) if self.logx
                else _linear_ticks(self.x0, self.x1))

    def yticks(self):
        return (_log_ticks(self.y0, self.y1) if self.logy
                else _linear_ticks(self.y0, self.y1))


def _frame(ax, title, xlabel, ylabel, width, height):
    parts = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_f(width)}" '
        f'height="{_f(height)}" viewBox="0 0 {_f(width)} {_f(height)}">',
        f'<rect x="0" y="0" width="{_f(width)}" height="{_f(height)}" '
        'fill="#ffffff"/>',
    ]
    # grid and ticks
    for xv in ax.xticks():
        px = ax.px(xv)
        parts.append(f'<line x1="{_f(px)}" y1="{_f(ax.py0)}" x2="{_f(px)}" '
                     f'y2="{_f(ax.py1)}" stroke="#e6e6e6" stroke-width="1"/>')
        parts.append(f'<text x="{_f(px)}" y="{_f(ax.py0 + 18)}" '
                     f'font-family="{_FONT}" font-size="12" fill="#333333" '
                     f'text-anchor="middle">{_esc(_fmt_tick(xv))}</text>')
    for yv in ax.yticks():
        py = ax.py(yv)
        parts.append(f'<line x1="{_f(ax.px0)}" y1="{_f(py)}" x2="{_f(ax.px1)}" '
                     f'y2="{_f(py)}" stroke="#e6e6e6" stroke-width="1"/>')
        parts.append(f'<text x="{_f(ax.px0 - 6)}" y="{_f(py + 4)}" '
                     f'font-family="{_FONT}" font-size="12" fill="#333333" '
                     f'text-anchor="end">{_esc(_fmt_tick(yv))}</text>')
    parts.append(f'<rect x="{_f(ax.px0)}" y="{_f(ax.py1)}" '
                 f'width="{_f(ax.px1 - ax.px0)}" '
                 f'height="{_f(ax.py0 - ax.py1)}" fill="none" '
                 'stroke="#333333" stroke-width="1"/>')
    mid_x = 0.5 * (ax.px0 + ax.px1)
    parts.append(f'<text x="{_f(mid_x)}" y="22" font-family="{_FONT}" '
                 f'font-size="15" fill="#111111" text-anchor="middle">'
                 f'{_esc(title)}</text>')
    parts.append(f'<text x="{_f(mid_x)}" y="{_f(ax.py0 + 42)}" '
                 f'font-family="{_FONT}" font-size="13" fill="#111111" '
                 f'text-anchor="middle">{_esc(xlabel)}</text>')
    mid_y = 0.5 * (ax.py0 + ax.py1)
    parts.append(f'<text x="18" y="{_f(mid_y)}" font-family="{_FONT}" '
                 f'font-size="13" fill="#111111" text-anchor="middle" '
                 f'transform="rotate(-90 18 {_f(mid_y)})">{_esc(ylabel)}</text>')
    return parts


def _data_limits(series, index):
    vals = [v for s in series for v in s[index] if math.isfinite(v)]
    if not vals:
        return (0.0, 1.0)
    return (min(vals), max(vals))


def line_figure(series, title, xlabel, ylabel, logx=False, logy=False,
                width=720.0, height=480.0):
    """Render labelled (x, y) series as one SVG document string.

    series: list of (label, xs, ys) triples, drawn in order with the
    fixed palette. On log axes nonpositive values are dropped.
    """
    cleaned = []
    for label, xs, ys in series:
        pts = [(float(x), float(y)) for x, y in zip(xs, ys)
               if math.isfinite(x) and math.isfinite(y)
               and (not logx or x > 0) and (not logy or y > 0)]
        cleaned.append((str(label), [p[0] for p in pts], [p[1] for p in pts]))
    ax = _Axes(_data_limits(cleaned, 1), _data_limits(cleaned, 2),
               logx, logy, width, height)
    parts = _frame(ax, title, xlabel, ylabel, width, height)
    for i, (label, xs, ys) in enumerate(cleaned):
        color = PALETTE[i % len(PALETTE)]
        coords = " ".join(f"{_f(ax.px(x))},{_f(ax.py(y))}"
                          for x, y in zip(xs, ys))
        if coords:
            parts.append(f'<polyline points="{coords}" fill="none" '
                         f'stroke="{color}" stroke-width="1.8"/>')
    # legend, top right inside the box
    for i, (label, _, _) in enumerate(cleaned):
        color = PALETTE[i % len(PALETTE)]
        ly = ax.py1 + 16 + 18 * i
        lx = ax.px1 - 150
        parts.append(f'<line x1="{_f(lx)}" y1="{_f(ly - 4)}" '
                     f'x2="{_f(lx + 26)}" y2="{_f(ly - 4)}" '
                     f'stroke="{color}" stroke-width="2.5"/>')
        parts.append(f'<text x="{_f(lx + 32)}" y="{_f(ly)}" '
                     f'font-family="{_FONT}" font-size="12" fill="#111111" '
                     f'text-anchor="start">{_esc(label)}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _cmap(t):
    t = min(max(t, 0.0), 1.0)
    for (t0, c0), (t1, c1) in zip(_CMAP_STOPS, _CMAP_STOPS[1:]):
        if t <= t1:
            w = 0.0 if t1 == t0 else (t - t0) / (t1 - t0)
            rgb = [int(round(a + w * (b - a))) for a, b in zip(c0, c1)]
            return "#%02x%02x%02x" % tuple(rgb)
    return "#%02x%02x%02x" % _CMAP_STOPS[-1][1]


def scatter_figure(xs, ys, color_values, title, xlabel, ylabel,
                   color_label="", width=720.0, height=480.0, radius=3.0):
    """Render a colored scatter cloud as one SVG document string."""
    pts = [(float(x), float(y), float(c))
           for x, y, c in zip(xs, ys, color_values)
           if math.isfinite(x) and math.isfinite(y) and math.isfinite(c)]
    if pts:
        xlim = (min(p[0] for p in pts), max(p[0] for p in pts))
        ylim = (min(p[1] for p in pts), max(p[1] for p in pts))
        clo = min(p[2] for p in pts)
        chi = max(p[2] for p in pts)
    else:
        xlim, ylim, clo, chi = (0.0, 1.0), (0.0, 1.0), 0.0, 1.0
    ax = _Axes(xlim, ylim, False, False, width, height)
    parts = _frame(ax, title, xlabel, ylabel, width, height)
    span = chi - clo
    for x, y, c in pts:
        t = 0.5 if span <= 0 else (c - clo) / span
        parts.append(f'<circle cx="{_f(ax.px(x))}" cy="{_f(ax.py(y))}" '
                     f'r="{_f(radius)}" fill="{_cmap(t)}" fill-opacity="0.85"/>')
    if color_label:
        parts.append(f'<text x="{_f(ax.px1)}" y="{_f(ax.py1 - 8)}" '
                     f'font-family="{_FONT}" font-size="12" fill="#111111" '
                     f'text-anchor="end">{_esc(color_label)} in '
                     f'[{_esc(_fmt_tick(clo))}, {_esc(_fmt_tick(chi))}]</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
