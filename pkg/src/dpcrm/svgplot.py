"""Minimal native SVG log-log plotting (points, lines, bands).

Plots are derived views of the CSV outputs, never the source of truth,
so this stays deliberately small: log-log axes with decade ticks, dots,
polylines and filled band polygons.
"""

from __future__ import annotations

import math

__all__ = ["LogLogPlot"]

_W, _H = 640, 480
_ML, _MR, _MT, _MB = 70, 20, 40, 55


class LogLogPlot:
    def __init__(self, title: str = "", xlabel: str = "", ylabel: str = ""):
        self.title = title
        self.xlabel = xlabel
        self.ylabel = ylabel
        self._series = []   # (kind, payload, color, label)

    def add_points(self, x, y, color: str = "#d62728", label: str = ""):
        pts = [(float(a), float(b)) for a, b in zip(x, y) if a > 0 and b > 0]
        self._series.append(("points", pts, color, label))

    def add_line(self, x, y, color: str = "#1f77b4", label: str = ""):
        pts = [(float(a), float(b)) for a, b in zip(x, y) if a > 0 and b > 0]
        self._series.append(("line", pts, color, label))

    def add_band(self, x, lo, hi, color: str = "#aec7e8", label: str = ""):
        pts = [(float(a), float(b), float(c))
               for a, b, c in zip(x, lo, hi) if a > 0 and c > 0]
        self._series.append(("band", pts, color, label))

    def _limits(self):
        xs, ys = [], []
        for kind, pts, _, _ in self._series:
            for p in pts:
                xs.append(p[0])
                if kind == "band":
                    ys.append(p[2])
                    if p[1] > 0:
                        ys.append(p[1])
                else:
                    ys.append(p[1])
        if not xs:
            return 0.1, 10.0, 0.1, 10.0
        pad = 1.3
        return (min(xs) / pad, max(xs) * pad, min(ys) / pad, max(ys) * pad)

    def write(self, path):
        x0, x1, y0, y1 = self._limits()
        lx0, lx1 = math.log10(x0), math.log10(x1)
        ly0, ly1 = math.log10(y0), math.log10(y1)

        def px(x):
            return _ML + (math.log10(x) - lx0) / max(lx1 - lx0, 1e-9) * (_W - _ML - _MR)

        def py(y):
            return _H - _MB - (math.log10(y) - ly0) / max(ly1 - ly0, 1e-9) * (_H - _MT - _MB)

        parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
                 f'viewBox="0 0 {_W} {_H}">',
                 f'<rect width="{_W}" height="{_H}" fill="white"/>']
        # axes frame
        parts.append(f'<rect x="{_ML}" y="{_MT}" width="{_W-_ML-_MR}" height="{_H-_MT-_MB}" '
                     'fill="none" stroke="#333" stroke-width="1"/>')
        # decade ticks
        for d in range(math.ceil(lx0), math.floor(lx1) + 1):
            x = px(10.0 ** d)
            parts.append(f'<line x1="{x:.1f}" y1="{_H-_MB}" x2="{x:.1f}" y2="{_H-_MB+5}" '
                         'stroke="#333"/>')
            parts.append(f'<text x="{x:.1f}" y="{_H-_MB+20}" font-size="12" '
                         f'text-anchor="middle">1e{d}</text>')
        for d in range(math.ceil(ly0), math.floor(ly1) + 1):
            y = py(10.0 ** d)
            parts.append(f'<line x1="{_ML-5}" y1="{y:.1f}" x2="{_ML}" y2="{y:.1f}" '
                         'stroke="#333"/>')
            parts.append(f'<text x="{_ML-8}" y="{y+4:.1f}" font-size="12" '
                         f'text-anchor="end">1e{d}</text>')
        # series
        for kind, pts, color, _ in self._series:
            if not pts:
                continue
            if kind == "band":
                upper = [(px(a), py(c)) for a, _, c in pts]
                lower = [(px(a), py(max(b, y0))) for a, b, _ in reversed(pts)]
                d_attr = " ".join(f"{x:.1f},{y:.1f}" for x, y in upper + lower)
                parts.append(f'<polygon points="{d_attr}" fill="{color}" '
                             'fill-opacity="0.55" stroke="none"/>')
            elif kind == "line":
                d_attr = " ".join(f"{px(a):.1f},{py(b):.1f}" for a, b in pts)
                parts.append(f'<polyline points="{d_attr}" fill="none" '
                             f'stroke="{color}" stroke-width="1.5"/>')
            else:
                step = max(1, len(pts) // 2000)
                for a, b in pts[::step]:
                    parts.append(f'<circle cx="{px(a):.1f}" cy="{py(b):.1f}" r="2" '
                                 f'fill="{color}" fill-opacity="0.7"/>')
        # labels and legend
        if self.title:
            parts.append(f'<text x="{_W/2}" y="24" font-size="15" '
                         f'text-anchor="middle">{self.title}</text>')
        if self.xlabel:
            parts.append(f'<text x="{(_ML+_W-_MR)/2}" y="{_H-12}" font-size="13" '
                         f'text-anchor="middle">{self.xlabel}</text>')
        if self.ylabel:
            parts.append(f'<text x="16" y="{(_MT+_H-_MB)/2}" font-size="13" '
                         f'text-anchor="middle" transform="rotate(-90 16 {(_MT+_H-_MB)/2})">'
                         f'{self.ylabel}</text>')
        ly = _MT + 14
        for kind, _, color, label in self._series:
            if not label:
                continue
            parts.append(f'<rect x="{_W-_MR-150}" y="{ly-9}" width="12" height="9" '
                         f'fill="{color}"/>')
            parts.append(f'<text x="{_W-_MR-133}" y="{ly}" font-size="12">{label}</text>')
            ly += 16
        parts.append("</svg>")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("\n".join(parts) + "\n")
