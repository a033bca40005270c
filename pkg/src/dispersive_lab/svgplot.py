"""Self-contained SVG scatter/line plots; no plotting dependency.

Static log-log plots with per-series fitted slopes in the legend; every
plot is written next to the CSV holding the same data, so figures are
reproducible externally.
"""

from __future__ import annotations

import math

_COLORS = ("#1f6fb4", "#d1495b", "#2e8b57", "#8a5bd1", "#c98a1e", "#3aa6a6")

_W, _H = 720, 500
_ML, _MR, _MT, _MB = 80, 24, 42, 58


def _ticks_log(lo: float, hi: float):
    lo_e = math.floor(math.log10(lo))
    hi_e = math.ceil(math.log10(hi))
    return [10.0**e for e in range(int(lo_e), int(hi_e) + 1)]


def _fmt(v: float) -> str:
    if v == 0:
        return "0"
    e = math.log10(abs(v))
    if abs(e) < 4 and v == int(v):
        return str(int(v))
    return f"{v:.3g}"


def write_loglog_svg(path, series, title="", xlabel="", ylabel=""):
    """series: list of dicts with keys label, x, y and optionally slope."""
    xs_all = [x for s in series for x in s["x"] if x > 0]
    ys_all = [y for s in series for y in s["y"] if y > 0]
    if not xs_all or not ys_all:
        raise ValueError("nothing positive to plot on log axes")
    x_lo, x_hi = min(xs_all) * 0.9, max(xs_all) * 1.1
    y_lo, y_hi = min(ys_all) * 0.8, max(ys_all) * 1.25

    def px(x):
        return _ML + (math.log10(x) - math.log10(x_lo)) / (
            math.log10(x_hi) - math.log10(x_lo)) * (_W - _ML - _MR)

    def py(y):
        return _H - _MB - (math.log10(y) - math.log10(y_lo)) / (
            math.log10(y_hi) - math.log10(y_lo)) * (_H - _MT - _MB)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}">',
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
        f'<text x="{_W/2:.0f}" y="24" text-anchor="middle" font-size="16" '
        f'font-family="sans-serif">{title}</text>',
    ]
    for tx in _ticks_log(x_lo, x_hi):
        if not (x_lo <= tx <= x_hi):
            continue
        X = px(tx)
        out.append(f'<line x1="{X:.1f}" y1="{_MT}" x2="{X:.1f}" y2="{_H-_MB}" '
                   'stroke="#dddddd" stroke-width="1"/>')
        out.append(f'<text x="{X:.1f}" y="{_H-_MB+18}" text-anchor="middle" '
                   f'font-size="11" font-family="sans-serif">{_fmt(tx)}</text>')
    for ty in _ticks_log(y_lo, y_hi):
        if not (y_lo <= ty <= y_hi):
            continue
        Y = py(ty)
        out.append(f'<line x1="{_ML}" y1="{Y:.1f}" x2="{_W-_MR}" y2="{Y:.1f}" '
                   'stroke="#dddddd" stroke-width="1"/>')
        out.append(f'<text x="{_ML-6}" y="{Y+4:.1f}" text-anchor="end" '
                   f'font-size="11" font-family="sans-serif">{_fmt(ty)}</text>')
    out.append(f'<rect x="{_ML}" y="{_MT}" width="{_W-_ML-_MR}" '
               f'height="{_H-_MT-_MB}" fill="none" stroke="#333333"/>')
    out.append(f'<text x="{_W/2:.0f}" y="{_H-16}" text-anchor="middle" font-size="13" '
               f'font-family="sans-serif">{xlabel}</text>')
    out.append(f'<text x="20" y="{_H/2:.0f}" text-anchor="middle" font-size="13" '
               f'font-family="sans-serif" transform="rotate(-90 20 {_H/2:.0f})">{ylabel}</text>')
    legend_y = _MT + 16
    for i, s in enumerate(series):
        color = _COLORS[i % len(_COLORS)]
        pts = [(px(x), py(y)) for x, y in zip(s["x"], s["y"]) if x > 0 and y > 0]
        path_d = " ".join(f"{'M' if j == 0 else 'L'}{X:.1f},{Y:.1f}"
                          for j, (X, Y) in enumerate(pts))
        out.append(f'<path d="{path_d}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        for X, Y in pts:
            out.append(f'<circle cx="{X:.1f}" cy="{Y:.1f}" r="3" fill="{color}"/>')
        label = s["label"]
        if "slope" in s and s["slope"] is not None:
            label += f" (slope {s['slope']:.3f})"
        out.append(f'<text x="{_ML+10}" y="{legend_y}" font-size="12" '
                   f'font-family="sans-serif" fill="{color}">{label}</text>')
        legend_y += 16
    out.append("</svg>")
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(out) + "\n")
