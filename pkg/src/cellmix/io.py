"""Deterministic artifact emission: CSV tables, JSON summaries, SVG plots.

Byte-identical output for identical inputs is a contract, not a nicety: runs
are compared by hashing their files.  Floats are therefore written with
repr (shortest round trip), JSON keys are sorted, and the SVG contains no
timestamps, generator tags, or random ids.
"""

from __future__ import annotations

import json
import math
from fractions import Fraction
from pathlib import Path

import numpy as np


def format_value(v) -> str:
    """Stable scalar formatting: repr for floats, str for the rest."""
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, Fraction):
        return str(v)
    return str(v)


def write_csv(path, header: list[str], rows: list) -> Path:
    """One table, newline-terminated, repr-formatted floats."""
    path = Path(path)
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(format_value(v) for v in row))
    path.write_text("\n".join(lines) + "\n", newline="\n")
    return path


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    return obj


def write_json(path, obj) -> Path:
    path = Path(path)
    text = json.dumps(_jsonable(obj), indent=2, sort_keys=True)
    path.write_text(text + "\n", newline="\n")
    return path


# ---------------------------------------------------------------------------
# SVG log-log plot, hand rolled so the bytes depend only on the data


_W, _H = 640, 480
_ML, _MR, _MT, _MB = 70, 24, 40, 54
_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd")


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def svg_loglog(
    path,
    curves: list[dict],
    ref_lines: list[dict] | None = None,
    title: str = "",
    xlabel: str = "",
    ylabel: str = "",
) -> Path:
    """Log-log plot: curves [{label, x, y}] and dashed reference slopes.

    Each reference line is {slope, x0, y0, label} drawn through (x0, y0)
    across the data range.  All positions are fixed-precision decimals, so
    identical data produces identical bytes.
    """
    pts = [(x, y) for c in curves for x, y in zip(c["x"], c["y"]) if x > 0 and y > 0]
    if not pts:
        raise ValueError("nothing positive to plot on log axes")
    lx = [math.log10(x) for x, _ in pts]
    ly = [math.log10(y) for _, y in pts]
    for ref in ref_lines or ():
        for x, _ in pts:
            ly.append(
                math.log10(ref["y0"]) + ref["slope"] * (math.log10(x) - math.log10(ref["x0"]))
            )
    x_lo, x_hi = min(lx) - 0.08, max(lx) + 0.08
    y_lo, y_hi = min(ly) - 0.08, max(ly) + 0.08

    def px(v: float) -> float:
        return _ML + (v - x_lo) / (x_hi - x_lo) * (_W - _ML - _MR)

    def py(v: float) -> float:
        return _H - _MB - (v - y_lo) / (y_hi - y_lo) * (_H - _MT - _MB)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}">',
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
        f'<text x="{_W // 2}" y="24" text-anchor="middle" font-size="15" '
        f'font-family="sans-serif">{title}</text>',
        f'<text x="{_W // 2}" y="{_H - 12}" text-anchor="middle" font-size="13" '
        f'font-family="sans-serif">{xlabel}</text>',
        f'<text x="16" y="{_H // 2}" text-anchor="middle" font-size="13" '
        f'font-family="sans-serif" transform="rotate(-90 16 {_H // 2})">{ylabel}</text>',
        f'<rect x="{_ML}" y="{_MT}" width="{_W - _ML - _MR}" height="{_H - _MT - _MB}" '
        f'fill="none" stroke="#333333" stroke-width="1"/>',
    ]
    for d in range(math.ceil(x_lo), math.floor(x_hi) + 1):
        out.append(
            f'<line x1="{_fmt(px(d))}" y1="{_MT}" x2="{_fmt(px(d))}" y2="{_H - _MB}" '
            f'stroke="#dddddd" stroke-width="1"/>'
        )
        out.append(
            f'<text x="{_fmt(px(d))}" y="{_H - _MB + 18}" text-anchor="middle" '
            f'font-size="12" font-family="sans-serif">1e{d}</text>'
        )
    for d in range(math.ceil(y_lo), math.floor(y_hi) + 1):
        out.append(
            f'<line x1="{_ML}" y1="{_fmt(py(d))}" x2="{_W - _MR}" y2="{_fmt(py(d))}" '
            f'stroke="#dddddd" stroke-width="1"/>'
        )
        out.append(
            f'<text x="{_ML - 6}" y="{_fmt(py(d) + 4)}" text-anchor="end" '
            f'font-size="12" font-family="sans-serif">1e{d}</text>'
        )
    for ref in ref_lines or ():
        x0, x1 = x_lo + 0.08, x_hi - 0.08
        base = math.log10(ref["y0"]) - ref["slope"] * math.log10(ref["x0"])
        out.append(
            f'<line x1="{_fmt(px(x0))}" y1="{_fmt(py(base + ref["slope"] * x0))}" '
            f'x2="{_fmt(px(x1))}" y2="{_fmt(py(base + ref["slope"] * x1))}" '
            f'stroke="#888888" stroke-width="1" stroke-dasharray="6,4"/>'
        )
        out.append(
            f'<text x="{_fmt(px(x1))}" y="{_fmt(py(base + ref["slope"] * x1) - 6)}" '
            f'text-anchor="end" font-size="11" font-family="sans-serif" '
            f'fill="#555555">{ref["label"]}</text>'
        )
    for i, c in enumerate(curves):
        color = _COLORS[i % len(_COLORS)]
        coords = [
            (px(math.log10(x)), py(math.log10(y)))
            for x, y in zip(c["x"], c["y"])
            if x > 0 and y > 0
        ]
        poly = " ".join(f"{_fmt(x)},{_fmt(y)}" for x, y in coords)
        out.append(
            f'<polyline points="{poly}" fill="none" stroke="{color}" stroke-width="2"/>'
        )
        for x, y in coords:
            out.append(f'<circle cx="{_fmt(x)}" cy="{_fmt(y)}" r="3.5" fill="{color}"/>')
        out.append(
            f'<text x="{_W - _MR - 8}" y="{_MT + 20 + 16 * i}" text-anchor="end" '
            f'font-size="12" font-family="sans-serif" fill="{color}">{c["label"]}</text>'
        )
    out.append("</svg>")
    path = Path(path)
    path.write_text("\n".join(out) + "\n", newline="\n")
    return path
