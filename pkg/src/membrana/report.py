"""Deterministic CSV, JSON and SVG writers.

All files are written to a temporary sibling and moved into place with
``os.replace``, so a crashed run never leaves a half-written output.
"""
from __future__ import annotations

import json
import math
import os
import tempfile
from pathlib import Path

from .regions import Classification, Confirmation, RegionMap


def fmt(x) -> str:
    if x is None or x == "":
        return ""
    if isinstance(x, str):
        return x
    if isinstance(x, (bool,)):
        return "true" if x else "false"
    if isinstance(x, int):
        return str(x)
    x = float(x)
    if math.isnan(x):
        return "nan"
    return format(x, ".17g")


def atomic_write(path: str | Path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def csv_text(header, rows) -> str:
    lines = [",".join(header)]
    lines.extend(",".join(fmt(v) for v in row) for row in rows)
    return "\n".join(lines) + "\n"


def export_csv(path, header, rows) -> Path:
    return atomic_write(path, csv_text(header, rows))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, float) and not math.isfinite(obj):
        return None if math.isnan(obj) else ("inf" if obj > 0 else "-inf")
    if hasattr(obj, "item"):
        return _jsonable(obj.item())
    return obj


def export_json(path, data) -> Path:
    return atomic_write(path, json.dumps(_jsonable(data), indent=2, sort_keys=True) + "\n")


# --------------------------------------------------------------------------
# SVG

COLORS = {
    Classification.COEXISTENCE: "#7fc97f",
    Classification.NON_EXISTENCE_NECESSARY: "#d9d9d9",
    Classification.NON_EXISTENCE_LARGE: "#fdc086",
    Classification.INDETERMINATE: "#ffffff",
}
CURVE_COLORS = ["#386cb0", "#f0027f", "#bf5b17", "#666666"]


def render_region_svg(rmap: RegionMap, curves: dict | None = None, markers=(), title: str = "") -> str:
    """Region map with class shading, confirmation dots, curve overlays and a legend.

    ``curves`` maps a name to a list of ``(x, mu)`` points; ``markers`` is a
    list of ``(x, mu, label)``.  Output depends only on the inputs.
    """
    g = rmap.grid
    W, H, L, R, T, B = 640, 520, 70, 170, 40, 60
    pw, ph = W - L - R, H - T - B
    (x0, x1), (m0, m1) = g.x_range, g.mu_range

    def px(x):
        return L + (x - x0) / (x1 - x0) * pw

    def py(m):
        return T + ph - (m - m0) / (m1 - m0) * ph

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">',
        f'<rect x="0" y="0" width="{W}" height="{H}" fill="#ffffff"/>',
    ]
    if title:
        out.append(f'<text x="{L}" y="24" font-family="sans-serif" font-size="14">{_esc(title)}</text>')
    cw, ch = pw / g.nx, ph / g.nmu
    for j, mu in enumerate(g.mus):
        for i, x in enumerate(g.xs):
            cls = rmap.classes[j][i]
            out.append(f'<rect x="{L + i * cw:.3f}" y="{T + ph - (j + 1) * ch:.3f}" width="{cw:.3f}" '
                       f'height="{ch:.3f}" fill="{COLORS[cls]}" stroke="none"/>')
            mark = rmap.confirmed[j][i]
            if mark is Confirmation.CONFIRMED:
                out.append(f'<circle cx="{px(x):.3f}" cy="{py(mu):.3f}" r="{min(cw, ch) * 0.18:.3f}" fill="#1b7837"/>')
            elif mark is Confirmation.REFUTED:
                out.append(f'<circle cx="{px(x):.3f}" cy="{py(mu):.3f}" r="{min(cw, ch) * 0.18:.3f}" fill="#b2182b"/>')
    out.append(f'<rect x="{L}" y="{T}" width="{pw}" height="{ph}" fill="none" stroke="#000000"/>')
    if m0 < 0 < m1:
        out.append(f'<line x1="{L}" y1="{py(0):.3f}" x2="{L + pw}" y2="{py(0):.3f}" stroke="#000000" stroke-dasharray="3,3"/>')
    if x0 < 0 < x1:
        out.append(f'<line x1="{px(0):.3f}" y1="{T}" x2="{px(0):.3f}" y2="{T + ph}" stroke="#000000" stroke-dasharray="3,3"/>')
    out.append(f'<clipPath id="plot"><rect x="{L}" y="{T}" width="{pw}" height="{ph}"/></clipPath>')
    for k, (name, pts) in enumerate(sorted((curves or {}).items())):
        if len(pts) < 2:
            continue
        path = " ".join(f"{px(x):.3f},{py(m):.3f}" for x, m in pts)
        color = CURVE_COLORS[k % len(CURVE_COLORS)]
        out.append(f'<polyline points="{path}" fill="none" stroke="{color}" stroke-width="2" clip-path="url(#plot)"/>')
    for x, m, label in markers:
        out.append(f'<circle cx="{px(x):.3f}" cy="{py(m):.3f}" r="4" fill="#000000"/>')
        out.append(f'<text x="{px(x) + 6:.3f}" y="{py(m) - 6:.3f}" font-family="sans-serif" font-size="11">{_esc(label)}</text>')
    # ticks
    for t in range(5):
        xv = x0 + (x1 - x0) * t / 4
        mv = m0 + (m1 - m0) * t / 4
        out.append(f'<text x="{px(xv):.3f}" y="{T + ph + 16}" font-family="sans-serif" font-size="10" text-anchor="middle">{xv:.4g}</text>')
        out.append(f'<text x="{L - 6}" y="{py(mv) + 4:.3f}" font-family="sans-serif" font-size="10" text-anchor="end">{mv:.4g}</text>')
    xlabel = "lambda" if g.equal else "lambda1"
    out.append(f'<text x="{L + pw / 2:.3f}" y="{H - 18}" font-family="sans-serif" font-size="13" text-anchor="middle">{xlabel}</text>')
    out.append(f'<text x="18" y="{T + ph / 2:.3f}" font-family="sans-serif" font-size="13" '
               f'transform="rotate(-90 18 {T + ph / 2:.3f})" text-anchor="middle">mu</text>')
    # legend
    lx, ly = L + pw + 14, T + 6
    entries = [(COLORS[c], c.value) for c in Classification]
    for k, (color, label) in enumerate(entries):
        out.append(f'<rect x="{lx}" y="{ly + 18 * k}" width="12" height="12" fill="{color}" stroke="#000000"/>')
        out.append(f'<text x="{lx + 18}" y="{ly + 18 * k + 10}" font-family="sans-serif" font-size="10">{label}</text>')
    k = len(entries)
    for color, label in (("#1b7837", "Newton confirmed"), ("#b2182b", "refuted")):
        out.append(f'<circle cx="{lx + 6}" cy="{ly + 18 * k + 6}" r="4" fill="{color}"/>')
        out.append(f'<text x="{lx + 18}" y="{ly + 18 * k + 10}" font-family="sans-serif" font-size="10">{label}</text>')
        k += 1
    for c, name in enumerate(sorted((curves or {}))):
        color = CURVE_COLORS[c % len(CURVE_COLORS)]
        out.append(f'<line x1="{lx}" y1="{ly + 18 * k + 6}" x2="{lx + 12}" y2="{ly + 18 * k + 6}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{lx + 18}" y="{ly + 18 * k + 10}" font-family="sans-serif" font-size="10">{_esc(name)}</text>')
        k += 1
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _esc(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


__all__ = ["fmt", "atomic_write", "csv_text", "export_csv", "export_json", "render_region_svg"]
