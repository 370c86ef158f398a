"""Deterministic report serialisation: JSON, CSV and small static SVG charts."""
from __future__ import annotations

import csv
import dataclasses
import hashlib
import io
import json
import math
from datetime import date, datetime, timedelta
from pathlib import Path

import numpy as np

SCHEMA_VERSION = "1.0"
FLOAT_DIGITS = 10


def _round(x: float):
    if not math.isfinite(x):
        return None
    return float(f"{x:.{FLOAT_DIGITS}g}")


def canonical(obj):
    """Convert ``obj`` into plain JSON types with floats at fixed precision."""
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: canonical(getattr(obj, f.name)) for f in dataclasses.fields(obj) if f.repr}
    if isinstance(obj, dict):
        return {str(k) if not isinstance(k, tuple) else "/".join(map(str, k)): canonical(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [canonical(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [canonical(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return _round(float(obj))
    if isinstance(obj, (datetime, date)):
        return obj.isoformat()
    if isinstance(obj, timedelta):
        return obj.total_seconds()
    if obj is None or isinstance(obj, str):
        return obj
    if isinstance(obj, Path):
        return str(obj)
    return str(obj)


def dumps(report: dict) -> str:
    return json.dumps(canonical(report), sort_keys=True, indent=2, allow_nan=False) + "\n"


def file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_cell(v) for v in row])
    return buf.getvalue()


def _cell(v):
    c = canonical(v)
    return "" if c is None else c


def _scale(vals, lo, hi, out_lo, out_hi):
    span = hi - lo or 1.0
    return out_lo + (np.asarray(vals, float) - lo) / span * (out_hi - out_lo)


def svg_chart(title: str, lines, width: int = 720, height: int = 320, hlines=()) -> str:
    """Minimal line chart. ``lines`` is a list of ``(label, xs, ys)``."""
    pad = 40
    xs_all = np.concatenate([np.asarray(x, float) for _, x, _ in lines])
    ys_all = np.concatenate([np.asarray(y, float) for _, _, y in lines] + [np.array([h for _, h in hlines], float)])
    x0, x1 = float(xs_all.min()), float(xs_all.max())
    y0, y1 = float(min(0.0, ys_all.min())), float(ys_all.max())
    colors = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd"]
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{pad}" y="20" font-family="sans-serif" font-size="14">{_esc(title)}</text>',
        f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" y2="{height - pad}" stroke="black"/>',
        f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height - pad}" stroke="black"/>',
        f'<text x="2" y="{pad}" font-family="sans-serif" font-size="10">{y1:.4g}</text>',
        f'<text x="2" y="{height - pad}" font-family="sans-serif" font-size="10">{y0:.4g}</text>',
    ]
    for i, (label, xs, ys) in enumerate(lines):
        px = _scale(xs, x0, x1, pad, width - pad)
        py = _scale(ys, y0, y1, height - pad, pad)
        pts = " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(px, py))
        col = colors[i % len(colors)]
        parts.append(f'<polyline fill="none" stroke="{col}" stroke-width="1.5" points="{pts}"/>')
        parts.append(
            f'<text x="{width - pad - 150}" y="{20 + 14 * i}" font-family="sans-serif" font-size="11" fill="{col}">{_esc(label)}</text>'
        )
    for label, h in hlines:
        py = float(_scale([h], y0, y1, height - pad, pad)[0])
        parts.append(f'<line x1="{pad}" y1="{py:.2f}" x2="{width - pad}" y2="{py:.2f}" stroke="black" stroke-dasharray="4,3"/>')
        parts.append(f'<text x="{pad + 4}" y="{py - 3:.2f}" font-family="sans-serif" font-size="10">{_esc(label)}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _esc(s: str) -> str:
    return str(s).replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
