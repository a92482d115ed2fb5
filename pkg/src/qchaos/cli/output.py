"""CSV, JSON manifest and minimal SVG writers."""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from pathlib import Path

import numpy as np

SVG_W, SVG_H, PAD = 640, 400, 50


def fmt(x) -> str:
    """Round-trip text for a number: 17 significant digits for floats."""
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


def write_csv(path: Path, header, columns) -> str:
    """Write equal-length columns with a header row; returns the sha256 of the bytes written."""
    columns = [np.asarray(c) for c in columns]
    n = {c.shape[0] for c in columns}
    if len(n) != 1:
        raise ValueError("CSV columns differ in length")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in zip(*columns):
        w.writerow([fmt(x) for x in row])
    data = buf.getvalue().encode()
    Path(path).write_bytes(data)
    return hashlib.sha256(data).hexdigest()


def read_csv(path) -> tuple[list[str], np.ndarray]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path}: empty CSV")
    body = np.array([[float(x) for x in r] for r in rows[1:]], dtype=float).reshape(-1, len(rows[0]))
    return rows[0], body


def sha256_file(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_json(path: Path, obj) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True, default=_jsonable) + "\n")


def _jsonable(x):
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.floating):
        return float(x)
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, complex):
        return [x.real, x.imag]
    raise TypeError(f"not JSON serializable: {type(x).__name__}")


def _ticks(lo, hi, log):
    if log:
        return [10.0**k for k in range(math.floor(lo), math.ceil(hi) + 1)]
    step = 10 ** math.floor(math.log10(hi - lo)) if hi > lo else 1.0
    if (hi - lo) / step < 3:
        step /= 2
    first = math.ceil(lo / step) * step
    return [first + i * step for i in range(int((hi - first) / step) + 1)]


def svg_plot(x, series: dict, log_y: bool = False, xlabel: str = "", title: str = "") -> str:
    """Line plot of each named series against x. Non-positive values are dropped on a log axis."""
    x = np.asarray(x, dtype=float)
    colors = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf"]
    pts = {}
    for name, y in series.items():
        y = np.asarray(y, dtype=float)
        ok = np.isfinite(y) & (y > 0 if log_y else True)
        pts[name] = (x[ok], np.log10(y[ok]) if log_y else y[ok])
    allx = np.concatenate([p[0] for p in pts.values()] + [x[:0]])
    ally = np.concatenate([p[1] for p in pts.values()] + [x[:0]])
    if allx.size == 0:
        allx, ally = np.array([0.0, 1.0]), np.array([0.0, 1.0])
    x0, x1 = float(allx.min()), float(allx.max())
    y0, y1 = float(ally.min()), float(ally.max())
    if x1 == x0:
        x1 = x0 + 1
    if y1 == y0:
        y0, y1 = y0 - 0.5, y1 + 0.5

    def sx(v):
        return PAD + (v - x0) / (x1 - x0) * (SVG_W - 2 * PAD)

    def sy(v):
        return SVG_H - PAD - (v - y0) / (y1 - y0) * (SVG_H - 2 * PAD)

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{SVG_W}" height="{SVG_H}" '
           f'viewBox="0 0 {SVG_W} {SVG_H}" font-family="sans-serif" font-size="11">',
           f'<rect width="{SVG_W}" height="{SVG_H}" fill="white"/>',
           f'<line x1="{PAD}" y1="{SVG_H - PAD}" x2="{SVG_W - PAD}" y2="{SVG_H - PAD}" stroke="black"/>',
           f'<line x1="{PAD}" y1="{PAD}" x2="{PAD}" y2="{SVG_H - PAD}" stroke="black"/>']
    for t in _ticks(x0, x1, False):
        out.append(f'<text x="{sx(t):.1f}" y="{SVG_H - PAD + 15}" text-anchor="middle">{t:g}</text>')
    for t in _ticks(y0, y1, log_y):
        v = math.log10(t) if log_y else t
        if y0 <= v <= y1:
            out.append(f'<text x="{PAD - 5}" y="{sy(v) + 4:.1f}" text-anchor="end">{t:g}</text>')
    if xlabel:
        out.append(f'<text x="{SVG_W / 2}" y="{SVG_H - 12}" text-anchor="middle">{xlabel}</text>')
    if title:
        out.append(f'<text x="{SVG_W / 2}" y="20" text-anchor="middle">{title}</text>')
    for i, (name, (px, py)) in enumerate(pts.items()):
        color = colors[i % len(colors)]
        if px.size:
            path = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(px, py))
            out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{path}"/>')
        out.append(f'<text x="{SVG_W - PAD + 5}" y="{PAD + 14 * i}" fill="{color}">{name}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def plot_csv(path, log_y: bool = False, out=None) -> Path:
    """SVG of every column of a CSV against its first column."""
    header, body = read_csv(path)
    target = Path(out) if out else Path(path).with_suffix(".svg")
    series = {h: body[:, i] for i, h in enumerate(header) if i > 0}
    target.write_text(svg_plot(body[:, 0], series, log_y, header[0], Path(path).stem))
    return target
