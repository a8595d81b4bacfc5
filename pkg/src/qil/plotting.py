"""Learning-curve aggregation and standalone SVG line plots.

Plots consume only curve CSVs: rows are grouped by ``seed`` (if present) and
the chosen metric is averaged across seeds at each iteration.
"""

from __future__ import annotations

import csv
import html
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf"]


@dataclass
class Series:
    label: str
    x: np.ndarray
    mean: np.ndarray
    std: np.ndarray


def read_rows(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def default_metric(rows: list[dict]) -> str:
    """First of the usual metrics that has at least one value."""
    for name in ("eval_return_mean", "return_mean", "entropy", "loss"):
        if any(r.get(name, "") not in ("", None) for r in rows):
            return name
    raise ValueError("no plottable metric in the curve")


def aggregate(rows: list[dict], metric: str, label: str = "") -> Series:
    """Mean and std over seeds of ``metric`` at every iteration where it is set.

    When a metric is sparse (evaluation every k iterations) only the
    iterations with a value are kept; iterations are included only if every
    seed reports them.
    """
    by_seed: dict[str, dict[int, float]] = {}
    for r in rows:
        v = r.get(metric, "")
        if v in ("", None):
            continue
        by_seed.setdefault(r.get("seed", "0"), {})[int(r["iteration"])] = float(v)
    if not by_seed:
        return Series(label, np.zeros(0), np.zeros(0), np.zeros(0))
    common = sorted(set.intersection(*(set(d) for d in by_seed.values())))
    vals = np.array([[d[i] for i in common] for d in by_seed.values()])
    return Series(label, np.array(common, dtype=float), vals.mean(axis=0), vals.std(axis=0))


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / n
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw), default=10 * mag)
    start = math.ceil(lo / step) * step
    return [start + k * step for k in range(int((hi - start) / step + 1e-9) + 1)]


def _fmt(v: float) -> str:
    return f"{v:.4g}"


def line_plot_svg(series: list[Series], title: str = "", xlabel: str = "iteration", ylabel: str = "return",
                  width: int = 640, height: int = 400) -> str:
    """Lines for each series mean with a translucent band of +/- one std."""
    left, right, top, bottom = 70, 150, 36, 50
    pw, ph = width - left - right, height - top - bottom
    xs = np.concatenate([s.x for s in series]) if series else np.zeros(0)
    if xs.size == 0:
        xs = np.array([0.0, 1.0])
        lows = highs = np.array([0.0, 1.0])
    else:
        lows = np.concatenate([s.mean - s.std for s in series])
        highs = np.concatenate([s.mean + s.std for s in series])
    x0, x1 = float(xs.min()), float(xs.max())
    y0, y1 = float(lows.min()), float(highs.max())
    if x1 == x0:
        x1 = x0 + 1
    if y1 == y0:
        y0, y1 = y0 - 1, y1 + 1
    pad = 0.05 * (y1 - y0)
    y0, y1 = y0 - pad, y1 + pad

    def px(x):
        return left + (x - x0) / (x1 - x0) * pw

    def py(y):
        return top + (1 - (y - y0) / (y1 - y0)) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">',
           f'<rect width="{width}" height="{height}" fill="white"/>']
    if title:
        out.append(f'<text x="{left + pw / 2}" y="20" text-anchor="middle" font-size="14">{html.escape(title)}</text>')
    for t in _ticks(y0, y1):
        out.append(f'<line x1="{left}" x2="{left + pw}" y1="{py(t):.2f}" y2="{py(t):.2f}" stroke="#ddd"/>')
        out.append(f'<text x="{left - 6}" y="{py(t) + 4:.2f}" text-anchor="end">{_fmt(t)}</text>')
    for t in _ticks(x0, x1):
        out.append(f'<text x="{px(t):.2f}" y="{top + ph + 18}" text-anchor="middle">{_fmt(t)}</text>')
    out.append(f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>')
    out.append(f'<text x="{left + pw / 2}" y="{height - 10}" text-anchor="middle">{html.escape(xlabel)}</text>')
    out.append(f'<text x="16" y="{top + ph / 2}" text-anchor="middle" '
               f'transform="rotate(-90 16 {top + ph / 2})">{html.escape(ylabel)}</text>')
    for k, s in enumerate(series):
        if s.x.size == 0:
            continue
        c = PALETTE[k % len(PALETTE)]
        upper = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in zip(s.x, s.mean + s.std))
        lower = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in zip(s.x[::-1], (s.mean - s.std)[::-1]))
        out.append(f'<polygon points="{upper} {lower}" fill="{c}" fill-opacity="0.2" stroke="none"/>')
        line = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in zip(s.x, s.mean))
        out.append(f'<polyline points="{line}" fill="none" stroke="{c}" stroke-width="1.5"/>')
        ly = top + 14 + 18 * k
        out.append(f'<line x1="{left + pw + 10}" x2="{left + pw + 30}" y1="{ly}" y2="{ly}" stroke="{c}" stroke-width="2"/>')
        out.append(f'<text x="{left + pw + 35}" y="{ly + 4}">{html.escape(s.label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def plot_csvs(paths, out_path, metric: str | None = None, labels=None, title: str = "") -> str:
    """Overlay one aggregated series per CSV and write the SVG."""
    series = []
    for k, p in enumerate(paths):
        rows = read_rows(p)
        m = metric or default_metric(rows)
        label = labels[k] if labels else Path(p).parent.name
        series.append(aggregate(rows, m, label))
    svg = line_plot_svg(series, title, ylabel=metric or "return")
    Path(out_path).write_text(svg)
    return svg
