"""Deterministic SVG report rendering for recorded metrics.

Figures are hand-built SVG (no raster backend), so report bytes are stable
and diffable; every plot ships with the underlying numbers in CSV.  Report
directory layout::

    <dir>/summary.csv   mean(std)-style summary table
    <dir>/values.csv    raw recorded values (export_table format)
    <dir>/{box,violin,scatter,trajectory,sk,a12}.svg
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from absakit.metrics import (
    MetricRecorder,
    a12,
    export_table,
    scott_knott,
    summarize,
    write_summary_csv,
)

PLOT_KINDS = ("box", "violin", "scatter", "trajectory", "sk", "a12")

_PALETTE = ("#4c78a8", "#f58518", "#54a24b", "#e45756", "#72b7b2", "#b279a2", "#9d755d")

_PANEL_W = 420
_PANEL_H = 220
_MARGIN = 46


class PlotError(ValueError):
    pass


def _fmt(value: float) -> str:
    return f"{value:.2f}"


@dataclass
class _Scale:
    lo: float
    hi: float
    top: float
    bottom: float

    def y(self, value: float) -> float:
        if self.hi == self.lo:
            return (self.top + self.bottom) / 2
        fraction = (value - self.lo) / (self.hi - self.lo)
        return self.bottom - fraction * (self.bottom - self.top)


def _panel_scale(values: Sequence[float], offset_y: float) -> _Scale:
    lo, hi = min(values), max(values)
    if hi == lo:
        lo, hi = lo - 0.5, hi + 0.5
    pad = 0.05 * (hi - lo)
    return _Scale(lo - pad, hi + pad, offset_y + 18, offset_y + _PANEL_H - 30)


def _svg_header(width: int, height: int) -> list[str]:
    return [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
    ]


def _text(x: float, y: float, content: str, anchor: str = "middle", size: int = 11) -> str:
    safe = content.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
    return f'<text x="{_fmt(x)}" y="{_fmt(y)}" text-anchor="{anchor}" font-size="{size}">{safe}</text>'


def _axis(scale: _Scale, offset_y: float, label: str) -> list[str]:
    parts = [
        f'<line x1="{_MARGIN}" y1="{_fmt(scale.top)}" x2="{_MARGIN}" '
        f'y2="{_fmt(scale.bottom)}" stroke="#333"/>',
        f'<line x1="{_MARGIN}" y1="{_fmt(scale.bottom)}" x2="{_PANEL_W - 12}" '
        f'y2="{_fmt(scale.bottom)}" stroke="#333"/>',
        _text(_MARGIN - 6, scale.top + 4, _fmt(scale.hi), anchor="end", size=9),
        _text(_MARGIN - 6, scale.bottom + 4, _fmt(scale.lo), anchor="end", size=9),
        _text(_PANEL_W / 2, offset_y + 14, label),
    ]
    return parts


def _groups(recorder: MetricRecorder) -> dict[str, list[tuple[str, tuple[float, ...]]]]:
    """metric name -> [(trial name, values)] in recording order."""
    grouped: dict[str, list[tuple[str, tuple[float, ...]]]] = {}
    for series in recorder.series():
        grouped.setdefault(series.metric_name, []).append((series.trial_name, series.values))
    return grouped


def _x_positions(count: int) -> list[float]:
    usable = _PANEL_W - _MARGIN - 30
    step = usable / max(count, 1)
    return [_MARGIN + step * (i + 0.5) for i in range(count)]


def _finish(parts: list[str]) -> str:
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _panels(recorder: MetricRecorder, draw_panel) -> str:
    grouped = _groups(recorder)
    if not grouped:
        raise PlotError("no recorded data to plot")
    height = _PANEL_H * len(grouped)
    parts = _svg_header(_PANEL_W, height)
    for panel, (metric, groups) in enumerate(sorted(grouped.items())):
        offset = panel * _PANEL_H
        values = [v for _, vals in groups for v in vals]
        scale = _panel_scale(values, offset)
        parts.extend(_axis(scale, offset, metric))
        draw_panel(parts, groups, scale)
        positions = _x_positions(len(groups))
        for x, (name, _) in zip(positions, groups):
            parts.append(_text(x, scale.bottom + 14, name, size=9))
    return _finish(parts)


def render_box(recorder: MetricRecorder, no_overlap: bool = False) -> str:
    def draw(parts, groups, scale):
        positions = _x_positions(len(groups))
        for i, (x, (_, values)) in enumerate(zip(positions, groups)):
            if no_overlap:
                x += (i % 2) * 6 - 3
            stats = summarize(values)
            q1 = stats.median - stats.iqr / 2
            q3 = stats.median + stats.iqr / 2
            color = _PALETTE[i % len(_PALETTE)]
            half = 16
            parts.append(
                f'<line x1="{_fmt(x)}" y1="{_fmt(scale.y(stats.min))}" x2="{_fmt(x)}" '
                f'y2="{_fmt(scale.y(stats.max))}" stroke="{color}"/>'
            )
            parts.append(
                f'<rect x="{_fmt(x - half)}" y="{_fmt(scale.y(q3))}" width="{2 * half}" '
                f'height="{_fmt(max(1.0, scale.y(q1) - scale.y(q3)))}" fill="{color}" '
                f'fill-opacity="0.5" stroke="{color}"/>'
            )
            parts.append(
                f'<line x1="{_fmt(x - half)}" y1="{_fmt(scale.y(stats.median))}" '
                f'x2="{_fmt(x + half)}" y2="{_fmt(scale.y(stats.median))}" stroke="#222"/>'
            )

    return _panels(recorder, draw)


def _density(values: Sequence[float], points: int = 41) -> list[tuple[float, float]]:
    """Gaussian KDE sampled across the value range (Silverman bandwidth)."""
    stats = summarize(values)
    spread = min(stats.std, stats.iqr / 1.34) if stats.iqr > 0 else stats.std
    bandwidth = 0.9 * spread * len(values) ** -0.2 if spread > 0 else 0.1
    lo = stats.min - 2 * bandwidth
    hi = stats.max + 2 * bandwidth
    step = (hi - lo) / (points - 1)
    curve = []
    for i in range(points):
        x = lo + i * step
        density = sum(
            math.exp(-0.5 * ((x - v) / bandwidth) ** 2) for v in values
        ) / (len(values) * bandwidth * math.sqrt(2 * math.pi))
        curve.append((x, density))
    return curve


def render_violin(recorder: MetricRecorder, no_overlap: bool = False) -> str:
    def draw(parts, groups, scale):
        positions = _x_positions(len(groups))
        for i, (x, (_, values)) in enumerate(zip(positions, groups)):
            if no_overlap:
                x += (i % 2) * 6 - 3
            color = _PALETTE[i % len(_PALETTE)]
            curve = _density(values)
            peak = max(d for _, d in curve) or 1.0
            width = 18
            right = [(x + width * d / peak, scale.y(v)) for v, d in curve]
            left = [(x - width * d / peak, scale.y(v)) for v, d in reversed(curve)]
            path = " ".join(f"{_fmt(px)},{_fmt(py)}" for px, py in right + left)
            parts.append(
                f'<polygon points="{path}" fill="{color}" fill-opacity="0.5" stroke="{color}"/>'
            )

    return _panels(recorder, draw)


def render_scatter(recorder: MetricRecorder, no_overlap: bool = False) -> str:
    def draw(parts, groups, scale):
        positions = _x_positions(len(groups))
        for i, (x, (_, values)) in enumerate(zip(positions, groups)):
            color = _PALETTE[i % len(_PALETTE)]
            for j, value in enumerate(values):
                # deterministic horizontal spread, wider when no_overlap
                spread = 12 if no_overlap else 8
                dx = ((j * 7) % (2 * spread + 1)) - spread
                parts.append(
                    f'<circle cx="{_fmt(x + dx)}" cy="{_fmt(scale.y(value))}" r="2.5" '
                    f'fill="{color}" fill-opacity="0.8"/>'
                )

    return _panels(recorder, draw)


def render_trajectory(recorder: MetricRecorder) -> str:
    def draw(parts, groups, scale):
        usable = _PANEL_W - _MARGIN - 30
        for i, (name, values) in enumerate(groups):
            color = _PALETTE[i % len(_PALETTE)]
            if len(values) == 1:
                xs = [_MARGIN + usable / 2]
            else:
                xs = [_MARGIN + usable * j / (len(values) - 1) for j in range(len(values))]
            points = " ".join(
                f"{_fmt(x)},{_fmt(scale.y(v))}" for x, v in zip(xs, values)
            )
            parts.append(f'<polyline points="{points}" fill="none" stroke="{color}"/>')

    grouped = _groups(recorder)
    if not grouped:
        raise PlotError("no recorded data to plot")
    height = _PANEL_H * len(grouped)
    parts = _svg_header(_PANEL_W, height)
    for panel, (metric, groups) in enumerate(sorted(grouped.items())):
        offset = panel * _PANEL_H
        values = [v for _, vals in groups for v in vals]
        scale = _panel_scale(values, offset)
        parts.extend(_axis(scale, offset, f"{metric} (trajectory)"))
        draw(parts, groups, scale)
        for i, (name, _) in enumerate(groups):
            parts.append(
                f'<rect x="{_PANEL_W - 130}" y="{_fmt(offset + 20 + i * 13)}" width="9" height="9" '
                f'fill="{_PALETTE[i % len(_PALETTE)]}"/>'
            )
            parts.append(_text(_PANEL_W - 116, offset + 28 + i * 13, name, anchor="start", size=9))
    return _finish(parts)


def render_scott_knott(recorder: MetricRecorder, alpha: float = 0.05) -> str:
    def draw(parts, groups, scale):
        clusters = scott_knott([(name, list(values)) for name, values in groups], alpha=alpha)
        rank_of = {name: r for r, cluster in enumerate(clusters) for name in cluster}
        ordered = [name for cluster in clusters for name in cluster]
        by_name = dict(groups)
        positions = _x_positions(len(ordered))
        for x, name in zip(positions, ordered):
            values = by_name[name]
            stats = summarize(values)
            color = _PALETTE[rank_of[name] % len(_PALETTE)]
            parts.append(
                f'<line x1="{_fmt(x)}" y1="{_fmt(scale.y(stats.mean - stats.std))}" '
                f'x2="{_fmt(x)}" y2="{_fmt(scale.y(stats.mean + stats.std))}" '
                f'stroke="{color}" stroke-width="2"/>'
            )
            parts.append(
                f'<circle cx="{_fmt(x)}" cy="{_fmt(scale.y(stats.mean))}" r="4" fill="{color}"/>'
            )
            parts.append(_text(x, scale.top - 4, f"rank {rank_of[name] + 1}", size=8))

    grouped = _groups(recorder)
    if not grouped:
        raise PlotError("no recorded data to plot")
    height = _PANEL_H * len(grouped)
    parts = _svg_header(_PANEL_W, height)
    for panel, (metric, groups) in enumerate(sorted(grouped.items())):
        offset = panel * _PANEL_H
        values = [v for _, vals in groups for v in vals]
        scale = _panel_scale(values, offset)
        parts.extend(_axis(scale, offset, f"{metric} (Scott-Knott ranks)"))
        draw(parts, groups, scale)
        clusters = scott_knott([(n, list(v)) for n, v in groups], alpha=alpha)
        ordered = [name for cluster in clusters for name in cluster]
        for x, name in zip(_x_positions(len(ordered)), ordered):
            parts.append(_text(x, scale.bottom + 14, name, size=9))
    return _finish(parts)


def render_a12(recorder: MetricRecorder) -> str:
    """Bar chart of A12(reference, other) per metric; the reference is the
    first recorded trial."""
    grouped = _groups(recorder)
    if not grouped:
        raise PlotError("no recorded data to plot")
    height = _PANEL_H * len(grouped)
    parts = _svg_header(_PANEL_W, height)
    for panel, (metric, groups) in enumerate(sorted(grouped.items())):
        offset = panel * _PANEL_H
        scale = _Scale(0.0, 1.0, offset + 18, offset + _PANEL_H - 30)
        reference_name, reference = groups[0]
        others = groups[1:] or groups
        parts.extend(_axis(scale, offset, f"{metric}: A12({reference_name}, *)"))
        mid = scale.y(0.5)
        parts.append(
            f'<line x1="{_MARGIN}" y1="{_fmt(mid)}" x2="{_PANEL_W - 12}" y2="{_fmt(mid)}" '
            f'stroke="#999" stroke-dasharray="4 3"/>'
        )
        positions = _x_positions(len(others))
        for i, (x, (name, values)) in enumerate(zip(positions, others)):
            effect = a12(list(reference), list(values))
            color = _PALETTE[i % len(_PALETTE)]
            top = scale.y(effect)
            parts.append(
                f'<rect x="{_fmt(x - 12)}" y="{_fmt(top)}" width="24" '
                f'height="{_fmt(max(1.0, scale.bottom - top))}" fill="{color}" fill-opacity="0.7"/>'
            )
            parts.append(_text(x, top - 3, _fmt(effect), size=8))
            parts.append(_text(x, scale.bottom + 14, name, size=9))
    return _finish(parts)


_RENDERERS = {
    "box": render_box,
    "violin": render_violin,
    "scatter": render_scatter,
    "trajectory": render_trajectory,
    "sk": render_scott_knott,
    "a12": render_a12,
}


def render(
    recorder: MetricRecorder,
    report_dir: str | Path,
    kinds: Sequence[str] = PLOT_KINDS,
    no_overlap: bool = False,
    alpha: float = 0.05,
) -> list[Path]:
    """Write the report: one self-contained SVG per requested kind plus the
    summary and raw-value CSVs."""
    if recorder.empty:
        raise PlotError("no recorded data to render")
    unknown = [kind for kind in kinds if kind not in _RENDERERS]
    if unknown:
        raise PlotError(f"unknown plot kinds: {unknown}")
    directory = Path(report_dir)
    directory.mkdir(parents=True, exist_ok=True)
    written = [
        write_summary_csv(recorder, directory / "summary.csv"),
        export_table(recorder, directory / "values.csv"),
    ]
    for kind in kinds:
        if kind in ("box", "violin", "scatter"):
            document = _RENDERERS[kind](recorder, no_overlap=no_overlap)
        elif kind == "sk":
            document = render_scott_knott(recorder, alpha=alpha)
        else:
            document = _RENDERERS[kind](recorder)
        path = directory / f"{kind}.svg"
        path.write_text(document, encoding="utf-8")
        written.append(path)
    return written
