"""
SVG learning curves from aggregate CSVs: mean test MSE against cumulative
examples, one polyline per series with a +/- 2 std band behind it.
"""
import csv
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import List, Sequence
from xml.sax.saxutils import escape

from sparsebudget.core.errors import DataError, InvalidArgument

logger = logging.getLogger(__name__)

COLORS = ["#4a90d9", "#d94a4a", "#3a9d5d", "#c68a1d", "#8a4ad9", "#4ab3c6"]


@dataclass
class Series:
    label: str
    x: List[float]
    mean: List[float]
    spread: List[float]  # two standard deviations


def read_aggregate_csv(path) -> Series:
    path = Path(path)
    try:
        with path.open(newline="", encoding="utf-8") as handle:
            rows = list(csv.DictReader(handle))
    except OSError as e:
        raise DataError(f"{path}: {e}") from e
    if not rows:
        raise DataError(f"{path}: aggregate CSV has no data rows")
    x, mean, spread = [], [], []
    for line_number, row in enumerate(rows, start=2):
        try:
            x.append(float(row["cum_examples"]))
            mean.append(float(row["mean_test_mse"]))
            spread.append(float(row["two_std_test_mse"]))
        except (KeyError, TypeError, ValueError):
            raise DataError(f"{path}: malformed aggregate row {line_number}") from None
    label = path.parent.name if path.stem == "aggregate" and path.parent.name else path.stem
    return Series(label=label, x=x, mean=mean, spread=spread)


def _fmt(value: float) -> str:
    return f"{value:.2f}"


def render_svg(series: Sequence[Series], log_y: bool = True) -> str:
    """Self-contained SVG line chart; byte-identical for identical input"""
    margin_left, margin_right, margin_top, margin_bottom = 70, 20, 60, 60
    chart_width, chart_height = 560, 320
    width = margin_left + chart_width + margin_right
    height = margin_top + chart_height + margin_bottom

    lows = [m - s for one in series for m, s in zip(one.mean, one.spread)]
    highs = [m + s for one in series for m, s in zip(one.mean, one.spread)]
    x_max = max(max(one.x) for one in series) or 1.0
    if log_y:
        positive = [m for one in series for m in one.mean if m > 0]
        floor = min(positive) if positive else 1e-12
        y_low = math.log10(max(min(lows), floor / 10))
        y_high = math.log10(max(max(highs), floor))
        transform = lambda v: math.log10(max(v, 10**y_low))  # noqa: E731
    else:
        y_low, y_high = min(0.0, min(lows)), max(highs)
        transform = lambda v: v  # noqa: E731
    if y_high <= y_low:
        y_high = y_low + 1.0

    def px(x: float) -> float:
        return margin_left + x / x_max * chart_width

    def py(v: float) -> float:
        return margin_top + chart_height - (transform(v) - y_low) / (y_high - y_low) * chart_height

    svg = [
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {width} {height}" '
        f'font-family="system-ui, -apple-system, sans-serif">',
        f'  <rect width="{width}" height="{height}" fill="#ffffff"/>',
        f'  <text x="{width / 2}" y="24" text-anchor="middle" font-size="16" font-weight="600" '
        f'fill="#333">Test MSE vs observed examples</text>',
    ]

    num_grid = 5
    for i in range(num_grid + 1):
        level = y_low + i / num_grid * (y_high - y_low)
        y = margin_top + chart_height - i / num_grid * chart_height
        label = f"{10**level:.3g}" if log_y else f"{level:.3g}"
        svg.append(
            f'  <line x1="{margin_left}" y1="{_fmt(y)}" x2="{margin_left + chart_width}" '
            f'y2="{_fmt(y)}" stroke="#e0e0e0" stroke-width="1"/>'
        )
        svg.append(
            f'  <text x="{margin_left - 8}" y="{_fmt(y + 4)}" text-anchor="end" font-size="11" '
            f'fill="#666">{label}</text>'
        )
        x = margin_left + i / num_grid * chart_width
        svg.append(
            f'  <text x="{_fmt(x)}" y="{margin_top + chart_height + 18}" text-anchor="middle" '
            f'font-size="11" fill="#666">{i / num_grid * x_max:.3g}</text>'
        )

    for index, one in enumerate(series):
        color = COLORS[index % len(COLORS)]
        upper = [f"{_fmt(px(x))},{_fmt(py(m + s))}" for x, m, s in zip(one.x, one.mean, one.spread)]
        lower = [f"{_fmt(px(x))},{_fmt(py(m - s))}" for x, m, s in zip(one.x, one.mean, one.spread)]
        band = " ".join(upper + lower[::-1])
        svg.append(f'  <polygon points="{band}" fill="{color}" fill-opacity="0.15" stroke="none"/>')
        points = " ".join(f"{_fmt(px(x))},{_fmt(py(m))}" for x, m in zip(one.x, one.mean))
        svg.append(
            f'  <polyline points="{points}" fill="none" stroke="{color}" stroke-width="2"/>'
        )
        legend_y = margin_top + 8 + index * 16
        legend_x = margin_left + chart_width - 150
        svg.append(
            f'  <rect x="{legend_x}" y="{legend_y}" width="12" height="12" fill="{color}" rx="2"/>'
        )
        svg.append(
            f'  <text x="{legend_x + 16}" y="{legend_y + 10}" font-size="11" '
            f'fill="#333">{escape(one.label)}</text>'
        )

    svg.append(
        f'  <text x="{margin_left + chart_width / 2}" y="{height - 12}" text-anchor="middle" '
        f'font-size="12" fill="#666">Number of observed examples</text>'
    )
    svg.append(
        f'  <text x="15" y="{margin_top + chart_height / 2}" text-anchor="middle" font-size="12" '
        f'fill="#666" transform="rotate(-90, 15, {margin_top + chart_height / 2})">'
        f'Mean test MSE{" (log)" if log_y else ""}</text>'
    )
    svg.append(
        f'  <line x1="{margin_left}" y1="{margin_top}" x2="{margin_left}" '
        f'y2="{margin_top + chart_height}" stroke="#333" stroke-width="1"/>'
    )
    svg.append(
        f'  <line x1="{margin_left}" y1="{margin_top + chart_height}" '
        f'x2="{margin_left + chart_width}" y2="{margin_top + chart_height}" stroke="#333" stroke-width="1"/>'
    )
    svg.append("</svg>")
    return "\n".join(svg) + "\n"


def emit_plot(aggregate_csvs: Sequence, out_path, log_y: bool = True) -> Path:
    """Write one SVG with a series per aggregate CSV"""
    if not aggregate_csvs:
        raise InvalidArgument("plot needs at least one aggregate CSV")
    series = [read_aggregate_csv(path) for path in aggregate_csvs]
    out_path = Path(out_path)
    out_path.write_text(render_svg(series, log_y=log_y), encoding="utf-8")
    logger.info(f"💾 Wrote {out_path} ({len(series)} series)")
    return out_path
