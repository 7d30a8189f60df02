import logging
from html import escape
from pathlib import Path
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np

from fairaudit.exceptions import InvalidParameterError, StorageError
from fairaudit.models.schemas import ConfidenceInterval, QuadrantShares

logger = logging.getLogger(__name__)

WIDTH = 800
HEIGHT = 500
MARGIN_LEFT = 160
MARGIN_RIGHT = 40
MARGIN_TOP = 50
MARGIN_BOTTOM = 60
FALLBACK_BINS = 20

MARKER_COLORS = ["#d62728", "#ff7f0e", "#9467bd", "#2ca02c", "#8c564b"]


class ForestRow(NamedTuple):
    """One line of a forest plot; point and interval are None when not estimable."""

    label: str
    point: Optional[float]
    interval: Optional[ConfidenceInterval]
    note: Optional[str] = None


class SVGBuilder:
    """Accumulates SVG 1.1 elements on a fixed 800 x 500 canvas."""

    def __init__(self, title: str = ""):
        self.parts: List[str] = [
            '<?xml version="1.0" encoding="UTF-8" standalone="no"?>',
            f'<svg version="1.1" xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
            f'viewBox="0 0 {WIDTH} {HEIGHT}">',
            f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="#ffffff"/>',
        ]
        if title:
            self.text(WIDTH / 2, 28, title, css_class="title", anchor="middle", size=18)

    @staticmethod
    def _attrs(extra: Dict[str, object]) -> str:
        return "".join(f' {key}="{escape(str(value))}"' for key, value in extra.items() if value is not None)

    def group_start(self, css_class: str, **extra: object) -> None:
        self.parts.append(f'<g class="{css_class}"{self._attrs(extra)}>')

    def group_end(self) -> None:
        self.parts.append("</g>")

    def line(self, x1: float, y1: float, x2: float, y2: float, css_class: str,
             stroke: str = "#000000", width: float = 1.0, **extra: object) -> None:
        self.parts.append(
            f'<line class="{css_class}" x1="{x1:.2f}" y1="{y1:.2f}" x2="{x2:.2f}" y2="{y2:.2f}" '
            f'stroke="{stroke}" stroke-width="{width:g}"{self._attrs(extra)}/>'
        )

    def rect(self, x: float, y: float, w: float, h: float, css_class: str, fill: str = "#1f77b4") -> None:
        self.parts.append(
            f'<rect class="{css_class}" x="{x:.2f}" y="{y:.2f}" width="{w:.2f}" height="{h:.2f}" fill="{fill}"/>'
        )

    def circle(self, cx: float, cy: float, r: float, css_class: str, fill: str = "#000000") -> None:
        self.parts.append(f'<circle class="{css_class}" cx="{cx:.2f}" cy="{cy:.2f}" r="{r:g}" fill="{fill}"/>')

    def text(self, x: float, y: float, content: str, css_class: str = "label",
             anchor: str = "start", size: int = 12) -> None:
        self.parts.append(
            f'<text class="{css_class}" x="{x:.2f}" y="{y:.2f}" text-anchor="{anchor}" '
            f'font-size="{size}" font-family="sans-serif">{escape(content)}</text>'
        )

    def to_string(self) -> str:
        return "\n".join(self.parts + ["</svg>"]) + "\n"

    def write(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        try:
            path.write_text(self.to_string(), encoding="utf-8")
        except OSError as e:
            logger.error(f"Error writing SVG to {path}: {str(e)}")
            raise StorageError(f"Could not write {path}: {str(e)}")
        logger.debug(f"SVG written to {path}")
        return path


def _scale(lo: float, hi: float, out_lo: float, out_hi: float):
    if hi <= lo:
        lo, hi = lo - 0.5, hi + 0.5
    span = hi - lo

    def to_px(value: float) -> float:
        return out_lo + (value - lo) / span * (out_hi - out_lo)

    return to_px


def _padded(lo: float, hi: float) -> Tuple[float, float]:
    pad = 0.05 * (hi - lo) if hi > lo else 0.5
    return lo - pad, hi + pad


def histogram_edges(values: np.ndarray) -> np.ndarray:
    """
    Bin edges by the Freedman-Diaconis rule.

    A single distinct value gets one bin; data with zero interquartile range
    falls back to a fixed number of bins.
    """
    if np.unique(values).size == 1:
        return np.histogram_bin_edges(values, bins=1)
    q75, q25 = np.percentile(values, [75, 25])
    if q75 - q25 > 0:
        return np.histogram_bin_edges(values, bins="fd")
    return np.histogram_bin_edges(values, bins=FALLBACK_BINS)


def emit_histogram_svg(
    values: Sequence[float],
    alpha_lines: Sequence[Tuple[float, float]],
    path: Union[str, Path],
    title: str = "",
) -> Path:
    """
    Histogram of metric differences with confidence-interval markers.

    Args:
        values: Differences (proportions) to bin
        alpha_lines: (alpha, half-width) pairs; each draws a marker at -half-width and +half-width
        path: Destination file
        title: Chart title

    Returns:
        The written path
    """
    data = np.asarray(values, dtype=np.float64)
    if data.size < 1:
        raise InvalidParameterError("a histogram needs at least one value")
    edges = histogram_edges(data)
    counts, edges = np.histogram(data, bins=edges)

    half_widths = [abs(hw) for _, hw in alpha_lines]
    lo = min([edges[0]] + [-hw for hw in half_widths])
    hi = max([edges[-1]] + half_widths)
    lo, hi = _padded(lo, hi)
    x_px = _scale(lo, hi, MARGIN_LEFT, WIDTH - MARGIN_RIGHT)
    top = int(counts.max()) or 1
    y_px = _scale(0.0, float(top), HEIGHT - MARGIN_BOTTOM, MARGIN_TOP)

    svg = SVGBuilder(title)
    svg.group_start("bars")
    for count, left, right in zip(counts, edges[:-1], edges[1:]):
        x0, x1 = x_px(left), x_px(right)
        y = y_px(float(count))
        svg.rect(x0, y, max(x1 - x0, 0.5), HEIGHT - MARGIN_BOTTOM - y, "bar")
    svg.group_end()

    svg.line(MARGIN_LEFT, HEIGHT - MARGIN_BOTTOM, WIDTH - MARGIN_RIGHT, HEIGHT - MARGIN_BOTTOM, "axis")
    svg.line(MARGIN_LEFT, MARGIN_TOP, MARGIN_LEFT, HEIGHT - MARGIN_BOTTOM, "axis")
    for value in (lo, 0.0, hi):
        svg.text(x_px(value), HEIGHT - MARGIN_BOTTOM + 20, f"{100 * value:.1f}%", anchor="middle")
    svg.text(MARGIN_LEFT - 8, MARGIN_TOP + 4, str(top), anchor="end")
    svg.text(MARGIN_LEFT - 8, HEIGHT - MARGIN_BOTTOM, "0", anchor="end")

    for i, (alpha, half_width) in enumerate(alpha_lines):
        color = MARKER_COLORS[i % len(MARKER_COLORS)]
        svg.group_start("alpha-markers", **{"data-alpha": f"{alpha:g}"})
        for x in (-abs(half_width), abs(half_width)):
            svg.line(x_px(x), MARGIN_TOP, x_px(x), HEIGHT - MARGIN_BOTTOM, "alpha-marker",
                     stroke=color, width=1.5, **{"data-offset": f"{x:.6g}"})
        svg.text(x_px(abs(half_width)) + 4, MARGIN_TOP + 14 * (i + 1), f"α={alpha:g}", css_class="alpha-label")
        svg.group_end()
    return svg.write(path)


def emit_forest_svg(rows: Sequence[ForestRow], path: Union[str, Path], title: str = "") -> Path:
    """
    Forest plot: one point-with-whiskers line per row and a zero reference line.

    Args:
        rows: Rows in display order, top to bottom
        path: Destination file
        title: Chart title

    Returns:
        The written path
    """
    if not rows:
        raise InvalidParameterError("a forest plot needs at least one row")
    bounds = [0.0]
    for row in rows:
        if row.interval is not None:
            bounds += [row.interval.lower, row.interval.upper]
        if row.point is not None:
            bounds.append(row.point)
    lo, hi = _padded(min(bounds), max(bounds))
    x_px = _scale(lo, hi, MARGIN_LEFT, WIDTH - MARGIN_RIGHT)
    step = (HEIGHT - MARGIN_TOP - MARGIN_BOTTOM) / len(rows)

    svg = SVGBuilder(title)
    svg.line(x_px(0.0), MARGIN_TOP, x_px(0.0), HEIGHT - MARGIN_BOTTOM, "zero-line", stroke="#888888")
    for i, row in enumerate(rows):
        y = MARGIN_TOP + step * (i + 0.5)
        svg.group_start("forest-row", **{"data-label": row.label})
        svg.text(MARGIN_LEFT - 8, y + 4, row.label, anchor="end")
        if row.point is None or row.interval is None:
            svg.text(x_px(0.0) + 6, y + 4, f"not estimable: {row.note or 'no estimate'}", css_class="not-estimable")
        else:
            lower, upper = row.interval.lower, row.interval.upper
            if upper > lower:
                svg.line(x_px(lower), y, x_px(upper), y, "whisker", width=1.5)
                for x in (lower, upper):
                    svg.line(x_px(x), y - 5, x_px(x), y + 5, "whisker-cap", width=1.5)
            fill = "#d62728" if row.interval.excludes_zero else "#1f77b4"
            svg.circle(x_px(row.point), y, 4, "point", fill=fill)
        svg.group_end()
    svg.line(MARGIN_LEFT, HEIGHT - MARGIN_BOTTOM, WIDTH - MARGIN_RIGHT, HEIGHT - MARGIN_BOTTOM, "axis")
    for value in (lo, 0.0, hi):
        svg.text(x_px(value), HEIGHT - MARGIN_BOTTOM + 20, f"{value:.3f}", anchor="middle")
    return svg.write(path)


def emit_scatter_svg(
    x_values: Sequence[float],
    y_values: Sequence[float],
    shares: QuadrantShares,
    path: Union[str, Path],
    title: str = "",
) -> Path:
    """
    Scatter of two metric differences per attribute with quadrant percentages.

    Args:
        x_values: Horizontal differences, one per attribute
        y_values: Vertical differences, aligned with x_values
        shares: Quadrant percentages for the same attributes
        path: Destination file
        title: Chart title

    Returns:
        The written path
    """
    xs = np.asarray(x_values, dtype=np.float64)
    ys = np.asarray(y_values, dtype=np.float64)
    if xs.shape != ys.shape:
        raise InvalidParameterError("scatter coordinates must have the same length")
    x_lo, x_hi = _padded(min(xs.min(initial=0.0), 0.0), max(xs.max(initial=0.0), 0.0))
    y_lo, y_hi = _padded(min(ys.min(initial=0.0), 0.0), max(ys.max(initial=0.0), 0.0))
    x_px = _scale(x_lo, x_hi, MARGIN_LEFT, WIDTH - MARGIN_RIGHT)
    y_px = _scale(y_lo, y_hi, HEIGHT - MARGIN_BOTTOM, MARGIN_TOP)

    svg = SVGBuilder(title)
    svg.line(x_px(0.0), MARGIN_TOP, x_px(0.0), HEIGHT - MARGIN_BOTTOM, "axis")
    svg.line(MARGIN_LEFT, y_px(0.0), WIDTH - MARGIN_RIGHT, y_px(0.0), "axis")
    svg.group_start("points")
    for x, y in zip(xs, ys):
        svg.circle(x_px(float(x)), y_px(float(y)), 2.5, "point", fill="#1f77b4")
    svg.group_end()

    corners = [
        (WIDTH - MARGIN_RIGHT - 4, MARGIN_TOP + 16, "end", shares.upper_right),
        (MARGIN_LEFT + 4, MARGIN_TOP + 16, "start", shares.upper_left),
        (MARGIN_LEFT + 4, HEIGHT - MARGIN_BOTTOM - 8, "start", shares.lower_left),
        (WIDTH - MARGIN_RIGHT - 4, HEIGHT - MARGIN_BOTTOM - 8, "end", shares.lower_right),
    ]
    for x, y, anchor, share in corners:
        svg.text(x, y, f"{share:.1f}%", css_class="quadrant-share", anchor=anchor, size=14)
    svg.text((MARGIN_LEFT + WIDTH - MARGIN_RIGHT) / 2, HEIGHT - 16, shares.x_metric.value, anchor="middle")
    svg.text(16, MARGIN_TOP - 12, shares.y_metric.value)
    return svg.write(path)
