"""Self-contained SVG scatter plots for sweep reports.

No plotting dependency: the renderer writes a standalone SVG with axes,
tick labels, one circle marker per report row, and a color legend keyed by
grid point.
"""

from __future__ import annotations

from pathlib import Path

from .sweep import SweepReport

__all__ = ["emit_scatter"]

_PALETTE = (
    "#2563eb",
    "#dc2626",
    "#16a34a",
    "#9333ea",
    "#ea580c",
    "#0f766e",
    "#ca8a04",
    "#be185d",
)

_WIDTH, _HEIGHT = 720, 480
_MARGIN_LEFT, _MARGIN_RIGHT, _MARGIN_TOP, _MARGIN_BOTTOM = 70, 170, 30, 55


def _escape(text: str) -> str:
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def emit_scatter(report: SweepReport, x_column: str, y_column: str, path) -> None:
    """Render one marker per row, colored by grid point, to a standalone SVG."""
    columns = report.columns()
    for column in (x_column, y_column):
        if column not in columns:
            raise ValueError(f"unknown column '{column}' (have: {', '.join(columns)})")
    points = []
    for row in report.rows:
        x, y = row.value(x_column), row.value(y_column)
        if x is None or y is None:
            continue
        points.append((float(x), float(y), f"eta={row.eta:g} M={row.batch} it={row.iters}"))
    if not points:
        raise ValueError("report has no plottable rows")

    xs = [p[0] for p in points]
    ys = [p[1] for p in points]
    x_min, x_max = min(xs), max(xs)
    y_min, y_max = min(ys), max(ys)
    if x_max == x_min:
        x_min, x_max = x_min - 0.5, x_max + 0.5
    if y_max == y_min:
        y_min, y_max = y_min - 0.5, y_max + 0.5
    x_pad = 0.05 * (x_max - x_min)
    y_pad = 0.05 * (y_max - y_min)
    x_min, x_max = x_min - x_pad, x_max + x_pad
    y_min, y_max = y_min - y_pad, y_max + y_pad

    plot_w = _WIDTH - _MARGIN_LEFT - _MARGIN_RIGHT
    plot_h = _HEIGHT - _MARGIN_TOP - _MARGIN_BOTTOM

    def map_x(v):
        return _MARGIN_LEFT + (v - x_min) / (x_max - x_min) * plot_w

    def map_y(v):
        return _MARGIN_TOP + (1.0 - (v - y_min) / (y_max - y_min)) * plot_h

    groups = []
    for _, _, label in points:
        if label not in groups:
            groups.append(label)
    color_of = {label: _PALETTE[i % len(_PALETTE)] for i, label in enumerate(groups)}

    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_WIDTH}" height="{_HEIGHT}" '
        f'viewBox="0 0 {_WIDTH} {_HEIGHT}">',
        f'<rect x="0" y="0" width="{_WIDTH}" height="{_HEIGHT}" fill="#ffffff"/>',
        f'<rect x="{_MARGIN_LEFT}" y="{_MARGIN_TOP}" width="{plot_w}" height="{plot_h}" '
        f'fill="#f8fafc" stroke="#94a3b8"/>',
    ]

    lines.append('<g font-family="monospace" font-size="11" fill="#334155">')
    for k in range(5):
        frac = k / 4
        x_val = x_min + frac * (x_max - x_min)
        y_val = y_min + frac * (y_max - y_min)
        gx = _MARGIN_LEFT + frac * plot_w
        gy = _MARGIN_TOP + (1.0 - frac) * plot_h
        lines.append(
            f'<line x1="{gx:.2f}" y1="{_MARGIN_TOP}" x2="{gx:.2f}" '
            f'y2="{_MARGIN_TOP + plot_h}" stroke="#e2e8f0"/>'
        )
        lines.append(
            f'<line x1="{_MARGIN_LEFT}" y1="{gy:.2f}" x2="{_MARGIN_LEFT + plot_w}" '
            f'y2="{gy:.2f}" stroke="#e2e8f0"/>'
        )
        lines.append(
            f'<text x="{gx:.2f}" y="{_MARGIN_TOP + plot_h + 16}" '
            f'text-anchor="middle">{x_val:.4g}</text>'
        )
        lines.append(
            f'<text x="{_MARGIN_LEFT - 6}" y="{gy + 4:.2f}" text-anchor="end">{y_val:.4g}</text>'
        )
    lines.append(
        f'<text x="{_MARGIN_LEFT + plot_w / 2:.2f}" y="{_HEIGHT - 14}" '
        f'text-anchor="middle">{_escape(x_column)}</text>'
    )
    lines.append(
        f'<text x="16" y="{_MARGIN_TOP + plot_h / 2:.2f}" text-anchor="middle" '
        f'transform="rotate(-90 16 {_MARGIN_TOP + plot_h / 2:.2f})">{_escape(y_column)}</text>'
    )
    lines.append("</g>")

    lines.append("<g>")
    for x, y, label in points:
        lines.append(
            f'<circle class="pt" cx="{map_x(x):.2f}" cy="{map_y(y):.2f}" r="3.5" '
            f'fill="{color_of[label]}" fill-opacity="0.8"/>'
        )
    lines.append("</g>")

    legend_x = _MARGIN_LEFT + plot_w + 14
    lines.append('<g font-family="monospace" font-size="11" fill="#0f172a">')
    for i, label in enumerate(groups):
        y = _MARGIN_TOP + 12 + i * 16
        lines.append(
            f'<rect x="{legend_x}" y="{y - 9}" width="10" height="10" fill="{color_of[label]}"/>'
        )
        lines.append(f'<text x="{legend_x + 14}" y="{y}">{_escape(label)}</text>')
    lines.append("</g>")
    lines.append("</svg>")

    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
