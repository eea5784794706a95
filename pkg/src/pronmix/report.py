"""Label histograms and their CSV/SVG renderings for distribution-shift reports."""

from __future__ import annotations

import numpy as np

DEFAULT_EDGES = np.linspace(0.0, 2.0, 9)  # 8 bins of width 0.25
SERIES_COLORS = ("#4878cf", "#e88ab1", "#8a5fc9", "#61b861")


def label_histogram(values, edges=DEFAULT_EDGES) -> np.ndarray:
    """Counts per bin; the last bin includes its right edge."""
    counts, _ = np.histogram(np.asarray(values, dtype=np.float64), bins=edges)
    return counts


def histogram_csv(edges, series: dict) -> str:
    """One row per bin with a count column per series, deterministic layout."""
    names = list(series)
    lines = ["bin_lo,bin_hi," + ",".join(names)]
    for i in range(len(edges) - 1):
        counts = ",".join(str(int(series[n][i])) for n in names)
        lines.append(f"{edges[i]!r},{edges[i + 1]!r},{counts}")
    return "\n".join(lines) + "\n"


def histogram_svg(edges, series: dict, title: str = "") -> str:
    """Grouped bar chart of the same bin data, no plotting dependency."""
    width, height = 640, 360
    left, right, top, bottom = 56, 16, 34, 46
    plot_w = width - left - right
    plot_h = height - top - bottom
    names = list(series)
    n_bins = len(edges) - 1
    peak = max(1, max(int(max(series[n])) for n in names))
    group_w = plot_w / n_bins
    bar_w = group_w * 0.8 / max(1, len(names))

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{left}" y="20" font-family="sans-serif" font-size="13">{title}</text>',
    ]
    for s, name in enumerate(names):
        color = SERIES_COLORS[s % len(SERIES_COLORS)]
        for i in range(n_bins):
            count = int(series[name][i])
            bar_h = plot_h * count / peak
            x = left + i * group_w + group_w * 0.1 + s * bar_w
            y = top + plot_h - bar_h
            parts.append(
                f'<rect x="{x:.2f}" y="{y:.2f}" width="{bar_w:.2f}" height="{bar_h:.2f}" '
                f'fill="{color}"><title>{name} [{edges[i]:g},{edges[i + 1]:g}]: {count}</title></rect>')
        legend_x = left + 8 + s * 150
        parts.append(f'<rect x="{legend_x}" y="{top - 12}" width="10" height="10" fill="{color}"/>')
        parts.append(
            f'<text x="{legend_x + 14}" y="{top - 3}" font-family="sans-serif" font-size="11">{name}</text>')
    axis_y = top + plot_h
    parts.append(f'<line x1="{left}" y1="{axis_y}" x2="{left + plot_w}" y2="{axis_y}" stroke="black"/>')
    parts.append(f'<line x1="{left}" y1="{top}" x2="{left}" y2="{axis_y}" stroke="black"/>')
    for i in range(n_bins + 1):
        x = left + i * group_w
        parts.append(
            f'<text x="{x:.2f}" y="{axis_y + 16}" font-family="sans-serif" font-size="10" '
            f'text-anchor="middle">{edges[i]:g}</text>')
    parts.append(
        f'<text x="{left - 8}" y="{top + 4}" font-family="sans-serif" font-size="10" '
        f'text-anchor="end">{peak}</text>')
    parts.append(
        f'<text x="{left - 8}" y="{axis_y}" font-family="sans-serif" font-size="10" '
        f'text-anchor="end">0</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def render_text_histogram(edges, counts, width: int = 40) -> str:
    """Quick console view of one histogram."""
    peak = max(1, int(max(counts)))
    lines = []
    for i, c in enumerate(counts):
        bar = "#" * int(round(width * int(c) / peak))
        lines.append(f"[{edges[i]:4.2f},{edges[i + 1]:4.2f}] {int(c):6d} {bar}")
    return "\n".join(lines)
