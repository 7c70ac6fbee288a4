"""Static SVG heatmaps of lattice fields with an embedded linear colour scale."""

from __future__ import annotations

from html import escape

import numpy as np

# viridis anchor colours; intermediate values are interpolated linearly
_ANCHORS = np.array(
    [
        [68, 1, 84],
        [59, 82, 139],
        [33, 145, 140],
        [94, 201, 98],
        [253, 231, 37],
    ],
    dtype=float,
)


def _colour(t: float) -> str:
    t = min(max(t, 0.0), 1.0) * (len(_ANCHORS) - 1)
    k = min(int(t), len(_ANCHORS) - 2)
    rgb = _ANCHORS[k] + (t - k) * (_ANCHORS[k + 1] - _ANCHORS[k])
    return "#{:02x}{:02x}{:02x}".format(*np.rint(rgb).astype(int))


def heatmap_svg(values: np.ndarray, title: str, cell: int = 4) -> str:
    """SVG document drawing ``values[i, j]`` with x to the right and y upwards.

    NaN and infinite cells are left blank.
    """
    v = np.asarray(values, dtype=float)
    nx, ny = v.shape
    finite = np.isfinite(v)
    lo = float(v[finite].min()) if finite.any() else 0.0
    hi = float(v[finite].max()) if finite.any() else 1.0
    span = hi - lo if hi > lo else 1.0
    width, height = nx * cell, ny * cell
    bar_x = width + 10
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width + 90}" height="{height + 30}" '
        f'viewBox="0 0 {width + 90} {height + 30}">',
        f'<text x="0" y="14" font-size="12" font-family="sans-serif">{escape(title)}</text>',
        '<g transform="translate(0,20)" shape-rendering="crispEdges">',
    ]
    for i in range(nx):
        for j in range(ny):
            if finite[i, j]:
                c = _colour((v[i, j] - lo) / span)
                parts.append(f'<rect x="{i * cell}" y="{(ny - 1 - j) * cell}" width="{cell}" height="{cell}" fill="{c}"/>')
    steps = 32
    for k in range(steps):
        c = _colour(1.0 - k / (steps - 1))
        y = k * height / steps
        parts.append(f'<rect x="{bar_x}" y="{y:.2f}" width="12" height="{height / steps + 0.5:.2f}" fill="{c}"/>')
    parts.append("</g>")
    parts.append(f'<text x="{bar_x + 16}" y="{28}" font-size="10" font-family="sans-serif">{hi:.6g}</text>')
    parts.append(f'<text x="{bar_x + 16}" y="{height + 18}" font-size="10" font-family="sans-serif">{lo:.6g}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
