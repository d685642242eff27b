"""Static SVG rendering of drawings."""

from __future__ import annotations

from html import escape

import numpy as np

from .geometry import Drawing, build_index

EDGE_STYLE = 'stroke="#555" stroke-width="1.5"'
HOT_EDGE_STYLE = 'stroke="#d62728" stroke-width="2.5"'
VERTEX_STYLE = 'fill="#1f77b4" stroke="#fff" stroke-width="1"'


def render_svg(d: Drawing, annotations: dict | None = None, size: int = 400, margin: int = 20) -> str:
    """SVG with edges, vertices and a caption line; edges carrying lcr crossings are highlighted."""
    idx = build_index(d)
    pos = d.positions
    lo = pos.min(axis=0)
    span = float(np.max(pos.max(axis=0) - lo)) or 1.0
    scale = (size - 2 * margin) / span
    # flip y so that north points up
    xy = np.c_[(pos[:, 0] - lo[0]) * scale + margin, size - margin - (pos[:, 1] - lo[1]) * scale]
    hot = idx.per_edge == idx.lcr if idx.lcr > 0 else np.zeros(d.graph.m, dtype=bool)
    caption = {"GCN": idx.total, "LCN": idx.lcr, **(annotations or {})}
    text = "  ".join(f"{k}: {v:.2f}" if isinstance(v, float) else f"{k}: {v}" for k, v in caption.items())
    h = size + 24
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{h}" viewBox="0 0 {size} {h}">',
           f'<rect width="{size}" height="{h}" fill="white"/>']
    for i, (u, v) in enumerate(d.graph.edges):
        style = HOT_EDGE_STYLE if hot[i] else EDGE_STYLE
        cls = "edge hot" if hot[i] else "edge"
        out.append(f'<line class="{cls}" x1="{xy[u, 0]:.2f}" y1="{xy[u, 1]:.2f}" '
                   f'x2="{xy[v, 0]:.2f}" y2="{xy[v, 1]:.2f}" {style}/>')
    for v in range(d.graph.n):
        out.append(f'<circle class="vertex" cx="{xy[v, 0]:.2f}" cy="{xy[v, 1]:.2f}" r="4" {VERTEX_STYLE}/>')
    out.append(f'<text x="{margin}" y="{size + 16}" font-family="sans-serif" font-size="12">{escape(text)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
