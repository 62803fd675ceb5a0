"""Deterministic SVG scatterplot: documents as colored dots, topics as
labeled black empty circles with their top words.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# 20 visually distinct fixed colors (tab20 ordering)
PALETTE_COLORS = (
    "#1f77b4", "#aec7e8", "#ff7f0e", "#ffbb78", "#2ca02c",
    "#98df8a", "#d62728", "#ff9896", "#9467bd", "#c5b0d5",
    "#8c564b", "#c49c94", "#e377c2", "#f7b6d2", "#7f7f7f",
    "#c7c7c7", "#bcbd22", "#dbdb8d", "#17becf", "#9edae5",
)

# shapes cycle when there are more labels than colors
MARKER_SHAPES = ("circle", "square", "triangle")

DOC_RADIUS = 2.0
TOPIC_RADIUS = 6.0
MARGIN_FRACTION = 0.05


@dataclass
class ScatterSpec:
    doc_coords: np.ndarray               # N x 2
    labels: list[str]
    topic_coords: np.ndarray             # Z x 2
    topic_words: list[list[str]] = field(default_factory=list)
    width: int = 800
    height: int = 600
    palette: dict[str, str] | None = None
    show_words: bool = False

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ValueError("canvas dimensions must be positive")
        if len(self.doc_coords) == 0:
            raise ValueError("nothing to render: no documents")
        if len(self.doc_coords) != len(self.labels):
            raise ValueError("labels do not match document coordinates")


def assign_palette(labels) -> dict[str, str]:
    """Stable label -> color map; labels sorted, colors cycle past 20."""
    distinct = sorted(set(labels))
    if not distinct:
        raise ValueError("need at least one label")
    return {
        lab: PALETTE_COLORS[i % len(PALETTE_COLORS)] for i, lab in enumerate(distinct)
    }


def _shape_for(label_rank: int) -> str:
    return MARKER_SHAPES[(label_rank // len(PALETTE_COLORS)) % len(MARKER_SHAPES)]


def _fmt(x: float) -> str:
    return f"{x:.3f}"


def _affine_map(points: np.ndarray, width: int, height: int):
    """Uniform scale + translation onto the canvas with a 5% margin.

    Aspect ratio is preserved, so relative distances scale uniformly.
    """
    lo = points.min(axis=0)
    hi = points.max(axis=0)
    span = np.maximum(hi - lo, 1e-12)
    usable_w = width * (1 - 2 * MARGIN_FRACTION)
    usable_h = height * (1 - 2 * MARGIN_FRACTION)
    scale = min(usable_w / span[0], usable_h / span[1])
    center = (lo + hi) / 2.0

    def to_canvas(p):
        x = width / 2.0 + (p[0] - center[0]) * scale
        y = height / 2.0 - (p[1] - center[1]) * scale  # flip y: SVG grows down
        return x, y

    return to_canvas


def _escape(text: str) -> str:
    return (
        text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
        .replace('"', "&quot;")
    )


def _doc_marker(shape: str, x: float, y: float, color: str) -> str:
    r = DOC_RADIUS
    if shape == "circle":
        return (
            f'<circle cx="{_fmt(x)}" cy="{_fmt(y)}" r="{r}" fill="{color}"/>'
        )
    if shape == "square":
        return (
            f'<rect x="{_fmt(x - r)}" y="{_fmt(y - r)}" width="{2 * r}" '
            f'height="{2 * r}" fill="{color}"/>'
        )
    pts = f"{_fmt(x)},{_fmt(y - r)} {_fmt(x - r)},{_fmt(y + r)} {_fmt(x + r)},{_fmt(y + r)}"
    return f'<polygon points="{pts}" fill="{color}"/>'


def render_scatter(spec: ScatterSpec) -> str:
    """Byte-deterministic SVG 1.1 document."""
    palette = spec.palette or assign_palette(spec.labels)
    missing = set(spec.labels) - set(palette)
    if missing:
        raise ValueError(f"palette does not cover labels: {sorted(missing)}")
    label_rank = {lab: i for i, lab in enumerate(sorted(set(spec.labels)))}

    doc = np.asarray(spec.doc_coords, dtype=np.float64)
    topics = np.asarray(spec.topic_coords, dtype=np.float64).reshape(-1, 2)
    all_points = np.vstack([doc, topics]) if len(topics) else doc
    to_canvas = _affine_map(all_points, spec.width, spec.height)

    parts = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{spec.width}" height="{spec.height}" '
        f'viewBox="0 0 {spec.width} {spec.height}">',
        f'<rect width="{spec.width}" height="{spec.height}" fill="white"/>',
        '<g id="documents">',
    ]
    for n in range(len(doc)):
        x, y = to_canvas(doc[n])
        lab = spec.labels[n]
        parts.append(_doc_marker(_shape_for(label_rank[lab]), x, y, palette[lab]))
    parts.append("</g>")

    parts.append('<g id="topics">')
    for z in range(len(topics)):
        x, y = to_canvas(topics[z])
        words = spec.topic_words[z] if z < len(spec.topic_words) else []
        title = _escape(" ".join(words))
        parts.append(
            f'<circle cx="{_fmt(x)}" cy="{_fmt(y)}" r="{TOPIC_RADIUS}" '
            f'fill="none" stroke="black" stroke-width="1.5">'
            f"<title>topic {z}: {title}</title></circle>"
        )
        if spec.show_words and words:
            snippet = _escape(" ".join(words[:3]))
            parts.append(
                f'<text x="{_fmt(x + TOPIC_RADIUS + 2)}" y="{_fmt(y + 4)}" '
                f'font-size="10" font-family="sans-serif">{snippet}</text>'
            )
    parts.append("</g>")
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
