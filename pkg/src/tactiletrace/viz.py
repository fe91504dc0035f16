"""Frame and trace rendering: ASCII heatmaps and SVG overlays."""

from __future__ import annotations

import math
from xml.sax.saxutils import escape

import numpy as np

from .frame_codec import Frame
from .hexgrid import SensorGrid, default_grid
from .pipeline import EdgeFeatures, kind_to_dict
from .simulator import HalfPlane, Scene, SineEdge, Strip, Wedge
from .tracer import TraceResult

_CELL_W = 5  # printed width of one cell slot


def ascii_frame(
    frame: Frame, grid: SensorGrid | None = None, features: EdgeFeatures | None = None
) -> str:
    """Plain-text heatmap: one line per row, odd rows indented half a cell.

    Rows print top-down with the highest row first (grid y points up).
    Dark-cluster cells are bracketed.  Feature annotations go on trailing
    comment lines.
    """
    if grid is None:
        grid = default_grid()
    spec = grid.spec
    dark = features.split.dark if features and features.split else frozenset()
    lines = []
    for row in range(spec.rows - 1, -1, -1):
        cells = []
        for col in range(spec.cols):
            i = row * spec.cols + col
            value = frame.values[i]
            cells.append(f"[{value:3d}]" if i in dark else f" {value:3d} ")
        indent = " " * ((_CELL_W + 1) // 2) if row % 2 else ""
        lines.append(indent + " ".join(cells))
    if features is not None:
        if features.split is not None:
            lines.append(f"# lambda {features.split.threshold:.2f}  gap {features.split.gap:.0f}")
        if features.centroid is not None:
            lines.append(f"# centroid ({features.centroid[0]:.2f}, {features.centroid[1]:.2f}) mm")
        lines.append(f"# kind {kind_to_dict(features.kind)}")
    return "\n".join(lines) + "\n"


def _svg_header(x0: float, y0: float, w: float, h: float, scale: float = 8.0) -> list[str]:
    # Flip y so +y (along the finger) points up on screen.
    return [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w * scale:.0f}" '
        f'height="{h * scale:.0f}" viewBox="{x0:.2f} {y0:.2f} {w:.2f} {h:.2f}">',
        f'<g transform="translate(0,{2 * y0 + h:.2f}) scale(1,-1)">',
    ]


def svg_frame(
    frame: Frame, grid: SensorGrid | None = None, features: EdgeFeatures | None = None
) -> str:
    """SVG heatmap of one frame with threshold features overlaid."""
    if grid is None:
        grid = default_grid()
    spec = grid.spec
    xmin, ymin, xmax, ymax = grid.footprint_bounds
    pad = 1.0
    parts = _svg_header(xmin - pad, ymin - pad, xmax - xmin + 2 * pad, ymax - ymin + 2 * pad)
    dark = features.split.dark if features and features.split else frozenset()
    for i in range(grid.n_cells):
        cx, cy = grid.centre(i)
        value = frame.values[i]
        shade = int(round(value / 255 * 255))
        stroke = "#d22" if i in dark else "#888"
        parts.append(
            f'<rect x="{cx - spec.pitch_x / 2:.3f}" y="{cy - spec.pitch_y / 2:.3f}" '
            f'width="{spec.pitch_x:.3f}" height="{spec.pitch_y:.3f}" '
            f'fill="rgb({shade},{shade},{shade})" stroke="{stroke}" stroke-width="0.15"/>'
        )
    if features is not None:
        for marker in features.markers:
            mx, my = marker.position
            parts.append(f'<circle cx="{mx:.3f}" cy="{my:.3f}" r="0.6" fill="#2a7fff"/>')
        if features.fit is not None:
            for seg in features.fit.segments:
                parts.append(
                    f'<line x1="{seg.start[0]:.3f}" y1="{seg.start[1]:.3f}" '
                    f'x2="{seg.end[0]:.3f}" y2="{seg.end[1]:.3f}" '
                    f'stroke="#ff9f1c" stroke-width="0.4"/>'
                )
        if features.centroid is not None:
            cx, cy = features.centroid
            parts.append(
                f'<path d="M {cx - 1:.3f} {cy:.3f} H {cx + 1:.3f} M {cx:.3f} {cy - 1:.3f} '
                f'V {cy + 1:.3f}" stroke="#d22" stroke-width="0.3"/>'
            )
    parts.append("</g>")
    if features is not None and features.split is not None:
        parts.append(
            f'<text x="{xmin:.2f}" y="{ymin - 0.2:.2f}" font-size="2">'
            f"lambda {features.split.threshold:.1f}</text>"
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _shape_paths(shape, bounds: tuple[float, float, float, float]) -> list[list[tuple[float, float]]]:
    """Polylines sketching a shape's boundary inside a world-frame box."""
    xmin, ymin, xmax, ymax = bounds
    span = math.hypot(xmax - xmin, ymax - ymin)
    if isinstance(shape, (HalfPlane, Strip)):
        dx, dy = shape.direction
        norm = math.hypot(dx, dy)
        dx, dy = dx / norm, dy / norm
        px, py = shape.point
        offsets = [0.0]
        if isinstance(shape, Strip):
            offsets = [-shape.width / 2, shape.width / 2]
        paths = []
        for off in offsets:
            ox, oy = px - dy * off, py + dx * off
            paths.append([(ox - dx * span, oy - dy * span), (ox + dx * span, oy + dy * span)])
        return paths
    if isinstance(shape, Wedge):
        vx, vy = shape.vertex
        paths = []
        for ang in (shape.start_deg, shape.end_deg):
            r = math.radians(ang)
            paths.append([(vx, vy), (vx + span * math.cos(r), vy + span * math.sin(r))])
        return paths
    if isinstance(shape, SineEdge):
        dx, dy = shape.direction
        norm = math.hypot(dx, dy)
        dx, dy = dx / norm, dy / norm
        px, py = shape.point
        us = np.linspace(-span, span, 200)
        ws = shape.amplitude * np.sin(2 * math.pi * us / shape.wavelength + math.radians(shape.phase_deg))
        return [[(px + dx * u - dy * w, py + dy * u + dx * w) for u, w in zip(us, ws)]]
    return []


def svg_trace(
    result: TraceResult, template: Scene, grid: SensorGrid | None = None
) -> str:
    """World-frame overlay: scene geometry, gripper trajectory, events."""
    if grid is None:
        grid = default_grid()
    xs = [p.x for p in result.trajectory]
    ys = [p.y for p in result.trajectory]
    gx, gy = grid.bounding_box
    pad = max(gx, gy)
    bounds = (min(xs) - pad, min(ys) - pad, max(xs) + gx + pad, max(ys) + gy + pad)
    x0, y0, x1, y1 = bounds
    parts = _svg_header(x0, y0, x1 - x0, y1 - y0, scale=4.0)

    world_pose = template.pose
    for shape, material in template.layers:
        for path in _shape_paths(shape, bounds):
            pts = world_pose.apply(np.asarray(path))
            coords = " ".join(f"{x:.2f},{y:.2f}" for x, y in pts)
            parts.append(
                f'<polyline points="{coords}" fill="none" stroke="#777" '
                f'stroke-width="0.5"><title>{escape(material.name)}</title></polyline>'
            )

    coords = " ".join(f"{p.x:.2f},{p.y:.2f}" for p in result.trajectory)
    parts.append(
        f'<polyline points="{coords}" fill="none" stroke="#2a7fff" stroke-width="0.8"/>'
    )
    for pose in result.trajectory:
        parts.append(f'<circle cx="{pose.x:.2f}" cy="{pose.y:.2f}" r="0.7" fill="#2a7fff"/>')
    for event in result.events:
        pose = result.trajectory[min(event.step, len(result.trajectory) - 1)]
        color = {"corner_detected": "#d22", "lost_contact": "#b8860b", "completed": "#2e8b57"}.get(
            event.kind, "#000"
        )
        parts.append(f'<circle cx="{pose.x:.2f}" cy="{pose.y:.2f}" r="1.6" fill="none" stroke="{color}" stroke-width="0.6"/>')
        if event.vertex_mm is not None:
            vx, vy = event.vertex_mm
            parts.append(f'<circle cx="{vx:.2f}" cy="{vy:.2f}" r="1.2" fill="{color}"/>')
    parts.append("</g>")
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
