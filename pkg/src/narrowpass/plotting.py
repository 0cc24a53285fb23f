"""SVG rendering of scenes and trajectories: gray obstacle rectangles, the
dense path, and object outlines highlighted at waypoint-marked states."""

from __future__ import annotations

from typing import Mapping, Sequence

from .geometry import Pose, transform_vertices
from .scene import Scene


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def trajectory_svg(
    scene: Scene,
    states: Sequence[Pose] = (),
    waypoint_marks: Mapping[int, int] | None = None,
    width_px: int = 640,
) -> str:
    """Render the scene (and optionally a dense trajectory) as an SVG string."""
    ws = scene.workspace
    pad = 0.05 * max(ws.width, ws.height)
    scale = width_px / (ws.width + 2 * pad)
    height_px = (ws.height + 2 * pad) * scale

    def sx(x: float) -> float:
        return (x - ws.x_lo + pad) * scale

    def sy(y: float) -> float:
        # SVG y grows downward; world y grows upward.
        return (ws.y_hi - y + pad) * scale

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width_px}" '
        f'height="{height_px:.0f}" viewBox="0 0 {width_px} {height_px:.0f}">',
        f'<rect x="0" y="0" width="{width_px}" height="{height_px:.0f}" fill="white"/>',
        f'<rect x="{_fmt(sx(ws.x_lo))}" y="{_fmt(sy(ws.y_hi))}" '
        f'width="{_fmt(ws.width * scale)}" height="{_fmt(ws.height * scale)}" '
        'fill="none" stroke="black" stroke-width="2"/>',
    ]

    for ob in scene.obstacles:
        if ob.width <= 0 or ob.height <= 0:
            continue
        out.append(
            f'<rect x="{_fmt(sx(ob.x_lo))}" y="{_fmt(sy(ob.y_hi))}" '
            f'width="{_fmt(ob.width * scale)}" height="{_fmt(ob.height * scale)}" '
            'fill="#999999" stroke="#666666" stroke-width="1"/>'
        )

    def outline(q: Pose, color: str, width: float, opacity: float = 1.0) -> str:
        pts = " ".join(f"{_fmt(sx(px))},{_fmt(sy(py))}" for px, py in transform_vertices(scene.object, q))
        return (
            f'<polygon points="{pts}" fill="none" stroke="{color}" '
            f'stroke-width="{width}" opacity="{opacity}"/>'
        )

    if states:
        path_pts = " ".join(f"{_fmt(sx(q.x))},{_fmt(sy(q.y))}" for q in states)
        out.append(
            f'<polyline points="{path_pts}" fill="none" stroke="#1f77b4" stroke-width="1.5"/>'
        )
        stride = max(1, len(states) // 14)
        for h in range(0, len(states), stride):
            out.append(outline(states[h], "#9ecae1", 1.0, 0.7))
        marks = waypoint_marks or {}
        for h in sorted(marks):
            if h < len(states):
                out.append(outline(states[h], "#d62728", 1.6))

    out.append(outline(scene.start, "#2ca02c", 2.0))
    out.append(outline(scene.goal, "#9467bd", 2.0))
    out.append("</svg>")
    return "\n".join(out)
