"""Planar rigid-body geometry: poses, axis-aligned rectangles, body polygons.

Everything here is a pure function over immutable values, in double
precision. Angles are radians; whenever two headings are compared the
difference goes through :func:`wrap_angle`, which maps onto the half-open
interval (-pi, pi] so the +/-pi tie breaks the same way everywhere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

TWO_PI = 2.0 * math.pi

# Tolerance for exact-boundary comparisons in tests and validation.
EPS = 1e-9


@dataclass(frozen=True)
class Pose:
    """An SE(2) element: world translation (x, y) plus heading phi in radians.

    phi is stored unrestricted; consumers wrap differences when comparing.
    """

    x: float
    y: float
    phi: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.x) and math.isfinite(self.y) and math.isfinite(self.phi)):
            raise ValueError(f"pose components must be finite, got ({self.x}, {self.y}, {self.phi})")


@dataclass(frozen=True)
class Rect:
    """Closed axis-aligned rectangle [x_lo, x_hi] x [y_lo, y_hi]."""

    x_lo: float
    x_hi: float
    y_lo: float
    y_hi: float

    def __post_init__(self) -> None:
        if self.x_lo > self.x_hi or self.y_lo > self.y_hi:
            raise ValueError(f"inverted rectangle bounds: {self}")

    @property
    def width(self) -> float:
        return self.x_hi - self.x_lo

    @property
    def height(self) -> float:
        return self.y_hi - self.y_lo

    def contains_rect(self, other: "Rect", tol: float = EPS) -> bool:
        return (
            other.x_lo >= self.x_lo - tol
            and other.x_hi <= self.x_hi + tol
            and other.y_lo >= self.y_lo - tol
            and other.y_hi <= self.y_hi + tol
        )


@dataclass(frozen=True)
class Polygon:
    """Rigid-object outline: an ordered vertex loop in the body frame.

    Consecutive vertices form edges, with implicit closure back to the first
    vertex. At least 3 vertices; no two consecutive vertices may coincide.
    """

    vertices: tuple[tuple[float, float], ...]

    def __post_init__(self) -> None:
        verts = tuple((float(x), float(y)) for x, y in self.vertices)
        if len(verts) < 3:
            raise ValueError("polygon needs at least 3 vertices")
        for a, b in zip(verts, verts[1:] + verts[:1]):
            if a == b:
                raise ValueError(f"consecutive polygon vertices coincide at {a}")
        object.__setattr__(self, "vertices", verts)


def wrap_angle(a: float) -> float:
    """Wrap an angle into the principal interval (-pi, pi]."""
    r = math.remainder(a, TWO_PI)
    if r <= -math.pi:
        r += TWO_PI
    return r


def transform_vertices(poly: Polygon, q: Pose) -> list[tuple[float, float]]:
    """World-frame vertex positions of ``poly`` at pose ``q``: rotate by
    q.phi, then translate by (q.x, q.y). Order and count match the input."""
    c = math.cos(q.phi)
    s = math.sin(q.phi)
    x, y = q.x, q.y
    return [(c * vx - s * vy + x, s * vx + c * vy + y) for vx, vy in poly.vertices]


def bounding_box(points: list[tuple[float, float]]) -> Rect:
    """Tight axis-aligned bounding box of a nonempty point list."""
    if not points:
        raise ValueError("bounding_box of empty point list")
    xs = [p[0] for p in points]
    ys = [p[1] for p in points]
    return Rect(min(xs), max(xs), min(ys), max(ys))


def point_in_rect(p: tuple[float, float], r: Rect) -> bool:
    """True iff p lies in the closed rectangle (boundary counts as inside)."""
    return r.x_lo <= p[0] <= r.x_hi and r.y_lo <= p[1] <= r.y_hi


def workspace_deficit(p: tuple[float, float], w: Rect) -> float:
    """How far p lies outside w: the sum of the four hinge excesses.

    Zero exactly when p is inside the closed rectangle.
    """
    px, py = p
    return (
        max(0.0, w.x_lo - px)
        + max(0.0, px - w.x_hi)
        + max(0.0, w.y_lo - py)
        + max(0.0, py - w.y_hi)
    )


def signed_rect_distance(p: tuple[float, float], r: Rect) -> float:
    """Signed distance from p to rectangle r: positive clearance outside,
    negative penetration depth inside, zero on the boundary.

    Outside, the magnitude is the Euclidean distance to the point clamped
    onto the rectangle; inside it is the depth to the nearest face.
    """
    if r.width <= 0.0 or r.height <= 0.0:
        raise ValueError("signed_rect_distance requires a positive-area rectangle")
    px, py = p
    cx = min(max(px, r.x_lo), r.x_hi)
    cy = min(max(py, r.y_lo), r.y_hi)
    if cx != px or cy != py:
        return math.hypot(px - cx, py - cy)
    # Inside (or on the boundary): depth to the nearest face, negated.
    depth = min(px - r.x_lo, r.x_hi - px, py - r.y_lo, r.y_hi - py)
    return -depth


def interp_pose(qa: Pose, qb: Pose, eta: float) -> Pose:
    """Interpolate between two poses: linear in translation, shortest
    angular arc in heading. eta in [0, 1]."""
    if not 0.0 <= eta <= 1.0:
        raise ValueError(f"interpolation parameter out of [0, 1]: {eta}")
    dphi = wrap_angle(qb.phi - qa.phi)
    return Pose(
        qa.x + eta * (qb.x - qa.x),
        qa.y + eta * (qb.y - qa.y),
        wrap_angle(qa.phi + eta * dphi),
    )
