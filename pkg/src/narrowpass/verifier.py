"""Deterministic feasibility verification for poses, steps, swept motions,
and dense trajectories, with first-failure attribution.

Constraint vocabulary (fixed, lowercase, consumed verbatim downstream):
``out_of_workspace`` — a state's vertex leaves the workspace;
``collision`` — a state's vertex lies inside an obstacle rectangle;
``swept_collision`` — an interpolated substep between two checked states
violates either of the above;
``step_size`` — a step exceeds the per-step translation or rotation limit.

Check order for first-failure attribution: per state, workspace before
obstacles; per segment, the end state's checks first, then the step-size
check, then the segment's interior substeps. A waypoint that is itself bad
therefore outranks the motion toward it, and the order is deterministic, so
identical inputs always produce identical reports.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Sequence

from .geometry import (
    Pose,
    Rect,
    bounding_box,
    interp_pose,
    point_in_rect,
    signed_rect_distance,
    transform_vertices,
    workspace_deficit,
    wrap_angle,
)
from .scene import Scene


class ViolationType(str, Enum):
    out_of_workspace = "out_of_workspace"
    collision = "collision"
    swept_collision = "swept_collision"
    step_size = "step_size"


@dataclass(frozen=True)
class VerifyConfig:
    """Per-step motion limits and swept-check resolution.

    Substep resolutions must sit strictly below the corresponding limits so
    interpolation is always finer than the motions it checks.
    """

    lin_limit: float = 0.5
    ang_limit: float = 0.3
    substep_lin_res: float = 0.05
    substep_ang_res: float = 0.05
    min_substeps: int = 4

    def __post_init__(self) -> None:
        for name in ("lin_limit", "ang_limit", "substep_lin_res", "substep_ang_res"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be positive")
        if self.min_substeps < 1:
            raise ValueError("min_substeps must be >= 1")
        if self.substep_lin_res >= self.lin_limit:
            raise ValueError("substep_lin_res must be strictly below lin_limit")
        if self.substep_ang_res >= self.ang_limit:
            raise ValueError("substep_ang_res must be strictly below ang_limit")

    def to_dict(self) -> dict:
        return {
            "lin_limit": self.lin_limit,
            "ang_limit": self.ang_limit,
            "substep_lin_res": self.substep_lin_res,
            "substep_ang_res": self.substep_ang_res,
            "min_substeps": self.min_substeps,
        }


@dataclass(frozen=True)
class PoseCheck:
    """Outcome of the per-state workspace (C1) and obstacle (C2) tests."""

    c1_ok: bool
    c2_ok: bool
    bad_vertex: int | None = None
    bad_obstacle: int | None = None
    magnitude: float = 0.0

    @property
    def ok(self) -> bool:
        return self.c1_ok and self.c2_ok


@dataclass(frozen=True)
class StepCheck:
    ok: bool
    d_lin: float
    d_ang: float
    lin_excess: float
    ang_excess: float


@dataclass(frozen=True)
class SweptCheck:
    ok: bool
    substeps: int
    fail_substep: int | None = None
    pose_check: PoseCheck | None = None


@dataclass(frozen=True)
class VerificationReport:
    success: bool
    first_fail_waypoint: int | None = None
    violation: ViolationType | None = None
    detail: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "success": self.success,
            "first_fail_waypoint": self.first_fail_waypoint,
            "violation": self.violation.value if self.violation else None,
            "detail": self.detail,
        }


def _segment_hits_rect(p: tuple[float, float], q: tuple[float, float], r: Rect) -> bool:
    """Closed segment-rectangle intersection via interval clipping."""
    t_lo, t_hi = 0.0, 1.0
    for p0, d, lo, hi in (
        (p[0], q[0] - p[0], r.x_lo, r.x_hi),
        (p[1], q[1] - p[1], r.y_lo, r.y_hi),
    ):
        if d == 0.0:
            if p0 < lo or p0 > hi:
                return False
            continue
        ta = (lo - p0) / d
        tb = (hi - p0) / d
        if ta > tb:
            ta, tb = tb, ta
        t_lo = max(t_lo, ta)
        t_hi = min(t_hi, tb)
        if t_lo > t_hi:
            return False
    return True


def check_pose(scene: Scene, q: Pose, broad_phase: bool = True, edge_checks: bool = False) -> PoseCheck:
    """Workspace containment (vertex-wise) and two-stage obstacle test.

    The obstacle test first rejects obstacles whose rectangle misses the
    object's bounding box, then tests each transformed vertex for membership
    in the remaining rectangles. Diagnostics name the first violating vertex
    and obstacle in scan order. ``broad_phase=False`` skips the bounding-box
    rejection (identical verdicts, used to test exactly that).

    The vertex-only narrow phase can miss an object edge passing through a
    thin obstacle with both endpoints clear; ``edge_checks=True`` adds a
    segment-rectangle intersection test per polygon edge. It is off by
    default and off throughout the evaluation pipeline.
    """
    pts = transform_vertices(scene.object, q)
    ws = scene.workspace

    c1_ok = True
    c1_vertex = None
    c1_mag = 0.0
    for n, p in enumerate(pts):
        d = workspace_deficit(p, ws)
        if d > 0.0:
            c1_ok = False
            c1_vertex = n
            c1_mag = d
            break

    c2_ok = True
    c2_vertex = None
    c2_obstacle = None
    c2_mag = 0.0
    bbox = bounding_box(pts)
    for i, ob in enumerate(scene.obstacles):
        if broad_phase and (
            bbox.x_hi < ob.x_lo or bbox.x_lo > ob.x_hi or bbox.y_hi < ob.y_lo or bbox.y_lo > ob.y_hi
        ):
            continue
        for n, p in enumerate(pts):
            if point_in_rect(p, ob):
                c2_ok = False
                c2_vertex = n
                c2_obstacle = i
                if ob.width > 0.0 and ob.height > 0.0:
                    c2_mag = -signed_rect_distance(p, ob)
                break
        if c2_ok and edge_checks:
            for n in range(len(pts)):
                if _segment_hits_rect(pts[n], pts[(n + 1) % len(pts)], ob):
                    c2_ok = False
                    c2_vertex = n
                    c2_obstacle = i
                    break
        if not c2_ok:
            break

    if not c1_ok:
        return PoseCheck(False, c2_ok, c1_vertex, c2_obstacle, c1_mag)
    if not c2_ok:
        return PoseCheck(True, False, c2_vertex, c2_obstacle, c2_mag)
    return PoseCheck(True, True)


def check_step(qa: Pose, qb: Pose, cfg: VerifyConfig) -> StepCheck:
    """Per-step translation and rotation limits (C4)."""
    d_lin = math.hypot(qb.x - qa.x, qb.y - qa.y)
    d_ang = abs(wrap_angle(qb.phi - qa.phi))
    lin_excess = max(0.0, d_lin - cfg.lin_limit)
    ang_excess = max(0.0, d_ang - cfg.ang_limit)
    return StepCheck(lin_excess == 0.0 and ang_excess == 0.0, d_lin, d_ang, lin_excess, ang_excess)


def substep_count(qa: Pose, qb: Pose, cfg: VerifyConfig) -> int:
    """Number of interior interpolation substeps for the motion qa -> qb."""
    d_lin = math.hypot(qb.x - qa.x, qb.y - qa.y)
    d_ang = abs(wrap_angle(qb.phi - qa.phi))
    return max(
        cfg.min_substeps,
        math.ceil(d_lin / cfg.substep_lin_res),
        math.ceil(d_ang / cfg.substep_ang_res),
    )


def check_swept(scene: Scene, qa: Pose, qb: Pose, cfg: VerifyConfig) -> SweptCheck:
    """Swept-motion check: interior substeps at eta = s/(S+1), s = 1..S, each
    tested against the workspace and obstacle constraints."""
    s_count = substep_count(qa, qb, cfg)
    for s in range(1, s_count + 1):
        q = interp_pose(qa, qb, s / (s_count + 1))
        pc = check_pose(scene, q)
        if not pc.ok:
            return SweptCheck(False, s_count, s, pc)
    return SweptCheck(True, s_count)


def _attributor(waypoint_marks: Mapping[int, int] | None):
    """Map a failing dense index to a waypoint index: the mark at or after
    the dense index (end-of-segment attribution). Without marks, the dense
    index itself is reported."""
    if waypoint_marks is None:
        return lambda h: h
    items = sorted(waypoint_marks.items())
    dense_indices = [d for d, _ in items]
    values = [w for _, w in items]

    def attribute(h: int) -> int:
        import bisect

        k = bisect.bisect_left(dense_indices, h)
        if k >= len(values):
            return values[-1]
        return values[k]

    return attribute


def verify_trajectory(
    scene: Scene,
    traj: Sequence[Pose],
    cfg: VerifyConfig,
    waypoint_marks: Mapping[int, int] | None = None,
    check_substeps: bool = True,
) -> VerificationReport:
    """Walk a dense pose sequence in order and report the first violation.

    Per state: workspace then obstacles. Per segment between consecutive
    states: the end state first, then the step-size check, then (with
    ``check_substeps``) the interpolated interior substeps, classified as
    swept collisions. Infeasibility is a report, not an error.
    """
    if not traj:
        raise ValueError("verify_trajectory requires a nonempty trajectory")
    attribute = _attributor(waypoint_marks)

    def state_report(h: int, pc: PoseCheck) -> VerificationReport:
        kind = ViolationType.out_of_workspace if not pc.c1_ok else ViolationType.collision
        return VerificationReport(
            False,
            attribute(h),
            kind,
            {
                "dense_index": h,
                "kind": "state",
                "vertex": pc.bad_vertex,
                "obstacle": pc.bad_obstacle,
                "magnitude": pc.magnitude,
            },
        )

    pc = check_pose(scene, traj[0])
    if not pc.ok:
        return state_report(0, pc)

    for h in range(1, len(traj)):
        qa, qb = traj[h - 1], traj[h]
        pc = check_pose(scene, qb)
        if not pc.ok:
            return state_report(h, pc)
        sc = check_step(qa, qb, cfg)
        if not sc.ok:
            return VerificationReport(
                False,
                attribute(h),
                ViolationType.step_size,
                {
                    "dense_index": h,
                    "kind": "step",
                    "d_lin": sc.d_lin,
                    "d_ang": sc.d_ang,
                    "lin_excess": sc.lin_excess,
                    "ang_excess": sc.ang_excess,
                },
            )
        if check_substeps:
            sw = check_swept(scene, qa, qb, cfg)
            if not sw.ok:
                inner = sw.pose_check
                return VerificationReport(
                    False,
                    attribute(h),
                    ViolationType.swept_collision,
                    {
                        "dense_index": h,
                        "kind": "substep",
                        "substep": sw.fail_substep,
                        "substeps": sw.substeps,
                        "vertex": inner.bad_vertex if inner else None,
                        "obstacle": inner.bad_obstacle if inner else None,
                        "magnitude": inner.magnitude if inner else 0.0,
                    },
                )
    return VerificationReport(True)


def verify_waypoints(
    scene: Scene,
    waypoints: Sequence[Pose],
    cfg: VerifyConfig,
    lat=None,
) -> VerificationReport:
    """Densify start -> waypoints -> goal with the lattice planner, then
    verify the dense trajectory with end-of-segment waypoint attribution.

    Waypoint indices in the report are positions in the full sequence:
    0 is the start pose, 1..n the given waypoints, n+1 the goal. Segments the
    planner cannot connect fall back to the raw straight hop so the report
    always carries one of the four violation types.
    """
    if not waypoints:
        raise ValueError("verify_waypoints requires at least one waypoint")
    # Imported here: the densifier builds on this module's checks.
    from .densifier import LatticeConfig, densify_with_fallback

    if lat is None:
        lat = LatticeConfig()
    traj, _fallbacks = densify_with_fallback(scene, waypoints, lat, cfg)
    return verify_trajectory(scene, traj.states, cfg, traj.waypoint_marks)


def failure_note(report: VerificationReport) -> str:
    """Single-line failure note consumed verbatim by training chat sequences.

    Empty on success; otherwise ``FAILURE: waypoint=<k> type=<violation>``.
    """
    if report.success:
        return ""
    return f"FAILURE: waypoint={report.first_fail_waypoint} type={report.violation.value}"
