"""Lattice A* densification: connect sparse SE(2) waypoints into a dense,
step-limited trajectory.

The search runs on a translation/heading lattice anchored at the segment's
start pose: neighbors are the 8 translation moves combined with heading
changes of {-1, 0, +1} lattice pitches, every one of which satisfies the
per-step motion limits by construction. Each candidate state and each edge's
interpolated substeps are tested with arithmetic identical to the verifier's
checks, so a successfully planned trajectory re-verifies by construction.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from heapq import heappop, heappush
from pathlib import Path
from typing import Sequence

from .geometry import Pose, interp_pose, wrap_angle
from .scene import Scene
from .verifier import VerifyConfig, check_pose, check_step, check_swept

_SQRT2 = math.sqrt(2.0)

# 8-connected translation moves, scaled by the lattice pitch.
_MOVES = ((1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1))


@dataclass(frozen=True)
class LatticeConfig:
    xy_step: float = 0.1
    phi_step: float = math.pi / 16.0
    max_expansions: int = 200_000
    heuristic_ang_weight: float = 0.5

    def __post_init__(self) -> None:
        if self.xy_step <= 0.0 or self.phi_step <= 0.0:
            raise ValueError("lattice pitches must be positive")
        if self.max_expansions < 1:
            raise ValueError("max_expansions must be >= 1")
        if self.heuristic_ang_weight < 0.0:
            raise ValueError("heuristic_ang_weight must be nonnegative")

    def validate_against(self, cfg: VerifyConfig) -> None:
        """Every lattice move must satisfy the per-step limits by construction."""
        if self.xy_step * _SQRT2 > cfg.lin_limit + 1e-12:
            raise ValueError(
                f"xy_step {self.xy_step} too coarse: diagonal move exceeds lin_limit {cfg.lin_limit}"
            )
        if self.phi_step > cfg.ang_limit + 1e-12:
            raise ValueError(
                f"phi_step {self.phi_step} exceeds ang_limit {cfg.ang_limit}"
            )

    def to_dict(self) -> dict:
        return {
            "xy_step": self.xy_step,
            "phi_step": self.phi_step,
            "max_expansions": self.max_expansions,
            "heuristic_ang_weight": self.heuristic_ang_weight,
        }


@dataclass(frozen=True)
class Trajectory:
    """Dense pose sequence plus the dense index of each source waypoint.

    Mark values are positions in the full waypoint sequence: 0 for the start
    pose, 1..n for intermediate waypoints, n+1 for the goal.
    """

    states: tuple[Pose, ...]
    waypoint_marks: dict[int, int] = field(default_factory=dict)


@dataclass(frozen=True)
class SegmentFailure:
    """Why one waypoint-to-waypoint segment could not be planned."""

    reason: str  # start_infeasible | target_infeasible | unreachable
    expansions: int


@dataclass(frozen=True)
class DensifyFailure:
    """First failing segment of a densification, with the partial result."""

    segment_index: int
    partial: Trajectory
    reason: str
    expansions: int


class _PlanContext:
    """Per-scene caches shared across segments of one densification.

    Rotated vertex sets are cached per exact heading value; the arithmetic
    mirrors transform_vertices at the origin pose, so translated copies are
    bit-identical to what the verifier computes.
    """

    __slots__ = ("scene", "cfg", "ws", "obstacles", "verts_local", "_rot")

    def __init__(self, scene: Scene, cfg: VerifyConfig):
        self.scene = scene
        self.cfg = cfg
        ws = scene.workspace
        self.ws = (ws.x_lo, ws.x_hi, ws.y_lo, ws.y_hi)
        self.obstacles = tuple((o.x_lo, o.x_hi, o.y_lo, o.y_hi) for o in scene.obstacles)
        self.verts_local = scene.object.vertices
        self._rot: dict[float, tuple] = {}

    def rotated(self, phi: float):
        entry = self._rot.get(phi)
        if entry is None:
            c = math.cos(phi)
            s = math.sin(phi)
            verts = tuple((c * vx - s * vy + 0.0, s * vx + c * vy + 0.0) for vx, vy in self.verts_local)
            xs = [v[0] for v in verts]
            ys = [v[1] for v in verts]
            entry = (verts, min(xs), max(xs), min(ys), max(ys))
            self._rot[phi] = entry
        return entry

    def pose_ok(self, x: float, y: float, phi: float) -> bool:
        """Same verdict as check_pose(scene, Pose(x, y, phi)).ok."""
        verts, bx_lo, bx_hi, by_lo, by_hi = self.rotated(phi)
        wx_lo, wx_hi, wy_lo, wy_hi = self.ws
        if bx_lo + x < wx_lo or bx_hi + x > wx_hi or by_lo + y < wy_lo or by_hi + y > wy_hi:
            return False
        for ox_lo, ox_hi, oy_lo, oy_hi in self.obstacles:
            if bx_hi + x < ox_lo or bx_lo + x > ox_hi or by_hi + y < oy_lo or by_lo + y > oy_hi:
                continue
            for rx, ry in verts:
                px = rx + x
                py = ry + y
                if ox_lo <= px <= ox_hi and oy_lo <= py <= oy_hi:
                    return False
        return True

    def edge_ok(self, xa: float, ya: float, pa: float, xb: float, yb: float, pb: float) -> bool:
        """Same verdict as check_swept between the two poses."""
        cfg = self.cfg
        dphi = wrap_angle(pb - pa)
        d_lin = math.hypot(xb - xa, yb - ya)
        s_count = max(
            cfg.min_substeps,
            math.ceil(d_lin / cfg.substep_lin_res),
            math.ceil(abs(dphi) / cfg.substep_ang_res),
        )
        dx = xb - xa
        dy = yb - ya
        for s in range(1, s_count + 1):
            eta = s / (s_count + 1)
            if not self.pose_ok(xa + eta * dx, ya + eta * dy, wrap_angle(pa + eta * dphi)):
                return False
        return True


def plan_segment(
    scene: Scene,
    qa: Pose,
    qb: Pose,
    lat: LatticeConfig,
    cfg: VerifyConfig,
    ctx: _PlanContext | None = None,
) -> list[Pose] | SegmentFailure:
    """A* from qa toward the lattice cell nearest qb.

    On success the pose list runs from qa to the snapped goal cell, followed
    by an exact hop to qb when that hop independently passes the step and
    swept checks. Every state and edge on the returned path satisfies the
    pose, step, and swept constraints.
    """
    lat.validate_against(cfg)
    if ctx is None:
        ctx = _PlanContext(scene, cfg)

    st = lat.xy_step
    ps = lat.phi_step
    ax, ay, aphi = qa.x, qa.y, qa.phi

    # Keep the heading dimension finite: wrap the index when the pitch
    # divides a full turn (it does for the defaults), else cap the window.
    # Without this, searches toward unreachable targets never exhaust.
    n_phi = round(2.0 * math.pi / ps)
    if n_phi > 0 and abs(n_phi * ps - 2.0 * math.pi) < 1e-9:
        def norm_j(j: int) -> int | None:
            return j % n_phi
    else:
        j_cap = math.ceil(2.0 * math.pi / ps)

        def norm_j(j: int) -> int | None:
            return j if abs(j) <= j_cap else None

    def cell_pose(ix: int, iy: int, j: int) -> tuple[float, float, float]:
        return (ax + ix * st, ay + iy * st, aphi + j * ps)

    if not ctx.pose_ok(ax, ay, aphi):
        return SegmentFailure("start_infeasible", 0)

    gix = round((qb.x - ax) / st)
    giy = round((qb.y - ay) / st)
    gj = norm_j(round(wrap_angle(qb.phi - aphi) / ps))
    goal = (gix, giy, gj)
    gx, gy, gphi = cell_pose(*goal)
    if not ctx.pose_ok(gx, gy, gphi):
        return SegmentFailure("target_infeasible", 0)

    w_ang = lat.heuristic_ang_weight

    def heuristic(ix: int, iy: int, j: int) -> float:
        return math.hypot((gix - ix) * st, (giy - iy) * st) + w_ang * abs(
            wrap_angle((gj - j) * ps)
        )

    expansions = 0
    parents: dict[tuple[int, int, int], tuple[int, int, int]] = {}
    path_cells: list[tuple[int, int, int]] | None = None

    if goal == (0, 0, 0):
        path_cells = [(0, 0, 0)]
    else:
        start = (0, 0, 0)
        g_cost = {start: 0.0}
        closed: set[tuple[int, int, int]] = set()
        feas: dict[tuple[int, int, int], bool] = {start: True}
        open_heap = [(heuristic(0, 0, 0), 0.0, 0, 0, 0)]
        move_len = {m: math.hypot(m[0] * st, m[1] * st) for m in _MOVES}

        while open_heap:
            f, neg_g, j, ix, iy = heappop(open_heap)
            cur = (ix, iy, j)
            if cur in closed:
                continue
            closed.add(cur)
            expansions += 1
            if cur == goal:
                path_cells = []
                c = cur
                while True:
                    path_cells.append(c)
                    if c == start:
                        break
                    c = parents[c]
                path_cells.reverse()
                break
            if expansions >= lat.max_expansions:
                return SegmentFailure("unreachable", expansions)
            cx, cy, cphi = cell_pose(ix, iy, j)
            cg = -neg_g
            for mdx, mdy in _MOVES:
                nix, niy = ix + mdx, iy + mdy
                for dj in (-1, 0, 1):
                    nj = norm_j(j + dj)
                    if nj is None:
                        continue
                    ncell = (nix, niy, nj)
                    if ncell in closed:
                        continue
                    ok = feas.get(ncell)
                    if ok is None:
                        nx, ny, nphi = cell_pose(nix, niy, nj)
                        ok = ctx.pose_ok(nx, ny, nphi)
                        feas[ncell] = ok
                    if not ok:
                        continue
                    ng = cg + move_len[(mdx, mdy)] + w_ang * ps * abs(dj)
                    old = g_cost.get(ncell)
                    if old is not None and old <= ng:
                        continue
                    nx, ny, nphi = cell_pose(nix, niy, nj)
                    if not ctx.edge_ok(cx, cy, cphi, nx, ny, nphi):
                        continue
                    g_cost[ncell] = ng
                    parents[ncell] = cur
                    heappush(open_heap, (ng + heuristic(nix, niy, nj), -ng, nj, nix, niy))
        if path_cells is None:
            return SegmentFailure("unreachable", expansions)

    poses = [qa if c == (0, 0, 0) else Pose(*cell_pose(*c)) for c in path_cells]

    end = poses[-1]
    if (
        abs(end.x - qb.x) > 1e-12
        or abs(end.y - qb.y) > 1e-12
        or abs(wrap_angle(end.phi - qb.phi)) > 1e-12
    ):
        if (
            check_pose(scene, qb).ok
            and check_step(end, qb, cfg).ok
            and check_swept(scene, end, qb, cfg).ok
        ):
            poses.append(qb)
    return poses


def _densify_sequence(
    scene: Scene,
    seq: Sequence[Pose],
    lat: LatticeConfig,
    cfg: VerifyConfig,
    stop_on_failure: bool,
) -> tuple[Trajectory, list[int], DensifyFailure | None]:
    """Plan consecutive segments of an explicit pose sequence.

    With ``stop_on_failure`` the first failed segment aborts; otherwise the
    raw target waypoint is appended as a fallback hop and planning continues
    from it. Returns the trajectory, the fallback segment positions, and the
    first failure (if any).
    """
    ctx = _PlanContext(scene, cfg)
    states: list[Pose] = [seq[0]]
    marks: dict[int, int] = {0: 0}
    fallbacks: list[int] = []
    for k in range(1, len(seq)):
        result = plan_segment(scene, states[-1], seq[k], lat, cfg, ctx)
        if isinstance(result, SegmentFailure):
            failure = DensifyFailure(
                k, Trajectory(tuple(states), dict(marks)), result.reason, result.expansions
            )
            if stop_on_failure:
                return Trajectory(tuple(states), marks), fallbacks, failure
            # Fallback: keep the raw hop so verification still sees the
            # waypoint and classifies the motion toward it.
            fallbacks.append(k)
            if seq[k] != states[-1]:
                states.append(seq[k])
        else:
            states.extend(result[1:])
        # Coincident waypoints share a dense state; keep the smallest
        # waypoint index so first-failure attribution stays minimal.
        marks.setdefault(len(states) - 1, k)
    return Trajectory(tuple(states), marks), fallbacks, None


def densify(
    scene: Scene, waypoints: Sequence[Pose], lat: LatticeConfig, cfg: VerifyConfig
) -> Trajectory | DensifyFailure:
    """Connect start -> waypoints -> goal; shared endpoints deduplicated.

    Returns the failing segment's record (with the partial trajectory) as
    soon as any segment cannot be planned.
    """
    if not waypoints:
        raise ValueError("densify requires at least one waypoint")
    seq = [scene.start, *waypoints, scene.goal]
    traj, _fallbacks, failure = _densify_sequence(scene, seq, lat, cfg, stop_on_failure=True)
    return failure if failure is not None else traj


def densify_with_fallback(
    scene: Scene, waypoints: Sequence[Pose], lat: LatticeConfig, cfg: VerifyConfig
) -> tuple[Trajectory, list[int]]:
    """Like densify, but failed segments degrade to the raw waypoint hop so
    the result always spans start -> goal. Returns the trajectory and the
    positions of fallback segments."""
    if not waypoints:
        raise ValueError("densify_with_fallback requires at least one waypoint")
    seq = [scene.start, *waypoints, scene.goal]
    traj, fallbacks, _failure = _densify_sequence(scene, seq, lat, cfg, stop_on_failure=False)
    return traj, fallbacks


def save_trajectory(traj: Trajectory, path: str | Path) -> None:
    """One JSON record per line: {h, x, y, phi, waypoint_mark?}."""
    lines = []
    for h, q in enumerate(traj.states):
        rec: dict = {"h": h, "x": q.x, "y": q.y, "phi": q.phi}
        if h in traj.waypoint_marks:
            rec["waypoint_mark"] = traj.waypoint_marks[h]
        lines.append(json.dumps(rec))
    Path(path).write_text("\n".join(lines) + "\n")


def load_trajectory(path: str | Path) -> Trajectory:
    states: list[Pose] = []
    marks: dict[int, int] = {}
    for line in Path(path).read_text().splitlines():
        if not line.strip():
            continue
        rec = json.loads(line)
        if rec["h"] != len(states):
            raise ValueError(f"trajectory file out of order at h={rec['h']}")
        states.append(Pose(rec["x"], rec["y"], rec["phi"]))
        if "waypoint_mark" in rec:
            marks[rec["h"]] = rec["waypoint_mark"]
    if not states:
        raise ValueError("empty trajectory file")
    return Trajectory(tuple(states), marks)
