import math

import pytest

from narrowpass.geometry import Polygon, Pose, Rect
from narrowpass.scene import Opening, Scene


def square(half: float = 0.5) -> Polygon:
    return Polygon(((-half, -half), (half, -half), (half, half), (-half, half)))


def bar(half_len: float, half_wid: float) -> Polygon:
    return Polygon(
        ((-half_len, -half_wid), (half_len, -half_wid), (half_len, half_wid), (-half_len, half_wid))
    )


def scene_with(
    obstacles=(),
    openings=(),
    obj: Polygon | None = None,
    start: Pose = Pose(1.0, 5.0, 0.0),
    goal: Pose = Pose(9.0, 5.0, 0.0),
    workspace: Rect = Rect(0.0, 10.0, 0.0, 10.0),
    scene_id: str = "fixture",
) -> Scene:
    """Hand-built scene for fixtures; no feasibility guarantees."""
    return Scene(
        workspace=workspace,
        obstacles=tuple(obstacles),
        openings=tuple(openings),
        object=obj if obj is not None else square(0.5),
        start=start,
        goal=goal,
        id=scene_id,
        distribution_tag="ID",
    )


def opening_scene(
    wall_x_lo: float,
    wall_x_hi: float,
    gap_y_lo: float,
    gap_y_hi: float,
    obj: Polygon | None = None,
    workspace: Rect = Rect(0.0, 10.0, 0.0, 10.0),
    start: Pose | None = None,
    goal: Pose | None = None,
) -> Scene:
    """Single-opening scene with walls tiling the workspace around the gap."""
    op = Opening(wall_x_lo, wall_x_hi, gap_y_lo, gap_y_hi, 0)
    gap_mid = 0.5 * (gap_y_lo + gap_y_hi)
    return scene_with(
        obstacles=op.walls(workspace),
        openings=(op,),
        obj=obj,
        start=start if start is not None else Pose(1.0, gap_mid, 0.0),
        goal=goal if goal is not None else Pose(9.0, gap_mid, 0.0),
        workspace=workspace,
    )


def wall_colliding_completion(scene, rows_per_opening: int = 3) -> str:
    """Baseline rows with the middle row of the first opening moved so the
    object's nose vertex lands inside the upper wall."""
    from narrowpass.evalharness import baseline_policy
    from narrowpass.geometry import transform_vertices
    from narrowpass.textio import parse_completion, serialize_waypoints
    from narrowpass.verifier import check_pose

    poses = list(
        parse_completion(
            baseline_policy(scene, rows_per_opening),
            expected=rows_per_opening * len(scene.openings),
        ).poses
    )
    op = scene.openings[0]
    wall_mid_y = 0.5 * (op.gap_y_hi + scene.workspace.y_hi)
    phi = poses[1].phi
    nose = max(p[0] for p in transform_vertices(scene.object, Pose(0.0, 0.0, phi)))
    bad = Pose(0.5 * (op.wall_x_lo + op.wall_x_hi) - nose, wall_mid_y, phi)
    assert not check_pose(scene, bad).ok  # the planted vertex is inside the wall
    poses[1] = bad
    return serialize_waypoints(poses)
