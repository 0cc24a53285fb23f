"""Scene model and procedural generation of sequential narrow-opening worlds.

A scene is a rectangular workspace holding door-like openings: each opening
is two axis-aligned wall rectangles sharing an x-interval, with a free y-gap
between them. Generation is deterministic per (seed, index) and guarantees
the start and goal poses satisfy the boundary and obstacle constraints.
"""

from __future__ import annotations

import hashlib
import json
import math
import random
from dataclasses import dataclass, field
from pathlib import Path

from .geometry import EPS, Polygon, Pose, Rect, transform_vertices

DEFAULT_WORKSPACE = Rect(0.0, 10.0, 0.0, 10.0)

# Margin kept between sampled geometry and hard boundaries (length units).
_CLEARANCE = 0.1

# Attempts per scene before generation gives up.
REJECTION_BUDGET = 1000


class GenerationError(RuntimeError):
    """Raised when rejection sampling exhausts its attempt budget."""

    def __init__(self, message: str, seed: int, index: int):
        super().__init__(message)
        self.seed = seed
        self.index = index


@dataclass(frozen=True)
class Opening:
    """A door-like passage: two wall rectangles sharing [wall_x_lo, wall_x_hi]
    with the free corridor [gap_y_lo, gap_y_hi] between them."""

    wall_x_lo: float
    wall_x_hi: float
    gap_y_lo: float
    gap_y_hi: float
    index: int

    @property
    def gap_width(self) -> float:
        return self.gap_y_hi - self.gap_y_lo

    @property
    def gap_center(self) -> float:
        return 0.5 * (self.gap_y_lo + self.gap_y_hi)

    def walls(self, workspace: Rect) -> tuple[Rect, Rect]:
        """Lower and upper wall rectangles tiling the workspace y-range
        minus the gap."""
        lower = Rect(self.wall_x_lo, self.wall_x_hi, workspace.y_lo, self.gap_y_lo)
        upper = Rect(self.wall_x_lo, self.wall_x_hi, self.gap_y_hi, workspace.y_hi)
        return lower, upper


@dataclass(frozen=True)
class Scene:
    workspace: Rect
    obstacles: tuple[Rect, ...]
    openings: tuple[Opening, ...]
    object: Polygon
    start: Pose
    goal: Pose
    id: str
    distribution_tag: str
    gen: dict | None = None

    def validate(self) -> None:
        """Raise ValueError on any structural invariant violation."""
        for i, ob in enumerate(self.obstacles):
            if not self.workspace.contains_rect(ob):
                raise ValueError(f"obstacle {i} leaves the workspace: {ob}")
        prev_hi = None
        for k, op in enumerate(self.openings):
            if op.gap_y_lo >= op.gap_y_hi:
                raise ValueError(f"opening {k} has an empty gap")
            if op.gap_y_lo < self.workspace.y_lo - EPS or op.gap_y_hi > self.workspace.y_hi + EPS:
                raise ValueError(f"opening {k} gap outside the workspace y-range")
            if prev_hi is not None and op.wall_x_lo < prev_hi - EPS:
                raise ValueError(f"openings {k - 1} and {k} overlap in x")
            if k > 0 and op.wall_x_lo < self.openings[k - 1].wall_x_lo:
                raise ValueError("openings not sorted by wall_x_lo")
            prev_hi = op.wall_x_hi
        if self.distribution_tag not in ("ID", "OOD"):
            raise ValueError(f"unknown distribution tag {self.distribution_tag!r}")


@dataclass(frozen=True)
class GenParams:
    num_openings: int
    opening_width_range: tuple[float, float]
    inter_opening_gap_range: tuple[float, float]
    wall_thickness_range: tuple[float, float]
    object_shape: str | Polygon = "I"
    seed: int = 0
    distribution: str = "ID"

    def __post_init__(self) -> None:
        if self.num_openings < 0:
            raise ValueError("num_openings must be >= 0")
        for name in ("opening_width_range", "inter_opening_gap_range", "wall_thickness_range"):
            lo, hi = getattr(self, name)
            if not (0.0 < lo <= hi):
                raise ValueError(f"{name} must satisfy 0 < lo <= hi, got ({lo}, {hi})")
        if self.distribution not in ("ID", "OOD"):
            raise ValueError(f"distribution must be ID or OOD, got {self.distribution!r}")

    def to_dict(self, index: int = 0) -> dict:
        shape = self.object_shape
        shape_doc = shape if isinstance(shape, str) else [list(v) for v in shape.vertices]
        return {
            "num_openings": self.num_openings,
            "opening_width_range": list(self.opening_width_range),
            "inter_opening_gap_range": list(self.inter_opening_gap_range),
            "wall_thickness_range": list(self.wall_thickness_range),
            "object_shape": shape_doc,
            "seed": self.seed,
            "distribution": self.distribution,
            "index": index,
        }

    @staticmethod
    def from_dict(doc: dict) -> "GenParams":
        shape = doc["object_shape"]
        if not isinstance(shape, str):
            shape = Polygon(tuple((v[0], v[1]) for v in shape))
        return GenParams(
            num_openings=doc["num_openings"],
            opening_width_range=tuple(doc["opening_width_range"]),
            inter_opening_gap_range=tuple(doc["inter_opening_gap_range"]),
            wall_thickness_range=tuple(doc["wall_thickness_range"]),
            object_shape=shape,
            seed=doc["seed"],
            distribution=doc["distribution"],
        )


# ---------------------------------------------------------------------------
# Object shape library
# ---------------------------------------------------------------------------

_SHAPES: dict[str, Polygon] = {
    # Long bar, 2.4 x 0.6, centered on the body origin.
    "I": Polygon(((-1.2, -0.3), (1.2, -0.3), (1.2, 0.3), (-1.2, 0.3))),
    # Stem 0.6 x 1.8 topped by a bar 1.8 x 0.6; bounding box centered.
    "T": Polygon(
        (
            (-0.3, -1.2),
            (0.3, -1.2),
            (0.3, 0.6),
            (0.9, 0.6),
            (0.9, 1.2),
            (-0.9, 1.2),
            (-0.9, 0.6),
            (-0.3, 0.6),
        )
    ),
    # Two arms of thickness 0.6; bounding box centered.
    "L": Polygon(
        (
            (-0.9, -0.9),
            (0.9, -0.9),
            (0.9, -0.3),
            (-0.3, -0.3),
            (-0.3, 0.9),
            (-0.9, 0.9),
        )
    ),
}


def object_polygon(shape: str | Polygon) -> Polygon:
    if isinstance(shape, Polygon):
        return shape
    try:
        return _SHAPES[shape]
    except KeyError:
        raise ValueError(f"unknown object shape {shape!r}; known: {sorted(_SHAPES)}") from None


def extent_at(poly: Polygon, phi: float) -> tuple[float, float]:
    """(x-extent, y-extent) of the polygon rotated by phi about the origin."""
    pts = transform_vertices(poly, Pose(0.0, 0.0, phi))
    xs = [p[0] for p in pts]
    ys = [p[1] for p in pts]
    return max(xs) - min(xs), max(ys) - min(ys)


def thinnest_heading(poly: Polygon, samples: int = 1440) -> tuple[float, float]:
    """Heading minimizing the object's y-extent, and that minimal extent.

    Scans headings in [0, pi) (extents repeat with period pi); ties prefer
    the smallest heading so axis-aligned shapes come out at 0.
    """
    best_phi, best_ext = 0.0, extent_at(poly, 0.0)[1]
    for k in range(1, samples):
        phi = math.pi * k / samples
        ext = extent_at(poly, phi)[1]
        if ext < best_ext - 1e-12:
            best_phi, best_ext = phi, ext
    return best_phi, best_ext


# ---------------------------------------------------------------------------
# Default parameter bands
# ---------------------------------------------------------------------------


def id_params(seed: int, num_openings: int = 2, object_shape: str | Polygon = "I") -> GenParams:
    """In-distribution defaults: generous openings, mid-size channels."""
    w_obj = thinnest_heading(object_polygon(object_shape))[1]
    return GenParams(
        num_openings=num_openings,
        opening_width_range=(1.2 * w_obj, 1.8 * w_obj),
        inter_opening_gap_range=(1.5, 3.5),
        wall_thickness_range=(0.4, 0.8),
        object_shape=object_shape,
        seed=seed,
        distribution="ID",
    )


def ood_params(seed: int, num_openings: int = 2, object_shape: str | Polygon = "I") -> GenParams:
    """Out-of-distribution defaults: per-dimension bands disjoint from the
    in-distribution ones (tighter openings, shorter channels, thicker walls)."""
    w_obj = thinnest_heading(object_polygon(object_shape))[1]
    return GenParams(
        num_openings=num_openings,
        opening_width_range=(1.05 * w_obj, 1.18 * w_obj),
        inter_opening_gap_range=(0.8, 1.4),
        wall_thickness_range=(0.9, 1.3),
        object_shape=object_shape,
        seed=seed,
        distribution="OOD",
    )


# ---------------------------------------------------------------------------
# Generation
# ---------------------------------------------------------------------------


def sub_seed(seed: int, index: int) -> int:
    """Splittable counter-based sub-seed: independent of draw order, stable
    across runs and platforms."""
    digest = hashlib.sha256(f"{seed}:{index}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


def generate_scene(params: GenParams, index: int = 0) -> Scene:
    """Generate one scene, deterministically for (params.seed, index).

    Openings are placed left to right; the start pose is sampled left of the
    first opening and the goal right of the last, both verified against the
    boundary and obstacle constraints before the scene is returned.
    """
    # Imported here: the verifier consumes Scene values, so a module-level
    # import would be circular.
    from .verifier import check_pose

    poly = object_polygon(params.object_shape)
    phi_star, w_obj = thinnest_heading(poly)
    if params.opening_width_range[0] <= w_obj:
        raise ValueError(
            f"opening widths must exceed the object's minimum cross-section "
            f"{w_obj:.3f}, got range {params.opening_width_range}"
        )

    ws = DEFAULT_WORKSPACE
    rng = random.Random(sub_seed(params.seed, index))
    # Bounding box of the object at the traversal heading, relative to the
    # pose origin (not necessarily centered for custom polygons).
    pts = transform_vertices(poly, Pose(0.0, 0.0, phi_star))
    bx_lo = min(p[0] for p in pts)
    bx_hi = max(p[0] for p in pts)
    by_lo = min(p[1] for p in pts)
    by_hi = max(p[1] for p in pts)
    obj_len = bx_hi - bx_lo

    n = params.num_openings
    for _attempt in range(REJECTION_BUDGET):
        thicknesses = [rng.uniform(*params.wall_thickness_range) for _ in range(n)]
        channels = [rng.uniform(*params.inter_opening_gap_range) for _ in range(max(0, n - 1))]
        widths = [rng.uniform(*params.opening_width_range) for _ in range(n)]

        # End zones must admit a start/goal pose with clearance.
        end_zone = obj_len + 2.0 * _CLEARANCE
        span = sum(thicknesses) + sum(channels)
        slack = ws.width - 2.0 * end_zone - span
        if n > 0 and slack < 0.0:
            continue

        wall_x: list[tuple[float, float]] = []
        if n > 0:
            x = ws.x_lo + end_zone + rng.uniform(0.0, slack)
            for i in range(n):
                wall_x.append((x, x + thicknesses[i]))
                x += thicknesses[i]
                if i < n - 1:
                    x += channels[i]

        centers: list[float] = []
        ok = True
        for i in range(n):
            half = widths[i] / 2.0
            lo = ws.y_lo + half + 2.0 * _CLEARANCE
            hi = ws.y_hi - half - 2.0 * _CLEARANCE
            if lo > hi:
                # Opening wider than the sampling band: degenerate wide-open
                # case, center the gap (walls may collapse to zero height).
                centers.append(0.5 * (ws.y_lo + ws.y_hi))
                continue
            if i == 0 or channels[i - 1] >= obj_len + 0.4:
                centers.append(rng.uniform(lo, hi))
            else:
                # Channel too short to re-align inside: couple consecutive
                # gap centers so a fixed-heading thread exists.
                band_prev = (widths[i - 1] - w_obj) / 2.0
                band_cur = (widths[i] - w_obj) / 2.0
                dmax = 0.5 * min(band_prev, band_cur)
                clo = max(lo, centers[i - 1] - dmax)
                chi = min(hi, centers[i - 1] + dmax)
                if clo > chi:
                    ok = False
                    break
                centers.append(rng.uniform(clo, chi))
        if not ok:
            continue

        openings = []
        obstacles: list[Rect] = []
        for i in range(n):
            half = widths[i] / 2.0
            gap_lo = max(ws.y_lo, centers[i] - half)
            gap_hi = min(ws.y_hi, centers[i] + half)
            op = Opening(wall_x[i][0], wall_x[i][1], gap_lo, gap_hi, i)
            openings.append(op)
            obstacles.extend(op.walls(ws))

        first_wall = wall_x[0][0] if n > 0 else 0.5 * (ws.x_lo + ws.x_hi)
        last_wall = wall_x[-1][1] if n > 0 else 0.5 * (ws.x_lo + ws.x_hi)

        def sample_pose(x_min: float, x_max: float) -> Pose | None:
            x_lo_b = x_min - bx_lo + _CLEARANCE
            x_hi_b = x_max - bx_hi - _CLEARANCE
            y_lo_b = ws.y_lo - by_lo + _CLEARANCE
            y_hi_b = ws.y_hi - by_hi - _CLEARANCE
            if x_lo_b > x_hi_b or y_lo_b > y_hi_b:
                return None
            return Pose(rng.uniform(x_lo_b, x_hi_b), rng.uniform(y_lo_b, y_hi_b), phi_star)

        scene_stub = Scene(
            workspace=ws,
            obstacles=tuple(obstacles),
            openings=tuple(openings),
            object=poly,
            start=Pose(0.0, 0.0, 0.0),
            goal=Pose(0.0, 0.0, 0.0),
            id="",
            distribution_tag=params.distribution,
        )

        start = goal = None
        for _ in range(20):
            cand = sample_pose(ws.x_lo, first_wall)
            if cand is not None and check_pose(scene_stub, cand).ok:
                start = cand
                break
        for _ in range(20):
            cand = sample_pose(last_wall, ws.x_hi)
            if cand is not None and check_pose(scene_stub, cand).ok:
                goal = cand
                break
        if start is None or goal is None:
            continue

        scene = Scene(
            workspace=ws,
            obstacles=tuple(obstacles),
            openings=tuple(openings),
            object=poly,
            start=start,
            goal=goal,
            id=f"{params.distribution.lower()}-{params.seed}-{index:05d}",
            distribution_tag=params.distribution,
            gen={"params": params.to_dict(index), "seed": params.seed},
        )
        scene.validate()
        return scene

    raise GenerationError(
        f"scene generation exhausted {REJECTION_BUDGET} attempts "
        f"(seed={params.seed}, index={index}, params={params})",
        params.seed,
        index,
    )


def generate_batch(params: GenParams, count: int) -> list[Scene]:
    """Generate ``count`` scenes from per-index sub-seeds of params.seed."""
    if count < 1:
        raise ValueError("count must be >= 1")
    scenes = []
    for i in range(count):
        try:
            scenes.append(generate_scene(params, index=i))
        except GenerationError as e:
            raise GenerationError(f"batch generation failed at index {i}: {e}", params.seed, i) from e
    return scenes


def opening_summary(scene: Scene) -> list[dict]:
    """Per-opening geometry records plus the free channel to the next opening."""
    records = []
    for k, op in enumerate(scene.openings):
        nxt = scene.openings[k + 1] if k + 1 < len(scene.openings) else None
        records.append(
            {
                "index": op.index,
                "x_lo": op.wall_x_lo,
                "x_hi": op.wall_x_hi,
                "gap_y_lo": op.gap_y_lo,
                "gap_y_hi": op.gap_y_hi,
                "gap_width": op.gap_width,
                "gap_to_next": (nxt.wall_x_lo - op.wall_x_hi) if nxt is not None else None,
            }
        )
    return records


# ---------------------------------------------------------------------------
# Serialization (scene file schema)
# ---------------------------------------------------------------------------


def _rect_doc(r: Rect) -> dict:
    return {"x_lo": r.x_lo, "x_hi": r.x_hi, "y_lo": r.y_lo, "y_hi": r.y_hi}


def _pose_doc(q: Pose) -> dict:
    return {"x": q.x, "y": q.y, "phi": q.phi}


def scene_to_dict(scene: Scene) -> dict:
    return {
        "workspace": _rect_doc(scene.workspace),
        "obstacles": [_rect_doc(r) for r in scene.obstacles],
        "openings": [
            {
                "wall_x_lo": op.wall_x_lo,
                "wall_x_hi": op.wall_x_hi,
                "gap_y_lo": op.gap_y_lo,
                "gap_y_hi": op.gap_y_hi,
                "index": op.index,
            }
            for op in scene.openings
        ],
        "object": {"vertices": [list(v) for v in scene.object.vertices]},
        "start": _pose_doc(scene.start),
        "goal": _pose_doc(scene.goal),
        "id": scene.id,
        "distribution_tag": scene.distribution_tag,
        "gen": scene.gen,
    }


def scene_from_dict(doc: dict) -> Scene:
    try:
        scene = Scene(
            workspace=Rect(**doc["workspace"]),
            obstacles=tuple(Rect(**r) for r in doc["obstacles"]),
            openings=tuple(
                Opening(
                    wall_x_lo=o["wall_x_lo"],
                    wall_x_hi=o["wall_x_hi"],
                    gap_y_lo=o["gap_y_lo"],
                    gap_y_hi=o["gap_y_hi"],
                    index=o["index"],
                )
                for o in doc["openings"]
            ),
            object=Polygon(tuple((v[0], v[1]) for v in doc["object"]["vertices"])),
            start=Pose(**doc["start"]),
            goal=Pose(**doc["goal"]),
            id=doc["id"],
            distribution_tag=doc["distribution_tag"],
            gen=doc.get("gen"),
        )
    except (KeyError, TypeError) as e:
        raise ValueError(f"malformed scene document: {e}") from e
    scene.validate()
    return scene


def save_scene(scene: Scene, path: str | Path) -> None:
    Path(path).write_text(json.dumps(scene_to_dict(scene), indent=2) + "\n")


def load_scene(path: str | Path) -> Scene:
    return scene_from_dict(json.loads(Path(path).read_text()))
