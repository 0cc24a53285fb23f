"""HTTP session service for human demonstration collection, plus stateless
verification and scoring endpoints for external trainers.

Sessions live in memory; each session's mutations are serialized by a lock,
so interleaved requests observe one total order. Moves are applied even when
the resulting pose is infeasible — the response carries preview flags so the
operator sees red/green feedback and decides what to record.
"""

from __future__ import annotations

import json
import threading
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel

from .cost_reward import CostWeights, geometric_reward, trajectory_cost
from .densifier import LatticeConfig
from .geometry import Pose
from .scene import (
    GenParams,
    Scene,
    generate_scene,
    id_params,
    ood_params,
    scene_from_dict,
    scene_to_dict,
)
from .textio import parse_completion, save_demonstration
from .verifier import VerifyConfig, check_pose, check_swept, verify_waypoints

HISTORY_LIMIT = 1000


@dataclass
class Session:
    id: str
    scene: Scene
    current: Pose
    recorded: list[Pose] = field(default_factory=list)
    history: list[tuple[Pose, tuple[Pose, ...]]] = field(default_factory=list)
    created_at: float = field(default_factory=time.time)
    last_swept_ok: bool | None = None
    saves: int = 0
    lock: threading.Lock = field(default_factory=threading.Lock)

    def snapshot(self) -> None:
        self.history.append((self.current, tuple(self.recorded)))
        if len(self.history) > HISTORY_LIMIT:
            del self.history[0]


class CreateSessionBody(BaseModel):
    scene_id: str | None = None
    scene: dict | None = None


class MoveBody(BaseModel):
    dx: float = 0.0
    dy: float = 0.0
    dphi: float = 0.0


class GenerateBody(BaseModel):
    seed: int = 0
    index: int = 0
    num_openings: int = 2
    object_shape: str = "I"
    distribution: str = "ID"


class VerifyBody(BaseModel):
    scene: dict
    waypoints: list[dict]
    cfg: dict | None = None


class ScoreBody(BaseModel):
    scene: dict
    trajectory: list[dict]
    weights: dict | None = None


def create_app(
    data_dir: str | Path = "narrowpass-data",
    cfg: VerifyConfig | None = None,
    lat: LatticeConfig | None = None,
    rows_per_opening: int = 3,
) -> FastAPI:
    cfg = cfg or VerifyConfig()
    lat = lat or LatticeConfig()
    data_dir = Path(data_dir)
    scenes_dir = data_dir / "scenes"
    demos_dir = data_dir / "demos"

    app = FastAPI(title="narrowpass demonstration service")
    sessions: dict[str, Session] = {}

    def parse_pose(doc: dict) -> Pose:
        try:
            return Pose(float(doc["x"]), float(doc["y"]), float(doc["phi"]))
        except (KeyError, TypeError, ValueError) as e:
            raise HTTPException(400, f"malformed pose {doc!r}: {e}")

    def get_session(sid: str) -> Session:
        sess = sessions.get(sid)
        if sess is None:
            raise HTTPException(404, f"unknown session {sid!r}")
        return sess

    def view(sess: Session) -> dict:
        pc = check_pose(sess.scene, sess.current)
        return {
            "id": sess.id,
            "scene": scene_to_dict(sess.scene),
            "current": {"x": sess.current.x, "y": sess.current.y, "phi": sess.current.phi},
            "recorded": [{"x": q.x, "y": q.y, "phi": q.phi} for q in sess.recorded],
            "required_waypoints": rows_per_opening * len(sess.scene.openings),
            "preview": {
                "c1_ok": pc.c1_ok,
                "c2_ok": pc.c2_ok,
                "swept_ok": sess.last_swept_ok,
                "bad_vertex": pc.bad_vertex,
                "bad_obstacle": pc.bad_obstacle,
                "magnitude": pc.magnitude,
            },
            "controls": {
                "lin_step": cfg.lin_limit / 5.0,
                "ang_step": cfg.ang_limit / 3.0,
                "lin_limit": cfg.lin_limit,
                "ang_limit": cfg.ang_limit,
            },
            "created_at": sess.created_at,
        }

    @app.post("/sessions")
    def create_session(body: CreateSessionBody) -> dict:
        if (body.scene_id is None) == (body.scene is None):
            raise HTTPException(400, "provide exactly one of scene_id or scene")
        if body.scene_id is not None:
            path = scenes_dir / f"{body.scene_id}.json"
            if not path.exists():
                raise HTTPException(404, f"unknown scene id {body.scene_id!r}")
            scene = scene_from_dict(json.loads(path.read_text()))
        else:
            try:
                scene = scene_from_dict(body.scene)
            except ValueError as e:
                raise HTTPException(400, f"invalid scene: {e}")
        sid = uuid.uuid4().hex
        sess = Session(id=sid, scene=scene, current=scene.start)
        sessions[sid] = sess
        return view(sess)

    @app.get("/sessions/{sid}")
    def get_view(sid: str) -> dict:
        sess = get_session(sid)
        with sess.lock:
            return view(sess)

    @app.post("/sessions/{sid}/move")
    def move(sid: str, body: MoveBody) -> dict:
        sess = get_session(sid)
        if abs(body.dx) > cfg.lin_limit or abs(body.dy) > cfg.lin_limit:
            raise HTTPException(400, f"translation delta exceeds per-step limit {cfg.lin_limit}")
        if abs(body.dphi) > cfg.ang_limit:
            raise HTTPException(400, f"rotation delta exceeds per-step limit {cfg.ang_limit}")
        with sess.lock:
            prev = sess.current
            try:
                new = Pose(prev.x + body.dx, prev.y + body.dy, prev.phi + body.dphi)
            except ValueError as e:
                raise HTTPException(400, str(e))
            sess.snapshot()
            sess.current = new
            sess.last_swept_ok = check_swept(sess.scene, prev, new, cfg).ok
            return view(sess)

    @app.post("/sessions/{sid}/record")
    def record(sid: str) -> dict:
        sess = get_session(sid)
        with sess.lock:
            sess.snapshot()
            sess.recorded.append(sess.current)
            return view(sess)

    @app.post("/sessions/{sid}/undo")
    def undo(sid: str) -> dict:
        sess = get_session(sid)
        with sess.lock:
            if sess.history:
                sess.current, recorded = sess.history.pop()
                sess.recorded = list(recorded)
            return view(sess)

    @app.post("/sessions/{sid}/reset")
    def reset(sid: str) -> dict:
        sess = get_session(sid)
        with sess.lock:
            sess.snapshot()
            sess.current = sess.scene.start
            sess.last_swept_ok = None
            return view(sess)

    @app.post("/sessions/{sid}/clear")
    def clear(sid: str) -> dict:
        sess = get_session(sid)
        with sess.lock:
            sess.snapshot()
            sess.recorded = []
            return view(sess)

    @app.post("/sessions/{sid}/save")
    def save(sid: str) -> dict:
        sess = get_session(sid)
        with sess.lock:
            if not sess.recorded:
                raise HTTPException(400, "nothing recorded; save requires at least one waypoint")
            name = f"demo-{sess.id[:8]}-{sess.saves:03d}"
            sess.saves += 1
            csv_path, scene_path = save_demonstration(demos_dir, name, sess.scene, sess.recorded)
            # Verify the poses as persisted (fixed-point quantized), so a
            # later replay of the file reproduces this report exactly.
            saved = parse_completion(csv_path.read_text(), expected=len(sess.recorded))
            report = verify_waypoints(sess.scene, list(saved.poses), cfg, lat)
            return {
                "csv_path": str(csv_path),
                "scene_path": str(scene_path),
                "report": report.to_dict(),
                "view": view(sess),
            }

    @app.get("/scenes")
    def list_scenes() -> dict:
        if not scenes_dir.exists():
            return {"scenes": []}
        return {"scenes": sorted(p.stem for p in scenes_dir.glob("*.json"))}

    @app.post("/scenes/generate")
    def generate(body: GenerateBody) -> dict:
        factory = id_params if body.distribution == "ID" else ood_params
        try:
            params = factory(body.seed, body.num_openings, body.object_shape)
            scene = generate_scene(params, index=body.index)
        except ValueError as e:
            raise HTTPException(400, str(e))
        scenes_dir.mkdir(parents=True, exist_ok=True)
        doc = scene_to_dict(scene)
        (scenes_dir / f"{scene.id}.json").write_text(json.dumps(doc, indent=2) + "\n")
        return doc

    @app.post("/verify")
    def verify(body: VerifyBody) -> dict:
        try:
            scene = scene_from_dict(body.scene)
        except ValueError as e:
            raise HTTPException(400, f"invalid scene: {e}")
        waypoints = [parse_pose(d) for d in body.waypoints]
        if not waypoints:
            raise HTTPException(400, "waypoints must be nonempty")
        use_cfg = VerifyConfig(**body.cfg) if body.cfg else cfg
        report = verify_waypoints(scene, waypoints, use_cfg, lat)
        return report.to_dict()

    @app.post("/score")
    def score(body: ScoreBody) -> dict:
        try:
            scene = scene_from_dict(body.scene)
        except ValueError as e:
            raise HTTPException(400, f"invalid scene: {e}")
        states = [parse_pose(d) for d in body.trajectory]
        if not states:
            raise HTTPException(400, "trajectory must be nonempty")
        weights = CostWeights(**body.weights) if body.weights else CostWeights()
        cost = trajectory_cost(scene, states, weights, cfg)
        return {**cost.to_dict(), "reward": geometric_reward(cost.total, weights.alpha)}

    return app
