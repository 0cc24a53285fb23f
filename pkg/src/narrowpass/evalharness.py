"""Batch evaluation of waypoint policies over scene corpora, the scripted
baseline policy, and the group-reward loop consumed by external trainers.

A policy adapter is anything with ``complete(prompt_text, scene) -> str``.
The subprocess adapter feeds the prompt on stdin and reads the completion
from stdout, one invocation per scene; the baseline adapter answers
in-process from scene geometry alone.
"""

from __future__ import annotations

import math
import multiprocessing
import statistics
import subprocess
import time
from dataclasses import dataclass, field
from typing import Sequence

from .cost_reward import CostBreakdown, CostWeights, geometric_reward, group_advantages, trajectory_cost
from .densifier import LatticeConfig, Trajectory, densify_with_fallback
from .scene import Scene, thinnest_heading
from .textio import ParseError, build_prompt, parse_completion, serialize_waypoints
from .geometry import Pose
from .verifier import VerificationReport, VerifyConfig, verify_trajectory


class PolicyError(RuntimeError):
    """The external policy crashed, timed out, or returned no output."""


def baseline_policy(scene: Scene, rows_per_opening: int = 3) -> str:
    """Scripted stand-in policy: per opening, rows swept from just before the
    wall to just past it along the gap midline, heading held at the object's
    thinnest cross-section."""
    if rows_per_opening < 3:
        raise ValueError("baseline_policy needs at least 3 rows per opening")
    phi_star, _ = thinnest_heading(scene.object)
    ws = scene.workspace
    pts = [
        (math.cos(phi_star) * vx - math.sin(phi_star) * vy, math.sin(phi_star) * vx + math.cos(phi_star) * vy)
        for vx, vy in scene.object.vertices
    ]
    bx_lo = min(p[0] for p in pts)
    bx_hi = max(p[0] for p in pts)

    poses: list[Pose] = []
    for op in scene.openings:
        pre_x = max(op.wall_x_lo - 0.25, ws.x_lo - bx_lo + 0.05)
        post_x = min(op.wall_x_hi + 0.25, ws.x_hi - bx_hi - 0.05)
        if pre_x > post_x:
            pre_x = post_x = 0.5 * (op.wall_x_lo + op.wall_x_hi)
        y = op.gap_center
        k = rows_per_opening
        for r in range(k):
            x = pre_x + (post_x - pre_x) * r / (k - 1)
            poses.append(Pose(x, y, phi_star))
    return serialize_waypoints(poses)


@dataclass(frozen=True)
class BaselinePolicy:
    rows_per_opening: int = 3

    def complete(self, prompt: str, scene: Scene) -> str:
        return baseline_policy(scene, self.rows_per_opening)


@dataclass(frozen=True)
class SubprocessPolicy:
    """Runs ``command`` once per scene: prompt on stdin, completion on stdout."""

    command: tuple[str, ...]
    timeout: float = 120.0

    def complete(self, prompt: str, scene: Scene) -> str:
        try:
            proc = subprocess.run(
                list(self.command),
                input=prompt.encode(),
                capture_output=True,
                timeout=self.timeout,
            )
        except subprocess.TimeoutExpired as e:
            raise PolicyError(f"policy timed out after {self.timeout}s") from e
        except OSError as e:
            raise PolicyError(f"policy failed to start: {e}") from e
        if proc.returncode != 0:
            raise PolicyError(f"policy exited with status {proc.returncode}")
        return proc.stdout.decode()


@dataclass
class ReplayPolicy:
    """Replays canned completions per scene id; successive calls for the same
    scene walk its list (the last entry repeats)."""

    completions: dict[str, list[str]]
    _cursor: dict[str, int] = field(default_factory=dict)

    def complete(self, prompt: str, scene: Scene) -> str:
        queue = self.completions[scene.id]
        i = self._cursor.get(scene.id, 0)
        self._cursor[scene.id] = i + 1
        return queue[min(i, len(queue) - 1)]


@dataclass
class SceneRecord:
    scene_id: str
    split: str
    parse_ok: bool
    parse_error: str | None = None
    policy_error: str | None = None
    report: VerificationReport | None = None
    cost: CostBreakdown | None = None
    reward: float | None = None
    timings: dict = field(default_factory=dict)
    trajectory: Trajectory | None = None

    def to_dict(self) -> dict:
        return {
            "scene_id": self.scene_id,
            "split": self.split,
            "parse_ok": self.parse_ok,
            "parse_error": self.parse_error,
            "policy_error": self.policy_error,
            "report": self.report.to_dict() if self.report else None,
            "cost": self.cost.to_dict() if self.cost else None,
            "reward": self.reward,
            "timings": self.timings,
        }


@dataclass(frozen=True)
class MetricsTable:
    parse_rate: float
    success_rate: float
    c1_fail: float
    c2_fail: float
    c3_fail: float
    c4_fail: float
    reward_mean: float
    reward_std: float
    n_scenes: int
    split: str

    def to_dict(self) -> dict:
        return {
            "split": self.split,
            "n_scenes": self.n_scenes,
            "parse_rate": self.parse_rate,
            "success_rate": self.success_rate,
            "c1_fail": self.c1_fail,
            "c2_fail": self.c2_fail,
            "c3_fail": self.c3_fail,
            "c4_fail": self.c4_fail,
            "reward_mean": self.reward_mean,
            "reward_std": self.reward_std,
        }

    def to_text(self) -> str:
        headers = ["Split", "N", "Parse", "Success", "C1 fail", "C2 fail", "C3 fail", "C4 fail", "Avg. Geom. Reward"]
        row = [
            self.split,
            str(self.n_scenes),
            f"{self.parse_rate:.1f}",
            f"{self.success_rate:.1f}",
            f"{self.c1_fail:.1f}",
            f"{self.c2_fail:.1f}",
            f"{self.c3_fail:.1f}",
            f"{self.c4_fail:.1f}",
            f"{self.reward_mean:.2f}±{self.reward_std:.2f}",
        ]
        widths = [max(len(h), len(v)) for h, v in zip(headers, row)]
        line1 = "  ".join(h.rjust(w) for h, w in zip(headers, widths))
        line2 = "  ".join(v.rjust(w) for v, w in zip(row, widths))
        return line1 + "\n" + line2


def evaluate_scene(
    policy,
    scene: Scene,
    cfg: VerifyConfig | None = None,
    lat: LatticeConfig | None = None,
    weights: CostWeights | None = None,
    rows_per_opening: int = 3,
) -> SceneRecord:
    """Prompt -> policy -> parse -> densify -> verify -> cost -> reward."""
    cfg = cfg or VerifyConfig()
    lat = lat or LatticeConfig()
    weights = weights or CostWeights()

    record = SceneRecord(scene_id=scene.id, split=scene.distribution_tag, parse_ok=False)
    prompt = build_prompt(scene, cfg, rows_per_opening)

    t0 = time.perf_counter()
    try:
        completion = policy.complete(prompt.full_text, scene)
    except PolicyError as e:
        record.policy_error = str(e)
        record.parse_error = "policy_error"
        record.timings["policy_s"] = time.perf_counter() - t0
        return record
    record.timings["policy_s"] = time.perf_counter() - t0

    try:
        parsed = parse_completion(
            completion, expected=rows_per_opening * len(scene.openings), rows_per_opening=rows_per_opening
        )
    except ParseError as e:
        record.parse_error = e.kind
        return record
    record.parse_ok = True

    t0 = time.perf_counter()
    if parsed.poses:
        traj, _fallbacks = densify_with_fallback(scene, parsed.poses, lat, cfg)
    else:
        traj, _fallbacks = densify_with_fallback(scene, [scene.goal], lat, cfg)
    record.timings["densify_s"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    record.report = verify_trajectory(scene, traj.states, cfg, traj.waypoint_marks)
    record.cost = trajectory_cost(scene, traj.states, weights, cfg)
    record.reward = geometric_reward(record.cost.total, weights.alpha)
    record.timings["verify_s"] = time.perf_counter() - t0
    record.trajectory = traj
    return record


def _eval_one(args) -> SceneRecord:
    policy, scene, cfg, lat, weights, rows = args
    return evaluate_scene(policy, scene, cfg, lat, weights, rows)


def summarize(records: Sequence[SceneRecord], split: str, include_unparsed_in_reward: bool = True) -> MetricsTable:
    n = len(records)
    if n == 0:
        raise ValueError("summarize requires at least one record")
    parsed = [r for r in records if r.parse_ok]
    successes = sum(1 for r in parsed if r.report and r.report.success)
    fails = {"c1": 0, "c2": 0, "c3": 0, "c4": 0}
    col = {
        "out_of_workspace": "c1",
        "collision": "c2",
        "swept_collision": "c3",
        "step_size": "c4",
    }
    for r in parsed:
        if r.report and not r.report.success:
            fails[col[r.report.violation.value]] += 1
    if include_unparsed_in_reward:
        rewards = [r.reward if r.reward is not None else 0.0 for r in records]
    else:
        rewards = [r.reward for r in records if r.reward is not None]
    pct = 100.0 / n
    return MetricsTable(
        parse_rate=len(parsed) * pct,
        success_rate=successes * pct,
        c1_fail=fails["c1"] * pct,
        c2_fail=fails["c2"] * pct,
        c3_fail=fails["c3"] * pct,
        c4_fail=fails["c4"] * pct,
        reward_mean=statistics.fmean(rewards) if rewards else 0.0,
        reward_std=statistics.pstdev(rewards) if len(rewards) > 1 else 0.0,
        n_scenes=n,
        split=split,
    )


def evaluate_batch(
    policy,
    scenes: Sequence[Scene],
    cfg: VerifyConfig | None = None,
    lat: LatticeConfig | None = None,
    weights: CostWeights | None = None,
    rows_per_opening: int = 3,
    workers: int = 1,
    include_unparsed_in_reward: bool = True,
) -> tuple[MetricsTable, list[SceneRecord]]:
    """Evaluate every scene and aggregate the metric columns.

    Records are merged in scene-id order, so results are deterministic for a
    deterministic policy regardless of worker count.
    """
    if not scenes:
        raise ValueError("evaluate_batch requires at least one scene")
    jobs = [(policy, s, cfg, lat, weights, rows_per_opening) for s in scenes]
    if workers > 1:
        with multiprocessing.Pool(workers) as pool:
            records = pool.map(_eval_one, jobs)
    else:
        records = [_eval_one(j) for j in jobs]
    records.sort(key=lambda r: r.scene_id)
    splits = {s.distribution_tag for s in scenes}
    split = splits.pop() if len(splits) == 1 else "MIXED"
    return summarize(records, split, include_unparsed_in_reward), records


def grpo_reward_loop(
    policy,
    scenes: Sequence[Scene],
    group_size: int,
    cfg: VerifyConfig | None = None,
    lat: LatticeConfig | None = None,
    weights: CostWeights | None = None,
    rows_per_opening: int = 3,
    epsilon: float = 1e-6,
) -> list[dict]:
    """Per prompt: sample ``group_size`` completions, densify and score each,
    and emit the group's rewards, statistics, and relative advantages.

    Unparseable completions stay in the group at reward 0, ranking strictly
    below any parseable attempt.
    """
    if group_size < 1:
        raise ValueError("group_size must be >= 1")
    cfg = cfg or VerifyConfig()
    lat = lat or LatticeConfig()
    weights = weights or CostWeights()

    reports = []
    for scene in scenes:
        prompt = build_prompt(scene, cfg, rows_per_opening)
        rewards = []
        for _ in range(group_size):
            try:
                completion = policy.complete(prompt.full_text, scene)
                parsed = parse_completion(
                    completion,
                    expected=rows_per_opening * len(scene.openings),
                    rows_per_opening=rows_per_opening,
                )
            except (PolicyError, ParseError):
                rewards.append(0.0)
                continue
            waypoints = list(parsed.poses) or [scene.goal]
            traj, _ = densify_with_fallback(scene, waypoints, lat, cfg)
            cost = trajectory_cost(scene, traj.states, weights, cfg)
            rewards.append(geometric_reward(cost.total, weights.alpha))
        scores = group_advantages(rewards, epsilon)
        reports.append({"scene_id": scene.id, **scores.to_dict()})
    return reports
