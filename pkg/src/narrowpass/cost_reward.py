"""Violation costs, the geometry-derived scalar reward, and group-relative
advantage arithmetic.

The total cost of a dense trajectory is

    C = w_b * sum_h C_b(h) + w_o * sum_h C_o(h) + w_s * sum_{h>=1} C_s(h-1, h)

where C_b squares each vertex's workspace deficit, C_o squares each vertex's
obstacle penetration depth, and C_s squares per-step excesses over the motion
limits. The reward R = 1 / (1 + alpha * C) maps cost into (0, 1], with R = 1
exactly at zero cost. Swept collisions carry no separate term: the cost is
evaluated on dense states directly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .geometry import Pose, signed_rect_distance, transform_vertices, workspace_deficit, wrap_angle
from .scene import Scene
from .verifier import VerifyConfig


@dataclass(frozen=True)
class CostWeights:
    w_b: float = 1.0
    w_o: float = 1.0
    w_s: float = 0.5
    alpha: float = 1.0

    def __post_init__(self) -> None:
        for name in ("w_b", "w_o", "w_s", "alpha"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be strictly positive")


@dataclass(frozen=True)
class CostBreakdown:
    boundary_sum: float
    obstacle_sum: float
    step_sum: float
    total: float

    def to_dict(self) -> dict:
        return {
            "boundary_sum": self.boundary_sum,
            "obstacle_sum": self.obstacle_sum,
            "step_sum": self.step_sum,
            "total": self.total,
        }


@dataclass(frozen=True)
class GroupScores:
    rewards: tuple[float, ...]
    mean: float
    std: float
    advantages: tuple[float, ...]
    epsilon: float

    def to_dict(self) -> dict:
        return {
            "rewards": list(self.rewards),
            "mean": self.mean,
            "std": self.std,
            "advantages": list(self.advantages),
        }


def boundary_cost(scene: Scene, q: Pose) -> float:
    """Squared workspace deficits summed over the transformed vertices."""
    ws = scene.workspace
    return sum(workspace_deficit(p, ws) ** 2 for p in transform_vertices(scene.object, q))


def obstacle_cost(scene: Scene, q: Pose) -> float:
    """Squared penetration depths summed over vertices and obstacles.

    Zero iff no vertex penetrates any obstacle; contact (zero signed
    distance) contributes nothing.
    """
    pts = transform_vertices(scene.object, q)
    total = 0.0
    for ob in scene.obstacles:
        if ob.width <= 0.0 or ob.height <= 0.0:
            continue  # zero-area rectangles admit no penetration depth
        for p in pts:
            d = signed_rect_distance(p, ob)
            if d < 0.0:
                total += d * d
    return total


def step_cost(qa: Pose, qb: Pose, cfg: VerifyConfig) -> float:
    """Squared excesses of one step over the translation/rotation limits."""
    d_lin = math.hypot(qb.x - qa.x, qb.y - qa.y)
    d_ang = abs(wrap_angle(qb.phi - qa.phi))
    return max(0.0, d_lin - cfg.lin_limit) ** 2 + max(0.0, d_ang - cfg.ang_limit) ** 2


def trajectory_cost(
    scene: Scene, traj: Sequence[Pose], weights: CostWeights, cfg: VerifyConfig
) -> CostBreakdown:
    """Accumulate boundary/obstacle sums over all states and step sums over
    consecutive pairs, then weight into the total cost."""
    if not traj:
        raise ValueError("trajectory_cost requires a nonempty trajectory")
    b = sum(boundary_cost(scene, q) for q in traj)
    o = sum(obstacle_cost(scene, q) for q in traj)
    s = sum(step_cost(traj[h - 1], traj[h], cfg) for h in range(1, len(traj)))
    total = weights.w_b * b + weights.w_o * o + weights.w_s * s
    return CostBreakdown(b, o, s, total)


def geometric_reward(total_cost: float, alpha: float) -> float:
    """Map a nonnegative violation cost into (0, 1]: R = 1 / (1 + alpha*C)."""
    if total_cost < 0.0:
        raise ValueError("total_cost must be nonnegative")
    if alpha <= 0.0:
        raise ValueError("alpha must be positive")
    return 1.0 / (1.0 + alpha * total_cost)


def group_advantages(rewards: Sequence[float], epsilon: float = 1e-6) -> GroupScores:
    """Group-relative advantages: (R - mean) / (population std + epsilon).

    The mean is refined by re-centering the deviations once; otherwise a
    near-zero-variance group amplifies the rounding of the plain mean by
    1/epsilon and the advantages stop summing to zero.
    """
    if not rewards:
        raise ValueError("group_advantages requires a nonempty group")
    if epsilon <= 0.0:
        raise ValueError("epsilon must be positive")
    g = len(rewards)
    mean = math.fsum(rewards) / g
    devs = [r - mean for r in rewards]
    correction = math.fsum(devs) / g
    devs = [d - correction for d in devs]
    std = math.sqrt(math.fsum(d * d for d in devs) / g)
    advantages = tuple(d / (std + epsilon) for d in devs)
    return GroupScores(tuple(rewards), mean, std, advantages, epsilon)


def grpo_objective(
    advantages: Sequence[float],
    log_likelihoods: Sequence[float],
    kl: float,
    beta_kl: float,
) -> float:
    """Group objective: mean of advantage-weighted log-likelihoods minus the
    KL penalty. The caller supplies completion log-likelihoods and the KL
    value as plain numbers."""
    if len(advantages) != len(log_likelihoods):
        raise ValueError(
            f"length mismatch: {len(advantages)} advantages vs {len(log_likelihoods)} log-likelihoods"
        )
    if not advantages:
        raise ValueError("grpo_objective requires a nonempty group")
    g = len(advantages)
    return sum(a * lp for a, lp in zip(advantages, log_likelihoods)) / g - beta_kl * kl
