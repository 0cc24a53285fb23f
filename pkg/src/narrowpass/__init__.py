"""Deterministic SE(2) engine for rigid-body planning through sequential
narrow openings: scene generation, prompt/completion text I/O, lattice
densification, geometric verification and rewards, batch evaluation, and a
demonstration-collection service."""

__version__ = "0.1.0"

from .geometry import Polygon, Pose, Rect, wrap_angle
from .scene import GenParams, Opening, Scene, generate_batch, generate_scene, id_params, ood_params
from .verifier import VerificationReport, VerifyConfig, ViolationType, failure_note
from .cost_reward import CostBreakdown, CostWeights, GroupScores
from .densifier import LatticeConfig, Trajectory

__all__ = [
    "Polygon",
    "Pose",
    "Rect",
    "wrap_angle",
    "GenParams",
    "Opening",
    "Scene",
    "generate_batch",
    "generate_scene",
    "id_params",
    "ood_params",
    "VerificationReport",
    "VerifyConfig",
    "ViolationType",
    "failure_note",
    "CostBreakdown",
    "CostWeights",
    "GroupScores",
    "LatticeConfig",
    "Trajectory",
]
