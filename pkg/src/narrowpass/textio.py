"""Prompt construction, strict waypoint-completion parsing, and
demonstration file round-tripping.

The completion grammar is deliberately rigid: a header line that is exactly
``x,y,phi``, then exactly the expected number of data rows of three
fixed-point decimals, then nothing but blank lines. Anything else — chat
prose, scientific notation, reordered columns, wrong counts — is a parse
failure. CRLF line endings are normalized before parsing.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .geometry import Pose
from .scene import Scene, opening_summary, scene_from_dict, scene_to_dict
from .verifier import VerifyConfig

HEADER = "x,y,phi"

_NUM = r"[+-]?(?:\d+\.?\d*|\.\d+)"
_ROW_RE = re.compile(rf"^({_NUM}),({_NUM}),({_NUM})$")


def fmt_num(v: float) -> str:
    """Canonical number rendering used in prompt text."""
    return f"{v:.6g}"


@dataclass(frozen=True)
class PromptDocument:
    sections: dict[str, str]
    rows_per_opening: int
    full_text: str


@dataclass(frozen=True)
class WaypointCompletion:
    poses: tuple[Pose, ...]
    rows_per_opening: int
    num_openings: int


class ParseError(ValueError):
    """Strict-parse failure; ``kind`` is one of missing_header, bad_row,
    wrong_row_count, trailing_content, non_finite_value."""

    def __init__(self, kind: str, line: int | None = None, got: int | None = None, want: int | None = None):
        self.kind = kind
        self.line = line
        self.got = got
        self.want = want
        parts = [kind]
        if line is not None:
            parts.append(f"line={line}")
        if got is not None or want is not None:
            parts.append(f"got={got} want={want}")
        super().__init__(" ".join(parts))


def build_prompt(scene: Scene, cfg: VerifyConfig, rows_per_opening: int = 3) -> PromptDocument:
    """Deterministic structured prompt for one scene.

    Sections, in order: task and required output format; the numeric motion
    constraints; the machine-readable scene block; a human-readable opening
    summary; a closing reminder of the required format.
    """
    if rows_per_opening < 1:
        raise ValueError("rows_per_opening must be >= 1")
    k = rows_per_opening
    n_open = len(scene.openings)
    total_rows = k * n_open

    format_rule = (
        f"Output format: the first line must be exactly `{HEADER}`. Then output exactly "
        f"{total_rows} rows ({k} per opening, openings ordered left to right), each row "
        "three decimal numbers `x,y,phi` separated by commas. Fixed-point decimals only; "
        "no scientific notation, no blank rows in between, and no other text of any kind."
    )

    task_and_format = (
        "Task: plan waypoints for a rigid planar object that must travel from the start "
        "pose to the goal pose, passing through every narrow opening in order. A waypoint "
        "is a pose x,y,phi: world position in length units and heading in radians. "
        "Waypoints are connected by a step-limited planner afterwards, so choose poses "
        "that a short collision-free motion can link.\n" + format_rule
    )

    constraints = (
        "Constraints checked on the densified trajectory:\n"
        "1. Every object vertex stays inside the workspace rectangle.\n"
        "2. No object vertex may lie inside any obstacle rectangle.\n"
        "3. Motion between consecutive poses is collision-checked at interpolated "
        "substeps; sweeping through an obstacle fails even if both endpoints are clear.\n"
        f"4. Per-step motion limits: translation at most {fmt_num(cfg.lin_limit)} length "
        f"units and rotation at most {fmt_num(cfg.ang_limit)} radians per step."
    )

    lines = ["Scene (machine readable):"]
    ws = scene.workspace
    lines.append(
        f"workspace: x_lo={fmt_num(ws.x_lo)} x_hi={fmt_num(ws.x_hi)} "
        f"y_lo={fmt_num(ws.y_lo)} y_hi={fmt_num(ws.y_hi)}"
    )
    for i, ob in enumerate(scene.obstacles):
        lines.append(
            f"obstacle[{i}]: x_lo={fmt_num(ob.x_lo)} x_hi={fmt_num(ob.x_hi)} "
            f"y_lo={fmt_num(ob.y_lo)} y_hi={fmt_num(ob.y_hi)}"
        )
    verts = " ".join(f"({fmt_num(vx)},{fmt_num(vy)})" for vx, vy in scene.object.vertices)
    lines.append(f"object vertices (local frame): {verts}")
    lines.append(f"start: x={fmt_num(scene.start.x)} y={fmt_num(scene.start.y)} phi={fmt_num(scene.start.phi)}")
    lines.append(f"goal: x={fmt_num(scene.goal.x)} y={fmt_num(scene.goal.y)} phi={fmt_num(scene.goal.phi)}")
    scene_block = "\n".join(lines)

    if scene.openings:
        s_lines = ["Opening structure:"]
        for rec in opening_summary(scene):
            s_lines.append(
                f"Opening {rec['index']}: walls span x in [{fmt_num(rec['x_lo'])}, "
                f"{fmt_num(rec['x_hi'])}]; free gap y in [{fmt_num(rec['gap_y_lo'])}, "
                f"{fmt_num(rec['gap_y_hi'])}] (gap width {fmt_num(rec['gap_width'])})."
            )
            if rec["gap_to_next"] is not None:
                s_lines.append(
                    f"  Free channel of {fmt_num(rec['gap_to_next'])} before the next opening."
                )
        summary_block = "\n".join(s_lines)
    else:
        summary_block = "Opening structure: none (the workspace holds no openings)."

    reminder = (
        f"Reminder — required output: line 1 exactly `{HEADER}`, then exactly {total_rows} "
        f"rows total, {k} rows per opening, each `x,y,phi` with fixed-point decimals. "
        "Output nothing else."
    )

    sections = {
        "task_and_format": task_and_format,
        "constraints": constraints,
        "scene_machine_readable": scene_block,
        "opening_summary": summary_block,
        "format_reminder": reminder,
    }
    return PromptDocument(sections, k, "\n\n".join(sections.values()))


def parse_completion(
    text: str, expected: int, rows_per_opening: int | None = None
) -> WaypointCompletion:
    """Parse a policy completion under the strict grammar.

    ``expected`` is the exact number of data rows (rows per opening times
    number of openings). Raises ParseError on any deviation.
    """
    lines = text.replace("\r\n", "\n").replace("\r", "\n").split("\n")

    idx = 0
    while idx < len(lines) and lines[idx].strip() == "":
        idx += 1
    if idx >= len(lines) or lines[idx] != HEADER:
        raise ParseError("missing_header", line=idx + 1 if idx < len(lines) else None)
    idx += 1

    poses: list[Pose] = []
    while len(poses) < expected:
        if idx >= len(lines) or lines[idx].strip() == "":
            raise ParseError("wrong_row_count", got=len(poses), want=expected)
        m = _ROW_RE.match(lines[idx])
        if m is None:
            raise ParseError("bad_row", line=idx + 1)
        vals = [float(g) for g in m.groups()]
        if not all(v == v and abs(v) != float("inf") for v in vals):
            raise ParseError("non_finite_value", line=idx + 1)
        poses.append(Pose(vals[0], vals[1], vals[2]))
        idx += 1

    while idx < len(lines):
        if lines[idx].strip() != "":
            raise ParseError("trailing_content", line=idx + 1)
        idx += 1

    if rows_per_opening is None:
        rows_per_opening = expected if expected > 0 else 1
    num_openings = expected // rows_per_opening if rows_per_opening else 0
    return WaypointCompletion(tuple(poses), rows_per_opening, num_openings)


def serialize_waypoints(poses: Sequence[Pose]) -> str:
    """Header plus one fixed-point row per pose; round-trips through
    parse_completion to within 1e-6 per coordinate."""
    rows = [HEADER]
    rows.extend(f"{q.x:.6f},{q.y:.6f},{q.phi:.6f}" for q in poses)
    return "\n".join(rows)


# ---------------------------------------------------------------------------
# Demonstration files: waypoint CSV plus a sibling scene document
# ---------------------------------------------------------------------------


def save_demonstration(
    directory: str | Path, name: str, scene: Scene, poses: Sequence[Pose]
) -> tuple[Path, Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    csv_path = directory / f"{name}.csv"
    scene_path = directory / f"{name}.scene.json"
    csv_path.write_text(serialize_waypoints(poses) + "\n")
    scene_path.write_text(json.dumps(scene_to_dict(scene), indent=2) + "\n")
    return csv_path, scene_path


def load_demonstration(csv_path: str | Path) -> tuple[list[Pose], Scene]:
    csv_path = Path(csv_path)
    scene_path = csv_path.with_name(csv_path.stem + ".scene.json")
    scene = scene_from_dict(json.loads(scene_path.read_text()))
    text = csv_path.read_text()
    rows = [ln for ln in text.replace("\r\n", "\n").split("\n") if ln.strip() != ""]
    completion = parse_completion(text, expected=max(0, len(rows) - 1))
    return list(completion.poses), scene
