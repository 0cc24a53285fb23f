import json
import math
from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from narrowpass.geometry import Pose
from narrowpass.scene import generate_scene, id_params
from narrowpass.textio import (
    HEADER,
    ParseError,
    build_prompt,
    fmt_num,
    load_demonstration,
    parse_completion,
    save_demonstration,
    serialize_waypoints,
)
from narrowpass.verifier import VerifyConfig

from conftest import scene_with

CFG = VerifyConfig()
CORPUS = Path(__file__).parent / "data" / "completion_corpus.json"


# --- parse_completion ------------------------------------------------------


def test_parse_basic():
    out = parse_completion("x,y,phi\n1.0,2.0,0.0\n3.0,2.0,1.57", expected=2)
    assert out.poses == (Pose(1.0, 2.0, 0.0), Pose(3.0, 2.0, 1.57))


def test_parse_wrong_count():
    with pytest.raises(ParseError) as e:
        parse_completion("x,y,phi\n1.0,2.0,0.0\n3.0,2.0,1.57", expected=3)
    assert e.value.kind == "wrong_row_count"
    assert (e.value.got, e.value.want) == (2, 3)


def test_parse_rejects_chat_prose():
    with pytest.raises(ParseError) as e:
        parse_completion("Sure! Here are the waypoints:\nx,y,phi\n1.0,2.0,0.0", expected=1)
    assert e.value.kind == "missing_header"


def test_parse_corpus_exact_labels():
    entries = json.loads(CORPUS.read_text())
    assert len(entries) >= 50
    for entry in entries:
        try:
            parse_completion(entry["text"], expected=entry["expected"])
            got = "accept"
        except ParseError as e:
            got = e.kind
        assert got == entry["label"], f"corpus case {entry['name']}: {got} != {entry['label']}"


# --- serialize_waypoints ----------------------------------------------------


def test_serialize_empty_and_single():
    assert serialize_waypoints([]) == "x,y,phi"
    assert serialize_waypoints([Pose(1, 2, 0.5)]) == "x,y,phi\n1.000000,2.000000,0.500000"


def test_serialize_parse_roundtrip_basic():
    poses = [Pose(1.25, -3.5, 0.1), Pose(0.0, 9.999999, -3.0)]
    out = parse_completion(serialize_waypoints(poses), expected=2)
    for a, b in zip(poses, out.poses):
        assert math.isclose(a.x, b.x, abs_tol=1e-6)
        assert math.isclose(a.y, b.y, abs_tol=1e-6)
        assert math.isclose(a.phi, b.phi, abs_tol=1e-6)


pose_floats = st.floats(min_value=-100.0, max_value=100.0, allow_nan=False)


@settings(max_examples=200)
@given(st.lists(st.tuples(pose_floats, pose_floats, pose_floats), max_size=12))
def test_roundtrip_property(coords):
    poses = [Pose(*c) for c in coords]
    out = parse_completion(serialize_waypoints(poses), expected=len(poses))
    assert len(out.poses) == len(poses)
    for a, b in zip(poses, out.poses):
        assert abs(a.x - b.x) <= 1e-6
        assert abs(a.y - b.y) <= 1e-6
        assert abs(a.phi - b.phi) <= 1e-6


# --- build_prompt ------------------------------------------------------------


def test_prompt_deterministic():
    scene = generate_scene(id_params(seed=6))
    a = build_prompt(scene, CFG, 3)
    b = build_prompt(scene, CFG, 3)
    assert a.full_text == b.full_text


def test_prompt_block_order_and_reminders():
    scene = generate_scene(id_params(seed=6))
    doc = build_prompt(scene, CFG, 3)
    keys = list(doc.sections)
    assert keys == [
        "task_and_format",
        "constraints",
        "scene_machine_readable",
        "opening_summary",
        "format_reminder",
    ]
    # The format requirement appears in both the first and the last block.
    assert HEADER in doc.sections["task_and_format"]
    assert HEADER in doc.sections["format_reminder"]
    # Two openings at 3 rows each.
    assert "6 rows" in doc.sections["task_and_format"]
    assert "3 rows per opening" in doc.sections["format_reminder"] or "3 per opening" in doc.sections["task_and_format"]


def test_prompt_contains_numeric_limits():
    scene = generate_scene(id_params(seed=6))
    cfg = VerifyConfig(lin_limit=0.37, ang_limit=0.21)
    doc = build_prompt(scene, cfg, 3)
    assert fmt_num(0.37) in doc.sections["constraints"]
    assert fmt_num(0.21) in doc.sections["constraints"]


def test_prompt_contains_every_obstacle_bound_verbatim():
    scene = generate_scene(id_params(seed=8))
    doc = build_prompt(scene, CFG, 3)
    for ob in scene.obstacles:
        for v in (ob.x_lo, ob.x_hi, ob.y_lo, ob.y_hi):
            assert fmt_num(v) in doc.full_text


def test_prompt_zero_openings():
    scene = scene_with()
    doc = build_prompt(scene, CFG, 3)
    assert "none" in doc.sections["opening_summary"]
    assert "0 rows" in doc.sections["task_and_format"]
    assert HEADER in doc.sections["format_reminder"]


# --- demonstration files ------------------------------------------------------


def test_demo_save_load_roundtrip(tmp_path):
    scene = generate_scene(id_params(seed=4))
    poses = [Pose(1.5, 2.5, 0.0), Pose(3.0, 2.5, 0.3)]
    csv_path, scene_path = save_demonstration(tmp_path, "demo-x", scene, poses)
    assert csv_path.exists() and scene_path.exists()
    loaded, loaded_scene = load_demonstration(csv_path)
    assert loaded_scene.id == scene.id
    assert len(loaded) == 2
    for a, b in zip(poses, loaded):
        assert math.isclose(a.x, b.x, abs_tol=1e-6)
