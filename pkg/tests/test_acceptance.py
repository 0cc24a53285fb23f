"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the per-criterion
lines and timings.
"""

import json
import math
import random
import time
from pathlib import Path

import pytest

from narrowpass.cli import main as cli_main
from narrowpass.cost_reward import (
    CostWeights,
    geometric_reward,
    group_advantages,
    trajectory_cost,
)
from narrowpass.densifier import LatticeConfig, Trajectory, densify, plan_segment
from narrowpass.evalharness import ReplayPolicy, baseline_policy, evaluate_scene, grpo_reward_loop
from narrowpass.geometry import Polygon, Pose, Rect, transform_vertices, wrap_angle
from narrowpass.scene import Scene, generate_batch, generate_scene, id_params
from narrowpass.textio import parse_completion, serialize_waypoints
from narrowpass.verifier import (
    VerifyConfig,
    check_pose,
    failure_note,
    verify_trajectory,
    verify_waypoints,
)

from conftest import scene_with, square, wall_colliding_completion
from oracles import bfs_reachable, build_lattice_graph, dijkstra_cost

CFG = VerifyConfig()
LAT = LatticeConfig()
WEIGHTS = CostWeights()


def report_line(number: int, name: str, ok: bool, extra: str = "") -> None:
    status = "PASS" if ok else "FAIL"
    print(f"\nACCEPTANCE {number} [{name}]: {status} {extra}".rstrip())
    assert ok, f"acceptance criterion {number} ({name}) failed: {extra}"


# ---------------------------------------------------------------------------
# 1. Verifier-oracle equivalence
# ---------------------------------------------------------------------------


def _brute_force_flags(scene: Scene, q: Pose) -> tuple[bool, bool]:
    """All vertices against all rectangles, no broad phase, no early exit."""
    pts = transform_vertices(scene.object, q)
    ws = scene.workspace
    c1 = all(ws.x_lo <= p[0] <= ws.x_hi and ws.y_lo <= p[1] <= ws.y_hi for p in pts)
    c2 = not any(
        ob.x_lo <= p[0] <= ob.x_hi and ob.y_lo <= p[1] <= ob.y_hi
        for ob in scene.obstacles
        for p in pts
    )
    return c1, c2


def _constraint_margin(scene: Scene, q: Pose) -> float:
    """Smallest |distance| from any vertex to any constraint boundary."""
    pts = transform_vertices(scene.object, q)
    ws = scene.workspace
    margin = math.inf
    for px, py in pts:
        for d in (px - ws.x_lo, ws.x_hi - px, py - ws.y_lo, ws.y_hi - py):
            margin = min(margin, abs(d))
        for ob in scene.obstacles:
            if ob.width <= 0 or ob.height <= 0:
                continue
            cx = min(max(px, ob.x_lo), ob.x_hi)
            cy = min(max(py, ob.y_lo), ob.y_hi)
            if (cx, cy) != (px, py):
                margin = min(margin, math.hypot(px - cx, py - cy))
            else:
                margin = min(
                    margin, px - ob.x_lo, ob.x_hi - px, py - ob.y_lo, ob.y_hi - py
                )
    return margin


def test_acceptance_1_verifier_oracle_equivalence():
    t0 = time.perf_counter()
    rng = random.Random(101)
    compared = 0
    agreements = 0
    for seed in range(200):
        scene = generate_scene(id_params(seed=seed, num_openings=1 + seed % 2))
        for _ in range(20):
            q = Pose(rng.uniform(-1, 11), rng.uniform(-1, 11), rng.uniform(-3.2, 3.2))
            if _constraint_margin(scene, q) <= 1e-6:
                continue
            pc = check_pose(scene, q)
            compared += 1
            if (pc.c1_ok, pc.c2_ok) == _brute_force_flags(scene, q):
                agreements += 1
    elapsed = time.perf_counter() - t0
    report_line(
        1,
        "verifier-oracle equivalence",
        agreements == compared and compared >= 3000 and elapsed < 60.0,
        f"({agreements}/{compared} agree over 200 scenes in {elapsed:.1f}s)",
    )


# ---------------------------------------------------------------------------
# 2. Densifier soundness over 10,000 randomized runs
# ---------------------------------------------------------------------------


def _random_soundness_run(index: int) -> tuple[bool, bool]:
    """One randomized densify run; returns (ran, sound)."""
    rng = random.Random(20_000 + index)
    half = rng.uniform(0.08, 0.25)
    obj = square(half)
    obstacles = []
    for _ in range(rng.randint(0, 2)):
        x0 = rng.uniform(0.3, 2.2)
        y0 = rng.uniform(0.0, 2.0)
        obstacles.append(
            Rect(x0, x0 + rng.uniform(0.2, 0.8), y0, min(3.0, y0 + rng.uniform(0.4, 1.5)))
        )

    def rand_pose() -> Pose:
        return Pose(
            rng.uniform(half + 0.05, 3 - half - 0.05),
            rng.uniform(half + 0.05, 3 - half - 0.05),
            rng.uniform(-3.2, 3.2),
        )

    def nearby(q: Pose, step: float) -> Pose:
        return Pose(
            min(max(q.x + rng.uniform(-step, step), 0.1), 2.9),
            min(max(q.y + rng.uniform(-step, step), 0.1), 2.9),
            q.phi + rng.uniform(-1.2, 1.2),
        )

    start = rand_pose()
    wp = nearby(start, rng.uniform(0.2, 0.9))
    goal = nearby(wp, rng.uniform(0.2, 0.9))
    scene = Scene(Rect(0, 3, 0, 3), tuple(obstacles), (), obj, start, goal, f"r{index}", "ID")
    if not check_pose(scene, start).ok:
        return False, True
    lat = LatticeConfig(max_expansions=1500)
    out = densify(scene, [wp], lat, CFG)
    if isinstance(out, Trajectory):
        return True, verify_trajectory(scene, out.states, CFG).success
    return True, True  # failures carry no soundness claim


def test_acceptance_2_densifier_soundness_10k():
    t0 = time.perf_counter()
    runs = 0
    successes_checked = 0
    counterexamples = 0
    for i in range(10_000):
        ran, sound = _random_soundness_run(i)
        if ran:
            runs += 1
            if not sound:
                counterexamples += 1
    elapsed = time.perf_counter() - t0
    report_line(
        2,
        "densifier soundness",
        counterexamples == 0 and runs >= 8000,
        f"({runs} effective runs of 10000, {counterexamples} counterexamples, {elapsed:.0f}s)",
    )


# ---------------------------------------------------------------------------
# 3. Lattice optimality/completeness against BFS/Dijkstra oracles
# ---------------------------------------------------------------------------


def _path_cost(poses, lat: LatticeConfig) -> float:
    total = 0.0
    for a, b in zip(poses, poses[1:]):
        total += math.hypot(b.x - a.x, b.y - a.y) + lat.heuristic_ang_weight * abs(
            wrap_angle(b.phi - a.phi)
        )
    return total


def test_acceptance_3_lattice_matches_search_oracles():
    t0 = time.perf_counter()
    rng = random.Random(303)
    lat = LatticeConfig(xy_step=0.25, phi_step=math.pi / 4, max_expansions=100_000)
    cfg = VerifyConfig(
        lin_limit=0.5, ang_limit=0.8, substep_lin_res=0.125, substep_ang_res=0.4, min_substeps=2
    )
    scenes_checked = 0
    matches = 0
    while scenes_checked < 100:
        # Coarse scene: obstacles snapped to the 0.25 lattice.
        ws = Rect(0, 2.5, 0, 2.5)
        obstacles = []
        for _ in range(rng.randint(1, 2)):
            x0 = 0.25 * rng.randint(1, 7)
            y0 = 0.25 * rng.randint(0, 5)
            obstacles.append(
                Rect(x0, x0 + 0.25 * rng.randint(1, 3), y0, min(2.5, y0 + 0.25 * rng.randint(2, 8)))
            )
        obj = square(0.2)
        qa = Pose(0.25 * rng.randint(1, 3), 0.25 * rng.randint(1, 9), 0.0)
        gx, gy = rng.randint(0, 7), rng.randint(-3, 7)
        gj = rng.randint(-2, 2)
        qb = Pose(qa.x + 0.25 * gx, qa.y + 0.25 * gy, gj * math.pi / 4)
        scene = scene_with(obstacles=obstacles, obj=obj, workspace=ws, start=qa, goal=qb)
        if not check_pose(scene, qa).ok or not check_pose(scene, qb).ok:
            continue
        scenes_checked += 1
        goal_cell = (gx, gy, gj % 8)
        out = plan_segment(scene, qa, qb, lat, cfg)
        adj, start_cell = build_lattice_graph(scene, qa, lat, cfg)
        reachable = bfs_reachable(adj, start_cell, goal_cell)
        ok = isinstance(out, list) == reachable
        if ok and isinstance(out, list):
            d = dijkstra_cost(adj, start_cell, goal_cell)
            ok = d is not None and abs(_path_cost(out, lat) - d) < 1e-9
        if ok:
            matches += 1
    elapsed = time.perf_counter() - t0
    report_line(
        3,
        "lattice completeness/optimality",
        matches == scenes_checked == 100,
        f"({matches}/100 scenes agree with BFS+Dijkstra in {elapsed:.0f}s)",
    )


# ---------------------------------------------------------------------------
# 4. Reward/cost laws
# ---------------------------------------------------------------------------


def test_acceptance_4_reward_cost_laws():
    # R(0) = 1 and strict monotone decrease.
    ok = geometric_reward(0.0, WEIGHTS.alpha) == 1.0
    rng = random.Random(404)
    for _ in range(500):
        c = rng.uniform(0, 50)
        dc = rng.uniform(1e-9, 10)
        a = rng.uniform(0.01, 5)
        ok = ok and geometric_reward(c + dc, a) < geometric_reward(c, a)

    # Exact weight linearity.
    ob = Rect(4, 6, 4, 6)
    scene = scene_with(obstacles=(ob,), obj=square(0.4))
    for _ in range(50):
        traj = [
            Pose(rng.uniform(-1, 11), rng.uniform(-1, 11), rng.uniform(-3, 3)) for _ in range(6)
        ]
        c1 = trajectory_cost(scene, traj, CostWeights(1.0, 1.0, 0.5, 1.0), CFG)
        c3 = trajectory_cost(scene, traj, CostWeights(3.0, 3.0, 1.5, 1.0), CFG)
        ok = ok and math.isclose(c3.total, 3.0 * c1.total, rel_tol=1e-12, abs_tol=0.0)

    # Cost zero <=> dense-state verification success, 1000 random fixtures.
    fixtures = 0
    equiv = 0
    for i in range(1000):
        r = random.Random(40_400 + i)
        n = r.randint(2, 8)
        traj = [Pose(r.uniform(0.5, 9.5), r.uniform(0.5, 9.5), 0.0)]
        for _ in range(n - 1):
            q = traj[-1]
            traj.append(
                Pose(
                    q.x + r.uniform(-0.6, 0.6),
                    q.y + r.uniform(-0.6, 0.6),
                    q.phi + r.uniform(-0.4, 0.4),
                )
            )
        cb = trajectory_cost(scene, traj, WEIGHTS, CFG)
        success = verify_trajectory(scene, traj, CFG, check_substeps=False).success
        fixtures += 1
        if (cb.total == 0.0) == success:
            equiv += 1
    ok = ok and equiv == fixtures == 1000
    report_line(4, "reward/cost laws", ok, f"(cost<->verdict equivalence {equiv}/1000)")


# ---------------------------------------------------------------------------
# 5. Advantage laws
# ---------------------------------------------------------------------------


def test_acceptance_5_advantage_laws():
    rng = random.Random(505)
    ok = True
    for _ in range(300):
        g = rng.randint(1, 16)
        rewards = [rng.uniform(0, 1) for _ in range(g)]
        gs = group_advantages(rewards, 1e-6)
        ok = ok and abs(sum(gs.advantages)) <= 1e-12
        # Shift invariance.
        shifted = group_advantages([r + 0.37 for r in rewards], 1e-6)
        ok = ok and all(abs(a - b) <= 1e-6 for a, b in zip(gs.advantages, shifted.advantages))
        # Ordering matches reward ordering.
        order_r = sorted(range(g), key=lambda i: rewards[i])
        order_a = sorted(range(g), key=lambda i: gs.advantages[i])
        ok = ok and order_r == order_a
    uniform = group_advantages([0.4] * 8, 1e-6)
    ok = ok and uniform.advantages == (0.0,) * 8
    single = group_advantages([0.9], 1e-6)
    ok = ok and single.advantages == (0.0,)
    report_line(5, "advantage laws", ok)


# ---------------------------------------------------------------------------
# 6. Parser strictness corpus
# ---------------------------------------------------------------------------


def test_acceptance_6_parser_corpus():
    from narrowpass.textio import ParseError

    corpus = json.loads((Path(__file__).parent / "data" / "completion_corpus.json").read_text())
    exact = 0
    for entry in corpus:
        try:
            parse_completion(entry["text"], expected=entry["expected"])
            got = "accept"
        except ParseError as e:
            got = e.kind
        if got == entry["label"]:
            exact += 1

    rng = random.Random(606)
    roundtrip_ok = True
    for _ in range(200):
        poses = [
            Pose(rng.uniform(-100, 100), rng.uniform(-100, 100), rng.uniform(-7, 7))
            for _ in range(rng.randint(0, 10))
        ]
        out = parse_completion(serialize_waypoints(poses), expected=len(poses))
        for a, b in zip(poses, out.poses):
            roundtrip_ok = roundtrip_ok and (
                abs(a.x - b.x) <= 1e-6 and abs(a.y - b.y) <= 1e-6 and abs(a.phi - b.phi) <= 1e-6
            )
    report_line(
        6,
        "parser strictness corpus",
        exact == len(corpus) and len(corpus) >= 50 and roundtrip_ok,
        f"({exact}/{len(corpus)} corpus labels exact)",
    )


# ---------------------------------------------------------------------------
# 7. Pipeline reproduction at scale (500 in-distribution scenes)
# ---------------------------------------------------------------------------


def test_acceptance_7_pipeline_at_scale(tmp_path):
    t0 = time.perf_counter()
    scenes_dir = tmp_path / "scenes"
    code = cli_main(
        ["gen", "--count", "500", "--seed", "7", "--split", "id", "--out", str(scenes_dir)]
    )
    assert code == 0

    def run_eval(out_dir: Path) -> dict:
        code = cli_main(
            ["eval", "--scenes", str(scenes_dir), "--policy", "baseline", "--out", str(out_dir)]
        )
        assert code == 0
        return json.loads((out_dir / "metrics.json").read_text())

    metrics = run_eval(tmp_path / "eval1")
    metrics2 = run_eval(tmp_path / "eval2")
    elapsed = time.perf_counter() - t0

    columns = {
        "parse_rate",
        "success_rate",
        "c1_fail",
        "c2_fail",
        "c3_fail",
        "c4_fail",
        "reward_mean",
        "reward_std",
    }
    ok = columns <= set(metrics)
    ok = ok and metrics["n_scenes"] == 500
    ok = ok and metrics["parse_rate"] == 100.0
    ok = ok and metrics["success_rate"] >= 80.0
    ok = ok and metrics == metrics2  # deterministic rerun
    records1 = (tmp_path / "eval1" / "records.jsonl").read_text().splitlines()
    records2 = (tmp_path / "eval2" / "records.jsonl").read_text().splitlines()
    for a, b in zip(records1, records2):
        da, db = json.loads(a), json.loads(b)
        da.pop("timings"), db.pop("timings")
        ok = ok and da == db
    ok = ok and elapsed < 600.0
    report_line(
        7,
        "pipeline reproduction at scale",
        ok,
        f"(success {metrics['success_rate']:.1f}%, parse {metrics['parse_rate']:.0f}%, "
        f"reward {metrics['reward_mean']:.2f}±{metrics['reward_std']:.2f}, {elapsed:.0f}s)",
    )


# ---------------------------------------------------------------------------
# 8. GRPO reward loop ranks the feasible completion first
# ---------------------------------------------------------------------------


def test_acceptance_8_grpo_feasible_gets_max_advantage():
    t0 = time.perf_counter()
    group_size = 4
    prompts: list[Scene] = []
    seed = 0
    while len(prompts) < 100:
        scene = generate_scene(id_params(seed=800), index=seed)
        seed += 1
        rec = evaluate_scene(
            ReplayPolicy({scene.id: [baseline_policy(scene)]}), scene, CFG, LAT, WEIGHTS
        )
        if rec.report is not None and rec.report.success:
            prompts.append(scene)
    policy = ReplayPolicy(
        {
            s.id: [baseline_policy(s)] + [wall_colliding_completion(s)] * (group_size - 1)
            for s in prompts
        }
    )
    reports = grpo_reward_loop(policy, prompts, group_size, CFG, LAT, WEIGHTS)
    unique_max = 0
    for rep in reports:
        adv = rep["advantages"]
        if adv[0] > max(adv[1:]):
            unique_max += 1
    elapsed = time.perf_counter() - t0
    report_line(
        8,
        "grpo reward loop",
        unique_max == len(reports) == 100,
        f"({unique_max}/100 groups rank the feasible completion first, {elapsed:.0f}s)",
    )


# ---------------------------------------------------------------------------
# 9. Failure-note fidelity on single-defect fixtures
# ---------------------------------------------------------------------------


def _fixture_collision(i: int):
    rng = random.Random(900 + i)
    gap_lo = rng.uniform(3.0, 6.0)
    scene_ = None
    from conftest import opening_scene

    scene_ = opening_scene(4.0, 4.6, gap_lo, gap_lo + 1.0, obj=square(0.3))
    good = Pose(2.0, gap_lo + 0.5, 0.0)
    bad = Pose(4.3, (gap_lo + 1.0 + 10.0) / 2, 0.0)  # upper wall interior
    position = 1 + (i % 2)
    waypoints = [bad] if position == 1 else [good, bad]
    return scene_, waypoints, "collision", position, LatticeConfig()


def _fixture_out_of_workspace(i: int):
    rng = random.Random(910 + i)
    scene_ = scene_with(obj=square(0.3), start=Pose(2.0, 5.0, 0.0), goal=Pose(8.0, 5.0, 0.0))
    bad = Pose(rng.uniform(2.0, 8.0), 10.5, 0.0)  # body pokes out the top
    good = Pose(3.0, 5.0, 0.0)
    position = 1 + (i % 2)
    waypoints = [bad] if position == 1 else [good, bad]
    return scene_, waypoints, "out_of_workspace", position, LatticeConfig()


def _fixture_step_size(i: int):
    # Feasible waypoint walled off behind a full-height wall: the planner
    # gives up within budget and the raw hop trips the step limit.
    rng = random.Random(920 + i)
    wall = Rect(4.6, 5.4, 0.0, 10.0)
    y = rng.uniform(2.0, 8.0)
    scene_ = scene_with(
        obstacles=(wall,), obj=square(0.3), start=Pose(2.0, y, 0.0), goal=Pose(8.0, y, 0.0)
    )
    waypoints = [Pose(8.0, y, 0.0)]
    return scene_, waypoints, "step_size", 1, LatticeConfig(max_expansions=500)


def _fixture_swept(i: int):
    # Legal hop drags a vertex through a free-standing block; a tiny budget
    # forces the raw-hop fallback.
    rng = random.Random(930 + i)
    y = rng.uniform(2.0, 8.0)
    block = Rect(4.9, 5.1, y - 0.4, y + 0.4)
    start = Pose(4.44, y, 0.0)
    wp = Pose(4.92, y, 0.0)
    scene_ = scene_with(obstacles=(block,), obj=square(0.3), start=start, goal=wp)
    return scene_, [wp], "swept_collision", 1, LatticeConfig(max_expansions=5)


def test_acceptance_9_failure_note_fidelity():
    t0 = time.perf_counter()
    builders = [_fixture_collision, _fixture_out_of_workspace, _fixture_step_size, _fixture_swept]
    total = 0
    correct = 0
    for builder in builders:
        for i in range(25):
            scene, waypoints, expected_type, expected_pos, lat = builder(i)
            report = verify_waypoints(scene, waypoints, CFG, lat)
            note = failure_note(report)
            total += 1
            if (
                not report.success
                and report.violation.value == expected_type
                and report.first_fail_waypoint == expected_pos
                and note == f"FAILURE: waypoint={expected_pos} type={expected_type}"
            ):
                correct += 1
    elapsed = time.perf_counter() - t0
    report_line(
        9,
        "failure-note fidelity",
        correct == total == 100,
        f"({correct}/100 planted defects attributed exactly, {elapsed:.0f}s)",
    )
