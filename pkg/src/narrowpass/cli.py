"""Command-line entry point tying every capability together.

Exit codes: 0 success, 1 domain failure (verification failed under --strict,
bad input file), 2 usage error. Every artifact-producing subcommand writes a
run manifest next to its outputs, sufficient to reproduce the run.
"""

from __future__ import annotations

import argparse
import json
import os
import shlex
import sys
from pathlib import Path

from . import __version__
from .cost_reward import CostWeights, geometric_reward, trajectory_cost
from .densifier import LatticeConfig, densify_with_fallback, load_trajectory, save_trajectory, Trajectory
from .evalharness import (
    BaselinePolicy,
    SubprocessPolicy,
    evaluate_batch,
    grpo_reward_loop,
)
from .plotting import trajectory_svg
from .scene import GenParams, generate_scene, id_params, load_scene, ood_params, save_scene
from .textio import build_prompt, load_demonstration, parse_completion
from .verifier import VerifyConfig, failure_note, verify_trajectory, verify_waypoints


def default_data_dir() -> Path:
    return Path(os.environ.get("NARROWPASS_DATA_DIR", "narrowpass-data"))


def write_manifest(out_dir: Path, subcommand: str, config: dict, inputs: list[str], outputs: list[str]) -> None:
    doc = {
        "subcommand": subcommand,
        "engine_version": __version__,
        "config": config,
        "inputs": inputs,
        "outputs": outputs,
    }
    (out_dir / f"{subcommand}-manifest.json").write_text(json.dumps(doc, indent=2) + "\n")


def _add_verify_flags(p: argparse.ArgumentParser) -> None:
    d = VerifyConfig()
    p.add_argument("--lin-limit", type=float, default=d.lin_limit, help="max translation per step")
    p.add_argument("--ang-limit", type=float, default=d.ang_limit, help="max rotation per step (rad)")
    p.add_argument("--substep-lin-res", type=float, default=d.substep_lin_res, help="swept-check translation resolution")
    p.add_argument("--substep-ang-res", type=float, default=d.substep_ang_res, help="swept-check rotation resolution (rad)")
    p.add_argument("--min-substeps", type=int, default=d.min_substeps, help="minimum swept-check substeps")


def _add_lattice_flags(p: argparse.ArgumentParser) -> None:
    d = LatticeConfig()
    p.add_argument("--xy-step", type=float, default=d.xy_step, help="lattice translation pitch")
    p.add_argument("--phi-step", type=float, default=d.phi_step, help="lattice heading pitch (rad)")
    p.add_argument("--max-expansions", type=int, default=d.max_expansions, help="search node budget per segment")
    p.add_argument("--heuristic-ang-weight", type=float, default=d.heuristic_ang_weight, help="heading-error weight in move cost")


def _add_weight_flags(p: argparse.ArgumentParser) -> None:
    d = CostWeights()
    p.add_argument("--w-b", type=float, default=d.w_b, help="boundary violation weight")
    p.add_argument("--w-o", type=float, default=d.w_o, help="obstacle violation weight")
    p.add_argument("--w-s", type=float, default=d.w_s, help="step-size violation weight")
    p.add_argument("--alpha", type=float, default=d.alpha, help="reward decay")


def _cfg(args) -> VerifyConfig:
    return VerifyConfig(
        lin_limit=args.lin_limit,
        ang_limit=args.ang_limit,
        substep_lin_res=args.substep_lin_res,
        substep_ang_res=args.substep_ang_res,
        min_substeps=args.min_substeps,
    )


def _lat(args) -> LatticeConfig:
    return LatticeConfig(
        xy_step=args.xy_step,
        phi_step=args.phi_step,
        max_expansions=args.max_expansions,
        heuristic_ang_weight=args.heuristic_ang_weight,
    )


def _weights(args) -> CostWeights:
    return CostWeights(w_b=args.w_b, w_o=args.w_o, w_s=args.w_s, alpha=args.alpha)


def _policy(args):
    if args.policy == "baseline":
        return BaselinePolicy(args.rows_per_opening)
    return SubprocessPolicy(tuple(shlex.split(args.policy)), timeout=args.policy_timeout)


def _load_waypoints(path: Path):
    text = path.read_text()
    rows = [ln for ln in text.replace("\r\n", "\n").split("\n") if ln.strip() != ""]
    return list(parse_completion(text, expected=max(0, len(rows) - 1)).poses)


def _load_scene_files(scenes_arg: str) -> list:
    p = Path(scenes_arg)
    if p.is_dir():
        files = sorted(p.glob("*.json"))
        files = [f for f in files if not f.name.endswith("manifest.json")]
    else:
        files = [p]
    if not files:
        raise FileNotFoundError(f"no scene files under {scenes_arg}")
    return [load_scene(f) for f in files]


def _gen_one(job) -> str:
    params, index, out_dir = job
    scene = generate_scene(params, index=index)
    path = Path(out_dir) / f"{scene.id}.json"
    save_scene(scene, path)
    return str(path)


def cmd_gen(args) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    factory = id_params if args.split == "id" else ood_params
    params = factory(args.seed, args.openings, args.object)
    jobs = [(params, i, str(out_dir)) for i in range(args.count)]
    if args.workers > 1:
        import multiprocessing

        with multiprocessing.Pool(args.workers) as pool:
            outputs = pool.map(_gen_one, jobs)
    else:
        outputs = [_gen_one(j) for j in jobs]
    write_manifest(
        out_dir,
        "gen",
        {
            "count": args.count,
            "seed": args.seed,
            "split": args.split,
            "openings": args.openings,
            "object": args.object,
            "workers": args.workers,
            "params": params.to_dict(),
        },
        [],
        outputs,
    )
    print(f"wrote {args.count} scenes to {out_dir}")
    return 0


def cmd_prompt(args) -> int:
    scene = load_scene(args.scene)
    doc = build_prompt(scene, _cfg(args), args.rows_per_opening)
    if args.out:
        Path(args.out).write_text(doc.full_text + "\n")
        print(f"wrote prompt to {args.out}")
    else:
        print(doc.full_text)
    return 0


def cmd_verify(args) -> int:
    scene = load_scene(args.scene)
    waypoints = _load_waypoints(Path(args.waypoints))
    if not waypoints:
        print("waypoint file holds no rows", file=sys.stderr)
        return 1
    report = verify_waypoints(scene, waypoints, _cfg(args), _lat(args))
    print(json.dumps(report.to_dict(), indent=2))
    if not report.success:
        print(failure_note(report), file=sys.stderr)
        if args.strict:
            return 1
    return 0


def cmd_densify(args) -> int:
    scene = load_scene(args.scene)
    waypoints = _load_waypoints(Path(args.waypoints))
    if not waypoints:
        print("waypoint file holds no rows", file=sys.stderr)
        return 1
    traj, fallbacks = densify_with_fallback(scene, waypoints, _lat(args), _cfg(args))
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_trajectory(traj, out)
    write_manifest(
        out.parent,
        "densify",
        {
            "verify": _cfg(args).to_dict(),
            "lattice": _lat(args).to_dict(),
            "fallback_segments": fallbacks,
        },
        [str(args.scene), str(args.waypoints)],
        [str(out)],
    )
    print(f"wrote {len(traj.states)} states to {out}" + (f" (fallback segments: {fallbacks})" if fallbacks else ""))
    if fallbacks and args.strict:
        return 1
    return 0


def cmd_score(args) -> int:
    scene = load_scene(args.scene)
    traj = load_trajectory(args.trajectory)
    weights = _weights(args)
    cost = trajectory_cost(scene, traj.states, weights, _cfg(args))
    report = {**cost.to_dict(), "reward": geometric_reward(cost.total, weights.alpha)}
    text = json.dumps(report, indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n")
    print(text)
    return 0


def cmd_eval(args) -> int:
    scenes = _load_scene_files(args.scenes)
    policy = _policy(args)
    table, records = evaluate_batch(
        policy,
        scenes,
        _cfg(args),
        _lat(args),
        _weights(args),
        rows_per_opening=args.rows_per_opening,
        workers=args.workers,
        include_unparsed_in_reward=not args.exclude_unparsed_reward,
    )
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "metrics.json").write_text(json.dumps(table.to_dict(), indent=2) + "\n")
    (out_dir / "metrics.txt").write_text(table.to_text() + "\n")
    with (out_dir / "records.jsonl").open("w") as fh:
        for r in records:
            fh.write(json.dumps(r.to_dict()) + "\n")
    if args.save_trajectories:
        traj_dir = out_dir / "trajectories"
        traj_dir.mkdir(exist_ok=True)
        for r in records:
            if r.trajectory is not None:
                save_trajectory(r.trajectory, traj_dir / f"{r.scene_id}.jsonl")
    write_manifest(
        out_dir,
        "eval",
        {
            "policy": args.policy,
            "rows_per_opening": args.rows_per_opening,
            "workers": args.workers,
            "verify": _cfg(args).to_dict(),
            "lattice": _lat(args).to_dict(),
            "weights": {"w_b": args.w_b, "w_o": args.w_o, "w_s": args.w_s, "alpha": args.alpha},
        },
        [args.scenes],
        [str(out_dir / "metrics.json"), str(out_dir / "records.jsonl")],
    )
    print(table.to_text())
    return 0


def cmd_grpo_rewards(args) -> int:
    scenes = _load_scene_files(args.scenes)
    policy = _policy(args)
    reports = grpo_reward_loop(
        policy,
        scenes,
        args.group_size,
        _cfg(args),
        _lat(args),
        _weights(args),
        rows_per_opening=args.rows_per_opening,
        epsilon=args.epsilon,
    )
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w") as fh:
        for rep in reports:
            fh.write(json.dumps(rep) + "\n")
    write_manifest(
        out.parent,
        "grpo-rewards",
        {"policy": args.policy, "group_size": args.group_size, "epsilon": args.epsilon},
        [args.scenes],
        [str(out)],
    )
    print(f"wrote {len(reports)} group reports to {out}")
    return 0


def cmd_plot(args) -> int:
    scene = load_scene(args.scene)
    states: tuple = ()
    marks = None
    if args.trajectory:
        traj = load_trajectory(args.trajectory)
        states = traj.states
        marks = traj.waypoint_marks
    svg = trajectory_svg(scene, states, marks)
    Path(args.out).write_text(svg + "\n")
    print(f"wrote {args.out}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(Path(args.data_dir), _cfg(args), _lat(args), args.rows_per_opening)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def cmd_demo_replay(args) -> int:
    poses, scene = load_demonstration(args.demo)
    if not poses:
        print(f"demonstration {args.demo} holds no waypoints", file=sys.stderr)
        return 1
    report = verify_waypoints(scene, poses, _cfg(args), _lat(args))
    print(json.dumps(report.to_dict(), indent=2))
    if not report.success:
        print(failure_note(report), file=sys.stderr)
        if args.strict:
            return 1
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="narrowpass", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subparsers = parser.add_subparsers(dest="subcommand", required=True)

    class _Sub:
        """add_parser shim that shows flag defaults in every --help."""

        def add_parser(self, name, **kwargs):
            return subparsers.add_parser(
                name, formatter_class=argparse.ArgumentDefaultsHelpFormatter, **kwargs
            )

    sub = _Sub()

    p = sub.add_parser("gen", help="generate scene batches")
    p.add_argument("--count", type=int, default=1, help="number of scenes")
    p.add_argument("--seed", type=int, default=0, help="master seed")
    p.add_argument("--split", choices=["id", "ood"], default="id", help="parameter band")
    p.add_argument("--openings", type=int, default=2, help="openings per scene")
    p.add_argument("--object", default="I", choices=["I", "T", "L"], help="object shape")
    p.add_argument("--out", default=str(default_data_dir() / "scenes"), help="output directory")
    p.add_argument("--workers", type=int, default=1, help="parallel generation workers")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("prompt", help="render the structured prompt for a scene")
    p.add_argument("--scene", required=True)
    p.add_argument("--rows-per-opening", type=int, default=3)
    p.add_argument("--out")
    _add_verify_flags(p)
    p.set_defaults(func=cmd_prompt)

    p = sub.add_parser("verify", help="verify a waypoint file against a scene")
    p.add_argument("--scene", required=True)
    p.add_argument("--waypoints", required=True)
    p.add_argument("--strict", action="store_true", help="exit 1 when verification fails")
    _add_verify_flags(p)
    _add_lattice_flags(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("densify", help="densify waypoints into a trajectory file")
    p.add_argument("--scene", required=True)
    p.add_argument("--waypoints", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--strict", action="store_true", help="exit 1 when any segment fell back")
    _add_verify_flags(p)
    _add_lattice_flags(p)
    p.set_defaults(func=cmd_densify)

    p = sub.add_parser("score", help="cost and reward of a stored trajectory")
    p.add_argument("--scene", required=True)
    p.add_argument("--trajectory", required=True)
    p.add_argument("--out")
    _add_verify_flags(p)
    _add_weight_flags(p)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("eval", help="evaluate a policy over a scene corpus")
    p.add_argument("--scenes", required=True, help="scene file or directory")
    p.add_argument("--policy", default="baseline", help="'baseline' or a shell command")
    p.add_argument("--policy-timeout", type=float, default=120.0, help="seconds per policy call")
    p.add_argument("--rows-per-opening", type=int, default=3, help="waypoint rows per opening")
    p.add_argument("--workers", type=int, default=1, help="parallel evaluation workers")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--save-trajectories", action="store_true", help="store per-scene trajectory files")
    p.add_argument("--exclude-unparsed-reward", action="store_true", help="drop parse failures from reward averages")
    _add_verify_flags(p)
    _add_lattice_flags(p)
    _add_weight_flags(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("grpo-rewards", help="group rewards and advantages per prompt")
    p.add_argument("--scenes", required=True)
    p.add_argument("--policy", default="baseline")
    p.add_argument("--policy-timeout", type=float, default=120.0)
    p.add_argument("--group-size", type=int, required=True)
    p.add_argument("--rows-per-opening", type=int, default=3)
    p.add_argument("--epsilon", type=float, default=1e-6)
    p.add_argument("--out", required=True)
    _add_verify_flags(p)
    _add_lattice_flags(p)
    _add_weight_flags(p)
    p.set_defaults(func=cmd_grpo_rewards)

    p = sub.add_parser("plot", help="render a scene (and trajectory) to SVG")
    p.add_argument("--scene", required=True)
    p.add_argument("--trajectory")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_plot)

    p = sub.add_parser("serve", help="run the demonstration-collection service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8008)
    p.add_argument("--data-dir", default=str(default_data_dir()))
    p.add_argument("--rows-per-opening", type=int, default=3)
    _add_verify_flags(p)
    _add_lattice_flags(p)
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("demo-replay", help="re-verify a saved demonstration")
    p.add_argument("--demo", required=True, help="demonstration CSV (scene JSON sits beside it)")
    p.add_argument("--strict", action="store_true")
    _add_verify_flags(p)
    _add_lattice_flags(p)
    p.set_defaults(func=cmd_demo_replay)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except FileNotFoundError as e:
        print(f"file not found: {e.filename or e}", file=sys.stderr)
        return 1
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
