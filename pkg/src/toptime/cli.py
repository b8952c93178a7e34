"""Command-line entry point.

Exit codes: 0 success, 1 invalid input (bad flags, files, values), 2 runtime
failure.  Every output is a deterministic function of the inputs and seed.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path
from typing import List, Optional

import numpy as np

from . import analysis, assets, retimer, simharness, stability
from .motiondata import MotionDataError, MotionTrajectory, RobotModel, load_robot_model, load_trajectory


class UsageError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _load_traj(arg: str, n_intervals: int = assets.SUITE_INTERVALS) -> MotionTrajectory:
    """A trajectory file path, or the name of a bundled motion."""
    p = Path(arg)
    if p.exists():
        return load_trajectory(p)
    try:
        return assets.motion_by_name(arg, n_intervals)
    except (KeyError, ValueError):
        raise FileNotFoundError(f"{arg}: no such file or bundled motion") from None


def _load_model(arg: Optional[str]) -> RobotModel:
    if arg is None:
        return assets.default_model()
    model = load_robot_model(arg)
    model.validate()
    return model


def _retime_config(path: Optional[str]):
    if path is None:
        return retimer.RetimeCostConfig(), retimer.ChunkingConfig()
    data = json.loads(Path(path).read_text())
    unknown = set(data) - {"cost", "chunk"}
    if unknown:
        raise ValueError(f"unknown config sections: {sorted(unknown)}")
    cost = dict(data.get("cost", {}))
    for key in ("dt_bounds", "grid"):
        if key in cost:
            cost[key] = tuple(cost[key])
    if "weights" in cost:
        cost["weights"] = {**retimer.DEFAULT_WEIGHTS, **cost["weights"]}
    return retimer.RetimeCostConfig(**cost), retimer.ChunkingConfig(**data.get("chunk", {}))


def _plan_for(traj: MotionTrajectory, plan_path: Optional[str], fixed_dt: Optional[float]) -> retimer.RetimingPlan:
    if (plan_path is None) == (fixed_dt is None):
        raise UsageError("give exactly one of --plan or --fixed-dt")
    if plan_path is not None:
        return retimer.RetimingPlan.from_json(Path(plan_path).read_text())
    if not fixed_dt > 0:
        raise UsageError("--fixed-dt must be positive")
    return retimer.RetimingPlan.uniform(len(traj), fixed_dt)


def _write_json(path, doc) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(json.dumps(analysis._jsonable(doc), indent=1, sort_keys=True) + "\n")


def _progress(quiet: bool):
    return None if quiet else (lambda msg: print(msg, file=sys.stderr, flush=True))


# ---------------------------------------------------------------------------
# subcommands


def cmd_retime(a) -> int:
    traj = _load_traj(a.traj)
    model = _load_model(a.model)
    cost, chunk = _retime_config(a.config)
    plan = retimer.retime_trajectory(model, traj, cost, chunk)
    Path(a.out).write_text(plan.to_json(traj.name, retimer.config_hash(cost, chunk)))
    print(f"{traj.name}: {len(plan.dts)} intervals, total {plan.total_time:.4f} s -> {a.out}")
    return 0


def _simulate(a, traj, plan):
    model = _load_model(a.model)
    dist = simharness.DisturbanceConfig(push_interval=a.push_interval, payload_mass=a.payload,
                                        randomize=a.randomize, seed=a.seed)
    ref = retimer.resample(traj, plan, a.dt_ctrl)
    trace = simharness.rollout(model, ref, a.dt_ctrl, dist)
    return model, ref, trace, dist


def cmd_simulate(a) -> int:
    traj = _load_traj(a.traj)
    plan = _plan_for(traj, a.plan, a.fixed_dt)
    model, _, trace, dist = _simulate(a, traj, plan)
    simharness.write_trace_csv(trace, a.trace)
    meta = {"trajectory": traj.name, "model": a.model or "bundled:humanoid60", "seed": a.seed,
            "dt_ctrl": a.dt_ctrl, "payload_kg": a.payload, "randomize": a.randomize,
            "push_interval": a.push_interval, "plan_dt_s": list(plan.dts), "time_cost": plan.total_time,
            "plan_hash": analysis.plan_hash(plan), "success": trace.success, "fall_time": trace.fall_time,
            "total_mass": trace.total_mass, "ticks": len(trace)}
    _write_json(str(a.trace) + ".meta.json", meta)
    status = "success" if trace.success else f"fall at {trace.fall_time:.3f} s"
    print(f"{traj.name}: {len(trace)} ticks, {status}, peak d {float(np.max(trace.d)):.4f} m -> {a.trace}")
    return 0


def cmd_metrics(a) -> int:
    meta_path = Path(str(a.trace) + ".meta.json")
    if not meta_path.exists():
        raise FileNotFoundError(f"{meta_path}: missing trace sidecar")
    meta = json.loads(meta_path.read_text())
    traj = _load_traj(a.ref)
    plan = retimer.RetimingPlan.from_dts(meta["plan_dt_s"])
    ref = retimer.resample(traj, plan, meta["dt_ctrl"])
    trace = simharness.read_trace_csv(a.trace, meta["dt_ctrl"], meta["fall_time"], meta["total_mass"])
    model = simharness.apply_payload(_load_model(a.model), meta["payload_kg"])
    rep = analysis.compute_metrics(trace, ref, model, time_cost=plan.total_time, trajectory=traj.name,
                                   plan_hash=meta["plan_hash"], seed=meta["seed"])
    _write_json(a.out, rep.as_dict())
    print(json.dumps(analysis._jsonable(rep.as_dict()), sort_keys=True))
    return 0


def _suite(path: Optional[str]) -> analysis.SuiteConfig:
    return analysis.SuiteConfig() if path is None else analysis.SuiteConfig.from_json(path)


def _print_rows(rows, keys) -> None:
    for r in rows:
        print("  ".join(f"{k}={analysis._fmt(r[k])}" for k in keys if k in r))


def cmd_compare(a) -> int:
    res = analysis.run_comparison(_suite(a.suite), _load_model(a.model), _progress(a.quiet))
    for p in analysis.emit_report(res, a.out):
        print(p)
    _print_rows(res.rows, ("method", "success_rate", "time_cost", "E_g", "E_jpe", "peak_d"))
    return 0


def cmd_sweep_k(a) -> int:
    ks = [float(x) for x in a.k.split(",")] if a.k else analysis.DEFAULT_KS
    res = analysis.run_k_sweep(ks, _suite(a.suite), _load_model(a.model), _progress(a.quiet))
    for p in analysis.emit_report(res, a.out, ("csv", "json")):
        print(p)
    _print_rows(res.rows, ("method", "success_rate", "time_cost", "E_g", "E_jpe"))
    return 0


def cmd_sweep_payload(a) -> int:
    masses = [float(x) for x in a.masses.split(",")]
    suite = analysis.SuiteConfig(motions=(a.motion,), seeds=tuple(int(s) for s in a.seeds.split(",")),
                                 randomize=a.randomize, push_interval=a.push_interval)
    res = analysis.run_payload_sweep(masses, a.motion, suite=suite, model=_load_model(a.model),
                                     progress=_progress(a.quiet))
    for p in analysis.emit_report(res, a.out, ("csv", "json")):
        print(p)
    _print_rows(res.rows, ("method", "payload_kg", "success_rate", "peak_d", "E_g", "time_cost"))
    return 0


def cmd_pareto(a) -> int:
    runs_dir = Path(a.runs)
    files = sorted(runs_dir.glob("*_runs.csv"))
    if not files:
        raise FileNotFoundError(f"{runs_dir}: no *_runs.csv files")
    runs = []
    for f in files:
        with open(f, newline="") as fh:
            runs += list(csv.DictReader(fh))
    points = analysis.pareto_points(runs)
    ps = analysis.pareto_front(points)
    Path(a.out).parent.mkdir(parents=True, exist_ok=True)
    Path(a.out).write_text(analysis.svg_pareto(points))
    for p in ps.front:
        print(f"{p.tag}  time_cost={p.time_cost:.9g}  E_g={p.E_g:.9g}  E_eepe={p.E_eepe:.9g}")
    print(f"{len(ps.front)} of {len(points)} runs on the front -> {a.out}")
    return 0


def cmd_zmp_trace(a) -> int:
    traj = _load_traj(a.traj)
    plan = _plan_for(traj, a.plan, a.fixed_dt)
    _, _, trace, _ = _simulate(a, traj, plan)
    lines = ["time,zmp_x,zmp_y,d,classification"]
    for t in range(len(trace)):
        zx, zy = trace.p_zmp[t]
        lines.append(",".join([format(float(trace.time[t]), ".9g"), format(float(zx), ".9g"),
                               format(float(zy), ".9g"), format(float(trace.d[t]), ".9g"),
                               stability.CLASS_CODES_INV[int(trace.classification[t])]]))
    text = "\n".join(lines) + "\n"
    if a.out:
        Path(a.out).write_text(text)
        status = "success" if trace.success else f"fall at {trace.fall_time:.3f} s"
        print(f"{traj.name}: {len(trace)} ticks, {status} -> {a.out}")
    else:
        sys.stdout.write(text)
    return 0


# ---------------------------------------------------------------------------


def _sim_flags(p) -> None:
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dt-ctrl", type=float, default=0.005)
    p.add_argument("--payload", type=float, default=0.0, help="kg at every end effector")
    p.add_argument("--randomize", action="store_true", help="apply domain randomization")
    p.add_argument("--push-interval", type=float, default=0.0, help="s between pushes, 0 disables")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="toptime", description="Balance-aware motion retiming tools.")
    ap.add_argument("--model", help="robot model JSON (default: bundled 60 kg humanoid)")
    ap.add_argument("--quiet", action="store_true", help="suppress progress on stderr")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("retime", help="compute a per-frame duration plan")
    p.add_argument("traj")
    p.add_argument("--config")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_retime)

    p = sub.add_parser("simulate", help="roll out a plan and write a trace CSV")
    p.add_argument("traj")
    p.add_argument("--plan")
    p.add_argument("--fixed-dt", type=float)
    p.add_argument("--trace", required=True)
    _sim_flags(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("metrics", help="evaluate a trace against its reference")
    p.add_argument("--trace", required=True)
    p.add_argument("--ref", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("compare", help="fixed-duration baselines vs optimized plans")
    p.add_argument("--suite")
    p.add_argument("--out", default="compare")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("sweep-k", help="chunk blending decay sweep")
    p.add_argument("--suite")
    p.add_argument("--k", help="comma-separated values (default 0,0.2,0.5,0.8,1.5,3)")
    p.add_argument("--out", default="sweep_k")
    p.set_defaults(func=cmd_sweep_k)

    p = sub.add_parser("sweep-payload", help="end-effector payload sweep")
    p.add_argument("--masses", default="0.5,1.0,3.0")
    p.add_argument("--motion", default="fast_swing")
    p.add_argument("--seeds", default="0")
    p.add_argument("--randomize", action="store_true")
    p.add_argument("--push-interval", type=float, default=0.0)
    p.add_argument("--out", default="sweep_payload")
    p.set_defaults(func=cmd_sweep_payload)

    p = sub.add_parser("pareto", help="Pareto front of a directory of run tables")
    p.add_argument("--runs", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_pareto)

    p = sub.add_parser("zmp-trace", help="per-tick ZMP and margin")
    p.add_argument("traj")
    p.add_argument("--plan")
    p.add_argument("--fixed-dt", type=float)
    p.add_argument("--out")
    _sim_flags(p)
    p.set_defaults(func=cmd_zmp_trace)
    return ap


VALIDATION_ERRORS = (UsageError, ValueError, KeyError, FileNotFoundError, IsADirectoryError,
                     MotionDataError, retimer.RetimingError)


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except VALIDATION_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - reported as a runtime failure
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
