"""Command-line entry point: ``hybridfinger <verb> ...``.

Exit codes: 0 success, 2 bad input or parameters, 3 planner/runtime failure.
"""
from __future__ import annotations

import argparse
import csv
import math
import sys
from pathlib import Path

import numpy as np
import yaml

from . import metrics
from .benchmark import BENCH_PLANES, CORRIDOR, PRESETS, SHAPES, BenchmarkSpec, run_benchmark
from .diffkin import jacobian
from .errors import FingerError, MetricsError, ParamsError
from .kinematics.chain import fk
from .kinematics.inverse import x2q
from .kinematics.loops import m2q, q2m
from .kinematics.params import load_params
from .plant import Plant, PlantConfig, TrialTrace
from .planners import RmrcConfig, execute_task_path, plan_joint_space, read_path_csv

EXIT_OK, EXIT_INPUT, EXIT_RUNTIME = 0, 2, 3
CONFIG_KEYS = ("tolerance_mm", "v_desired_mm_s", "dt_ctrl_s", "delta_s")


class InputError(Exception):
    pass


def _angle_in(value, deg):
    return math.radians(value) if deg else value


def _angle_out(value, deg):
    return math.degrees(value) if deg else value


def _load_config(path):
    if path is None:
        return {}
    doc = yaml.safe_load(Path(path).read_text()) or {}
    unknown = set(doc) - set(CONFIG_KEYS)
    if unknown:
        raise InputError(f"unknown config keys: {sorted(unknown)}")
    return doc


def _setting(args, name, cfg, key, default):
    value = getattr(args, name, None)
    if value is not None:
        return value
    return cfg.get(key, default)


def _fmt(values):
    return " ".join(f"{v:.9g}" for v in values)


def cmd_validate_params(args):
    p = load_params(args.params)
    print(f"ok: {args.params or 'default parameters'} passes all checks; branches {p.branches}")
    return EXIT_OK


def cmd_fk(args):
    p = load_params(args.params)
    M = (_angle_in(args.m1, args.deg), args.m2, args.m3)
    X = fk(M, p)
    print(_fmt(X))
    return EXIT_OK


def cmd_ik(args):
    p = load_params(args.params)
    Q = x2q((args.x, args.y, args.z), p)
    M = q2m(Q, p)
    print(_fmt((_angle_out(M[0], args.deg), M[1], M[2])))
    if args.joints:
        print(_fmt(_angle_out(q, args.deg) for q in Q))
    return EXIT_OK


def cmd_jacobian(args):
    p = load_params(args.params)
    J = jacobian((_angle_in(args.m1, args.deg), args.m2, args.m3), p)
    out = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        w = csv.writer(out)
        w.writerow(["row", "dM1", "dM2", "dM3"])
        for name, row in zip("xyz", J.matrix):
            w.writerow([name] + [f"{v:.12g}" for v in row])
    finally:
        if args.out:
            out.close()
    print(f"cond {J.cond:.6g}", file=sys.stderr)
    return EXIT_OK


def cmd_plan_joint(args):
    p = load_params(args.params)
    cfg = _load_config(args.config)
    M_cur = (_angle_in(args.start[0], args.deg), args.start[1], args.start[2])
    if args.to_x is not None:
        Q_goal = x2q(args.to_x, p, seed=m2q(M_cur, p, check=False))
    else:
        Q_goal = [_angle_in(v, args.deg) for v in args.to_q]
    delta = _setting(args, "delta", cfg, "delta_s", 0.25)
    dt = _setting(args, "dt", cfg, "dt_ctrl_s", 0.01)
    plan = plan_joint_space(Q_goal, M_cur, p, dt=dt, delta=delta)
    if args.out:
        with open(args.out, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t_s", "m1_rad", "m2_mm", "m3_mm"])
            for k, M in enumerate(plan.setpoints):
                w.writerow([f"{k * plan.dt:.6f}"] + [repr(float(v)) for v in M])
    print(f"setpoints {len(plan)} duration {plan.duration:.3f} s iterations {plan.iterations}")
    return EXIT_OK


def _rmrc_config(args, cfg, v_default=10.0):
    return RmrcConfig(
        tolerance=_setting(args, "tolerance", cfg, "tolerance_mm", 0.1),
        v_desired=_setting(args, "v", cfg, "v_desired_mm_s", v_default),
        dt_ctrl=_setting(args, "dt", cfg, "dt_ctrl_s", 0.01),
    )


def cmd_run_path(args):
    p = load_params(args.params)
    cfg = _load_config(args.config)
    rmrc = _rmrc_config(args, cfg)
    path = read_path_csv(args.path, rmrc.v_desired, args.plane, max_points=args.max_points)
    plant_cfg = PlantConfig.preset(args.preset, dt_sim=rmrc.dt_ctrl / 10)
    plant = Plant(p, plant_cfg)
    trace = execute_task_path(path, rmrc, plant, p, fps=args.fps,
                              delta=_setting(args, "delta", cfg, "delta_s", 0.25))
    if args.out:
        trace.write_csv(args.out)
    traj = metrics.trajectory_norm_error(trace, path, rmrc.v_desired)
    print(f"waypoints {len(path)} frames {len(trace)} t_complete {trace.t_complete:.3f} s "
          f"trajectory_max {traj.max_error:.4f} mm")
    return EXIT_OK


def cmd_benchmark(args):
    p = load_params(args.params)
    shapes = SHAPES if args.shape == "all" else (args.shape,)
    planes = BENCH_PLANES if args.plane == "all" else (args.plane,)
    rows = []
    for plane in planes:
        for shape in shapes:
            spec = BenchmarkSpec(
                shape=shape, plane=plane, side=args.side, radius=args.radius,
                segments=args.segments, tread=args.tread, n_steps=args.n_steps,
                v_desired=args.v, trials=args.trials, preset=args.preset, sigma=args.sigma,
                tolerance=args.tolerance, dt_ctrl=args.dt,
            )
            try:
                result = run_benchmark(spec, p, seed=args.seed, out_dir=args.out)
            except FingerError as exc:
                raise type(exc)(f"benchmark {spec.name}: {exc}") from exc
            rows.extend(result.summary)
            for r in result.summary:
                print(f"{spec.name:18s} {r['metric']:20s} {r['mean_mm']:.4f} +/- {r['sigma_mm']:.4f} mm (n={r['n']})")
    if args.out:
        metrics.write_results(rows, Path(args.out) / "summary.csv")
    return EXIT_OK


def cmd_analyze(args):
    path = read_path_csv(args.path, args.v, max_points=10**6)
    rows = {"trajectory_max": ([], []), "path_following_max": ([], []), "corridor_deviation": ([], [])}
    for name in args.traces:
        trace = TrialTrace.read_csv(name, fps=args.fps)
        traj = metrics.trajectory_norm_error(trace, path, args.v)
        pf = metrics.path_following_error(trace, path)
        corr = metrics.corridor_check(trace, path, args.half_width)
        sig_t = traj.sigma_max if traj.sigma_max is not None else args.sigma
        sig_p = pf.sigma_max if pf.sigma_max is not None else args.sigma
        rows["trajectory_max"][0].append(traj.max_error)
        rows["trajectory_max"][1].append(sig_t)
        rows["path_following_max"][0].append(pf.max_error)
        rows["path_following_max"][1].append(sig_p)
        rows["corridor_deviation"][0].append(corr.max_deviation)
        rows["corridor_deviation"][1].append(args.sigma)
        line = (f"{name}: trajectory_max {traj.max_error:.4f} mm path_following_max {pf.max_error:.4f} mm "
                f"corridor {'pass' if corr.passed else 'FAIL'} ({corr.max_deviation:.4f} mm)")
        if path.closed:
            line += f" start_end {metrics.start_end_repeatability(trace, path):.4f} mm"
        print(line)
    summary = []
    for metric, (values, sigmas) in rows.items():
        stat = metrics.weighted_mean(values, sigmas)
        summary.append({"path": Path(args.path).stem, "plane": args.plane, "metric": metric,
                        "mean_mm": stat.mean, "sigma_mm": stat.sigma, "n": stat.n})
        print(f"{metric:20s} {stat.mean:.4f} +/- {stat.sigma:.4f} mm (n={stat.n})")
    if args.out:
        metrics.write_results(summary, args.out)
    return EXIT_OK


def _add_common(sp):
    sp.add_argument("--params", help="kinematic parameter YAML (default: packaged finger)")
    sp.add_argument("--deg", action="store_true", help="angles in degrees instead of radians")
    sp.add_argument("--seed", type=int, default=0, help="random seed")


def build_parser():
    ap = argparse.ArgumentParser(prog="hybridfinger", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="verb", required=True)

    sp = sub.add_parser("validate-params", help="check a parameter file")
    _add_common(sp)
    sp.set_defaults(func=cmd_validate_params)

    sp = sub.add_parser("fk", help="motor positions to fingertip position")
    _add_common(sp)
    for name in ("m1", "m2", "m3"):
        sp.add_argument(name, type=float)
    sp.set_defaults(func=cmd_fk)

    sp = sub.add_parser("ik", help="fingertip position to motor positions")
    _add_common(sp)
    for name in ("x", "y", "z"):
        sp.add_argument(name, type=float)
    sp.add_argument("--joints", action="store_true", help="also print q1..q4, beta")
    sp.set_defaults(func=cmd_ik)

    sp = sub.add_parser("jacobian", help="3x3 motor Jacobian as CSV")
    _add_common(sp)
    for name in ("m1", "m2", "m3"):
        sp.add_argument(name, type=float)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_jacobian)

    sp = sub.add_parser("plan-joint", help="joint-space move within motor speed limits")
    _add_common(sp)
    goal = sp.add_mutually_exclusive_group(required=True)
    goal.add_argument("--to-x", type=float, nargs=3, metavar=("X", "Y", "Z"))
    goal.add_argument("--to-q", type=float, nargs=5, metavar=("Q1", "Q2", "Q3", "Q4", "BETA"))
    sp.add_argument("--start", type=float, nargs=3, default=(0.0, 0.0, 0.0), metavar=("M1", "M2", "M3"))
    sp.add_argument("--dt", type=float)
    sp.add_argument("--delta", type=float)
    sp.add_argument("--config")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_plan_joint)

    sp = sub.add_parser("run-path", help="follow a waypoint CSV on the simulated plant")
    _add_common(sp)
    sp.add_argument("path")
    sp.add_argument("--v", type=float, help="desired speed, mm/s")
    sp.add_argument("--tolerance", type=float)
    sp.add_argument("--dt", type=float, help="control period, s")
    sp.add_argument("--delta", type=float)
    sp.add_argument("--config")
    sp.add_argument("--plane", choices=("flexion", "abduction", "free"), default="free")
    sp.add_argument("--preset", choices=PRESETS, default="perfect")
    sp.add_argument("--fps", type=float, default=30.0)
    sp.add_argument("--max-points", type=int, default=50)
    sp.add_argument("--out", help="trace CSV")
    sp.set_defaults(func=cmd_run_path)

    sp = sub.add_parser("benchmark", help="run the benchmark paths and write result CSVs")
    _add_common(sp)
    sp.add_argument("--shape", choices=SHAPES + ("all",), default="all")
    sp.add_argument("--plane", choices=BENCH_PLANES + ("all",), default="all")
    sp.add_argument("--trials", type=int, default=5)
    sp.add_argument("--preset", choices=PRESETS, default="perfect")
    sp.add_argument("--v", type=float, help="desired speed, mm/s (default per path)")
    sp.add_argument("--side", type=float, default=20.0)
    sp.add_argument("--radius", type=float, default=10.0)
    sp.add_argument("--segments", type=int, default=32)
    sp.add_argument("--tread", type=float, default=2.0)
    sp.add_argument("--n-steps", type=int, default=5)
    sp.add_argument("--tolerance", type=float, default=0.1)
    sp.add_argument("--dt", type=float, default=0.01)
    sp.add_argument("--sigma", type=float, default=0.05, help="nominal per-trial uncertainty, mm")
    sp.add_argument("--out", help="output directory")
    sp.set_defaults(func=cmd_benchmark)

    sp = sub.add_parser("analyze", help="metrics over trace CSVs")
    _add_common(sp)
    sp.add_argument("traces", nargs="+")
    sp.add_argument("--path", required=True, help="input waypoint CSV")
    sp.add_argument("--v", type=float, required=True, help="desired speed, mm/s")
    sp.add_argument("--fps", type=float, default=30.0)
    sp.add_argument("--plane", default="free")
    sp.add_argument("--half-width", type=float, default=None)
    sp.add_argument("--sigma", type=float, default=0.05,
                    help="uncertainty for traces without a sigma_mm column, mm")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_analyze)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    if getattr(args, "half_width", "unset") is None:
        args.half_width = CORRIDOR.get(args.plane, 1.5)
    try:
        return args.func(args)
    except (ParamsError, MetricsError, InputError, ValueError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except FingerError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
