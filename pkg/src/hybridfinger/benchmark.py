"""The six benchmark paths and the multi-trial experiment runner."""
from __future__ import annotations

import csv
import dataclasses
from pathlib import Path

import numpy as np

from . import metrics
from .errors import FingerError, Unreachable
from .kinematics.inverse import x2q
from .kinematics.loops import m2q
from .plant import Plant, PlantConfig
from .planners import RmrcConfig, TaskPath, execute_task_path, write_path_csv

SHAPES = ("square", "circle", "step")
BENCH_PLANES = ("flexion", "abduction")
PRESETS = ("perfect", "abduction-degraded")
# nominal path centre (mm): the fingertip at motors (0, 2, 5), rounded
DEFAULT_CENTER = (0.0, -48.0, 45.0)
CORRIDOR = {"flexion": 1.5, "abduction": 2.0}
# flexion axes: (y, z) at constant x; abduction axes: (x, z) at constant y
PLANE_AXES = {
    "flexion": (np.array([0.0, 1.0, 0.0]), np.array([0.0, 0.0, 1.0])),
    "abduction": (np.array([1.0, 0.0, 0.0]), np.array([0.0, 0.0, 1.0])),
}


def default_speed(shape, plane):
    return 5.0 if (shape == "step" and plane == "flexion") else 10.0


@dataclasses.dataclass(frozen=True)
class BenchmarkSpec:
    shape: str = "square"
    plane: str = "flexion"
    side: float = 20.0  # square, mm
    radius: float = 10.0  # circle, mm
    segments: int = 32  # circle polygon
    tread: float = 2.0  # step, mm
    n_steps: int = 5
    v_desired: float = None  # mm/s; None picks the shape/plane default
    trials: int = 5
    preset: str = "perfect"
    center: tuple = DEFAULT_CENTER
    tolerance: float = 0.1
    dt_ctrl: float = 0.01
    fps: float = 30.0
    sigma: float = 0.05  # nominal per-trial uncertainty of simulated maxima, mm
    start_jitter: float = 0.05  # fraction of motor range for each trial's start pose

    def __post_init__(self):
        if self.shape not in SHAPES:
            raise ValueError(f"shape must be one of {SHAPES}")
        if self.plane not in BENCH_PLANES:
            raise ValueError(f"plane must be one of {BENCH_PLANES}")
        if self.preset not in PRESETS:
            raise ValueError(f"preset must be one of {PRESETS}")
        if self.v_desired is None:
            object.__setattr__(self, "v_desired", default_speed(self.shape, self.plane))
        if not self.v_desired > 0:
            raise ValueError("v_desired must be positive")
        if not (isinstance(self.trials, int) and self.trials >= 1):
            raise ValueError("trials must be a positive integer")
        if min(self.side, self.radius, self.tread) <= 0 or self.segments < 3 or self.n_steps < 1:
            raise ValueError("path size parameters must be positive")
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")

    @property
    def name(self):
        return f"{self.plane}-{self.shape}"


def path_points(spec):
    a, b = PLANE_AXES[spec.plane]
    c = np.asarray(spec.center, dtype=float)
    if spec.shape == "square":
        h = spec.side / 2.0
        corners = [(-1, -1), (1, -1), (1, 1), (-1, 1), (-1, -1)]
        return np.array([c + h * (i * a + j * b) for i, j in corners])
    if spec.shape == "circle":
        ang = 2.0 * np.pi * np.arange(spec.segments + 1) / spec.segments
        pts = c + spec.radius * (np.cos(ang)[:, None] * a + np.sin(ang)[:, None] * b)
        pts[-1] = pts[0]
        return pts
    # staircase: alternate a tread along a and a riser along b
    half = spec.n_steps * spec.tread / 2.0
    pts = [c - half * (a + b)]
    for _ in range(spec.n_steps):
        pts.append(pts[-1] + spec.tread * a)
        pts.append(pts[-1] + spec.tread * b)
    return np.array(pts)


def generate_path(spec, params):
    """Benchmark waypoints, each checked to be reachable."""
    pts = path_points(spec)
    for k, X in enumerate(pts):
        try:
            x2q(X, params)
        except FingerError as exc:
            raise Unreachable(f"{spec.name} waypoint {k} {tuple(np.round(X, 3))} is unreachable: {exc}",
                              waypoint=k) from exc
    return TaskPath(pts, spec.v_desired, spec.plane, max_points=max(50, len(pts)))


def _start_pose(rng, params, jitter):
    lim = params.motor_limits
    while True:
        M = rng.uniform(-jitter, jitter, 3) * np.ptp(lim, axis=1)
        M = np.clip(M, lim[:, 0], lim[:, 1])
        try:
            m2q(M, params)
            return M
        except FingerError:
            continue


@dataclasses.dataclass
class TrialResult:
    trace: object
    trajectory: metrics.ErrorSeries
    path_following: metrics.ErrorSeries
    repeatability: float
    corridor: metrics.CorridorResult


@dataclasses.dataclass
class BenchmarkResult:
    spec: BenchmarkSpec
    path: TaskPath
    trials: list
    summary: list  # rows for metrics.write_results


def _summarize(spec, trials):
    sig = [spec.sigma] * len(trials)

    def row(metric, values):
        stat = metrics.weighted_mean(values, sig)
        return {"path": spec.shape, "plane": spec.plane, "metric": metric,
                "mean_mm": stat.mean, "sigma_mm": stat.sigma, "n": stat.n}

    rows = [
        row("trajectory_max", [t.trajectory.max_error for t in trials]),
        row("path_following_max", [t.path_following.max_error for t in trials]),
        row("corridor_deviation", [t.corridor.max_deviation for t in trials]),
    ]
    if trials[0].repeatability is not None:
        rows.append(row("start_end", [t.repeatability for t in trials]))
    return rows


def run_benchmark(spec, params, seed=0, out_dir=None):
    """Run ``spec.trials`` closed-loop trials and evaluate every metric."""
    path = generate_path(spec, params)
    rng = np.random.default_rng(seed)
    cfg = RmrcConfig(tolerance=spec.tolerance, v_desired=spec.v_desired, dt_ctrl=spec.dt_ctrl)
    plant_cfg = PlantConfig.preset(spec.preset, dt_sim=spec.dt_ctrl / 10)
    trials = []
    for k in range(spec.trials):
        plant = Plant(params, plant_cfg, M0=_start_pose(rng, params, spec.start_jitter))
        try:
            trace = execute_task_path(path, cfg, plant, params, fps=spec.fps)
        except FingerError as exc:
            raise type(exc)(f"{spec.name} trial {k}: {exc}") from exc
        rep = metrics.start_end_repeatability(trace, path) if path.closed else None
        trials.append(TrialResult(
            trace,
            metrics.trajectory_norm_error(trace, path, spec.v_desired),
            metrics.path_following_error(trace, path),
            rep,
            metrics.corridor_check(trace, path, CORRIDOR[spec.plane]),
        ))
    result = BenchmarkResult(spec, path, trials, _summarize(spec, trials))
    if out_dir is not None:
        write_bundle(result, out_dir)
    return result


TRIAL_FIELDS = ["trial", "trajectory_max_mm", "trajectory_raw_max_mm", "trajectory_argmax",
                "path_following_max_mm", "start_end_mm", "corridor_deviation_mm", "corridor_pass",
                "frames", "active_frames", "metric_version"]


def write_bundle(result, out_dir):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    name = result.spec.name
    write_path_csv(result.path, out / f"{name}-path.csv")
    with open(out / f"{name}-trials.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TRIAL_FIELDS)
        for k, t in enumerate(result.trials):
            t.trace.write_csv(out / f"{name}-trial{k}.csv")
            rep = "" if t.repeatability is None else f"{t.repeatability:.6f}"
            w.writerow([k, f"{t.trajectory.max_error:.6f}", f"{t.trajectory.raw_max:.6f}",
                        t.trajectory.argmax, f"{t.path_following.max_error:.6f}", rep,
                        f"{t.corridor.max_deviation:.6f}", int(t.corridor.passed),
                        len(t.trace), t.trajectory.n_active, metrics.METRIC_VERSION])
    metrics.write_results(result.summary, out / f"{name}-summary.csv")


def six_benchmarks(**overrides):
    return [BenchmarkSpec(shape=s, plane=pl, **overrides) for pl in BENCH_PLANES for s in SHAPES]
