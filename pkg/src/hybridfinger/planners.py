"""Joint-space point-to-point planner and task-space RMRC waypoint follower."""
from __future__ import annotations

import csv
import dataclasses
import math

import numpy as np

from .diffkin import jacobian, solve_motor_rates
from .errors import Infeasible, WaypointTimeout
from .kinematics.chain import fk
from .kinematics.inverse import x2q
from .kinematics.loops import m2q, q2m
from .kinematics.states import JointState, MotorState

PLANES = ("flexion", "abduction", "free")
MAX_POINTS = 50  # waypoint buffer of the reference firmware
LIMIT_SLACK = 1e-9


@dataclasses.dataclass(frozen=True)
class JointPlan:
    """Motor setpoints spaced ``dt`` apart; ``setpoints[0]`` is the start state."""

    setpoints: np.ndarray
    dt: float
    duration: float
    iterations: int = 1

    def __len__(self):
        return len(self.setpoints)

    def speeds(self):
        """Per-step per-motor speed |dM/dt|, shape (n, 3)."""
        return np.abs(np.diff(self.setpoints, axis=0)) / self.dt

    @property
    def goal(self):
        return MotorState.of(self.setpoints[-1])


@dataclasses.dataclass(frozen=True)
class TaskPath:
    waypoints: np.ndarray
    v_desired: float
    plane: str = "free"
    max_points: int = MAX_POINTS

    def __post_init__(self):
        pts = np.array(self.waypoints, dtype=float).reshape(-1, 3)
        pts.setflags(write=False)
        object.__setattr__(self, "waypoints", pts)
        if not 1 <= len(pts) <= self.max_points:
            raise ValueError(f"path needs 1..{self.max_points} waypoints, got {len(pts)}")
        if not np.all(np.isfinite(pts)):
            raise ValueError("waypoints must be finite")
        if len(pts) > 1 and np.any(np.linalg.norm(np.diff(pts, axis=0), axis=1) == 0):
            raise ValueError("consecutive waypoints must be distinct")
        if not self.v_desired > 0:
            raise ValueError("v_desired must be positive")
        if self.plane not in PLANES:
            raise ValueError(f"plane must be one of {PLANES}")

    def __len__(self):
        return len(self.waypoints)

    @property
    def segment_lengths(self):
        return np.linalg.norm(np.diff(self.waypoints, axis=0), axis=1)

    @property
    def length(self):
        return float(self.segment_lengths.sum())

    @property
    def closed(self):
        return len(self) > 1 and bool(np.allclose(self.waypoints[0], self.waypoints[-1], atol=1e-9, rtol=0))


def read_path_csv(path, v_desired, plane="free", max_points=MAX_POINTS):
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    pts = [[float(r["x_mm"]), float(r["y_mm"]), float(r["z_mm"])] for r in rows]
    return TaskPath(np.array(pts).reshape(-1, 3), v_desired, plane, max_points)


def write_path_csv(task_path, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x_mm", "y_mm", "z_mm"])
        for row in task_path.waypoints:
            w.writerow([repr(float(v)) for v in row])


@dataclasses.dataclass(frozen=True)
class RmrcConfig:
    tolerance: float = 0.1  # mm, per axis
    v_desired: float = 10.0  # mm/s
    dt_ctrl: float = 0.01  # s
    max_iterations: int = None  # per waypoint; None derives it from the segment
    approach_clamp: bool = True
    min_iterations: int = 100

    def __post_init__(self):
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")
        if not self.dt_ctrl > 0:
            raise ValueError("dt_ctrl must be positive")
        if not self.v_desired > 0:
            raise ValueError("v_desired must be positive")

    def iteration_cap(self, segment_length):
        if self.max_iterations is not None:
            return self.max_iterations
        cap = math.ceil(10.0 * segment_length / (self.v_desired * self.dt_ctrl))
        return max(cap, self.min_iterations)


def plan_joint_space(Q_goal, M_cur, params, dt=0.01, v_max=None, delta=0.25, t_cap=60.0):
    """Linear joint-space move from ``M_cur`` to ``Q_goal`` within motor speed limits.

    The duration starts at the slowest motor's straight-line time and grows by
    ``delta`` until every step of every motor respects ``v_max``.
    """
    if dt <= 0 or delta <= 0:
        raise ValueError("dt and delta must be positive")
    v_max = params.v_max if v_max is None else np.asarray(v_max, dtype=float)
    M_cur = np.array(M_cur, dtype=float)
    Q_goal = np.array(Q_goal, dtype=float)
    lim = params.joint_limits
    if np.any(Q_goal < lim[:, 0] - LIMIT_SLACK) or np.any(Q_goal > lim[:, 1] + LIMIT_SLACK):
        raise Infeasible("goal joint state outside joint limits")
    Q_cur = np.array(m2q(M_cur, params, check=False))
    if np.all(np.abs(Q_goal - Q_cur) <= 1e-12):
        return JointPlan(M_cur[None, :].copy(), dt, 0.0, 1)
    M_goal = np.array(q2m(Q_goal, params, prev=M_cur))

    t = float(np.max(np.abs(M_goal - M_cur) / v_max))
    mlo, mhi = params.motor_limits[:, 0], params.motor_limits[:, 1]
    iterations = 0
    while True:
        if t > t_cap:
            raise Infeasible(f"no feasible duration up to {t_cap} s")
        iterations += 1
        n = max(1, math.ceil(t / dt - 1e-9))
        plan = np.empty((n + 1, 3))
        plan[0] = M_cur
        prev = M_cur
        for k in range(1, n + 1):
            Qk = Q_cur + (k / n) * (Q_goal - Q_cur)
            prev = np.array(q2m(Qk, params, prev=prev))
            if np.any(prev < mlo - LIMIT_SLACK) or np.any(prev > mhi + LIMIT_SLACK):
                raise Infeasible(f"setpoint {k} of {n} leaves the motor limits")
            plan[k] = prev
        speed = np.abs(np.diff(plan, axis=0)) / dt
        if not np.any(speed > v_max):
            return JointPlan(plan, dt, n * dt, iterations)
        t += delta


@dataclasses.dataclass(frozen=True)
class RmrcCommand:
    mdot: np.ndarray
    error: np.ndarray
    xdot: np.ndarray  # requested task velocity before scaling
    scale: float
    direction_error: float  # |J mdot / |J mdot| - E / |E||

    @property
    def converged(self):
        return not np.any(self.error)


def rmrc_step(X_goal, M_cur, cfg, params, X_cur=None):
    """One resolved-rate command toward ``X_goal``.

    Motor rates are scaled down together when any motor would exceed its
    speed limit, so the fingertip direction is unchanged.  A zero error gives
    a zero command.
    """
    if X_cur is None:
        X_cur = fk(M_cur, params)
    E = np.asarray(X_goal, dtype=float) - np.asarray(X_cur, dtype=float)
    dist = float(np.linalg.norm(E))
    if dist == 0.0:
        return RmrcCommand(np.zeros(3), E, np.zeros(3), 1.0, 0.0)
    unit = E / dist
    v = cfg.v_desired
    if cfg.approach_clamp:
        v = min(v, dist / cfg.dt_ctrl)
    xdot = unit * v
    J = jacobian(M_cur, params)
    mdot = solve_motor_rates(J, xdot)
    ratio = np.abs(mdot) / params.v_max
    scale = 1.0
    if np.any(ratio > 1.0):
        scale = 1.0 / float(ratio.max())
        mdot = mdot * scale
    realized = J @ mdot
    direction_error = float(np.linalg.norm(realized / np.linalg.norm(realized) - unit))
    return RmrcCommand(mdot, E, xdot, scale, direction_error)


@dataclasses.dataclass
class ExecutionLog:
    joint_plan: JointPlan = None
    iterations: list = dataclasses.field(default_factory=list)
    final_errors: list = dataclasses.field(default_factory=list)
    max_direction_error: float = 0.0
    max_scale_ratio: float = 0.0  # largest |mdot_i| / v_max_i after scaling
    steps: int = 0
    error_norms: list = dataclasses.field(default_factory=list)


def execute_joint_plan(plan, plant, settle_time=1.0):
    """Stream a plan as per-step velocity commands, then settle on the last setpoint."""
    for k in range(1, len(plan)):
        plant.run(plan.dt, velocity=(plan.setpoints[k] - plan.setpoints[k - 1]) / plan.dt)
    goal = plan.setpoints[-1]
    dt = plan.dt
    waited = 0.0
    while waited < settle_time and np.max(np.abs(plant.state.position - goal)) > 1e-12:
        plant.run(dt, target=goal)
        waited += dt


def execute_task_path(path, cfg, plant, params, fps=30.0, tail=0.0, planner_dt=0.01, delta=0.25,
                      record_errors=False):
    """Drive ``plant`` through ``path``: joint-space move to the first point, then RMRC.

    Returns the fingertip trace recorded from the start of the task-space
    phase, with ``t_complete`` set when the last waypoint converged.
    """
    if plant.config.dt_sim > cfg.dt_ctrl / 2 + 1e-15:
        raise ValueError("plant dt_sim must be at most half the control period")
    log = ExecutionLog()
    M_now = plant.read_encoders()
    Q_first = x2q(path.waypoints[0], params, seed=m2q(M_now, params, check=False))
    log.joint_plan = plan_joint_space(Q_first, M_now, params, dt=planner_dt, delta=delta)
    execute_joint_plan(log.joint_plan, plant)

    plant.start_recording(fps)
    for k in range(1, len(path)):
        goal = path.waypoints[k]
        cap = cfg.iteration_cap(path.segment_lengths[k - 1])
        it = 0
        while True:
            M = plant.read_encoders()
            X = np.array(fk(M, params))
            E = goal - X
            if record_errors:
                log.error_norms.append((k, float(np.linalg.norm(E))))
            if np.all(np.abs(E) <= cfg.tolerance):
                break
            if it >= cap:
                raise WaypointTimeout(
                    f"waypoint {k} not reached within {cap} control steps "
                    f"(error {np.linalg.norm(E):.4f} mm)", waypoint=k)
            cmd = rmrc_step(goal, M, cfg, params, X_cur=X)
            log.max_direction_error = max(log.max_direction_error, cmd.direction_error)
            log.max_scale_ratio = max(log.max_scale_ratio, float(np.max(np.abs(cmd.mdot) / params.v_max)))
            plant.run(cfg.dt_ctrl, velocity=cmd.mdot)
            it += 1
        log.iterations.append(it)
        log.final_errors.append(E)
        log.steps += it
    t_complete = plant.t
    # zero command, held at least until the first frame at or after completion
    frame = 1.0 / fps
    elapsed = t_complete - plant.recording_start
    to_frame = math.ceil(elapsed / frame - 1e-9) * frame - elapsed
    plant.run(max(tail, to_frame), velocity=np.zeros(3))
    trace = plant.stop_recording(path=path, v_desired=cfg.v_desired, t_complete=t_complete)
    trace.log = log
    return trace
