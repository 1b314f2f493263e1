"""Inverse kinematics: fingertip position to joints and motors.

The abduction angle comes out in closed form.  The two flexion angles are
found by damped Newton iteration on the in-plane tip position, with the
DIP angle slaved to the PIP angle through loop 5.
"""
import math

import numpy as np

from ..errors import FingerError, Unreachable
from .chain import fk_joints, joint_partials
from .loops import dq4_dq3, q2m, solve_loop4_beta, solve_loop5
from .states import JointState

NEWTON_TOL_MM = 1e-9
DAMPING = 1e-6
MAX_ITER = 100
MAX_STEP_RAD = 0.3
# fallback seeds as fractions of the (q2, q3) joint ranges
FALLBACK_FRACTIONS = ((0.2, 0.2), (0.8, 0.2), (0.2, 0.8), (0.8, 0.8), (0.5, 0.05))


def _planar(q2, q3, p):
    q4 = solve_loop5(q3, p, check=False)
    Q = (0.0, q2, q3, q4, 0.0)
    tip = fk_joints(Q, p)[1:]
    P = joint_partials(Q, p)[1:]
    jac = np.column_stack([P[:, 1], P[:, 2] + P[:, 3] * dq4_dq3(q3, q4, p)])
    return tip, jac


def _newton(target, q2, q3, p, tol, damping, max_iter):
    for _ in range(max_iter + 1):
        tip, jac = _planar(q2, q3, p)
        r = tip - target
        if np.linalg.norm(r) <= tol:
            return q2, q3
        step = np.linalg.solve(jac.T @ jac + damping * np.eye(2), -jac.T @ r)
        size = np.max(np.abs(step))
        if size > MAX_STEP_RAD:
            step *= MAX_STEP_RAD / size
        q2, q3 = q2 + step[0], q3 + step[1]
    return None


def _within(value, limits):
    return limits[0] <= value <= limits[1]


def x2q(X, p, seed=None, tol=NEWTON_TOL_MM, damping=DAMPING, max_iter=MAX_ITER):
    """Joint angles placing the fingertip at ``X`` (mm, base frame)."""
    x, y, z = (float(v) for v in X)
    if not all(map(math.isfinite, (x, y, z))):
        raise Unreachable("non-finite target")
    if math.sqrt(x * x + y * y + z * z) > p.reach:
        raise Unreachable(f"target {X} is beyond the finger's reach {p.reach:.3f} mm")
    # the finger plane contains the y axis; a tip curled behind it (z < 0)
    # sits on the far side, so the abduction angle is the flipped atan2
    lim = p.joint_limits
    q1 = math.atan2(x, z)
    if not _within(q1, lim[0]):
        q1 = math.atan2(-x, -z)
    if not _within(q1, lim[0]):
        raise Unreachable(f"abduction angle {math.atan2(x, z):.4f} rad outside joint limits")
    target = np.array([y, x * math.sin(q1) + z * math.cos(q1)])

    seeds = []
    if seed is not None:
        seeds.append((float(seed[1]), float(seed[2])))
    else:
        seeds.append((lim[1].mean(), lim[2].mean()))
    for f2, f3 in FALLBACK_FRACTIONS:
        seeds.append((lim[1, 0] + f2 * np.ptp(lim[1]), lim[2, 0] + f3 * np.ptp(lim[2])))

    for q2_0, q3_0 in seeds:
        try:
            found = _newton(target, q2_0, q3_0, p, tol, damping, max_iter)
            if found is None:
                continue
            q2, q3 = found
            if not (_within(q2, lim[1]) and _within(q3, lim[2])):
                continue
            q4 = solve_loop5(q3, p)
            beta = solve_loop4_beta(q3, p)
        except FingerError:
            continue
        return JointState.of((q1, q2, q3, q4, beta))
    raise Unreachable(f"no joint solution reaches {tuple(round(v, 4) for v in (x, y, z))}")


def ik(X, p, seed=None, prev_motor=None):
    """Motor positions placing the fingertip at ``X``."""
    return q2m(x2q(X, p, seed=seed), p, prev=prev_motor)
