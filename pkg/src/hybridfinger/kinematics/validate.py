"""Load-time self-consistency checks for a parameter set."""
import itertools

import numpy as np

from ..errors import ParamsError, Unsolvable
from .loops import (
    loop_residuals,
    m2q,
    q2m,
    solve_loop4,
    solve_loop4_beta,
    solve_loop5,
)
from .states import HOME_M, HOME_Q

HOME_TOL_MM = 1e-9
FRAME_TOL_MM = 1e-9
SWEEP_POINTS = 25


def check_params(p, sweep_points=SWEEP_POINTS):
    """Raise ParamsError (naming the loop) if ``p`` is not self-consistent.

    Checks, in order: every loop closes at M = 0 with Q = 0; the chain
    offsets agree with the link vectors (OD = OA + AD, DG in-plane); the
    zero configuration lies inside the motor and joint limits; and loops 4
    and 5, plus the carriage quadratics of loops 2 and 3, have real
    solutions across the joint limits.
    """
    res = loop_residuals(HOME_M, HOME_Q, p)
    for loop, r in zip((2, 3, 4, 5), res):
        if abs(r) > HOME_TOL_MM:
            raise ParamsError(f"loop {loop} residual {r:.3g} mm at the zero configuration")
    try:
        q_home = m2q(HOME_M, p, check=False)
    except Unsolvable as exc:
        raise ParamsError(f"zero configuration does not solve: {exc}") from None
    if np.max(np.abs(q_home)) > 1e-9:
        raise ParamsError(f"M = 0 solves to Q = {tuple(round(q, 6) for q in q_home)}, expected 0")

    od = p.OA + p.AD
    if abs(od[0]) > FRAME_TOL_MM or abs(od[1] - p.OD_y) > FRAME_TOL_MM or abs(od[2] - p.OD_z) > FRAME_TOL_MM:
        raise ParamsError("OD_y/OD_z disagree with OA + AD")
    if abs(p.DG[0]) > FRAME_TOL_MM or abs(p.DG[1] - p.DG_y) > FRAME_TOL_MM or abs(p.DG[2] - p.DG_z) > FRAME_TOL_MM:
        raise ParamsError("DG_y/DG_z disagree with the DG link vector")

    if np.any(p.motor_limits[:, 0] > 0) or np.any(p.motor_limits[:, 1] < 0):
        raise ParamsError("zero motor position lies outside the motor limits")
    if np.any(p.joint_limits[:, 0] > 0) or np.any(p.joint_limits[:, 1] < 0):
        raise ParamsError("zero joint configuration lies outside the joint limits")

    lim = p.joint_limits
    q1s = np.linspace(*lim[0], 5)
    q2s = np.linspace(*lim[1], sweep_points)
    q3s = np.linspace(*lim[2], sweep_points)
    betas = np.linspace(*lim[4], sweep_points)
    try:
        for q3 in q3s:
            solve_loop5(q3, p, check=False)
            solve_loop4_beta(q3, p, check=False)
        for beta in betas:
            solve_loop4(beta, p, check=False)
        for q1, q2, beta in itertools.product(q1s, q2s, betas):
            q2m((q1, q2, 0.0, 0.0, beta), p)
    except Unsolvable as exc:
        raise ParamsError(f"joint limits leave the solvable domain: {exc}") from None
    return p
