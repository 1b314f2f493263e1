"""Loop-closure equations of the four parallel loops and their solvers.

Every loop has the form ``l = |U - R(q) V|`` with a single unknown angle
``q`` inside ``R(q) = prefix @ rot(q)``.  Expanding the square gives
``A sin q + B cos q + C = 0`` which has the closed-form solution
``atan2(A, B) +/- arccos(-C / hypot(A, B))``.
"""
from __future__ import annotations

import dataclasses
import math

import numpy as np

from ..errors import OutOfJointLimits, ParamsError, SingularLoop, Unsolvable
from .states import JointState, MotorState

ARG_TOL = 1e-12
E_TOL = 1e-12
E_Z = np.array([0.0, 0.0, 1.0])
# rows of KinematicParams.joint_limits
Q1, Q2, Q3, Q4, BETA = range(5)


def rot_x(q):
    c, s = math.cos(q), math.sin(q)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def rot_y(q):
    c, s = math.cos(q), math.sin(q)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


_KX = np.array([[0.0, 0.0, 0.0], [0.0, 0.0, -1.0], [0.0, 1.0, 0.0]])
_KY = np.array([[0.0, 0.0, 1.0], [0.0, 0.0, 0.0], [-1.0, 0.0, 0.0]])


def drot_x(q):
    return rot_x(q) @ _KX


def drot_y(q):
    return rot_y(q) @ _KY


def wrap(q):
    """Wrap an angle to (-pi, pi]."""
    w = math.remainder(q, 2.0 * math.pi)
    return math.pi if w == -math.pi else w


@dataclasses.dataclass(frozen=True)
class TrigCoefficients:
    A: float
    B: float
    C: float
    branch: int = 1  # +1 or -1, sign in front of the arccos

    def residual(self, q):
        return self.A * math.sin(q) + self.B * math.cos(q) + self.C

    def roots(self):
        """Both roots (plus, minus), wrapped; raises Unsolvable."""
        r = math.hypot(self.A, self.B)
        if r == 0.0:
            raise Unsolvable("degenerate loop: A and B are both zero")
        arg = -self.C / r
        if abs(arg) > 1.0 + ARG_TOL:
            raise Unsolvable(f"loop cannot close: |-C/sqrt(A^2+B^2)| = {abs(arg):.6g} > 1")
        arg = min(1.0, max(-1.0, arg))
        base = math.atan2(self.A, self.B)
        delta = math.acos(arg)
        return wrap(base + delta), wrap(base - delta)


def solve_trig(coeffs, near=None):
    """Solve ``A sin q + B cos q + C = 0`` on the branch ``coeffs.branch``.

    When ``near`` is given the root closest to it is returned instead, which
    keeps a trajectory on one assembly mode.
    """
    plus, minus = coeffs.roots()
    if near is not None:
        return min((plus, minus), key=lambda q: abs(wrap(q - near)))
    return plus if coeffs.branch >= 0 else minus


def loop_reduce(U, V, l, prefix=None, axis="x", branch=1):
    """Reduce ``l = |U - prefix @ rot_axis(q) @ V|`` to trig coefficients.

    Uses ``U^T R V = (|U|^2 + |V|^2 - l^2) / 2``; the unknown rotation is
    about ``axis`` ('x' or 'y') and ``prefix`` is any known rotation applied
    on the left.
    """
    U = np.asarray(U, dtype=float)
    V = np.asarray(V, dtype=float)
    if l < 0:
        raise ValueError("rod length must be non-negative")
    S = 0.5 * (U @ U + V @ V - l * l)
    u = U if prefix is None else np.asarray(prefix).T @ U
    if axis == "x":
        A = u[2] * V[1] - u[1] * V[2]
        B = u[1] * V[1] + u[2] * V[2]
        C = u[0] * V[0] - S
    elif axis == "y":
        A = u[0] * V[2] - u[2] * V[0]
        B = u[0] * V[0] + u[2] * V[2]
        C = u[1] * V[1] - S
    else:
        raise ValueError(f"unsupported rotation axis {axis!r}")
    return TrigCoefficients(float(A), float(B), float(C), branch)


# Loop geometry.  Each helper returns (U, V, prefix) for its unknown angle.

def _loop2_terms(m2, q1, p):
    return p.P2 + m2 * E_Z, p.OA, rot_y(q1)


def _loop3_terms(m3, q1, q2, p):
    U = p.P3 + m3 * E_Z - rot_y(q1) @ rot_x(q2) @ p.OA
    return U, p.AB, rot_y(q1)


def _loop4_terms(beta, p):
    return rot_x(beta + p.beta_offset) @ p.AC - p.AD, p.DF, None


def _loop4_beta_terms(q3, p):
    # same loop read the other way: the crank angle from the PIP angle
    return p.AD + rot_x(q3) @ p.DF, p.AC, None


def _loop5_terms(q3, p):
    R3 = rot_x(q3)
    return p.DE - R3 @ p.DG, p.GH, R3


def loop2_residual(m2, q1, q2, p):
    v = p.P2 + m2 * E_Z - rot_y(q1) @ rot_x(q2) @ p.OA
    return float(np.linalg.norm(v) - p.l2)


def loop3_residual(m3, q1, q2, beta, p):
    R2 = rot_y(q1) @ rot_x(q2)
    R3 = rot_y(q1) @ rot_x(q2 + beta + p.beta_offset)
    v = p.P3 + m3 * E_Z - R2 @ p.OA - R3 @ p.AB
    return float(np.linalg.norm(v) - p.l3)


def loop4_residual(beta, q3, p):
    v = -rot_x(beta + p.beta_offset) @ p.AC + p.AD + rot_x(q3) @ p.DF
    return float(np.linalg.norm(v) - p.l4)


def loop5_residual(q3, q4, p):
    R3 = rot_x(q3)
    v = R3 @ p.DG + R3 @ rot_x(q4) @ p.GH - p.DE
    return float(np.linalg.norm(v) - p.l5)


def loop_residuals(M, Q, p):
    """Norm residuals (mm) of loops 2, 3, 4, 5 for a motor/joint pair."""
    m1, m2, m3 = M
    q1, q2, q3, q4, beta = Q
    return np.array([
        loop2_residual(m2, q1, q2, p),
        loop3_residual(m3, q1, q2, beta, p),
        loop4_residual(beta, q3, p),
        loop5_residual(q3, q4, p),
    ])


def _check(value, row, p, loop, name):
    lo, hi = p.joint_limits[row]
    if not lo <= value <= hi:
        raise OutOfJointLimits(
            f"loop {loop}: solved {name} = {value:.6g} rad outside [{lo:.6g}, {hi:.6g}]",
            loop=loop,
            joint=name,
        )
    return value


def _solve(terms, l, p, key, near=None, loop=None):
    U, V, prefix = terms
    coeffs = loop_reduce(U, V, l, prefix=prefix, branch=p.branches[key])
    try:
        return solve_trig(coeffs, near=near)
    except Unsolvable as exc:
        raise Unsolvable(f"loop {loop}: {exc}", loop=loop) from None


def solve_loop2(m2, q1, p, near=None, check=True):
    q2 = _solve(_loop2_terms(m2, q1, p), p.l2, p, "loop2", near, loop=2)
    return _check(q2, Q2, p, 2, "q2") if check else q2


def solve_loop3(m3, q1, q2, p, near=None, check=True):
    if near is not None:
        near = near + q2 + p.beta_offset
    theta = _solve(_loop3_terms(m3, q1, q2, p), p.l3, p, "loop3", near, loop=3)
    beta = wrap(theta - q2 - p.beta_offset)
    return _check(beta, BETA, p, 3, "beta") if check else beta


def solve_loop4(beta, p, near=None, check=True):
    q3 = _solve(_loop4_terms(beta, p), p.l4, p, "loop4", near, loop=4)
    return _check(q3, Q3, p, 4, "q3") if check else q3


def solve_loop4_beta(q3, p, near=None, check=True):
    """Crank angle beta that places the PIP joint at ``q3`` (loop 4 inverted)."""
    if near is not None:
        near = near + p.beta_offset
    beta1 = _solve(_loop4_beta_terms(q3, p), p.l4, p, "loop4_beta", near, loop=4)
    beta = wrap(beta1 - p.beta_offset)
    return _check(beta, BETA, p, 4, "beta") if check else beta


def solve_loop5(q3, p, near=None, check=True):
    q4 = _solve(_loop5_terms(q3, p), p.l5, p, "loop5", near, loop=5)
    return _check(q4, Q4, p, 5, "q4") if check else q4


def calibrate_branches(p):
    """Pick, for every loop, the arccos sign that reproduces Q = 0 at M = 0."""
    home = {
        "loop2": (_loop2_terms(0.0, 0.0, p), p.l2, 0.0),
        "loop3": (_loop3_terms(0.0, 0.0, 0.0, p), p.l3, p.beta_offset),
        "loop4": (_loop4_terms(0.0, p), p.l4, 0.0),
        "loop4_beta": (_loop4_beta_terms(0.0, p), p.l4, p.beta_offset),
        "loop5": (_loop5_terms(0.0, p), p.l5, 0.0),
    }
    branches = {}
    for key, ((U, V, prefix), l, target) in home.items():
        coeffs = loop_reduce(U, V, l, prefix=prefix)
        try:
            plus, minus = coeffs.roots()
        except Unsolvable as exc:
            raise ParamsError(f"{key} does not close at the zero configuration: {exc}") from None
        d_plus, d_minus = abs(wrap(plus - target)), abs(wrap(minus - target))
        if abs(d_plus - d_minus) < 1e-9:
            raise ParamsError(f"{key} sits at a fold at the zero configuration")
        branches[key] = 1 if d_plus < d_minus else -1
    return branches


def m2q(M, p, prev=None, check=True):
    """Motor positions to the five joint angles, loop by loop.

    ``prev`` (a JointState) switches every loop to the root nearest the
    previous solution instead of the calibrated branch.
    """
    m1, m2, m3 = (float(v) for v in M)
    near = [None] * 5 if prev is None else list(prev)
    q1 = m1  # direct drive
    if check:
        _check(q1, Q1, p, 1, "q1")
    q2 = solve_loop2(m2, q1, p, near=near[1], check=check)
    beta = solve_loop3(m3, q1, q2, p, near=near[4], check=check)
    q3 = solve_loop4(beta, p, near=near[2], check=check)
    q4 = solve_loop5(q3, p, near=near[3], check=check)
    return JointState(q1, q2, q3, q4, beta)


def _carriage_position(u, l, lo, hi, ref, loop):
    # |u + m e_z| = l  ->  m = -u_z +/- sqrt(l^2 - u_x^2 - u_y^2)
    disc = l * l - u[0] ** 2 - u[1] ** 2
    if disc < 0:
        if disc > -1e-9 * l * l:
            disc = 0.0
        else:
            raise Unsolvable(f"loop {loop}: no carriage position closes the loop", loop=loop)
    root = math.sqrt(disc)
    candidates = (-u[2] + root, -u[2] - root)
    inside = [m for m in candidates if lo <= m <= hi]
    pool = inside or candidates
    return min(pool, key=lambda m: abs(m - ref))


def q2m(Q, p, prev=None):
    """Joint angles to motor positions.

    ``m1 = q1``; ``m2`` and ``m3`` solve the quadratic of loops 2 and 3 in
    the carriage coordinate.  The root inside the motor limits is taken; if
    both are, the one nearest ``prev`` (or zero).
    """
    q1, q2, q3, q4, beta = (float(v) for v in Q)
    ref = (0.0, 0.0, 0.0) if prev is None else tuple(prev)
    R2 = rot_y(q1) @ rot_x(q2)
    R3 = rot_y(q1) @ rot_x(q2 + beta + p.beta_offset)
    u2 = p.P2 - R2 @ p.OA
    u3 = p.P3 - R2 @ p.OA - R3 @ p.AB
    lim = p.motor_limits
    m2 = _carriage_position(u2, p.l2, lim[1, 0], lim[1, 1], ref[1], 2)
    m3 = _carriage_position(u3, p.l3, lim[2, 0], lim[2, 1], ref[2], 3)
    return MotorState(q1, m2, m3)


def fold_guard(value, loop):
    if abs(value) < E_TOL:
        raise SingularLoop(f"loop {loop} is at a fold (|E| = {abs(value):.3g})", loop=loop)
    return value


def dq4_dq3(q3, q4, p):
    """dq4/dq3 from loop 5: w = R_x(q3) DG + R_x(q3) R_x(q4) GH - DE."""
    R3, dR3 = rot_x(q3), drot_x(q3)
    R4, dR4 = rot_x(q4), drot_x(q4)
    w5 = R3 @ p.DG + R3 @ R4 @ p.GH - p.DE
    D5 = w5 @ (dR3 @ p.DG + dR3 @ R4 @ p.GH)
    E5 = fold_guard(w5 @ (R3 @ dR4 @ p.GH), 5)
    return -D5 / E5
