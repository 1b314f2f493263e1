"""Motor-space Jacobian of the fingertip.

The serial chain gives dX/dq_j directly from the link transforms; the loop
closures give dq_j/dM_i by implicit differentiation.  For a loop written as
``F = (|w|^2 - l^2) / 2 = 0`` every partial is ``dF/dx = w . dw/dx``, so a
joint rate follows as ``dq/dM = -(sum of known partials) / E`` where ``E``
is the partial with respect to the loop's own unknown angle.
"""
from __future__ import annotations

import dataclasses
import math

import numpy as np

from .errors import NearSingular
from .kinematics.chain import joint_partials
from .kinematics.loops import E_Z, fold_guard, drot_x, drot_y, dq4_dq3, m2q, rot_x, rot_y
from .kinematics.states import JointState

COND_MAX = 1e8
DET_TOL = 1e-12


@dataclasses.dataclass(frozen=True)
class LoopPartials:
    """Joint rates with respect to motor positions.

    ``dq[j, i]`` is dq_{j+1}/dM_{i+1} for q1..q4; ``dbeta[i]`` is the crank
    rate.  Columns carry rad/rad for M1 and rad/mm for M2, M3.
    """

    dq: np.ndarray
    dbeta: np.ndarray
    # loop-2 terms kept for inspection, named after the expanded residual
    A2: float = 0.0
    B2: float = 0.0
    C2: float = 0.0
    D2: float = 0.0
    E2: float = 0.0


def loop_partials(M, Q, p):
    """Implicit-function partials of all four loops at a consistent (M, Q)."""
    m1, m2, m3 = (float(v) for v in M)
    q1, q2, q3, q4, beta = (float(v) for v in Q)
    b1 = beta + p.beta_offset
    Ry1, dRy1 = rot_y(q1), drot_y(q1)
    Rx2, dRx2 = rot_x(q2), drot_x(q2)

    dq1 = np.array([1.0, 0.0, 0.0])  # direct drive

    # loop 2: w = P2 + M2 - R_y(q1) R_x(q2) OA
    w2 = p.P2 + m2 * E_Z - Ry1 @ Rx2 @ p.OA
    A2, B2, C2 = w2[1], w2[0], w2[2]
    D2 = w2 @ (-dRy1 @ Rx2 @ p.OA)
    E2 = fold_guard(w2 @ (-Ry1 @ dRx2 @ p.OA), 2)
    dq2 = np.array([-D2 / E2 * dq1[0], -C2 / E2, 0.0])

    # loop 3: w = P3 + M3 - R_y(q1) R_x(q2) OA - R_y(q1) R_x(q2 + b1) AB
    Rxb, dRxb = rot_x(q2 + b1), drot_x(q2 + b1)
    w3 = p.P3 + m3 * E_Z - Ry1 @ Rx2 @ p.OA - Ry1 @ Rxb @ p.AB
    D3 = w3 @ (-dRy1 @ Rx2 @ p.OA - dRy1 @ Rxb @ p.AB)
    G3 = w3 @ (-Ry1 @ dRx2 @ p.OA - Ry1 @ dRxb @ p.AB)
    E3 = fold_guard(w3 @ (-Ry1 @ dRxb @ p.AB), 3)
    dbeta = -(D3 * dq1 + G3 * dq2 + w3[2] * np.array([0.0, 0.0, 1.0])) / E3

    # loop 4: w = -R_x(b1) AC + AD + R_x(q3) DF
    w4 = -rot_x(b1) @ p.AC + p.AD + rot_x(q3) @ p.DF
    D4 = w4 @ (-drot_x(b1) @ p.AC)
    E4 = fold_guard(w4 @ (drot_x(q3) @ p.DF), 4)
    dq3 = -D4 / E4 * dbeta

    dq4 = dq4_dq3(q3, q4, p) * dq3
    return LoopPartials(
        dq=np.vstack([dq1, dq2, dq3, dq4]),
        dbeta=dbeta,
        A2=float(A2),
        B2=float(B2),
        C2=float(C2),
        D2=float(D2),
        E2=float(E2),
    )


@dataclasses.dataclass(frozen=True)
class JacobianMatrix:
    matrix: np.ndarray
    M: tuple = None
    Q: JointState = None

    @property
    def cond(self):
        return float(np.linalg.cond(self.matrix))

    def __array__(self, dtype=None, copy=None):
        return self.matrix if dtype is None else self.matrix.astype(dtype)

    def __matmul__(self, other):
        return self.matrix @ other


# first joint whose term enters each motor column: dq1/dM2 = dq1/dM3 = dq2/dM3 = 0
_FIRST_JOINT = (0, 1, 2)


def jacobian(M, p, Q=None):
    """3x3 fingertip Jacobian dX/dM (columns mm/rad, mm/mm, mm/mm)."""
    if Q is None:
        Q = m2q(M, p)
    partials = loop_partials(M, Q, p)
    dX_dq = joint_partials(Q, p)
    J = np.zeros((3, 3))
    for i in range(3):
        for j in range(_FIRST_JOINT[i], 4):
            J[:, i] += dX_dq[:, j] * partials.dq[j, i]
    return JacobianMatrix(J, tuple(float(v) for v in M), JointState.of(Q))


def inverse3(A):
    """Adjugate inverse of a 3x3 matrix; raises NearSingular on a tiny determinant."""
    A = np.asarray(A, dtype=float)
    adj = np.array([
        [A[1, 1] * A[2, 2] - A[1, 2] * A[2, 1], A[0, 2] * A[2, 1] - A[0, 1] * A[2, 2], A[0, 1] * A[1, 2] - A[0, 2] * A[1, 1]],
        [A[1, 2] * A[2, 0] - A[1, 0] * A[2, 2], A[0, 0] * A[2, 2] - A[0, 2] * A[2, 0], A[0, 2] * A[1, 0] - A[0, 0] * A[1, 2]],
        [A[1, 0] * A[2, 1] - A[1, 1] * A[2, 0], A[0, 1] * A[2, 0] - A[0, 0] * A[2, 1], A[0, 0] * A[1, 1] - A[0, 1] * A[1, 0]],
    ])
    det = A[0] @ adj[:, 0]
    scale = math.prod(max(np.linalg.norm(A[:, i]), 1e-300) for i in range(3))
    if abs(det) <= DET_TOL * scale:
        raise NearSingular(f"Jacobian determinant {det:.3g} is numerically zero")
    return adj / det


def solve_motor_rates(J, xdot, cond_max=COND_MAX):
    """Motor rates that produce fingertip velocity ``xdot`` (M_dot = J^-1 X_dot)."""
    mat = np.asarray(J, dtype=float)
    cond = float(np.linalg.cond(mat))
    if not cond < cond_max:
        raise NearSingular(f"Jacobian condition number {cond:.3g} exceeds {cond_max:.3g}", cond=cond)
    return inverse3(mat) @ np.asarray(xdot, dtype=float)
