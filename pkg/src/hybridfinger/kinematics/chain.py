"""Serial-equivalent chain: homogeneous transforms and forward kinematics."""
import math

import numpy as np

from .loops import m2q
from .states import FingertipPose


def _hom_x(q, ty=0.0, tz=0.0):
    c, s = math.cos(q), math.sin(q)
    return np.array([
        [1.0, 0.0, 0.0, 0.0],
        [0.0, c, -s, ty],
        [0.0, s, c, tz],
        [0.0, 0.0, 0.0, 1.0],
    ])


def _hom_y(q):
    c, s = math.cos(q), math.sin(q)
    return np.array([
        [c, 0.0, s, 0.0],
        [0.0, 1.0, 0.0, 0.0],
        [-s, 0.0, c, 0.0],
        [0.0, 0.0, 0.0, 1.0],
    ])


def transforms(Q, p):
    """The five link transforms O->J1, J1->J2, J2->J3, J3->J4, J4->EE."""
    q1, q2, q3, q4 = (float(v) for v in tuple(Q)[:4])
    tip = np.eye(4)
    tip[2, 3] = p.GI_z
    return [
        _hom_y(q1),
        _hom_x(q2),
        _hom_x(q3, p.OD_y, p.OD_z),
        _hom_x(q4, p.DG_y, p.DG_z),
        tip,
    ]


def transform_derivative(j, Q, p):
    """d/dq_j of the j-th link transform (j = 1..4)."""
    q = float(tuple(Q)[j - 1])
    c, s = math.cos(q), math.sin(q)
    d = np.zeros((4, 4))
    if j == 1:
        d[0, 0], d[0, 2], d[2, 0], d[2, 2] = -s, c, -c, -s
    else:
        d[1, 1], d[1, 2], d[2, 1], d[2, 2] = -s, -c, c, -s
    return d


def chain_product(mats):
    out = np.eye(4)
    for m in mats:
        out = out @ m
    return out


def fk_joints(Q, p):
    """Fingertip position for joint angles Q (translation of the full chain)."""
    return chain_product(transforms(Q, p))[:3, 3].copy()


def fk(M, p):
    """Forward kinematics: motor positions to fingertip position in frame O."""
    return FingertipPose.of(fk_joints(m2q(M, p), p))


def joint_partials(Q, p):
    """3x4 matrix of dX/dq_j for j = 1..4 through the transform chain."""
    T = transforms(Q, p)
    cols = []
    for j in range(1, 5):
        mats = list(T)
        mats[j - 1] = transform_derivative(j, Q, p)
        cols.append(chain_product(mats)[:3, 3])
    return np.column_stack(cols)
