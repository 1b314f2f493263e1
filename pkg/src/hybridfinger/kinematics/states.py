"""Light containers for the three coordinate sets of the finger.

All three are NamedTuples so they unpack, index, and pass straight into
``np.asarray``.
"""
from typing import NamedTuple

import numpy as np


class MotorState(NamedTuple):
    m1: float  # rad, abduction (direct drive)
    m2: float  # mm, MCP flexion lead screw
    m3: float  # mm, PIP flexion lead screw

    @classmethod
    def of(cls, values):
        return cls(*(float(v) for v in np.asarray(values, dtype=float).reshape(3)))


class JointState(NamedTuple):
    q1: float
    q2: float
    q3: float
    q4: float
    beta: float

    @classmethod
    def of(cls, values):
        return cls(*(float(v) for v in np.asarray(values, dtype=float).reshape(5)))


class FingertipPose(NamedTuple):
    x: float
    y: float
    z: float

    @classmethod
    def of(cls, values):
        return cls(*(float(v) for v in np.asarray(values, dtype=float).reshape(3)))


HOME_M = MotorState(0.0, 0.0, 0.0)
HOME_Q = JointState(0.0, 0.0, 0.0, 0.0, 0.0)
