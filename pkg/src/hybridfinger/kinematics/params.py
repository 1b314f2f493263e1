"""Finger geometry parameters and the key/value parameter file.

Parameter files are YAML mappings whose keys carry their units::

    OA_mm: [0.0, 8.0, 0.0]
    l2_mm: 30.0
    beta_offset_rad: 0.0
    joint_limits_rad: {q1: [-0.4, 0.4], ...}
    motor_limits: {m1_rad: [...], m2_mm: [...], m3_mm: [...]}
    v_max_m1_rad_s: 3.0

Vectors are given at the zero configuration in the frame of the link
they belong to (see README for the joint letter diagram).
"""
from __future__ import annotations

import dataclasses
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from ..errors import ParamsError

VECTOR_KEYS = ("OA", "AB", "AC", "AD", "DF", "DG", "GH", "DE", "P2", "P3")
ROD_KEYS = ("l2", "l3", "l4", "l5")
OFFSET_KEYS = ("OD_y", "OD_z", "DG_y", "DG_z", "GI_z")
JOINT_NAMES = ("q1", "q2", "q3", "q4", "beta")
MOTOR_NAMES = ("m1", "m2", "m3")
MOTOR_UNITS = {"m1": "rad", "m2": "mm", "m3": "mm"}
SPEED_UNITS = {"m1": "rad_s", "m2": "mm_s", "m3": "mm_s"}


@dataclasses.dataclass(frozen=True, eq=False)
class KinematicParams:
    OA: np.ndarray
    AB: np.ndarray
    AC: np.ndarray
    AD: np.ndarray
    DF: np.ndarray
    DG: np.ndarray
    GH: np.ndarray
    DE: np.ndarray
    P2: np.ndarray
    P3: np.ndarray
    l2: float
    l3: float
    l4: float
    l5: float
    OD_y: float
    OD_z: float
    DG_y: float
    DG_z: float
    GI_z: float
    joint_limits: np.ndarray  # (5, 2) rows ordered q1, q2, q3, q4, beta
    motor_limits: np.ndarray  # (3, 2) rows ordered m1, m2, m3
    v_max: np.ndarray  # (3,)
    beta_offset: float = 0.0
    branches: dict = dataclasses.field(default=None, repr=False)

    def __post_init__(self):
        for key in VECTOR_KEYS:
            vec = np.array(getattr(self, key), dtype=float)
            if vec.shape != (3,) or not np.all(np.isfinite(vec)):
                raise ParamsError(f"{key} must be a finite 3-vector")
            vec.flags.writeable = False
            object.__setattr__(self, key, vec)
        for key in ROD_KEYS + OFFSET_KEYS + ("beta_offset",):
            object.__setattr__(self, key, float(getattr(self, key)))
        for key in ROD_KEYS:
            if not getattr(self, key) > 0:
                raise ParamsError(f"rod length {key} must be strictly positive")
        for key, shape in (("joint_limits", (5, 2)), ("motor_limits", (3, 2)), ("v_max", (3,))):
            arr = np.array(getattr(self, key), dtype=float)
            if arr.shape != shape:
                raise ParamsError(f"{key} must have shape {shape}, got {arr.shape}")
            arr.flags.writeable = False
            object.__setattr__(self, key, arr)
        if np.any(self.joint_limits[:, 0] > self.joint_limits[:, 1]):
            raise ParamsError("joint limit min exceeds max")
        if np.any(self.motor_limits[:, 0] > self.motor_limits[:, 1]):
            raise ParamsError("motor limit min exceeds max")
        if np.any(self.v_max <= 0):
            raise ParamsError("v_max entries must be positive")
        if self.branches is None:
            from .loops import calibrate_branches

            object.__setattr__(self, "branches", calibrate_branches(self))

    @property
    def OD(self):
        return np.array([0.0, self.OD_y, self.OD_z])

    @property
    def reach(self):
        """Upper bound on the fingertip distance from O (sum of link spans)."""
        return float(np.hypot(self.OD_y, self.OD_z) + np.hypot(self.DG_y, self.DG_z) + abs(self.GI_z))

    def to_dict(self):
        doc = {f"{k}_mm": [float(v) for v in getattr(self, k)] for k in VECTOR_KEYS}
        doc.update({f"{k}_mm": getattr(self, k) for k in ROD_KEYS + OFFSET_KEYS})
        doc["beta_offset_rad"] = self.beta_offset
        doc["joint_limits_rad"] = {
            name: [float(v) for v in row] for name, row in zip(JOINT_NAMES, self.joint_limits)
        }
        doc["motor_limits"] = {
            f"{name}_{MOTOR_UNITS[name]}": [float(v) for v in row]
            for name, row in zip(MOTOR_NAMES, self.motor_limits)
        }
        for name, v in zip(MOTOR_NAMES, self.v_max):
            doc[f"v_max_{name}_{SPEED_UNITS[name]}"] = float(v)
        return doc

    @classmethod
    def from_dict(cls, doc):
        try:
            kwargs = {k: doc[f"{k}_mm"] for k in VECTOR_KEYS + ROD_KEYS + OFFSET_KEYS}
            kwargs["beta_offset"] = doc.get("beta_offset_rad", 0.0)
            kwargs["joint_limits"] = [doc["joint_limits_rad"][n] for n in JOINT_NAMES]
            kwargs["motor_limits"] = [
                doc["motor_limits"][f"{n}_{MOTOR_UNITS[n]}"] for n in MOTOR_NAMES
            ]
            kwargs["v_max"] = [doc[f"v_max_{n}_{SPEED_UNITS[n]}"] for n in MOTOR_NAMES]
        except (KeyError, TypeError) as exc:
            raise ParamsError(f"missing or malformed parameter key: {exc}") from exc
        return cls(**kwargs)


def load_params(path=None, check=True):
    """Read a parameter file (the packaged default when ``path`` is None).

    With ``check`` the self-consistency checks in
    :func:`hybridfinger.kinematics.validate.check_params` run and a failing
    file raises :class:`ParamsError` naming the offending loop.
    """
    if path is None:
        text = resources.files("hybridfinger.data").joinpath("default_params.yaml").read_text()
    else:
        text = Path(path).read_text()
    doc = yaml.safe_load(text)
    if not isinstance(doc, dict):
        raise ParamsError("parameter file must be a key/value mapping")
    params = KinematicParams.from_dict(doc)
    if check:
        from .validate import check_params

        check_params(params)
    return params


def save_params(params, path):
    Path(path).write_text(yaml.safe_dump(params.to_dict(), sort_keys=False))


_DEFAULT = None


def default_params():
    """Packaged default finger, loaded and checked once."""
    global _DEFAULT
    if _DEFAULT is None:
        _DEFAULT = load_params()
    return _DEFAULT
