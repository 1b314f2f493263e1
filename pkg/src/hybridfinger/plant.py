"""Kinematic plant: three velocity-tracking motors driving the rigid linkage.

The plant integrates motor velocities at ``dt_sim`` and exposes what the
controller sees (quantized encoder readings) separately from what the
fingertip does (output positions after the abduction gear backlash).
Imperfections are off in the ``perfect`` preset.
"""
from __future__ import annotations

import csv
import dataclasses
import math
from pathlib import Path

import numpy as np
import yaml

from .kinematics.chain import fk_joints
from .kinematics.loops import m2q
from .kinematics.states import MotorState


@dataclasses.dataclass(frozen=True)
class PlantConfig:
    """Plant knobs.

    ``counts_per_unit`` is encoder counts per rad (m1) or per mm (m2, m3);
    0 disables quantization on that axis.  ``tau`` is the first-order
    velocity-tracking time constant per motor, 0 for ideal tracking.
    """

    counts_per_unit: tuple = (0.0, 0.0, 0.0)
    tau: tuple = (0.0, 0.0, 0.0)
    backlash_m1: float = 0.0
    dt_sim: float = 0.001
    name: str = "custom"

    def __post_init__(self):
        if self.dt_sim <= 0:
            raise ValueError("dt_sim must be positive")
        if any(c < 0 for c in self.counts_per_unit) or any(t < 0 for t in self.tau):
            raise ValueError("resolutions and time constants must be non-negative")
        if self.backlash_m1 < 0:
            raise ValueError("backlash must be non-negative")

    @classmethod
    def perfect(cls, dt_sim=0.001):
        return cls(dt_sim=dt_sim, name="perfect")

    @classmethod
    def abduction_degraded(cls, dt_sim=0.001):
        # Illustrative values only: hall-sensor-grade abduction feedback,
        # a sluggish abduction velocity loop, and gear play.  Flexion keeps
        # 4096-count encoders on a 0.5 mm lead.
        return cls(
            counts_per_unit=(2000.0, 8192.0, 8192.0),
            tau=(0.08, 0.0, 0.0),
            backlash_m1=0.004,
            dt_sim=dt_sim,
            name="abduction-degraded",
        )

    @classmethod
    def preset(cls, name, dt_sim=0.001):
        presets = {"perfect": cls.perfect, "abduction-degraded": cls.abduction_degraded}
        try:
            return presets[name](dt_sim)
        except KeyError:
            raise ValueError(f"unknown plant preset {name!r}; choose from {sorted(presets)}") from None

    def to_dict(self):
        return {
            "counts_per_unit": list(self.counts_per_unit),
            "tau_s": list(self.tau),
            "backlash_m1_rad": self.backlash_m1,
            "dt_sim_s": self.dt_sim,
            "name": self.name,
        }

    @classmethod
    def from_dict(cls, doc):
        return cls(
            counts_per_unit=tuple(doc.get("counts_per_unit", (0.0, 0.0, 0.0))),
            tau=tuple(doc.get("tau_s", (0.0, 0.0, 0.0))),
            backlash_m1=doc.get("backlash_m1_rad", 0.0),
            dt_sim=doc.get("dt_sim_s", 0.001),
            name=doc.get("name", "custom"),
        )

    @classmethod
    def load(cls, path):
        return cls.from_dict(yaml.safe_load(Path(path).read_text()))


@dataclasses.dataclass(frozen=True)
class PlantState:
    position: np.ndarray  # motor side (rad, mm, mm)
    velocity: np.ndarray
    output_m1: float  # abduction joint side of the gear play
    command: np.ndarray
    t: float = 0.0

    @classmethod
    def at(cls, M):
        M = np.array(M, dtype=float)
        return cls(M, np.zeros(3), float(M[0]), np.zeros(3), 0.0)

    @property
    def output(self):
        """Positions that actually drive the linkage."""
        return np.array([self.output_m1, self.position[1], self.position[2]])


def plant_step(state, command, dt_sim, config, params, target=None):
    """Advance the plant by one integration step.

    ``command`` is a motor velocity request; with ``target`` given instead,
    each motor runs its own position loop toward that setpoint.  Velocity is
    saturated at ``v_max``, lagged by ``tau``, integrated, and clamped at the
    motor hard stops.
    """
    if dt_sim <= 0:
        raise ValueError("dt_sim must be positive")
    vmax = params.v_max
    if target is not None:
        want = (np.asarray(target, dtype=float) - state.position) / dt_sim
    else:
        want = np.asarray(command, dtype=float)
    want = np.clip(want, -vmax, vmax)
    vel = state.velocity.copy()
    for i, tau in enumerate(config.tau):
        if tau > 0 and target is None:
            vel[i] += (want[i] - vel[i]) * (1.0 - math.exp(-dt_sim / tau))
        else:
            vel[i] = want[i]
    vel = np.clip(vel, -vmax, vmax)
    pos = state.position + vel * dt_sim
    if target is not None:
        # the drive's position loop holds still once on target
        vel[np.abs(np.asarray(target, dtype=float) - pos) <= 1e-12] = 0.0
    lo, hi = params.motor_limits[:, 0], params.motor_limits[:, 1]
    stopped = (pos < lo) | (pos > hi)
    pos = np.clip(pos, lo, hi)
    vel[stopped] = 0.0

    out = state.output_m1
    half = 0.5 * config.backlash_m1
    if pos[0] - out > half:
        out = pos[0] - half
    elif out - pos[0] > half:
        out = pos[0] + half
    cmd = np.asarray(command if command is not None else np.zeros(3), dtype=float)
    return PlantState(pos, vel, float(out), cmd, state.t + dt_sim)


def quantize(value, counts_per_unit):
    if counts_per_unit <= 0:
        return float(value)
    return round(value * counts_per_unit) / counts_per_unit


def read_encoders(state, config):
    """Motor-side positions as the encoders report them."""
    return MotorState(*(quantize(v, c) for v, c in zip(state.position, config.counts_per_unit)))


@dataclasses.dataclass
class TrialTrace:
    """Fingertip positions at a fixed frame rate.

    ``t_complete`` marks when the controller finished the path; frames after
    it are settling frames.  ``sigma`` holds optional per-frame position
    uncertainty (mm) for measured data.
    """

    t: np.ndarray
    X: np.ndarray
    fps: float = 30.0
    path: object = None
    v_desired: float = None
    t_complete: float = None
    sigma: np.ndarray = None
    log: object = None

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float).reshape(-1)
        self.X = np.asarray(self.X, dtype=float).reshape(-1, 3)
        if len(self.t) != len(self.X):
            raise ValueError("trace times and positions differ in length")
        if not np.all(np.isfinite(self.X)):
            raise ValueError("trace contains non-finite positions")
        if self.sigma is not None:
            self.sigma = np.asarray(self.sigma, dtype=float).reshape(-1)

    def __len__(self):
        return len(self.t)

    @property
    def n_active(self):
        """Frames up to and including controller completion."""
        if self.t_complete is None:
            return len(self.t)
        return int(np.searchsorted(self.t, self.t_complete + 1e-9, side="right"))

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            header = ["t_s", "x_mm", "y_mm", "z_mm"]
            if self.sigma is not None:
                header.append("sigma_mm")
            w.writerow(header)
            for k in range(len(self.t)):
                row = [repr(float(self.t[k]))] + [repr(float(v)) for v in self.X[k]]
                if self.sigma is not None:
                    row.append(repr(float(self.sigma[k])))
                w.writerow(row)

    @classmethod
    def read_csv(cls, path, fps=None, **kwargs):
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        if not rows:
            return cls(np.zeros(0), np.zeros((0, 3)), fps=fps or 30.0, **kwargs)
        t = np.array([float(r["t_s"]) for r in rows])
        X = np.array([[float(r["x_mm"]), float(r["y_mm"]), float(r["z_mm"])] for r in rows])
        sigma = None
        if "sigma_mm" in rows[0]:
            sigma = np.array([float(r["sigma_mm"]) for r in rows])
        if fps is None:
            fps = 1.0 / np.median(np.diff(t)) if len(t) > 1 else 30.0
        return cls(t, X, fps=float(fps), sigma=sigma, **kwargs)


class Plant:
    """Single-owner simulated finger: holds state, steps time, records frames."""

    def __init__(self, params, config=None, M0=(0.0, 0.0, 0.0)):
        self.params = params
        self.config = config or PlantConfig.perfect()
        self.state = PlantState.at(M0)
        self._steps = 0
        self._fps = None
        self._t0 = None
        self._frames_t = []
        self._frames_X = []
        self._next_frame = 0

    @property
    def t(self):
        return self.state.t

    @property
    def recording_start(self):
        return self._t0

    def read_encoders(self):
        return read_encoders(self.state, self.config)

    def fingertip(self, state=None):
        state = state or self.state
        return fk_joints(m2q(state.output, self.params, check=False), self.params)

    def start_recording(self, fps):
        if fps <= 0:
            raise ValueError("fps must be positive")
        self._fps = float(fps)
        self._t0 = self.state.t
        self._frames_t = []
        self._frames_X = []
        self._next_frame = 0
        self._record_due(self.state, self.state)

    def stop_recording(self, path=None, v_desired=None, t_complete=None):
        trace = TrialTrace(
            np.array(self._frames_t),
            np.array(self._frames_X).reshape(-1, 3),
            fps=self._fps,
            path=path,
            v_desired=v_desired,
            t_complete=None if t_complete is None else t_complete - self._t0,
        )
        self._fps = None
        return trace

    def _record_due(self, before, after):
        if self._fps is None:
            return
        while True:
            t_frame = self._t0 + self._next_frame / self._fps
            if t_frame > after.t + 1e-12:
                break
            span = after.t - before.t
            w = 0.0 if span <= 0 else min(1.0, max(0.0, (t_frame - before.t) / span))
            M = (1.0 - w) * before.output + w * after.output
            X = fk_joints(m2q(M, self.params, check=False), self.params)
            self._frames_t.append(self._next_frame / self._fps)
            self._frames_X.append(X)
            self._next_frame += 1

    def run(self, duration, velocity=None, target=None):
        """Hold a velocity command (or position setpoint) for ``duration`` seconds."""
        dt = self.config.dt_sim
        steps = max(1, int(round(duration / dt))) if duration > 0 else 0
        cmd = np.zeros(3) if velocity is None else np.asarray(velocity, dtype=float)
        for _ in range(steps):
            new = plant_step(self.state, cmd, dt, self.config, self.params, target=target)
            self._steps += 1
            new = dataclasses.replace(new, t=self._steps * dt)  # no drift from summing dt
            self._record_due(self.state, new)
            self.state = new
        return self.state


def sample_trace(plant, fps, duration, velocity=None):
    """Run ``plant`` for ``duration`` under a held command and sample the fingertip."""
    if fps <= 0:
        raise ValueError("fps must be positive")
    plant.start_recording(fps)
    plant.run(duration, velocity=velocity)
    return plant.stop_recording()
