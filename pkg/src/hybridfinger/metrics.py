"""Tracking-error analyses over fingertip traces.

Expected positions advance a fixed arc length ``s`` per frame along the
input polyline.  The trajectory error uses ``s = v / fps``; the
path-following error refits ``s`` from the trace's own frame count, which
removes speed error and leaves the geometric part.
"""
from __future__ import annotations

import csv
import dataclasses

import numpy as np

from .errors import EmptyInput, LengthMismatch, NonPositiveSigma, NotClosed

METRIC_VERSION = "hf-metrics-1"


def _polyline(path):
    pts = getattr(path, "waypoints", path)
    return np.asarray(pts, dtype=float).reshape(-1, 3)


def arc_positions(points, distances):
    """Points at arc lengths ``distances`` along a polyline, clamped to its ends."""
    points = np.asarray(points, dtype=float)
    seg = np.linalg.norm(np.diff(points, axis=0), axis=1)
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    d = np.clip(np.asarray(distances, dtype=float), 0.0, cum[-1])
    idx = np.clip(np.searchsorted(cum, d, side="right") - 1, 0, len(seg) - 1)
    w = np.divide(d - cum[idx], seg[idx], out=np.zeros_like(d), where=seg[idx] > 0)
    out = points[idx] + w[:, None] * (points[idx + 1] - points[idx])
    # hitting a vertex exactly returns the vertex itself
    hit = np.isin(d, cum)
    out[hit] = points[np.searchsorted(cum, d[hit])]
    return out


def expected_positions(path, v, fps, n_frames):
    """Where the fingertip should be at each frame when moving at ``v``."""
    pts = _polyline(path)
    if len(pts) < 2 or np.linalg.norm(np.diff(pts, axis=0), axis=1).sum() <= 0:
        raise ValueError("path length must be positive")
    s = v / fps
    return arc_positions(pts, s * np.arange(n_frames))


@dataclasses.dataclass(frozen=True)
class ErrorSeries:
    """Per-frame norm errors.

    ``max_error``/``argmax`` cover the active frames (up to controller
    completion); ``raw_max`` covers every frame including settling ones.
    ``sigma_max`` is the measurement uncertainty at the max frame, if known.
    """

    errors: np.ndarray
    max_error: float
    argmax: int
    step: float
    raw_max: float
    n_active: int
    sigma_max: float = None


def _series(trace, path, step):
    n = len(trace)
    if n == 0:
        raise LengthMismatch("trace is empty")
    expected = arc_positions(_polyline(path), step * np.arange(n))
    errors = np.linalg.norm(trace.X - expected, axis=1)
    n_active = max(1, min(n, trace.n_active))
    k = int(np.argmax(errors[:n_active]))
    sigma = None if trace.sigma is None else float(trace.sigma[k])
    return ErrorSeries(errors, float(errors[k]), k, float(step), float(errors.max()), n_active, sigma)


def trajectory_norm_error(trace, path=None, v=None):
    """Deviation from the position expected at the desired speed."""
    path = trace.path if path is None else path
    v = (trace.v_desired if v is None else v) or getattr(path, "v_desired", None)
    if v is None or not v > 0:
        raise ValueError("a positive speed is required")
    return _series(trace, path, v / trace.fps)


def path_following_error(trace, path=None):
    """Same metric with the per-frame step refit to the trace's own duration."""
    path = trace.path if path is None else path
    if len(trace) == 0:
        raise LengthMismatch("trace is empty")
    n_active = max(1, min(len(trace), trace.n_active))
    pts = _polyline(path)
    length = float(np.linalg.norm(np.diff(pts, axis=0), axis=1).sum())
    step = length / (n_active - 1) if n_active > 1 else 0.0
    return _series(trace, path, step)


def start_end_repeatability(trace, path=None):
    """Distance between the first and last recorded fingertip positions."""
    path = trace.path if path is None else path
    pts = _polyline(path)
    if len(pts) < 2 or not np.allclose(pts[0], pts[-1], atol=1e-9, rtol=0):
        raise NotClosed("start and end waypoints differ")
    if len(trace) == 0:
        raise LengthMismatch("trace is empty")
    return float(np.linalg.norm(trace.X[-1] - trace.X[0]))


@dataclasses.dataclass(frozen=True)
class WeightedStat:
    mean: float
    sigma: float
    n: int


def weighted_mean(values, sigmas):
    """Inverse-variance weighted mean and its uncertainty."""
    x = np.asarray(values, dtype=float).reshape(-1)
    s = np.asarray(sigmas, dtype=float).reshape(-1)
    if x.size == 0:
        raise EmptyInput("no values to average")
    if x.size != s.size:
        raise LengthMismatch("values and sigmas differ in length")
    if np.any(~(s > 0)):
        raise NonPositiveSigma("every sigma must be positive")
    w = 1.0 / s**2
    mean = float(np.sum(w * x) / np.sum(w))
    mean = min(max(mean, float(x.min())), float(x.max()))  # guard rounding at the bounds
    return WeightedStat(mean, float(np.sum(w) ** -0.5), int(x.size))


def point_polyline_distance(points, polyline):
    """Minimum distance from each point to any segment of the polyline."""
    P = np.asarray(points, dtype=float).reshape(-1, 3)
    V = _polyline(polyline)
    if len(V) == 1:
        return np.linalg.norm(P - V[0], axis=1)
    a, b = V[:-1], V[1:]
    ab = b - a
    denom = np.einsum("ij,ij->i", ab, ab)
    rel = P[:, None, :] - a[None, :, :]
    t = np.divide(np.einsum("pij,ij->pi", rel, ab), denom, out=np.zeros((len(P), len(a))), where=denom > 0)
    t = np.clip(t, 0.0, 1.0)
    closest = a[None] + t[..., None] * ab[None]
    return np.linalg.norm(P[:, None, :] - closest, axis=2).min(axis=1)


@dataclasses.dataclass(frozen=True)
class CorridorResult:
    passed: bool
    max_deviation: float
    half_width: float


def corridor_check(trace, path=None, half_width=1.5):
    """Does every sample stay within ``half_width`` of the path polyline?"""
    if not half_width > 0:
        raise ValueError("half_width must be positive")
    path = trace.path if path is None else path
    X = getattr(trace, "X", trace)
    d = point_polyline_distance(X, path)
    dev = float(d.max()) if d.size else 0.0
    return CorridorResult(dev <= half_width, dev, float(half_width))


RESULT_FIELDS = ["path", "plane", "metric", "mean_mm", "sigma_mm", "n", "metric_version"]


def write_results(rows, path):
    """Summary table: one row per (path, plane, metric)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(RESULT_FIELDS)
        for r in rows:
            w.writerow([r["path"], r["plane"], r["metric"], f"{r['mean_mm']:.6f}",
                        f"{r['sigma_mm']:.6f}", r["n"], METRIC_VERSION])
