import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hybridfinger.errors import EmptyInput, LengthMismatch, NonPositiveSigma, NotClosed
from hybridfinger.metrics import (
    corridor_check,
    expected_positions,
    path_following_error,
    point_polyline_distance,
    start_end_repeatability,
    trajectory_norm_error,
    weighted_mean,
)
from hybridfinger.planners import TaskPath
from hybridfinger.plant import TrialTrace

SQUARE = TaskPath([[0, 0, 0], [0, 20, 0], [0, 20, 20], [0, 0, 20], [0, 0, 0]], 10.0, "flexion")


def walk(points, d):
    """Hand-rolled arc-length walk: step through segments one at a time."""
    points = [np.asarray(p, dtype=float) for p in points]
    for a, b in zip(points, points[1:]):
        seg = np.linalg.norm(b - a)
        if d <= seg:
            return a + (b - a) * (d / seg)
        d -= seg
    return points[-1]


def synthetic(path, speed, fps=30.0, frames=None):
    s = speed / fps
    n = frames or int(round(path.length / s)) + 1
    X = np.array([walk(path.waypoints, k * s) for k in range(n)])
    return TrialTrace(np.arange(n) / fps, X, fps=fps, path=path, v_desired=path.v_desired)


def test_step_and_start():
    pos = expected_positions(SQUARE, 10.0, 30.0, 4)
    assert pos[0].tolist() == [0.0, 0.0, 0.0]
    assert pos[1] == pytest.approx([0.0, 1 / 3, 0.0])
    assert pos[3] == pytest.approx([0.0, 1.0, 0.0])


def test_vertex_hit_exactly():
    pos = expected_positions(SQUARE, 20.0, 1.0, 3)  # steps of 20 mm land on vertices
    assert pos[1].tolist() == [0.0, 20.0, 0.0]
    assert pos[2].tolist() == [0.0, 20.0, 20.0]


def test_clamps_at_end():
    pos = expected_positions(SQUARE, 10.0, 1.0, 20)
    assert pos[-1].tolist() == [0.0, 0.0, 0.0]


def test_matches_hand_walk():
    pos = expected_positions(SQUARE, 7.0, 30.0, 400)
    ref = np.array([walk(SQUARE.waypoints, k * 7.0 / 30.0) for k in range(400)])
    assert pos == pytest.approx(ref, abs=1e-12)


def test_exact_speed_trace_zero():
    trace = synthetic(SQUARE, 10.0)
    assert len(trace) == 241
    traj = trajectory_norm_error(trace)
    path = path_following_error(trace)
    assert traj.max_error < 1e-12 and path.max_error < 1e-12
    assert traj.errors == pytest.approx(path.errors, abs=1e-12)
    assert traj.step == pytest.approx(1 / 3)


def test_slow_trace_isolates_velocity_error():
    trace = synthetic(SQUARE, 8.0)  # same geometry at 0.8 v
    traj = trajectory_norm_error(trace, SQUARE, 10.0)
    path = path_following_error(trace, SQUARE)
    assert path.max_error < 1e-12
    assert traj.max_error > 1.0
    assert traj.errors.min() >= 0 and traj.max_error == traj.errors[traj.argmax]


def test_active_frames_and_raw_max():
    trace = synthetic(SQUARE, 10.0)
    X = np.vstack([trace.X, trace.X[-1] + [0, 0, 0.5]])  # a settling frame that drifts
    t = np.arange(len(X)) / 30.0
    tr = TrialTrace(t, X, fps=30.0, path=SQUARE, v_desired=10.0, t_complete=t[-2])
    traj = trajectory_norm_error(tr)
    assert traj.max_error < 1e-12
    assert traj.raw_max == pytest.approx(0.5)
    assert traj.n_active == len(X) - 1


def test_empty_trace():
    with pytest.raises(LengthMismatch):
        trajectory_norm_error(TrialTrace([], np.zeros((0, 3))), SQUARE, 10.0)


def test_repeatability():
    trace = synthetic(SQUARE, 10.0)
    assert start_end_repeatability(trace) == pytest.approx(0.0, abs=1e-12)
    X = trace.X.copy()
    X[-1] += [0.0, 0.12, 0.16]
    assert start_end_repeatability(TrialTrace(trace.t, X, path=SQUARE)) == pytest.approx(0.2)
    open_path = TaskPath([[0, 0, 0], [0, 1, 0]], 10.0)
    with pytest.raises(NotClosed):
        start_end_repeatability(trace, open_path)


def test_weighted_mean_hand_case():
    stat = weighted_mean([1.0, 2.0], [0.1, 0.2])
    assert stat.mean == pytest.approx(1.2, abs=1e-12)
    assert stat.sigma == pytest.approx(1 / math.sqrt(125), abs=1e-12)
    assert stat.sigma == pytest.approx(0.0894, abs=1e-4)
    assert stat.n == 2


def test_weighted_mean_equal_sigmas_and_limit():
    assert weighted_mean([1.0, 2.0, 4.0], [0.3] * 3).mean == pytest.approx(7 / 3)
    assert weighted_mean([1.0, 5.0], [1.0, 1e-6]).mean == pytest.approx(5.0, abs=1e-9)


def test_weighted_mean_errors():
    with pytest.raises(EmptyInput):
        weighted_mean([], [])
    with pytest.raises(NonPositiveSigma):
        weighted_mean([1.0], [0.0])
    with pytest.raises(LengthMismatch):
        weighted_mean([1.0, 2.0], [0.1])


@settings(max_examples=200, deadline=None)
@given(st.lists(st.tuples(st.floats(-1e3, 1e3), st.floats(1e-3, 1e3)), min_size=1, max_size=20))
def test_weighted_mean_bounds(pairs):
    values, sigmas = zip(*pairs)
    stat = weighted_mean(values, sigmas)
    assert min(values) <= stat.mean <= max(values)
    assert 0 < stat.sigma <= min(sigmas) * (1 + 1e-12)


def test_corridor():
    trace = synthetic(SQUARE, 10.0)
    res = corridor_check(trace, SQUARE, 1.5)
    assert res.passed and res.max_deviation < 1e-12
    shifted = TrialTrace(trace.t, trace.X + [2.0, 0.0, 0.0], path=SQUARE)
    res = corridor_check(shifted, SQUARE, 1.5)
    assert not res.passed and res.max_deviation == pytest.approx(2.0)


def test_point_to_segment_distance():
    d = point_polyline_distance([[0, -3, 0], [0, 10, -4], [0, 25, 25]], SQUARE)
    assert d == pytest.approx([3.0, 4.0, math.hypot(5, 5)])


@settings(max_examples=50, deadline=None)
@given(st.floats(0.01, 5.0), st.floats(0.0, 5.0))
def test_corridor_monotone(w, extra):
    rng = np.random.default_rng(0)
    X = rng.normal(0, 1.5, (50, 3)) + [0, 10, 10]
    trace = TrialTrace(np.arange(50) / 30, X)
    if corridor_check(trace, SQUARE, w).passed:
        assert corridor_check(trace, SQUARE, w + extra).passed
