import numpy as np
import pytest

from hybridfinger.errors import Infeasible, WaypointTimeout
from hybridfinger.kinematics.chain import fk
from hybridfinger.kinematics.inverse import x2q
from hybridfinger.kinematics.loops import m2q
from hybridfinger.plant import Plant, PlantConfig
from hybridfinger.planners import (
    JointPlan,
    RmrcConfig,
    TaskPath,
    execute_joint_plan,
    execute_task_path,
    plan_joint_space,
    read_path_csv,
    rmrc_step,
    write_path_csv,
)
from oracles import sample_valid_motors

CENTER = np.array([0.0, -48.0, 45.0])


def test_plan_same_state(params):
    M = (0.05, 2.0, 5.0)
    plan = plan_joint_space(m2q(M, params), M, params)
    assert len(plan) == 1 and plan.duration == 0.0
    assert np.array_equal(plan.setpoints[0], M)


def test_plan_small_move_single_iteration(params):
    plan = plan_joint_space(m2q((0.01, 0.1, 0.1), params), (0.0, 0.0, 0.0), params)
    assert plan.iterations == 1
    assert np.array_equal(plan.setpoints[0], [0.0, 0.0, 0.0])
    assert plan.setpoints[-1] == pytest.approx([0.01, 0.1, 0.1], abs=1e-9)


def test_plan_needs_retry(params):
    # home to the benchmark centre: the straight-line time is too short mid-path
    plan = plan_joint_space(x2q(CENTER, params), (0.0, 0.0, 0.0), params)
    assert plan.iterations >= 2
    assert np.all(plan.speeds() <= params.v_max)


def test_plan_duration_grows_by_delta(params):
    Q = x2q(CENTER, params)
    p1 = plan_joint_space(Q, (0.0, 0.0, 0.0), params, delta=0.25)
    t0 = np.max(np.abs(p1.setpoints[-1]) / params.v_max)
    expected_n = int(np.ceil((t0 + 0.25 * (p1.iterations - 1)) / 0.01 - 1e-9))
    assert len(p1) - 1 == expected_n


def test_plans_feasible_random(params, rng):
    goals = sample_valid_motors(params, 60, rng)
    starts = sample_valid_motors(params, 60, rng)
    for g, s in zip(goals, starts):
        plan = plan_joint_space(m2q(g, params), s, params)
        assert np.array_equal(plan.setpoints[0], s)
        assert np.all(plan.speeds() <= params.v_max)
        assert plan.setpoints[-1] == pytest.approx(g, abs=1e-8)


def test_plan_cap(params):
    with pytest.raises(Infeasible):
        plan_joint_space(x2q(CENTER, params), (0.0, 0.0, 0.0), params, v_max=(1e-3, 1e-3, 1e-3), t_cap=5.0)
    with pytest.raises(Infeasible):
        plan_joint_space((0.0, 2.0, 0.0, 0.0, 0.0), (0.0, 0.0, 0.0), params)


def test_execute_joint_plan_reaches_goal(params):
    Q = x2q(CENTER, params)
    plan = plan_joint_space(Q, (0.0, 0.0, 0.0), params)
    plant = Plant(params)
    execute_joint_plan(plan, plant)
    assert np.array(fk(plant.state.position, params)) == pytest.approx(CENTER, abs=1e-8)


def test_rmrc_zero_error(params):
    M = (0.0, 2.0, 5.0)
    cmd = rmrc_step(fk(M, params), M, RmrcConfig(), params)
    assert np.array_equal(cmd.mdot, np.zeros(3))


def test_rmrc_within_limits(params):
    from hybridfinger.diffkin import jacobian

    M = (0.05, 2.0, 5.0)
    X = np.array(fk(M, params))
    goal = X + np.array([3.0, -2.0, 1.0])
    cmd = rmrc_step(goal, M, RmrcConfig(v_desired=10.0), params)
    unit = (goal - X) / np.linalg.norm(goal - X)
    assert cmd.scale == 1.0
    assert jacobian(M, params) @ cmd.mdot == pytest.approx(10.0 * unit, abs=1e-9)


def test_rmrc_scaled(params):
    from hybridfinger.diffkin import jacobian

    M = (0.05, 2.0, 5.0)
    X = np.array(fk(M, params))
    goal = X + np.array([0.0, -20.0, 5.0])
    cmd = rmrc_step(goal, M, RmrcConfig(v_desired=500.0), params)
    assert cmd.scale < 1.0
    assert np.max(np.abs(cmd.mdot) / params.v_max) == pytest.approx(1.0, abs=1e-12)
    v = jacobian(M, params) @ cmd.mdot
    assert v / np.linalg.norm(v) == pytest.approx((goal - X) / np.linalg.norm(goal - X), abs=1e-9)


def test_rmrc_approach_clamp(params):
    M = (0.0, 2.0, 5.0)
    X = np.array(fk(M, params))
    cmd = rmrc_step(X + [0.0, 0.0, 0.03], M, RmrcConfig(v_desired=10.0, dt_ctrl=0.01), params)
    assert np.linalg.norm(cmd.xdot) == pytest.approx(3.0)


def _square(side=10.0):
    h = side / 2
    a, b = np.array([0.0, 1.0, 0.0]), np.array([0.0, 0.0, 1.0])
    return [CENTER + h * (i * a + j * b) for i, j in ((-1, -1), (1, -1), (1, 1), (-1, 1), (-1, -1))]


def test_execute_square(params):
    path = TaskPath(_square(), 10.0, "flexion")
    plant = Plant(params)
    trace = execute_task_path(path, RmrcConfig(v_desired=10.0), plant, params, record_errors=True)
    assert np.all(np.abs(trace.log.final_errors) <= 0.1)
    assert trace.log.max_direction_error < 1e-9
    assert trace.X[0] == pytest.approx(path.waypoints[0], abs=1e-6)
    assert np.all(trace.X[:, 0] == 0.0)  # flexion plane stays at x = 0
    # monotone once within one control step of travel
    errs = trace.log.error_norms
    for (k0, e0), (k1, e1) in zip(errs, errs[1:]):
        if k0 == k1 and e0 <= 10.0 * 0.01:
            assert e1 <= e0 + 1e-12


def test_single_waypoint_path(params):
    M = (0.0, 2.0, 5.0)
    X = np.array(fk(M, params))
    plant = Plant(params, M0=M)
    trace = execute_task_path(TaskPath([X], 10.0), RmrcConfig(), plant, params)
    assert len(trace) >= 1 and trace.log.steps == 0
    assert trace.X[0] == pytest.approx(X, abs=1e-9)


def test_waypoint_timeout(params):
    path = TaskPath(_square(), 10.0)
    with pytest.raises(WaypointTimeout) as info:
        execute_task_path(path, RmrcConfig(v_desired=10.0, max_iterations=20), Plant(params), params)
    assert info.value.waypoint == 1


def test_taskpath_validation():
    with pytest.raises(ValueError):
        TaskPath([[0, 0, 0], [0, 0, 0]], 10.0)
    with pytest.raises(ValueError):
        TaskPath(np.zeros((0, 3)), 10.0)
    with pytest.raises(ValueError):
        TaskPath(np.arange(153.0).reshape(51, 3), 10.0)
    assert len(TaskPath(np.arange(153.0).reshape(51, 3), 10.0, max_points=60)) == 51
    with pytest.raises(ValueError):
        TaskPath([[0, 0, 0], [1, 0, 0]], 0.0)
    with pytest.raises(ValueError):
        RmrcConfig(tolerance=0.0)


def test_path_csv_round_trip(tmp_path):
    path = TaskPath(_square(), 10.0)
    write_path_csv(path, tmp_path / "p.csv")
    assert (tmp_path / "p.csv").read_text().splitlines()[0] == "x_mm,y_mm,z_mm"
    back = read_path_csv(tmp_path / "p.csv", 10.0)
    assert np.array_equal(back.waypoints, path.waypoints)
    assert back.closed


def test_jointplan_speeds():
    plan = JointPlan(np.array([[0.0, 0, 0], [0.01, 0.1, -0.1]]), 0.01, 0.01)
    assert plan.speeds() == pytest.approx(np.array([[1.0, 10.0, 10.0]]))
