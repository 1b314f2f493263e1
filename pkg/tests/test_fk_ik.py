import numpy as np
import pytest

from hybridfinger.errors import Unreachable
from hybridfinger.kinematics.chain import fk, fk_joints, joint_partials
from hybridfinger.kinematics.inverse import ik, x2q
from hybridfinger.kinematics.loops import m2q
from oracles import central_difference, sample_valid_motors, tip


def test_home_tip(params):
    X = fk((0, 0, 0), params)
    assert X == pytest.approx((0.0, params.OD_y + params.DG_y, params.OD_z + params.DG_z + params.GI_z), abs=1e-12)
    assert X == pytest.approx((0.0, 2.0, 91.0), abs=1e-12)


def test_frozen_tip(params):
    # oracle chain at the brute-force joint solution of M = (0.1, 2, 5)
    assert fk((0.1, 2.0, 5.0), params) == pytest.approx((4.45655, -48.229197, 44.416848), abs=1e-5)


def test_chain_matches_oracle(params, rng):
    for M in sample_valid_motors(params, 100, rng):
        Q = m2q(M, params)
        assert fk_joints(Q, params) == pytest.approx(tip(params, np.array(Q)), abs=1e-10)


def test_flexion_plane_confinement(params, rng):
    for M in sample_valid_motors(params, 100, rng):
        assert fk((0.0, M[1], M[2]), params).x == 0.0


def test_pure_abduction_keeps_distance(params):
    r = [np.linalg.norm(fk((t, 0.0, 0.0), params)) for t in np.linspace(-0.35, 0.35, 21)]
    assert np.ptp(r) < 1e-12


def test_joint_partials_finite_difference(params, rng):
    for M in sample_valid_motors(params, 30, rng):
        Q = np.array(m2q(M, params))
        fd = central_difference(lambda q: tip(params, np.append(q, Q[4])), Q[:4], 1e-6)
        assert joint_partials(Q, params) == pytest.approx(fd, abs=1e-6)


def test_x2q_curled_tip(params):
    M = (0.09, 7.1, 6.25)
    X = fk(M, params)
    assert X.z < 0
    assert np.array(x2q(X, params)) == pytest.approx(np.array(m2q(M, params)), abs=1e-6)


def test_x2q_home(params):
    assert x2q(fk((0, 0, 0), params), params) == pytest.approx((0, 0, 0, 0, 0), abs=1e-9)


def test_x2q_recovers_joints(params, rng):
    for M in sample_valid_motors(params, 100, rng):
        Q = m2q(M, params)
        got = x2q(fk(M, params), params)
        assert np.array(got) == pytest.approx(np.array(Q), abs=1e-6)
        X = fk(M, params)
        if X.z > 0:
            assert got.q1 == pytest.approx(np.arctan2(X.x, X.z), abs=1e-15)
        else:  # tip curled behind the abduction axis
            assert got.q1 == pytest.approx(np.arctan2(-X.x, -X.z), abs=1e-15)


def test_ik_round_trip(params, rng):
    for M in sample_valid_motors(params, 100, rng):
        X = np.array(fk(M, params))
        assert np.array(fk(ik(X, params), params)) == pytest.approx(X, abs=1e-6)


@pytest.mark.parametrize("X", [(0.0, 0.0, 2 * 91.0), (0.0, 120.0, 0.0), (0.0, 2.0, 10.0)])
def test_unreachable(params, X):
    with pytest.raises(Unreachable):
        x2q(X, params)
    with pytest.raises(Unreachable):
        ik(X, params)
