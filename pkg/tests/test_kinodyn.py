import numpy as np
import pytest
from hypothesis import given, strategies as st

from toptime import assets, kinodyn as kd, retimer, simharness as sh
from toptime.motiondata import DimensionError
from _models import toy_model

Z = [0, 0, 1.0]


def state(model, q=None, dq=None, R=np.eye(3), pos=None):
    n = model.n_joints
    return kd.KinematicState(model.base_position if pos is None else pos, R,
                             np.zeros(n) if q is None else q, np.zeros(n) if dq is None else dq)


def test_fk_zero_posture_composes_origins(model):
    fk = kd.forward_kinematics(model, state(model))
    for i, j in enumerate(model.joints):
        assert np.allclose(fk["positions"][i + 1], fk["positions"][j.parent + 1] + j.origin_xyz, atol=1e-15)
        assert np.allclose(fk["rotations"][i + 1], np.eye(3), atol=0)


def test_fk_single_z_joint_quarter_turn():
    m = toy_model([(-1, Z, [0, 0, 0]), (0, Z, [1, 0, 0])], [(1, [0, 0, 0], 0.1), (1, [0, 0, 0], 0.1)])
    fk = kd.forward_kinematics(m, state(m, q=np.array([np.pi / 2, 0.0])))
    assert np.allclose(fk["positions"][2], [0, 1, 0], atol=1e-12)


def test_fk_base_rotation_equivariance(model, rng):
    q = rng.normal(size=model.n_joints) * 0.5
    Rz = kd.rotation_about(Z, np.pi / 2)
    a = kd.forward_kinematics(model, state(model, q=q, pos=np.zeros(3)))
    b = kd.forward_kinematics(model, state(model, q=q, R=Rz, pos=np.zeros(3)))
    assert np.allclose(b["positions"], a["positions"] @ Rz.T, atol=1e-12)
    assert np.allclose(b["ee_positions"], a["ee_positions"] @ Rz.T, atol=1e-12)


def test_fk_deterministic(model, rng):
    s = state(model, q=rng.normal(size=model.n_joints))
    a, b = kd.forward_kinematics(model, s), kd.forward_kinematics(model, s)
    assert all(np.array_equal(a[k], b[k]) for k in a)


def test_fk_sanity_bound(model):
    with pytest.raises(ValueError):
        kd.forward_kinematics(model, state(model, q=np.full(model.n_joints, 100.0)))


def test_com_two_point_masses():
    m = toy_model([(-1, Z, [0, 0, 1])], [(1.0, [2, 0, 0], 0.0)], base_mass=1.0, base_com=(0, 0, 1))
    com, M = kd.center_of_mass(m, kd.forward_kinematics(m, state(m)))
    assert np.allclose(com, [1, 0, 1], atol=1e-15) and M == 2.0


def test_com_total_mass(model):
    _, M = kd.center_of_mass(model, kd.forward_kinematics(model, state(model)))
    assert M == pytest.approx(60.0, abs=1e-9)


def test_momentum_static_is_zero(model, rng):
    ms = kd.centroidal_momentum(model, state(model, q=rng.normal(size=model.n_joints)))
    assert np.all(ms.P == 0) and np.all(ms.L == 0)


def test_momentum_single_joint():
    # link CoM on the axis: no transport term, so L = I dq
    m = toy_model([(-1, Z, [0, 0, 0])], [(1e-9, [0, 0, 0.3], 2.0)], base_mass=1.0)
    ms = kd.centroidal_momentum(m, state(m, dq=np.array([3.0])))
    assert ms.L[2] == pytest.approx(6.0, abs=1e-12)


def test_momentum_linear_in_velocity(model, rng):
    q, dq = rng.normal(size=model.n_joints), rng.normal(size=model.n_joints)
    a = kd.centroidal_momentum(model, state(model, q=q, dq=dq))
    b = kd.centroidal_momentum(model, state(model, q=q, dq=2.0 * dq))
    assert np.array_equal(b.P, 2.0 * a.P) and np.allclose(b.L, 2.0 * a.L, rtol=1e-15, atol=1e-15)


def test_rates_constant_and_linear():
    X = np.ones((20, 3))
    r, flag = kd.momentum_rates(X, 5, 0.01)
    assert np.all(r == 0) and not flag
    t = np.arange(20) * 0.01
    P = np.column_stack([0 * t, 0 * t, 5 * t])
    assert kd.momentum_rates(P, 7, 0.01)[0][2] == pytest.approx(5.0, abs=1e-9)
    assert kd.momentum_rates(P, 0, 0.01)[1] and kd.momentum_rates(P, 19, 0.01)[1]


def test_rates_sinusoid():
    dt = 1e-4
    t = np.arange(2000) * dt
    L = np.column_stack([np.sin(7 * t), np.cos(3 * t), 0 * t])
    rates = kd.rate_series(L, dt)
    exact = np.column_stack([7 * np.cos(7 * t), -3 * np.sin(3 * t), 0 * t])
    inner = slice(1, -1)
    assert np.max(np.abs(rates[inner] - exact[inner])) <= 1e-3 * np.max(np.abs(exact))


def test_rates_reject_bad_dt():
    with pytest.raises(ValueError):
        kd.momentum_rates(np.zeros((3, 3)), 1, 0.0)


def test_reaction_examples():
    m = toy_model([(-1, Z, [0, 0, 0])], [(1, [0, 0, 0], 2.0)], base_inertia=(1.0, 1.0, 6.0))
    assert np.all(kd.base_reaction(m, np.zeros(1)) == 0)
    assert kd.base_reaction(m, np.array([3.0]))[2] == pytest.approx(-1.0, abs=1e-15)
    m2 = toy_model([(-1, Z, [0, 0, 0]), (-1, Z, [0, 1, 0])], [(1, [0, 0, 0], 2.0), (1, [0, 0, 0], 1.0)],
                   base_inertia=(1.0, 1.0, 6.0))
    assert kd.base_reaction(m2, np.array([2.0, -4.0]))[2] == 0.0


def test_reaction_zero_inertia():
    m = toy_model([(-1, Z, [0, 0, 0])], [(1, [0, 0, 0], 2.0)], base_inertia=(1.0, 0.0, 1.0))
    with pytest.raises(ZeroDivisionError):
        kd.base_reaction(m, np.array([1.0]))


def test_reaction_dimension(model):
    with pytest.raises(DimensionError):
        kd.base_reaction(model, np.zeros(3))


@given(st.lists(st.floats(-50, 50), min_size=15, max_size=15))
def test_reaction_antisymmetric(ddq):
    model = assets.default_model()
    ddq = np.array(ddq)
    assert np.all(kd.base_reaction(model, ddq) + kd.base_reaction(model, -ddq) == 0)


def _pdot_vs_com_accel(model, tr, dt):
    ref = retimer.resample(tr, retimer.RetimingPlan.uniform(len(tr), 0.03), dt)
    trace = sh.rollout(model, ref, dt)
    p = trace.p_com
    a = (p[2:] - 2 * p[1:-1] + p[:-2]) / dt ** 2
    pdot = trace.Pdot[1:-1]
    return np.max(np.abs(pdot - trace.total_mass * a)) / np.max(np.abs(pdot))


@pytest.mark.parametrize("name", ["fast_swing", "slow_reach", "raise_overhead"])
def test_momentum_rate_matches_com_acceleration(model, name):
    # semi-implicit Euler records dq half a tick behind q, so the match is first order in dt
    tr = assets.motion_by_name(name, 300)
    e1 = _pdot_vs_com_accel(model, tr, 2.5e-4)
    e2 = _pdot_vs_com_accel(model, tr, 1.25e-4)
    assert e1 < 1e-3 and e2 < 1e-3
    assert 1.6 < e1 / e2 < 2.4
