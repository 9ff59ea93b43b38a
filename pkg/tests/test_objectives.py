import numpy as np
import pytest

from preftrack import objectives
from preftrack.objectives import (
    TimeVaryingQuadratic,
    drift_bound,
    drift_bound_grid,
    make_periodic_target,
    make_vanishing_target,
    metadata,
    target_trajectory,
    vanishing_target,
)
from preftrack.solver import BoxDomain

from conftest import fd_grad

Q_COUPLED = np.array([[1.0, 0.25], [0.25, 1.0]])


def make_quadratic(omega=0.0, dim=2, q=None):
    q = Q_COUPLED if q is None else q
    return TimeVaryingQuadratic(q, make_periodic_target(omega, dim))


def test_validation():
    tgt = make_periodic_target(0.0, 2)
    with pytest.raises(ValueError):
        TimeVaryingQuadratic(np.array([[1.0, 0.5], [0.4, 1.0]]), tgt)  # asymmetric
    with pytest.raises(ValueError):
        TimeVaryingQuadratic(np.array([[1.0, 2.0], [2.0, 1.0]]), tgt)  # indefinite
    with pytest.raises(ValueError):
        TimeVaryingQuadratic(Q_COUPLED, tgt, gamma=0.0)


def test_value_at_target_is_zero():
    obj = make_quadratic(omega=0.3)
    t = 1.7
    x = obj.target(t)
    assert obj.value(x, t) == pytest.approx(0.0, abs=1e-14)
    assert np.allclose(obj.grad(x, t), 0.0, atol=1e-14)


def test_value_hand_example():
    obj = TimeVaryingQuadratic(np.eye(2), make_periodic_target(0.0, 2))
    x = obj.target(0.0) + np.array([0.1, 0.0])
    assert obj.value(x, 0.0) == pytest.approx(-0.005, rel=1e-12)


def test_grad_matches_fd(rng):
    obj = make_quadratic(omega=0.4)
    for _ in range(20):
        x = rng.random(2)
        t = float(rng.random() * 5)
        g = obj.grad(x, t)
        g_fd = fd_grad(lambda z: obj.value(z, t), x, h=1e-6)
        assert np.allclose(g, g_fd, rtol=1e-6, atol=1e-8)


def test_neg_value_convex(rng):
    obj = make_quadratic(omega=0.2)
    for _ in range(50):
        x = rng.random(2)
        assert obj.value(x, 1.0) <= 1e-15


def test_target_trajectory_examples():
    assert np.allclose(target_trajectory(3.7, 0.0, 2), 0.33)
    assert target_trajectory(1.25, 0.4, 1)[0] == pytest.approx(0.58, abs=1e-12)
    assert np.allclose(target_trajectory(0.0, 0.9, 3), 0.33)


def test_target_stays_in_unit_box():
    ts = np.linspace(0, 50, 5001)
    vals = np.array([target_trajectory(t, 0.4, 1)[0] for t in ts])
    assert vals.min() >= 0.08 - 1e-12 and vals.max() <= 0.58 + 1e-12


def test_vanishing_target_examples():
    assert np.allclose(vanishing_target(1.3, 0.4, 1, 2), target_trajectory(1.3, 0.4, 2))
    assert vanishing_target(2.0, 0.4, 10_000, 1)[0] == pytest.approx(0.33, abs=3e-3)
    with pytest.raises(ValueError):
        vanishing_target(1.0, 0.4, 0)


def test_vanishing_drift_decays_like_inverse_sqrt():
    h = 0.5
    obj = TimeVaryingQuadratic(Q_COUPLED, make_vanishing_target(0.4, 2, h))
    dom = BoxDomain.unit(2)
    drifts = {k: drift_bound(obj, (k + 1) * h, k * h, dom) for k in (10, 40, 160, 640)}
    # quadrupling k should halve the drift, within a factor of 2
    for k in (10, 40, 160):
        ratio = drifts[k * 4] / drifts[k]
        assert 0.25 <= ratio <= 1.0


def test_metadata_identity_example():
    obj = TimeVaryingQuadratic(np.eye(2), make_periodic_target(0.0, 2))
    meta = metadata(obj, BoxDomain.unit(2), np.array([0.0, 1.0]))
    assert meta.smoothness == pytest.approx(1.0)
    assert meta.grad_bound == pytest.approx(0.67, rel=1e-12)
    assert meta.drift == pytest.approx(0.0, abs=1e-14)


def test_metadata_smoothness_is_eigmax():
    obj = make_quadratic()
    assert obj.smoothness == pytest.approx(1.25, rel=1e-12)
    assert obj.curvature_min == pytest.approx(0.75, rel=1e-12)


def test_drift_corner_rule_matches_grid(rng):
    obj = TimeVaryingQuadratic(np.eye(2), make_periodic_target(0.35, 2))
    dom = BoxDomain.unit(2)
    for _ in range(5):
        t0 = float(rng.random() * 4)
        t1 = t0 + 0.5
        exact = drift_bound(obj, t1, t0, dom)
        grid = drift_bound_grid(obj, t1, t0, dom, 101)
        assert grid <= exact + 1e-12
        assert exact == pytest.approx(grid, abs=2e-2 * max(exact, 1e-12) + 1e-9)


def test_drift_zero_when_static():
    obj = make_quadratic(omega=0.0)
    assert drift_bound(obj, 5.0, 1.0, BoxDomain.unit(2)) == pytest.approx(0.0, abs=1e-14)
