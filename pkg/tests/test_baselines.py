import numpy as np
import pytest

from preftrack import baselines as bl
from preftrack.baselines import SyntheticUserModel, ZeroOrderState, zero_order_grad
from preftrack.loop import FeedbackSchedule, UserModel
from preftrack.objectives import TimeVaryingQuadratic, make_periodic_target
from preftrack.solver import BoxDomain, SolverConfig

from conftest import fd_grad

DOM = BoxDomain.unit(2)
Q = np.array([[1.0, 0.25], [0.25, 1.0]])


def test_synthetic_value_example():
    model = SyntheticUserModel(0.9)
    assert model.value(1.0) == pytest.approx(1.0 / 0.9, rel=1e-12)
    assert bl.synthetic_value(model, 1.0) == model.value(1.0)


def test_synthetic_validation():
    with pytest.raises(ValueError):
        SyntheticUserModel(0.0)
    with pytest.raises(ValueError):
        SyntheticUserModel(0.9).value(float("nan"))


def test_synthetic_clamp_below_threshold():
    model = SyntheticUserModel(0.9)
    assert model.value(1e-9) == model.value(1e-3)
    assert model.value(0.0) == model.value(1e-3)


def test_synthetic_grad_matches_fd():
    model = SyntheticUserModel(0.9)
    for d in np.linspace(0.05, 1.0, 25):
        g = model.grad(float(d))
        h = 1e-6
        g_fd = (model.value(d + h) - model.value(d - h)) / (2 * h)
        assert g == pytest.approx(g_fd, rel=1e-6, abs=1e-8)


def test_synthetic_argmax_interior_unique():
    model = SyntheticUserModel(0.9)
    grid = np.linspace(1e-5, 1.0, 100_001)
    vals = model.value_batch(grid)
    best = grid[int(np.argmax(vals))]
    # closed form exp(-xi^2/2), found by fine line search as the oracle
    assert best == pytest.approx(0.6669768108584744, abs=1e-4)
    assert model.argmax() == pytest.approx(0.6669768108584744, rel=1e-12)
    assert 0.0 < best < 1.0
    assert model.max_value() == pytest.approx(float(vals.max()), rel=1e-6)


def test_zero_order_state_validation():
    with pytest.raises(ValueError):
        ZeroOrderState(2, 3)
    st = ZeroOrderState(2, 2)
    with pytest.raises(ValueError):
        zero_order_grad(st, 0)


def test_zero_order_two_point_affine_exact():
    st = ZeroOrderState(1, 2)
    st.push(0, 0.2, 0.4)
    st.push(0, 0.5, 1.0)
    assert zero_order_grad(st, 0) == pytest.approx(2.0, rel=1e-12)


def test_zero_order_guard_on_tiny_spread():
    st = ZeroOrderState(1, 2)
    st.push(0, 0.3, 1.0)
    st.push(0, 0.3 + 1e-5, 5.0)
    assert zero_order_grad(st, 0) == 0.0
    st4 = ZeroOrderState(1, 4)
    for i in range(4):
        st4.push(0, 0.3 + i * 1e-6, float(i))
    assert zero_order_grad(st4, 0) == 0.0


def test_zero_order_four_point_affine_exact():
    st = ZeroOrderState(1, 4)
    for d in (0.1, 0.3, 0.5, 0.8):
        st.push(0, d, 2.0 * d + 1.0)
    assert zero_order_grad(st, 0) == pytest.approx(2.0, rel=1e-12)


@pytest.mark.parametrize("points", [2, 4])
def test_zero_order_smooth_function_first_order(points):
    u = SyntheticUserModel(0.9)
    h = 1e-2
    st = ZeroOrderState(1, points)
    ds = [0.5 + i * h for i in range(points)]
    for d in ds:
        st.push(0, d, u.value(d))
    mid = float(np.mean(ds))
    assert zero_order_grad(st, 0) == pytest.approx(u.grad(mid), abs=0.1)


def make_users(noise=0.1):
    truths = (SyntheticUserModel(0.6), SyntheticUserModel(0.7))
    return UserModel(truths=truths, noise_std=noise, schedule=FeedbackSchedule.every_step())


def test_run_synthetic_decisions_in_domain():
    users = make_users()
    obj = TimeVaryingQuadratic(Q, make_periodic_target(0.4, 2))
    models = (SyntheticUserModel(0.9), SyntheticUserModel(0.9))
    out = bl.run_synthetic(200, obj, users, models, SolverConfig(0.1, 1), DOM, 1.2, seed=0)
    assert len(out) == 200
    for o in out:
        assert DOM.contains(o.x)
    assert not out[0].feedback_given


def test_run_synthetic_with_true_model_converges_to_composed_optimum():
    # when the synthetic model equals the true users, the tracker solves the
    # same composed problem the oracle sees; decisions approach its argmax
    from preftrack.regret import TrueObjective, oracle_opt

    users = make_users(noise=0.0)
    obj = TimeVaryingQuadratic(Q, make_periodic_target(0.0, 2))
    models = users.truths
    out = bl.run_synthetic(600, obj, users, models, SolverConfig(0.1, 1), DOM, 1.2, seed=0)
    to = TrueObjective(obj, users.truths, DOM)
    x_star, _ = oracle_opt(to, 600 * 1.2, DOM, grid_points=501, polish_steps=100)
    assert np.allclose(out[-1].x, x_star, atol=1e-3)


def test_run_zero_order_requires_every_step():
    users = UserModel(
        truths=(SyntheticUserModel(0.6), SyntheticUserModel(0.7)),
        noise_std=0.1,
        schedule=FeedbackSchedule.every_q(4),
    )
    obj = TimeVaryingQuadratic(Q, make_periodic_target(0.0, 2))
    with pytest.raises(ValueError):
        bl.run_zero_order(10, obj, users, 2, SolverConfig(0.1, 1), DOM, 1.2, seed=0)


@pytest.mark.parametrize("points", [2, 4])
def test_run_zero_order_decisions_in_domain(points):
    users = make_users()
    obj = TimeVaryingQuadratic(Q, make_periodic_target(0.4, 2))
    out = bl.run_zero_order(300, obj, users, points, SolverConfig(0.1, 1), DOM, 1.2, seed=1)
    for o in out:
        assert DOM.contains(o.x)
    assert all(o.feedback_given for o in out)


def test_noise_stream_pairing_with_loop():
    # under the same seed, the zeroth-order run consumes exactly the noise
    # realizations the learning loop would see
    from preftrack import loop as lp
    from preftrack.kernels import KernelSpec
    from preftrack.ucb import ConfidenceParams

    users = make_users()
    obj = TimeVaryingQuadratic(Q, make_periodic_target(0.0, 2))
    params = ConfidenceParams(delta=0.1, dim=1, a=1.1, b=2.0, r=1.0)
    agp = lp.run(40, obj, users, SolverConfig(0.1, 1), params, DOM, 1.2, KernelSpec(), seed=77)
    zo = bl.run_zero_order(40, obj, users, 2, SolverConfig(0.1, 1), DOM, 1.2, seed=77)
    # recover the standardized noise each algorithm injected
    for oa, oz in zip(agp, zo):
        na = (oa.y - users.true_values(oa.x)) / users.noise_std
        nz = (oz.y - users.true_values(oz.x)) / users.noise_std
        assert np.allclose(na, nz, atol=1e-10)
