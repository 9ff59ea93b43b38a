import math

import numpy as np
import pytest

from preftrack import regret as rg
from preftrack.baselines import SyntheticUserModel
from preftrack.gp import GpPosterior
from preftrack.kernels import KernelSpec
from preftrack.loop import FeedbackSchedule, UserModel
from preftrack.objectives import TimeVaryingQuadratic, make_periodic_target
from preftrack.solver import BoxDomain

Q = np.array([[1.0, 0.25], [0.25, 1.0]])
DOM = BoxDomain.unit(2)


def make_true_objective(omega=0.0, gamma=1.0, truths=None):
    obj = TimeVaryingQuadratic(Q, make_periodic_target(omega, 2), gamma)
    truths = truths or (SyntheticUserModel(0.6), SyntheticUserModel(0.7))
    return rg.TrueObjective(obj, truths, DOM), truths


def test_ledger_accumulates_in_order():
    led = rg.RegretLedger()
    for f_star, f_val in ((1.0, 0.5), (2.0, 2.0), (0.3, 0.1)):
        rg.regret_update(led, f_star, f_val)
    assert led.instantaneous == pytest.approx([0.5, 0.0, 0.2])
    assert led.cumulative == pytest.approx([0.5, 0.5, 0.7])
    assert led.total == pytest.approx(0.7)
    assert led.average[-1] == pytest.approx(0.7 / 3)


def test_ledger_zero_case():
    led = rg.RegretLedger()
    for _ in range(5):
        led.update(1.3, 1.3)
    assert led.total == 0.0
    assert np.allclose(led.average, 0.0)


# ----------------------------------------------------------------------
# oracle


def test_oracle_zero_users_quadratic():
    class Zero:
        def value(self, d):
            return 0.0

        def grad(self, d):
            return 0.0

        def value_batch(self, d):
            return np.zeros_like(np.asarray(d, dtype=float))

    to, _ = make_true_objective(omega=0.0, truths=(Zero(), Zero()))
    x_star, f_star = rg.oracle_opt(to, 1.0, DOM, grid_points=101, polish_steps=50)
    assert np.allclose(x_star, 0.33, atol=1e-6)
    assert f_star == pytest.approx(0.0, abs=1e-10)


def test_oracle_two_resolutions_agree():
    to, _ = make_true_objective(omega=0.3)
    t = 2.1
    x_a, f_a = rg.oracle_opt(to, t, DOM, grid_points=251, polish_steps=50)
    x_b, f_b = rg.oracle_opt(to, t, DOM, grid_points=501, polish_steps=50)
    assert f_a == pytest.approx(f_b, abs=1e-4)
    assert np.allclose(x_a, x_b, atol=1e-3)


def test_oracle_lattice_matches_brute_force():
    to, truths = make_true_objective(omega=0.2)
    t = 0.9
    _, f_star = rg.oracle_opt(to, t, DOM, grid_points=501, polish_steps=50)
    axes = np.linspace(0, 1, 501)
    X1, X2 = np.meshgrid(axes, axes, indexing="ij")
    U1 = truths[0].value_batch(axes)
    U2 = truths[1].value_batch(axes)
    xbar = to.objective.target(t)
    E1, E2 = X1 - xbar[0], X2 - xbar[1]
    quad = -0.5 * (Q[0, 0] * E1 * E1 + 2 * Q[0, 1] * E1 * E2 + Q[1, 1] * E2 * E2)
    field = quad + U1[:, None] + U2[None, :]
    assert f_star >= field.max() - 1e-9
    assert f_star == pytest.approx(field.max(), abs=1e-4)


def test_oracle_dominates_arbitrary_points(rng):
    to, _ = make_true_objective(omega=0.4)
    t = 3.3
    _, f_star = rg.oracle_opt(to, t, DOM, grid_points=301, polish_steps=50)
    for _ in range(100):
        assert f_star >= to.value(rng.random(2), t) - 1e-6


# ----------------------------------------------------------------------
# information gain


def test_info_gain_first_round_closed_form():
    gains = rg.info_gain_greedy(KernelSpec(), BoxDomain.unit(1), 101, 1, sigma=0.1)
    assert gains[0] == pytest.approx(0.5 * math.log(101.0), abs=1e-10)


def test_info_gain_increments_non_increasing():
    gains = rg.info_gain_greedy(KernelSpec(), BoxDomain.unit(1), 201, 60, sigma=0.1)
    inc = np.diff(np.concatenate([[0.0], gains]))
    assert np.all(np.diff(inc) <= 1e-9)
    assert np.all(inc >= -1e-12)


def test_info_gain_polylog_growth():
    gains = rg.info_gain_greedy(KernelSpec(), BoxDomain.unit(1), 1001, 500, sigma=0.1)
    ts = np.arange(10, 501)
    ratio = gains[ts - 1] / np.log(ts) ** 2
    # bounded ratio with no upward trend in the tail
    tail = ratio[-200:]
    assert np.max(ratio) < 10.0
    assert tail[-1] <= tail[0] + 1e-6


def test_info_gain_rejects_oversized_horizon():
    with pytest.raises(ValueError):
        rg.info_gain_greedy(KernelSpec(), BoxDomain.unit(1), 11, 20, sigma=0.1)


# ----------------------------------------------------------------------
# bound evaluation


def make_bound_inputs(**kw):
    base = dict(
        horizon=100,
        delta=0.1,
        sigma=0.1,
        dim=1,
        a=1.1,
        b=2.0,
        r=1.0,
        smoothness=1.25,
        grad_bound=0.8375,
        drift=0.0,
        eta=0.9,
        gamma_t=10.0,
    )
    base.update(kw)
    return rg.BoundInputs(**base)


def test_bound_c1_fixture():
    # C1 = 8 / log(11) for sigma = 0.1
    assert 8.0 / math.log(11.0) == pytest.approx(3.3362591313939706, rel=1e-12)
    b0 = make_bound_inputs(drift=0.0)
    bound_no_drift = rg.theoretical_bound(b0)
    from preftrack.ucb import ConfidenceParams, beta

    params = ConfidenceParams(delta=0.1, dim=1, a=1.1, b=2.0, r=1.0)
    c1 = 8.0 / math.log(11.0)
    c2 = (
        2.0 * 0.8375 / (2.0 * math.sqrt(math.log(22.0)))
        + 2.0 * 1.25 / (2.0 * 4.0 * math.log(22.0))
        + 2.0
    )
    expected = math.sqrt(c1 * 100 * beta(100, params) * 10.0) + c2
    assert bound_no_drift == pytest.approx(expected, rel=1e-12)


def test_bound_zero_drift_kills_linear_term():
    with_drift = rg.theoretical_bound(make_bound_inputs(drift=0.05))
    without = rg.theoretical_bound(make_bound_inputs(drift=0.0))
    assert with_drift > without
    # G term scale: 2 * drift * eta * T / (1 - eta)
    assert with_drift - without == pytest.approx(2 * 0.05 * 0.9 * 100 / 0.1, rel=1e-12)


def test_bound_intermittency_identity():
    b = make_bound_inputs(drift=0.03)
    assert rg.theoretical_bound(b, steps_per_feedback=(1, 1)) == rg.theoretical_bound(b)


def test_bound_intermittency_substitution():
    b = make_bound_inputs(drift=0.03, eta=0.8)
    val = rg.theoretical_bound(b, steps_per_feedback=(4, 4))
    eta_eff = 0.8**4
    drift_eff = 0.03 * (1 - 0.8**4) / (1 - 0.8)
    g = 2 * drift_eff * eta_eff * 100 / (1 - eta_eff)
    base = rg.theoretical_bound(make_bound_inputs(drift=0.0, eta=0.8))
    assert val == pytest.approx(base + g, rel=1e-12)


def test_bound_monotone():
    gains = rg.info_gain_greedy(KernelSpec(), BoxDomain.unit(1), 501, 200, sigma=0.1)
    b1 = rg.theoretical_bound(make_bound_inputs(horizon=50, gamma_t=float(gains[49])))
    b2 = rg.theoretical_bound(make_bound_inputs(horizon=200, gamma_t=float(gains[199])))
    assert b2 > b1
    assert rg.theoretical_bound(make_bound_inputs(drift=0.1)) > rg.theoretical_bound(
        make_bound_inputs(drift=0.05)
    )
    assert rg.theoretical_bound(make_bound_inputs(drift=0.1, eta=0.95)) > rg.theoretical_bound(
        make_bound_inputs(drift=0.1, eta=0.9)
    )


def test_bound_rejects_eta_one():
    with pytest.raises(ValueError):
        make_bound_inputs(eta=1.0)


# ----------------------------------------------------------------------
# diagnostics


def test_learning_rate_error_frozen_beta_zero(rng):
    gp = GpPosterior(KernelSpec(), 0.01, 1)
    for _ in range(5):
        gp.add(rng.random(1), float(rng.standard_normal()))
    grid = np.linspace(0, 1, 51)[:, None]
    assert rg.learning_rate_error(gp, gp, 3.0, grid) == 0.0


def test_learning_rate_error_positive_after_first_obs():
    prior = GpPosterior(KernelSpec(), 0.01, 1)
    post = prior.copy()
    post.add(np.array([0.4]), 1.0)
    grid = np.linspace(0, 1, 51)[:, None]
    assert rg.learning_rate_error(prior, post, 3.0, grid) > 0.0


def test_learning_rate_error_beta_change_term(rng):
    gp = GpPosterior(KernelSpec(), 0.01, 1)
    gp.add(np.array([0.5]), 0.3)
    grid = np.linspace(0, 1, 51)[:, None]
    # same posterior, different beta: error equals dbeta-weighted max std
    val = rg.learning_rate_error(gp, gp, 4.0, grid, beta_prev=1.0)
    stds = np.sqrt(np.asarray(gp.posterior_var(grid)))
    assert val == pytest.approx((2.0 - 1.0) * float(np.max(stds)), rel=1e-12)


def test_uc_metric_basics():
    truths = (SyntheticUserModel(0.6), SyntheticUserModel(0.7))
    users = UserModel(truths=truths, noise_std=0.1, schedule=FeedbackSchedule.every_step())
    maxima = rg.user_maxima(users, DOM)
    # closed-form peak of the log-normal curve
    assert maxima[0] == pytest.approx(truths[0].max_value(), rel=1e-6)
    x = np.array([truths[0].argmax(), truths[1].argmax()])
    uc = rg.uc_metric(users, x, DOM, maxima)
    assert np.all(uc <= 1.0 + 1e-9) and np.all(uc >= 1.0 - 1e-6)


def test_uc_metric_range(rng):
    truths = (SyntheticUserModel(0.6), SyntheticUserModel(0.7))
    users = UserModel(truths=truths, noise_std=0.1, schedule=FeedbackSchedule.every_step())
    maxima = rg.user_maxima(users, DOM)
    for _ in range(100):
        uc = rg.uc_metric(users, rng.random(2), DOM, maxima)
        assert np.all(uc >= -1e-9) and np.all(uc <= 1.0 + 1e-9)


def test_uc_metric_degenerate_user():
    class Negative:
        def value(self, d):
            return -1.0

        def grad(self, d):
            return 0.0

        def value_batch(self, d):
            return -np.ones_like(np.asarray(d, dtype=float))

    users = UserModel(
        truths=(Negative(), Negative()), noise_std=0.1, schedule=FeedbackSchedule.every_step()
    )
    with pytest.raises(ValueError):
        rg.uc_metric(users, np.array([0.5, 0.5]), DOM)


def test_rolling_mean_windows():
    x = np.arange(10.0)
    r5 = rg.rolling_mean(x, 5)
    assert r5.shape == (6,)
    assert r5[0] == pytest.approx(2.0)
    with pytest.raises(ValueError):
        rg.rolling_mean(x, 11)
