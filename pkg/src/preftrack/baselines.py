"""Comparison algorithms sharing the tracking objective and solver.

Two families:

* a projected gradient method driven by a synthetic one-fits-all model of
  user satisfaction (a log-normal-shaped curve with a single shape
  parameter), consuming no feedback at all;
* projected zeroth-order methods that estimate each user's gradient from
  consecutive feedback values (two-point difference quotient or a four-point
  least-squares slope), requiring feedback at every tick.

Both run on the same time-varying objective stream and, under the same seed,
see the same feedback noise realizations as the learning loop, so runs can
be compared pairwise.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from .loop import StepOutcome, UserModel
from .objectives import TimeVaryingQuadratic
from .solver import BoxDomain, SolverConfig, run_inner

#: Difference quotients are suppressed below this decision spread.
DENOMINATOR_GUARD = 1e-4

#: Decisions are clamped up to this value before evaluating the model.
EVAL_CLAMP = 1e-3


@dataclass(frozen=True)
class SyntheticUserModel:
    """Log-normal-shaped satisfaction curve ``exp(-log(d)^2/xi^2) / (xi d)``."""

    xi: float

    def __post_init__(self) -> None:
        if not self.xi > 0.0:
            raise ValueError("shape parameter xi must be positive")

    def _clamp(self, d: float) -> float:
        if not np.isfinite(d):
            raise ValueError(f"decision {d!r} is not finite")
        return max(float(d), EVAL_CLAMP)

    def value(self, d: float) -> float:
        d = self._clamp(d)
        u = math.log(d)
        return math.exp(-u * u / self.xi**2) / (self.xi * d)

    def grad(self, d: float) -> float:
        # d/dd [exp(-log(d)^2/xi^2)/(xi d)] = -value * (2 log(d)/xi^2 + 1) / d
        d = self._clamp(d)
        u = math.log(d)
        return -self.value(d) * (2.0 * u / self.xi**2 + 1.0) / d

    def value_batch(self, d: np.ndarray) -> np.ndarray:
        d = np.maximum(np.asarray(d, dtype=float), EVAL_CLAMP)
        u = np.log(d)
        return np.exp(-u * u / self.xi**2) / (self.xi * d)

    def argmax(self) -> float:
        """Interior maximizer ``exp(-xi^2 / 2)`` of the curve on ``(0, inf)``."""
        return math.exp(-0.5 * self.xi**2)

    def max_value(self) -> float:
        return math.exp(0.25 * self.xi**2) / self.xi


def synthetic_value(u: SyntheticUserModel, d: float) -> float:
    return u.value(d)


def synthetic_grad(u: SyntheticUserModel, d: float) -> float:
    return u.grad(d)


class ZeroOrderState:
    """Ring buffers of recent (decision, feedback) pairs, one per user."""

    def __init__(self, n_users: int, points: int):
        if points not in (2, 4):
            raise ValueError("buffer length must be 2 or 4")
        self.points = points
        self.buffers = [deque(maxlen=points) for _ in range(n_users)]

    def push(self, user: int, d: float, y: float) -> None:
        self.buffers[user].append((float(d), float(y)))

    def full(self, user: int) -> bool:
        return len(self.buffers[user]) == self.points


def zero_order_grad(state: ZeroOrderState, user: int) -> float:
    """Feedback-only slope estimate; 0 when the decisions are too close."""
    buf = state.buffers[user]
    if len(buf) < state.points:
        raise ValueError("gradient requested before the buffer is full")
    d = np.array([p[0] for p in buf])
    y = np.array([p[1] for p in buf])
    if state.points == 2:
        dd = d[1] - d[0]
        if abs(dd) < DENOMINATOR_GUARD:
            return 0.0
        return float((y[1] - y[0]) / dd)
    if float(np.max(d) - np.min(d)) < DENOMINATOR_GUARD:
        return 0.0
    dc = d - d.mean()
    return float((dc @ (y - y.mean())) / (dc @ dc))


def synthetic_pgd_step(
    x: np.ndarray,
    objective: TimeVaryingQuadratic,
    models: tuple[SyntheticUserModel, ...],
    cfg: SolverConfig,
    domain: BoxDomain,
    t: float,
) -> np.ndarray:
    """One outer tick of the synthetic-model tracker (no feedback used)."""

    def grad(xx: np.ndarray) -> np.ndarray:
        g = objective.grad(xx, t).copy()
        for i, m in enumerate(models):
            g[i] += objective.gamma * m.grad(float(xx[i]))
        return g

    return run_inner(grad, x, cfg, domain)


def run_synthetic(
    T: int,
    objective: TimeVaryingQuadratic,
    users: UserModel,
    models: tuple[SyntheticUserModel, ...],
    cfg: SolverConfig,
    domain: BoxDomain,
    sample_period: float,
    *,
    x0: np.ndarray | None = None,
    seed: int = 0,
) -> list[StepOutcome]:
    """Track with the synthetic model; advances the noise stream for pairing."""
    if len(models) != users.n_users:
        raise ValueError("one synthetic model per user required")
    noise_rng = np.random.default_rng([seed, 1])
    x = domain.center() if x0 is None else np.asarray(x0, dtype=float)
    out: list[StepOutcome] = []
    for k in range(1, T + 1):
        t_k = k * sample_period
        x = synthetic_pgd_step(x, objective, models, cfg, domain, t_k)
        noise_rng.standard_normal(users.n_users)
        out.append(
            StepOutcome(k=k, n=1, t=t_k, x=x.copy(), beta=0.0, feedback_given=False, y=None)
        )
    return out


def run_zero_order(
    T: int,
    objective: TimeVaryingQuadratic,
    users: UserModel,
    points: int,
    cfg: SolverConfig,
    domain: BoxDomain,
    sample_period: float,
    *,
    x0: np.ndarray | None = None,
    seed: int = 0,
) -> list[StepOutcome]:
    """Projected zeroth-order tracker using per-tick feedback.

    Requires the every-step schedule: the estimator consumes one feedback
    per tick and cannot operate under intermittent feedback.
    """
    if users.schedule.mode != "every_step":
        raise ValueError("zeroth-order baselines require the every_step feedback schedule")
    state = ZeroOrderState(users.n_users, points)
    noise_rng = np.random.default_rng([seed, 1])
    x = domain.center() if x0 is None else np.asarray(x0, dtype=float)
    out: list[StepOutcome] = []
    for k in range(1, T + 1):
        t_k = k * sample_period

        def grad(xx: np.ndarray) -> np.ndarray:
            g = objective.grad(xx, t_k).copy()
            for i in range(users.n_users):
                if state.full(i):
                    g[i] += objective.gamma * zero_order_grad(state, i)
            return g

        x = run_inner(grad, x, cfg, domain)
        noise = noise_rng.standard_normal(users.n_users)
        y = users.true_values(x) + users.noise_std * noise
        for i in range(users.n_users):
            state.push(i, float(x[i]), float(y[i]))
        out.append(
            StepOutcome(k=k, n=k, t=t_k, x=x.copy(), beta=0.0, feedback_given=True, y=y.copy())
        )
    return out
