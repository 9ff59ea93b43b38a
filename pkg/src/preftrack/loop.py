"""Online decision loop: inexact tracking plus concurrent preference learning.

Each tick ``k`` performs three stages:

1. form the optimistic surrogate of the unknown satisfaction term from the
   current beliefs and the confidence parameter ``beta_n`` (indexed by the
   data counter ``n``, not the tick counter),
2. advance the decision with a few projected-gradient steps on
   ``V(x; t_k) + gamma * surrogate(x)``, warm-started at the previous
   decision,
3. if the feedback schedule fires, collect one noisy evaluation per user,
   update the beliefs and increment ``n``; otherwise leave beliefs untouched.

Users are modelled separably by default (one 1-D posterior per user, each
conditioned only on its own coordinate of the decision); a joint posterior
over the full decision vector is available for low dimensions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Protocol, Sequence

import numpy as np

from . import ucb
from .gp import GpPosterior, SamplePath
from .kernels import KernelSpec
from .objectives import TimeVaryingQuadratic
from .solver import BoxDomain, SolverConfig, run_inner
from .ucb import ConfidenceParams


@dataclass(frozen=True)
class FeedbackSchedule:
    """When user feedback arrives relative to optimization ticks.

    ``every_step`` fires at every tick; ``every_q`` fires on the last tick of
    each block of ``q`` (so after ``q*m`` ticks there were ``m`` feedback
    events); ``bernoulli`` fires independently with probability ``p``.
    """

    mode: str = "every_step"
    q: int = 1
    p: float = 1.0

    def __post_init__(self) -> None:
        if self.mode not in ("every_step", "every_q", "bernoulli"):
            raise ValueError(f"unknown schedule mode {self.mode!r}")
        if self.mode == "every_q" and self.q < 1:
            raise ValueError("q must be >= 1")
        if self.mode == "bernoulli" and not 0.0 < self.p <= 1.0:
            raise ValueError("p must lie in (0, 1]")

    @classmethod
    def every_step(cls) -> "FeedbackSchedule":
        return cls("every_step")

    @classmethod
    def every_q(cls, q: int) -> "FeedbackSchedule":
        return cls("every_q", q=q)

    @classmethod
    def bernoulli(cls, p: float) -> "FeedbackSchedule":
        return cls("bernoulli", p=p)

    def fires(self, k: int, rng: np.random.Generator) -> bool:
        if self.mode == "every_step":
            return True
        if self.mode == "every_q":
            return k % self.q == 0
        return bool(rng.random() < self.p)


class UserFunction(Protocol):
    """Scalar satisfaction function of one user's own decision coordinate."""

    def value(self, d: float) -> float: ...

    def grad(self, d: float) -> float: ...

    def value_batch(self, d: np.ndarray) -> np.ndarray: ...


class SamplePathUser:
    """User whose true satisfaction is a GP sample path on its coordinate."""

    def __init__(self, path: SamplePath):
        if path.dim != 1:
            raise ValueError("per-user sample paths must be one-dimensional")
        self.path = path

    def value(self, d: float) -> float:
        return float(self.path.value(np.array([d])))

    def grad(self, d: float) -> float:
        return float(self.path.grad(np.array([d]))[0])

    def value_batch(self, d: np.ndarray) -> np.ndarray:
        return np.asarray(self.path.value(np.asarray(d, dtype=float)[:, None]))


@dataclass(frozen=True)
class UserModel:
    """True users: satisfaction functions, feedback noise and schedule."""

    truths: tuple
    noise_std: float
    schedule: FeedbackSchedule

    def __post_init__(self) -> None:
        if self.noise_std < 0.0:
            raise ValueError("noise_std must be nonnegative")

    @property
    def n_users(self) -> int:
        return len(self.truths)

    def true_values(self, x: np.ndarray) -> np.ndarray:
        return np.array([u.value(float(x[i])) for i, u in enumerate(self.truths)])


# ----------------------------------------------------------------------
# beliefs


class SeparableBeliefs:
    """One 1-D posterior per user; the surrogate is the sum of per-user terms."""

    def __init__(self, kernel: KernelSpec, noise_variance: float, n_users: int, capacity: int = 64):
        self.posteriors = [
            GpPosterior(kernel, noise_variance, 1, capacity) for _ in range(n_users)
        ]

    @property
    def n_users(self) -> int:
        return len(self.posteriors)

    @property
    def learning_dim(self) -> int:
        return 1

    def surrogate_value(self, x: np.ndarray, beta_n: float) -> float:
        return sum(
            ucb.ucb_value(p, beta_n, np.array([float(x[i])]))
            for i, p in enumerate(self.posteriors)
        )

    def surrogate_grad(self, x: np.ndarray, beta_n: float) -> np.ndarray:
        root = math.sqrt(beta_n)
        g = np.zeros(len(x))
        for i, p in enumerate(self.posteriors):
            st = p.stats(np.array([float(x[i])]))
            g[i] = st.mean_grad[0] + root * st.std_grad[0]
        return g

    def observe(self, x: np.ndarray, y: np.ndarray) -> None:
        for i, p in enumerate(self.posteriors):
            p.add(np.array([float(x[i])]), float(y[i]))

    def draw_feedback(self, users: UserModel, x: np.ndarray, noise: np.ndarray) -> np.ndarray:
        return users.true_values(x) + users.noise_std * noise

    def attach_probes(self, domain: BoxDomain, points: int) -> None:
        for i, p in enumerate(self.posteriors):
            grid = np.linspace(domain.lo[i], domain.hi[i], points)[:, None]
            p.attach_probe_grid(grid)

    def probe_surrogates(self, beta_n: float) -> list[np.ndarray]:
        root = math.sqrt(beta_n)
        return [p.probe_mean + root * p.probe_std for p in self.posteriors]


class JointBeliefs:
    """A single posterior over the full decision vector (joint feedback)."""

    def __init__(self, kernel: KernelSpec, noise_variance: float, dim: int, capacity: int = 64):
        if dim > 2:
            raise ValueError("joint beliefs supported for dimension <= 2")
        self.posteriors = [GpPosterior(kernel, noise_variance, dim, capacity)]

    @property
    def n_users(self) -> int:
        return 1

    @property
    def learning_dim(self) -> int:
        return self.posteriors[0].dim

    def surrogate_value(self, x: np.ndarray, beta_n: float) -> float:
        return ucb.ucb_value(self.posteriors[0], beta_n, np.asarray(x, dtype=float))

    def surrogate_grad(self, x: np.ndarray, beta_n: float) -> np.ndarray:
        return ucb.ucb_grad(self.posteriors[0], beta_n, np.asarray(x, dtype=float))

    def observe(self, x: np.ndarray, y: np.ndarray) -> None:
        self.posteriors[0].add(np.asarray(x, dtype=float), float(np.sum(y)))

    def draw_feedback(self, users: UserModel, x: np.ndarray, noise: np.ndarray) -> np.ndarray:
        total = float(np.sum(users.true_values(x)))
        return np.array([total + users.noise_std * noise[0]])

    def attach_probes(self, domain: BoxDomain, points: int) -> None:
        self.posteriors[0].attach_probe_grid(domain.lattice(points))

    def probe_surrogates(self, beta_n: float) -> list[np.ndarray]:
        p = self.posteriors[0]
        return [p.probe_mean + math.sqrt(beta_n) * p.probe_std]


Beliefs = SeparableBeliefs | JointBeliefs


def make_beliefs(
    kernel: KernelSpec, noise_variance: float, n_users: int, mode: str, capacity: int = 64
) -> Beliefs:
    if mode == "separable":
        return SeparableBeliefs(kernel, noise_variance, n_users, capacity)
    if mode == "joint":
        return JointBeliefs(kernel, noise_variance, n_users, capacity)
    raise ValueError(f"unknown belief mode {mode!r}")


# ----------------------------------------------------------------------
# state and stepping


@dataclass
class LoopState:
    """Mutable loop state: counters, current decision, beliefs, rng streams."""

    k: int
    n: int
    x: np.ndarray
    beliefs: Beliefs
    domain: BoxDomain
    beta_current: float
    noise_rng: np.random.Generator
    schedule_rng: np.random.Generator


@dataclass(frozen=True)
class StepOutcome:
    """Per-tick log entry."""

    k: int
    n: int
    t: float
    x: np.ndarray
    beta: float
    feedback_given: bool
    y: np.ndarray | None
    lr_error: float | None = None


def initial_state(
    beliefs: Beliefs, domain: BoxDomain, x0: np.ndarray | None, seed: int
) -> LoopState:
    x = domain.center() if x0 is None else np.asarray(x0, dtype=float)
    if not domain.contains(x):
        raise ValueError("initial decision must lie in the domain")
    return LoopState(
        k=1,
        n=1,
        x=x.copy(),
        beliefs=beliefs,
        domain=domain,
        beta_current=float("nan"),
        noise_rng=np.random.default_rng([seed, 1]),
        schedule_rng=np.random.default_rng([seed, 2]),
    )


def step(
    state: LoopState,
    objective: TimeVaryingQuadratic,
    users: UserModel,
    solver_cfg: SolverConfig,
    params: ConfidenceParams,
    t_k: float,
    collect_lr: bool = False,
) -> StepOutcome:
    """Advance the loop by one tick (state is mutated)."""
    n_used = state.n
    beta_n = ucb.beta(n_used, params)
    state.beta_current = beta_n
    gamma = objective.gamma
    beliefs = state.beliefs

    def grad_phi(x: np.ndarray) -> np.ndarray:
        return objective.grad(x, t_k) + gamma * beliefs.surrogate_grad(x, beta_n)

    x_new = run_inner(grad_phi, state.x, solver_cfg, state.domain)

    # the noise stream advances every tick so that runs with different
    # schedules (or different algorithms) see identical realizations
    noise = state.noise_rng.standard_normal(users.n_users)
    fired = users.schedule.fires(state.k, state.schedule_rng)
    y = None
    lr = None
    if fired:
        y = beliefs.draw_feedback(users, x_new, noise)
        if collect_lr:
            pre = beliefs.probe_surrogates(beta_n)
            beliefs.observe(x_new, y)
            post = beliefs.probe_surrogates(ucb.beta(state.n + 1, params))
            hi = sum(float(np.max(po - pr)) for po, pr in zip(post, pre))
            lo = sum(float(np.min(po - pr)) for po, pr in zip(post, pre))
            lr = max(abs(hi), abs(lo))
        else:
            beliefs.observe(x_new, y)
        state.n += 1
    outcome = StepOutcome(
        k=state.k,
        n=n_used,
        t=t_k,
        x=x_new.copy(),
        beta=beta_n,
        feedback_given=fired,
        y=None if y is None else np.asarray(y, dtype=float).copy(),
        lr_error=lr,
    )
    state.x = x_new
    state.k += 1
    return outcome


def run(
    T: int,
    objective: TimeVaryingQuadratic,
    users: UserModel,
    solver_cfg: SolverConfig,
    params: ConfidenceParams,
    domain: BoxDomain,
    sample_period: float,
    kernel: KernelSpec,
    *,
    x0: np.ndarray | None = None,
    seed: int = 0,
    belief_mode: str = "separable",
    collect_lr: bool = False,
    probe_points: int = 101,
    on_checkpoint: Callable[[int, Beliefs], None] | None = None,
    checkpoints: Sequence[int] = (),
) -> list[StepOutcome]:
    """Run ``T`` ticks with ``t_k = k * sample_period``; deterministic per seed."""
    if T < 1:
        raise ValueError("T must be >= 1")
    beliefs = make_beliefs(kernel, users.noise_std**2, users.n_users, belief_mode, capacity=T + 2)
    if collect_lr:
        beliefs.attach_probes(domain, probe_points)
    state = initial_state(beliefs, domain, x0, seed)
    ckpt = set(int(c) for c in checkpoints)
    out: list[StepOutcome] = []
    for k in range(1, T + 1):
        t_k = k * sample_period
        out.append(step(state, objective, users, solver_cfg, params, t_k, collect_lr))
        if on_checkpoint is not None and k in ckpt:
            on_checkpoint(k, beliefs)
    return out
