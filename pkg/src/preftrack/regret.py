"""Regret accounting, information gain, and the regret-bound calculator.

At every tick the oracle optimum of the composed objective
``f(x; t) = V(x; t) + gamma * sum_i U_i(x_i)`` (with the *true* user
functions) is compared against the value achieved by the algorithm's
decision; the cumulative gap is the dynamic regret.  The oracle is a dense
lattice search followed by projected-gradient polish; for separable users
plus a quadratic tracking term the lattice evaluation collapses to an outer
sum of per-axis tables, which keeps a per-tick oracle affordable.

The computable part of the high-probability regret bound is

    sqrt(C1 T beta_T gamma_T) + C2 + G_T,
    C1 = 8 / log(1 + 1/sigma),
    C2 = 2 Dg / (b sqrt(log(2 d a / delta)))
         + 2 L / (2 d b^2 log(2 d a / delta)) + 2,
    G_T <= 2 Delta eta T / (1 - eta),

where ``gamma_T`` is the maximum information gain of ``T`` observations,
estimated greedily on a lattice (log-det is submodular, greedy is the
standard near-optimal surrogate).  The additive constant contributed by the
inexact inner solver has no computable closed form and is excluded; the
bound is therefore a one-sided sanity reference, not a certificate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels, ucb
from .gp import GpPosterior
from .kernels import KernelSpec
from .loop import UserModel
from .objectives import TimeVaryingQuadratic
from .solver import BoxDomain, polish_max
from .ucb import ConfidenceParams


class RegretLedger:
    """Per-step regret log with running totals (fixed summation order)."""

    def __init__(self) -> None:
        self.f_star: list[float] = []
        self.f_value: list[float] = []
        self.instantaneous: list[float] = []
        self.cumulative: list[float] = []
        self._total = 0.0

    def update(self, f_star: float, f_at_decision: float) -> "RegretLedger":
        r = float(f_star) - float(f_at_decision)
        self.f_star.append(float(f_star))
        self.f_value.append(float(f_at_decision))
        self.instantaneous.append(r)
        self._total += r
        self.cumulative.append(self._total)
        return self

    @property
    def total(self) -> float:
        return self._total

    @property
    def steps(self) -> int:
        return len(self.instantaneous)

    @property
    def average(self) -> np.ndarray:
        cum = np.asarray(self.cumulative)
        return cum / np.arange(1, cum.shape[0] + 1)


def regret_update(ledger: RegretLedger, f_star: float, f_at_decision: float) -> RegretLedger:
    return ledger.update(f_star, f_at_decision)


# ----------------------------------------------------------------------
# composed true objective and its oracle


class TrueObjective:
    """Tracking quadratic plus the weighted sum of true user functions."""

    def __init__(self, objective: TimeVaryingQuadratic, truths: tuple, domain: BoxDomain):
        if objective.dim != len(truths) or objective.dim != domain.dim:
            raise ValueError("objective, truths and domain dimensions must agree")
        self.objective = objective
        self.truths = truths
        self.domain = domain
        self._lattice_cache: dict[int, tuple] = {}

    @property
    def dim(self) -> int:
        return self.objective.dim

    def user_sum(self, x: np.ndarray) -> float:
        return sum(u.value(float(x[i])) for i, u in enumerate(self.truths))

    def value(self, x: np.ndarray, t: float) -> float:
        return self.objective.value(x, t) + self.objective.gamma * self.user_sum(x)

    def grad(self, x: np.ndarray, t: float) -> np.ndarray:
        g = self.objective.grad(x, t).copy()
        for i, u in enumerate(self.truths):
            g[i] += self.objective.gamma * u.grad(float(x[i]))
        return g

    def _lattice(self, points: int) -> tuple:
        cached = self._lattice_cache.get(points)
        if cached is not None:
            return cached
        if self.dim > 3:
            raise NotImplementedError("lattice oracle supported for dimension <= 3")
        axes = self.domain.axes(points)
        meshes = np.meshgrid(*axes, indexing="ij")
        Q = self.objective.q_matrix
        quad = np.zeros_like(meshes[0])
        for i in range(self.dim):
            for j in range(self.dim):
                quad += Q[i, j] * meshes[i] * meshes[j]
        base = -0.5 * quad
        for i, u in enumerate(self.truths):
            table = self.objective.gamma * u.value_batch(axes[i])
            shape = [1] * self.dim
            shape[i] = points
            base = base + table.reshape(shape)
        cached = (axes, meshes, base)
        self._lattice_cache[points] = cached
        return cached

    def lattice_argmax(self, t: float, points: int) -> tuple[np.ndarray, float]:
        """Best lattice point of ``f(.; t)`` using the separable fast path."""
        axes, meshes, base = self._lattice(points)
        xbar = self.objective.target(t)
        qt = self.objective.q_matrix @ xbar
        field = base.copy()
        for j in range(self.dim):
            field += qt[j] * meshes[j]
        field -= 0.5 * float(xbar @ self.objective.q_matrix @ xbar)
        flat = int(np.argmax(field))
        idx = np.unravel_index(flat, field.shape)
        x = np.array([axes[j][idx[j]] for j in range(self.dim)])
        return x, float(field[idx])


def oracle_opt(
    f: TrueObjective,
    t: float,
    domain: BoxDomain,
    grid_points: int = 501,
    polish_steps: int = 50,
    alpha: float = 0.1,
) -> tuple[np.ndarray, float]:
    """Per-tick oracle optimum: lattice search plus projected-gradient polish."""
    x0, _ = f.lattice_argmax(t, grid_points)
    return polish_max(
        lambda x: f.value(x, t), lambda x: f.grad(x, t), x0, domain, polish_steps, alpha
    )


# ----------------------------------------------------------------------
# information gain


def info_gain_greedy(
    kernel: KernelSpec, domain: BoxDomain, grid_points: int, T: int, sigma: float
) -> np.ndarray:
    """Greedy estimate of the maximum information gain ``gamma_1..gamma_T``.

    Each round adds the lattice point of maximal posterior variance; the
    increments ``0.5 log(1 + var/sigma^2)`` are non-increasing.
    """
    if sigma <= 0.0:
        raise ValueError("sigma must be positive")
    pts = domain.lattice(grid_points)
    N = pts.shape[0]
    if T > N:
        raise ValueError(f"T={T} exceeds the lattice size {N}")
    s2 = sigma * sigma
    var = np.full(N, kernel.output_variance)
    A = np.zeros((T, N))
    gains = np.empty(T)
    total = 0.0
    for step in range(T):
        i = int(np.argmax(var))
        vi = var[i]
        total += 0.5 * math.log(1.0 + vi / s2)
        gains[step] = total
        kvec = kernels.gram(kernel, pts[i : i + 1], pts)[0]
        if step:
            row = (kvec - A[:step].T @ A[:step, i]) / math.sqrt(vi + s2)
        else:
            row = kvec / math.sqrt(vi + s2)
        A[step] = row
        var = np.maximum(var - row * row, 0.0)
    return gains


# ----------------------------------------------------------------------
# bound evaluation


@dataclass(frozen=True)
class BoundInputs:
    """Everything the computable part of the regret bound needs."""

    horizon: int
    delta: float
    sigma: float
    dim: int
    a: float
    b: float
    r: float
    smoothness: float
    grad_bound: float
    drift: float
    eta: float
    gamma_t: float

    def __post_init__(self) -> None:
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if not 0.0 <= self.eta < 1.0:
            raise ValueError("eta must lie in [0, 1)")
        if self.sigma <= 0.0:
            raise ValueError("sigma must be positive")
        if self.gamma_t < 0.0 or self.drift < 0.0:
            raise ValueError("gamma_t and drift must be nonnegative")


def theoretical_bound(b: BoundInputs, steps_per_feedback: tuple[int, int] = (1, 1)) -> float:
    """Computable part of the high-probability regret bound.

    ``steps_per_feedback = (p, q)`` handles intermittent feedback with at
    least ``p`` and at most ``q`` ticks per feedback event by substituting
    ``eta -> eta^p`` and ``drift -> drift * (1 - eta^q) / (1 - eta)``;
    ``(1, 1)`` reduces to the base expression.
    """
    p, q = steps_per_feedback
    if not 1 <= p <= q:
        raise ValueError("steps_per_feedback must satisfy 1 <= p <= q")
    log_arg = 2.0 * b.dim * b.a / b.delta
    if log_arg <= 1.0:
        raise ValueError(f"log argument 2*d*a/delta = {log_arg} must exceed 1")
    c1 = 8.0 / math.log(1.0 + 1.0 / b.sigma)
    c2 = (
        2.0 * b.grad_bound / (b.b * math.sqrt(math.log(log_arg)))
        + 2.0 * b.smoothness / (2.0 * b.dim * b.b**2 * math.log(log_arg))
        + 2.0
    )
    eta_eff = b.eta**p
    if q > 1 and b.eta > 0.0:
        drift_eff = b.drift * (1.0 - b.eta**q) / (1.0 - b.eta)
    else:
        drift_eff = b.drift
    g_t = 0.0
    if drift_eff > 0.0 and eta_eff > 0.0:
        g_t = 2.0 * drift_eff * eta_eff * b.horizon / (1.0 - eta_eff)
    params = ConfidenceParams(delta=b.delta, dim=b.dim, a=b.a, b=b.b, r=b.r)
    beta_t = ucb.beta(b.horizon, params)
    return math.sqrt(c1 * b.horizon * beta_t * b.gamma_t) + c2 + g_t


# ----------------------------------------------------------------------
# diagnostics


def learning_rate_error(
    post_prev: GpPosterior,
    post_curr: GpPosterior,
    beta_n: float,
    probe_grid: np.ndarray,
    beta_prev: float | None = None,
) -> float:
    """Max surrogate change over a probe grid between two belief states.

    With ``beta_prev`` omitted both surrogates use ``beta_n`` (frozen
    exploration weight); identical posteriors then give exactly zero.
    """
    grid = np.atleast_2d(np.asarray(probe_grid, dtype=float))
    root_prev = math.sqrt(beta_n if beta_prev is None else beta_prev)
    root_curr = math.sqrt(beta_n)
    prev = np.asarray(post_prev.posterior_mean(grid)) + root_prev * np.sqrt(
        np.asarray(post_prev.posterior_var(grid))
    )
    curr = np.asarray(post_curr.posterior_mean(grid)) + root_curr * np.sqrt(
        np.asarray(post_curr.posterior_var(grid))
    )
    return float(np.max(np.abs(curr - prev)))


def user_maxima(users: UserModel, domain: BoxDomain, points: int = 10001) -> np.ndarray:
    """Per-user maximum satisfaction over the own coordinate.

    Fine line search followed by a golden-section polish around the best grid
    node, so the reported maximum is not undercut by grid placement.
    """
    gr = (math.sqrt(5.0) - 1.0) / 2.0
    out = np.empty(users.n_users)
    for i, u in enumerate(users.truths):
        grid = np.linspace(domain.lo[i], domain.hi[i], points)
        vals = np.asarray(u.value_batch(grid))
        best = int(np.argmax(vals))
        a = grid[max(best - 1, 0)]
        b = grid[min(best + 1, points - 1)]
        c, d = b - gr * (b - a), a + gr * (b - a)
        for _ in range(60):
            if u.value(float(c)) > u.value(float(d)):
                b, d = d, c
                c = b - gr * (b - a)
            else:
                a, c = c, d
                d = a + gr * (b - a)
        out[i] = max(float(vals[best]), u.value(0.5 * (a + b)))
    return out


def uc_metric(
    users: UserModel, x: np.ndarray, domain: BoxDomain, maxima: np.ndarray | None = None
) -> np.ndarray:
    """Normalized per-user satisfaction of the decision ``x``."""
    if maxima is None:
        maxima = user_maxima(users, domain)
    if np.any(maxima <= 0.0):
        raise ValueError("degenerate user: non-positive maximum, normalization undefined")
    return users.true_values(x) / maxima


def rolling_mean(values: np.ndarray, window: int) -> np.ndarray:
    """Rolling average with a flat window (length ``len(values) - window + 1``)."""
    values = np.asarray(values, dtype=float)
    if window < 1 or window > values.shape[0]:
        raise ValueError("window must lie in [1, len(values)]")
    kernel = np.full(window, 1.0 / window)
    return np.convolve(values, kernel, mode="valid")
