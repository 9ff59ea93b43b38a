"""Confidence parameter schedule and the optimistic surrogate.

The surrogate for the unknown satisfaction function after ``n - 1`` feedback
values is ``mean(x) + sqrt(beta_n) * std(x)``; the schedule

    beta_n = 2 log(2 n^2 pi^2 / (3 delta))
           + 2 d log(d n^2 b r sqrt(log(4 d a / delta)))

keeps the surrogate an upper bound on the truth with probability at least
``1 - delta`` over the whole horizon, where ``(a, b)`` are tail constants of
the derivative of the sample paths, ``d`` the learning dimension and ``r``
the domain side length.  :func:`estimate_ab` recovers ``(a, b)`` empirically
for the squared-exponential kernel from the closed-form derivative process.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .gp import GpPosterior
from .kernels import KernelSpec
from .solver import BoxDomain

#: Exceedance levels probed when estimating the tail constant.  Includes
#: small levels, where both the empirical frequency and the Gaussian bound
#: approach one: the binding ratio sits there, not in the far tail.
DEFAULT_LEVELS: tuple[float, ...] = (
    0.1, 0.2, 0.3, 0.4, 0.5, 0.75, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0, 4.5, 5.0, 5.5, 6.0,
)


@dataclass(frozen=True)
class ConfidenceParams:
    """Inputs of the confidence schedule."""

    delta: float
    dim: int
    a: float
    b: float
    r: float

    def __post_init__(self) -> None:
        if not 0.0 < self.delta < 1.0:
            raise ValueError("delta must lie in (0, 1)")
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if min(self.a, self.b, self.r) <= 0.0:
            raise ValueError("a, b, r must be positive")


def beta(n: int, p: ConfidenceParams) -> float:
    """Confidence parameter for data counter ``n >= 1`` (strictly increasing)."""
    if n < 1:
        raise ValueError("data counter n must be >= 1")
    tail = 4.0 * p.dim * p.a / p.delta
    if tail <= 1.0:
        raise ValueError(f"log argument 4*d*a/delta = {tail} must exceed 1")
    inner = p.dim * n * n * p.b * p.r * math.sqrt(math.log(tail))
    if inner <= 1.0:
        raise ValueError(f"log argument d*n^2*b*r*sqrt(log(4da/delta)) = {inner} must exceed 1")
    return 2.0 * math.log(2.0 * n * n * math.pi**2 / (3.0 * p.delta)) + 2.0 * p.dim * math.log(inner)


def ucb_value(post: GpPosterior, beta_n: float, x: np.ndarray) -> float:
    """Optimistic surrogate ``mean + sqrt(beta_n) * std`` at ``x``."""
    if beta_n < 0.0:
        raise ValueError("beta_n must be nonnegative")
    m = post.posterior_mean(x)
    v = post.posterior_var(x)
    return float(m + math.sqrt(beta_n) * math.sqrt(v))


def ucb_grad(post: GpPosterior, beta_n: float, x: np.ndarray) -> np.ndarray:
    """Gradient of the surrogate (std gradient uses the configured floor)."""
    if beta_n < 0.0:
        raise ValueError("beta_n must be nonnegative")
    st = post.stats(np.asarray(x, dtype=float))
    return st.mean_grad + math.sqrt(beta_n) * st.std_grad


@dataclass(frozen=True)
class AbEstimate:
    """Result of the empirical tail-constant estimation."""

    a: float
    b: float
    levels: np.ndarray
    frequencies: np.ndarray  # shape (d, len(levels))
    bounds: np.ndarray
    ratios: np.ndarray  # shape (d, len(levels))

    def rows(self) -> list[tuple[int, float, float, float, float]]:
        out = []
        for j in range(self.frequencies.shape[0]):
            for i, m in enumerate(self.levels):
                out.append(
                    (j, float(m), float(self.frequencies[j, i]), float(self.bounds[i]), float(self.ratios[j, i]))
                )
        return out


def estimate_ab(
    kernel: KernelSpec,
    domain: BoxDomain,
    eps: float,
    n_paths: int = 2000,
    grid_resolution: int = 201,
    seed: int = 0,
    levels: tuple[float, ...] = DEFAULT_LEVELS,
) -> AbEstimate:
    """Estimate the derivative-tail constants ``(a, b)`` empirically.

    ``b`` is analytic for the squared-exponential kernel:
    ``b = sqrt(2 / l^2 + 2 eps)``.  ``a`` is the smallest constant such that,
    at every probed level ``M``, the fraction of derivative-process sample
    paths whose supremum over the lattice exceeds ``M`` stays below
    ``a * exp(-(M / b)^2)``.  The full frequency table is returned for audit.
    """
    if kernel.family != kernels.SQUARED_EXPONENTIAL:
        raise NotImplementedError("tail-constant estimation needs the derivative kernel")
    if n_paths < 100:
        raise ValueError("n_paths must be >= 100 for a meaningful estimate")
    if eps <= 0.0:
        raise ValueError("eps must be positive")
    b = math.sqrt(2.0 / kernel.length_scale**2 + 2.0 * eps)
    grid = domain.lattice(grid_resolution)
    rng = np.random.default_rng(seed)
    lv = np.asarray(levels, dtype=float)
    freqs = np.empty((domain.dim, lv.shape[0]))
    for j in range(domain.dim):
        K = kernels.derivative_gram(kernel, grid, j)
        lam, V = np.linalg.eigh(K)
        keep = lam >= 1e-10
        draw = V[:, keep] * np.sqrt(lam[keep])
        z = rng.standard_normal((draw.shape[1], n_paths))
        sups = np.max(np.abs(draw @ z), axis=0)
        freqs[j] = np.array([np.mean(sups > m) for m in lv])
    bounds = np.exp(-((lv / b) ** 2))
    ratios = freqs / bounds[None, :]
    return AbEstimate(a=float(np.max(ratios)), b=b, levels=lv, frequencies=freqs, bounds=bounds, ratios=ratios)
