"""Time-varying engineering objectives.

The shipped objective is the tracking quadratic

    V(x; t) = -1/2 (x - xbar(t))^T Q (x - xbar(t))

with a symmetric positive-definite weight matrix ``Q`` and a reference
trajectory ``xbar(t)``.  The benchmark trajectory moves every component as
``0.33 + 0.25 sin(pi omega t)``; the vanishing variant damps the oscillation
by ``1/sqrt(k)`` so the per-step drift decays.

``metadata`` extracts the constants the analysis needs: the smoothness
constant (largest eigenvalue of ``Q``), the sup-norm gradient bound over the
box, and the largest step-to-step drift ``max_x |V(x;t_k) - V(x;t_{k-1})|``.
For a time-invariant ``Q`` both the gradient bound and the drift are maxima
of componentwise-affine functions of ``x``, hence exact at box corners.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .solver import BoxDomain

TargetFn = Callable[[float], np.ndarray]


@dataclass(frozen=True)
class ObjectiveMetadata:
    """Constants of a time-varying objective used by the regret bound."""

    smoothness: float  # gradient Lipschitz constant
    grad_bound: float  # sup-norm bound on the gradient over the domain
    drift: float  # uniform bound on the step-to-step value change

    def __post_init__(self) -> None:
        if min(self.smoothness, self.grad_bound, self.drift) < 0.0:
            raise ValueError("metadata constants must be nonnegative")


class TimeVaryingQuadratic:
    """Concave tracking objective with a moving target.

    ``gamma`` is the weight of the (separately learned) user term when the
    quadratic is composed with it; it is carried here so a single object
    describes the full composition.
    """

    def __init__(self, q_matrix: np.ndarray, target: TargetFn, gamma: float = 1.0):
        Q = np.atleast_2d(np.asarray(q_matrix, dtype=float))
        if Q.shape[0] != Q.shape[1]:
            raise ValueError("Q must be square")
        if not np.allclose(Q, Q.T, atol=1e-12):
            raise ValueError("Q must be symmetric")
        eig = np.linalg.eigvalsh(Q)
        if eig[0] <= 0.0:
            raise ValueError("Q must be positive definite")
        if gamma <= 0.0:
            raise ValueError("gamma must be positive")
        self.q_matrix = Q
        self.target = target
        self.gamma = float(gamma)
        self._eig_max = float(eig[-1])
        self._eig_min = float(eig[0])

    @property
    def dim(self) -> int:
        return self.q_matrix.shape[0]

    def value(self, x: np.ndarray, t: float) -> float:
        e = np.asarray(x, dtype=float) - self.target(t)
        return -0.5 * float(e @ self.q_matrix @ e)

    def grad(self, x: np.ndarray, t: float) -> np.ndarray:
        e = np.asarray(x, dtype=float) - self.target(t)
        return -(self.q_matrix @ e)

    @property
    def smoothness(self) -> float:
        """Gradient Lipschitz constant: largest eigenvalue of Q."""
        return self._eig_max

    @property
    def curvature_min(self) -> float:
        return self._eig_min


def target_trajectory(t: float, omega: float, dim: int = 1) -> np.ndarray:
    """Reference with every component at ``0.33 + 0.25 sin(pi omega t)``."""
    return np.full(dim, 0.33 + 0.25 * np.sin(np.pi * omega * t))


def vanishing_target(t: float, omega: float, k: int, dim: int = 1) -> np.ndarray:
    """Oscillation damped by ``1/sqrt(k)``: drift decays like ``O(1/sqrt(k))``."""
    if k < 1:
        raise ValueError("step index k must be >= 1")
    return np.full(dim, 0.33 + 0.25 * np.sin(np.pi * omega * t) / np.sqrt(k))


def make_periodic_target(omega: float, dim: int) -> TargetFn:
    def fn(t: float) -> np.ndarray:
        return target_trajectory(t, omega, dim)

    return fn


def make_vanishing_target(omega: float, dim: int, sample_period: float) -> TargetFn:
    """Vanishing trajectory as a function of time (step index ``t / h``)."""

    def fn(t: float) -> np.ndarray:
        k = max(1, int(round(t / sample_period)))
        return vanishing_target(t, omega, k, dim)

    return fn


def drift_bound(obj: TimeVaryingQuadratic, t_new: float, t_old: float, domain: BoxDomain) -> float:
    """Exact ``max_x |V(x; t_new) - V(x; t_old)|`` over the box.

    With a time-invariant Q the difference is affine in x, so the maximum of
    its absolute value over a box is attained at a corner.
    """
    vals = [abs(obj.value(c, t_new) - obj.value(c, t_old)) for c in domain.corners()]
    return float(max(vals))


def drift_bound_grid(
    obj: TimeVaryingQuadratic, t_new: float, t_old: float, domain: BoxDomain, points_per_axis: int
) -> float:
    """Brute-force drift bound on a lattice; independent check of the corner rule."""
    pts = domain.lattice(points_per_axis)
    vals = [abs(obj.value(p, t_new) - obj.value(p, t_old)) for p in pts]
    return float(max(vals))


def grad_sup_bound(obj: TimeVaryingQuadratic, domain: BoxDomain, times: np.ndarray) -> float:
    """``max_t max_x ||Q (x - xbar(t))||_inf`` over probed times (corner-exact)."""
    corners = domain.corners()
    best = 0.0
    for t in np.atleast_1d(times):
        for c in corners:
            best = max(best, float(np.max(np.abs(obj.grad(c, float(t))))))
    return best


def metadata(obj: TimeVaryingQuadratic, domain: BoxDomain, times: np.ndarray) -> ObjectiveMetadata:
    """Smoothness, gradient bound and drift bound over a probe time grid."""
    times = np.atleast_1d(np.asarray(times, dtype=float))
    drift = 0.0
    for t0, t1 in zip(times[:-1], times[1:]):
        drift = max(drift, drift_bound(obj, float(t1), float(t0), domain))
    return ObjectiveMetadata(
        smoothness=obj.smoothness,
        grad_bound=grad_sup_bound(obj, domain, times),
        drift=drift,
    )
