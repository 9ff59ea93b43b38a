"""Stationary covariance functions.

Only the squared-exponential family is implemented,

    k(x, x') = output_variance * exp(-||x - x'||^2 / (2 l^2)),

which is what both the regression layer and the synthetic-user sampler use.
The ``family`` field is an enumeration so that further stationary kernels
(e.g. Matern) can be added without touching call sites.

Besides plain evaluation the module exposes the spatial gradient of the
kernel (needed for posterior mean/std gradients) and the covariance of the
coordinate-wise derivative process,

    k'_j(x, x') = k(x, x') * (1 - (x_j - x'_j)^2 / l^2) / l^2,

used when estimating tail constants for the derivative of sample paths.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SQUARED_EXPONENTIAL = "squared-exponential"

_FAMILIES = (SQUARED_EXPONENTIAL,)


@dataclass(frozen=True)
class KernelSpec:
    """Stationary kernel description.

    Attributes
    ----------
    family : str
        Kernel family name; only ``"squared-exponential"`` is supported.
    length_scale : float
        Positive length scale ``l`` in decision-space units.
    output_variance : float
        Value of ``k(x, x)``; must lie in ``(0, 1]`` (bounded-variance model).
    """

    family: str = SQUARED_EXPONENTIAL
    length_scale: float = 1.0
    output_variance: float = 1.0

    def __post_init__(self) -> None:
        if self.family not in _FAMILIES:
            raise ValueError(
                f"unsupported kernel family {self.family!r}; "
                f"available: {list(_FAMILIES)}"
            )
        if not self.length_scale > 0.0:
            raise ValueError("length_scale must be positive")
        if not 0.0 < self.output_variance <= 1.0:
            raise ValueError("output_variance must lie in (0, 1]")


def _check_pair(x: np.ndarray, xp: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    xp = np.atleast_1d(np.asarray(xp, dtype=float))
    if x.shape != xp.shape or x.ndim != 1:
        raise ValueError(f"point dimensions do not match: {x.shape} vs {xp.shape}")
    return x, xp


def value(spec: KernelSpec, x: np.ndarray, xp: np.ndarray) -> float:
    """Evaluate ``k(x, x')`` for two points of equal dimension."""
    x, xp = _check_pair(x, xp)
    d2 = float(np.sum((x - xp) ** 2))
    return spec.output_variance * float(np.exp(-0.5 * d2 / spec.length_scale**2))


def grad_x(spec: KernelSpec, x: np.ndarray, xp: np.ndarray) -> np.ndarray:
    """Gradient of ``k(x, x')`` with respect to the first argument.

    For the squared-exponential family this is ``-(x - x') / l^2 * k(x, x')``;
    it vanishes at ``x = x'`` and is antisymmetric under swapping arguments.
    """
    x, xp = _check_pair(x, xp)
    return -(x - xp) / spec.length_scale**2 * value(spec, x, xp)


def derivative_kernel(spec: KernelSpec, x: np.ndarray, xp: np.ndarray, j: int) -> float:
    """Covariance of the j-th partial-derivative process.

    Differentiating a Gaussian process is a linear operation, so the
    coordinate-wise derivative is again a GP whose kernel is the mixed second
    derivative of ``k``; the closed form above applies to the
    squared-exponential family only.
    """
    if spec.family != SQUARED_EXPONENTIAL:
        raise NotImplementedError(
            f"derivative kernel not available for family {spec.family!r}"
        )
    x, xp = _check_pair(x, xp)
    if not 0 <= j < x.shape[0]:
        raise ValueError(f"coordinate index {j} out of range for dimension {x.shape[0]}")
    ell2 = spec.length_scale**2
    dj2 = (x[j] - xp[j]) ** 2
    return value(spec, x, xp) * (1.0 - dj2 / ell2) / ell2


def gram(spec: KernelSpec, X: np.ndarray, X2: np.ndarray | None = None) -> np.ndarray:
    """Gram matrix ``[k(x_i, x'_j)]`` for row-stacked point sets.

    ``X`` has shape ``(n, d)``; ``X2`` defaults to ``X``.
    """
    X = np.asarray(X, dtype=float)
    Y = X if X2 is None else np.asarray(X2, dtype=float)
    if X.ndim != 2 or Y.ndim != 2 or X.shape[1] != Y.shape[1]:
        raise ValueError(f"point sets must be (n, d) with matching d: {X.shape} vs {Y.shape}")
    d2 = np.sum(X * X, axis=1)[:, None] + np.sum(Y * Y, axis=1)[None, :] - 2.0 * (X @ Y.T)
    np.maximum(d2, 0.0, out=d2)
    return spec.output_variance * np.exp(-0.5 * d2 / spec.length_scale**2)


def cross(spec: KernelSpec, X: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Covariance vector ``[k(x_i, x)]_i`` between stored points and a query."""
    X = np.asarray(X, dtype=float)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if X.ndim != 2 or X.shape[1] != x.shape[0]:
        raise ValueError(f"query dimension {x.shape[0]} does not match points {X.shape}")
    d2 = np.sum((X - x[None, :]) ** 2, axis=1)
    return spec.output_variance * np.exp(-0.5 * d2 / spec.length_scale**2)


def grad_cross(spec: KernelSpec, X: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Rows ``d k(x_i, x) / dx`` for all stored points; shape ``(n, d)``."""
    X = np.asarray(X, dtype=float)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    k = cross(spec, X, x)
    return -(x[None, :] - X) / spec.length_scale**2 * k[:, None]


def derivative_gram(spec: KernelSpec, X: np.ndarray, j: int) -> np.ndarray:
    """Gram matrix of the j-th derivative process over row-stacked points."""
    if spec.family != SQUARED_EXPONENTIAL:
        raise NotImplementedError(
            f"derivative kernel not available for family {spec.family!r}"
        )
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or not 0 <= j < X.shape[1]:
        raise ValueError(f"coordinate index {j} out of range for points {X.shape}")
    ell2 = spec.length_scale**2
    K = gram(spec, X)
    dj2 = (X[:, j][:, None] - X[:, j][None, :]) ** 2
    return K * (1.0 - dj2 / ell2) / ell2
