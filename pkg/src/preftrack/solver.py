"""Box-constrained projected ascent and its convergence diagnostics.

The inner solver is deliberately simple: one (or a few) projected gradient
steps per outer tick, with a fixed step size.  The remaining functions
measure the quantities that certify linear convergence of that map on a
given instance:

* ``pl_gap`` evaluates the proximal gradient-dominance functional
  ``-2c min_{y in D} { -grad(x)^T (y - x) + (c/2) ||y - x||^2 }``,
* ``estimate_pl_kappa`` turns it into an empirical gradient-dominance
  constant ``kappa`` (per-step gap contraction is then ``1 - alpha*kappa``
  for step sizes ``alpha <= 1/Theta``),
* ``estimate_gradient_lipschitz`` bounds the curvature ``Theta`` by probing
  finite-difference Hessians.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

GradFn = Callable[[np.ndarray], np.ndarray]
ValueFn = Callable[[np.ndarray], float]


@dataclass(frozen=True)
class BoxDomain:
    """Axis-aligned box ``[lo_1, hi_1] x ... x [lo_d, hi_d]``."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self) -> None:
        lo = np.atleast_1d(np.asarray(self.lo, dtype=float))
        hi = np.atleast_1d(np.asarray(self.hi, dtype=float))
        if lo.shape != hi.shape or lo.ndim != 1:
            raise ValueError("lo and hi must be vectors of equal length")
        if np.any(lo > hi):
            raise ValueError("domain is empty: lo > hi componentwise somewhere")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def unit(cls, dim: int, side: float = 1.0) -> "BoxDomain":
        return cls(np.zeros(dim), np.full(dim, float(side)))

    @property
    def dim(self) -> int:
        return self.lo.shape[0]

    @property
    def side_length(self) -> float:
        """Largest edge, i.e. the ``r`` for which the box fits in [0, r]^d."""
        return float(np.max(self.hi - self.lo))

    def contains(self, x: np.ndarray, tol: float = 0.0) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= self.lo - tol) and np.all(x <= self.hi + tol))

    def center(self) -> np.ndarray:
        return 0.5 * (self.lo + self.hi)

    def corners(self) -> np.ndarray:
        """All 2^d corner points, shape (2^d, d)."""
        if self.dim > 16:
            raise ValueError("corner enumeration unreasonable beyond d=16")
        out = np.empty((2**self.dim, self.dim))
        for i in range(2**self.dim):
            for j in range(self.dim):
                out[i, j] = self.hi[j] if (i >> j) & 1 else self.lo[j]
        return out

    def axes(self, points_per_axis: int) -> list[np.ndarray]:
        if points_per_axis < 2:
            raise ValueError("need at least 2 lattice points per axis")
        return [np.linspace(self.lo[j], self.hi[j], points_per_axis) for j in range(self.dim)]

    def lattice(self, points_per_axis: int) -> np.ndarray:
        """Regular lattice as a (points_per_axis^d, d) array."""
        ax = self.axes(points_per_axis)
        mesh = np.meshgrid(*ax, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return self.lo + (self.hi - self.lo) * rng.random((n, self.dim))


@dataclass(frozen=True)
class SolverConfig:
    """Fixed-step projected gradient configuration."""

    step_size: float = 0.1
    inner_steps: int = 1

    def __post_init__(self) -> None:
        if not self.step_size > 0.0:
            raise ValueError("step_size must be positive")
        if self.inner_steps < 1:
            raise ValueError("inner_steps must be >= 1")


def project(domain: BoxDomain, y: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the box: componentwise clamp."""
    y = np.asarray(y, dtype=float)
    if y.shape != domain.lo.shape:
        raise ValueError(f"point dimension {y.shape} does not match domain {domain.lo.shape}")
    return np.clip(y, domain.lo, domain.hi)


def pgd_step(grad_fn: GradFn, x: np.ndarray, alpha: float, domain: BoxDomain) -> np.ndarray:
    """One projected ascent step ``x <- clamp(x + alpha * grad(x))``."""
    return project(domain, x + alpha * np.asarray(grad_fn(x), dtype=float))


def run_inner(grad_fn: GradFn, x0: np.ndarray, cfg: SolverConfig, domain: BoxDomain) -> np.ndarray:
    """Compose ``inner_steps`` projected ascent steps starting from ``x0``."""
    x = project(domain, np.asarray(x0, dtype=float))
    for _ in range(cfg.inner_steps):
        x = pgd_step(grad_fn, x, cfg.step_size, domain)
    return x


def pl_gap(grad_fn: GradFn, x: np.ndarray, c: float, domain: BoxDomain) -> float:
    """Gradient-dominance functional at ``x``.

    The inner minimisation is a separable quadratic over the box, so its
    minimiser is the clamp of ``x + grad(x)/c``.  On the interior (or when
    the box is inactive) the value reduces to ``||grad(x)||^2``.
    """
    if not c > 0.0:
        raise ValueError("c must be positive")
    x = np.asarray(x, dtype=float)
    g = np.asarray(grad_fn(x), dtype=float)
    y = project(domain, x + g / c)
    dy = y - x
    inner = -float(g @ dy) + 0.5 * c * float(dy @ dy)
    return -2.0 * c * inner


def box_max(
    value_fn: ValueFn,
    grad_fn: GradFn,
    domain: BoxDomain,
    grid_points: int = 101,
    polish_steps: int = 50,
    alpha: float = 0.1,
) -> tuple[np.ndarray, float]:
    """Grid search over a lattice followed by projected-gradient polish.

    Intended for low-dimensional, smooth objectives where the lattice is fine
    enough to land in the basin of the global maximiser.
    """
    pts = domain.lattice(grid_points)
    vals = np.array([value_fn(p) for p in pts])
    best = pts[int(np.argmax(vals))]
    x, v = polish_max(value_fn, grad_fn, best, domain, polish_steps, alpha)
    return x, v


def polish_max(
    value_fn: ValueFn,
    grad_fn: GradFn,
    x0: np.ndarray,
    domain: BoxDomain,
    steps: int,
    alpha: float,
) -> tuple[np.ndarray, float]:
    """Projected ascent with halving on non-improvement; returns (x, value)."""
    x = project(domain, np.asarray(x0, dtype=float))
    v = float(value_fn(x))
    a = alpha
    for _ in range(steps):
        cand = pgd_step(grad_fn, x, a, domain)
        vc = float(value_fn(cand))
        if vc >= v:
            x, v = cand, vc
        else:
            a *= 0.5
            if a < 1e-12:
                break
    return x, v


def estimate_pl_kappa(
    value_fn: ValueFn,
    grad_fn: GradFn,
    domain: BoxDomain,
    c: float,
    n_samples: int = 256,
    seed: int = 0,
    phi_star: float | None = None,
    extra_points: np.ndarray | None = None,
    gap_floor: float = 1e-9,
) -> float:
    """Empirical gradient-dominance constant over sampled points.

    ``kappa = min_x pl_gap(x, c) / (2 (phi* - phi(x)))`` over points whose
    optimality gap exceeds ``gap_floor``; the induced per-step contraction of
    a projected gradient step with ``alpha <= 1/Theta`` is ``1 - alpha*kappa``.
    ``phi_star`` defaults to a grid-plus-polish maximisation.
    """
    if phi_star is None:
        _, phi_star = box_max(value_fn, grad_fn, domain, grid_points=201 if domain.dim == 1 else 51)
    rng = np.random.default_rng(seed)
    pts = domain.sample(rng, n_samples)
    if extra_points is not None:
        pts = np.vstack([pts, np.atleast_2d(np.asarray(extra_points, dtype=float))])
    best = np.inf
    usable = 0
    for x in pts:
        gap = phi_star - float(value_fn(x))
        if gap < gap_floor:
            continue
        usable += 1
        ratio = 0.5 * pl_gap(grad_fn, x, c, domain) / gap
        best = min(best, ratio)
    if usable == 0:
        raise ValueError(
            "degenerate instance: all sampled optimality gaps below threshold"
        )
    return float(best)


def contraction_rate(alpha: float, kappa: float) -> float:
    """Per-step optimality-gap contraction factor ``1 - alpha*kappa``."""
    return 1.0 - alpha * kappa


def estimate_gradient_lipschitz(
    grad_fn: GradFn,
    domain: BoxDomain,
    n_probe: int = 64,
    h: float = 1e-4,
    seed: int = 0,
) -> float:
    """Curvature bound via symmetrised finite-difference Hessians.

    Probes random interior points, forms the FD Hessian column by column and
    returns the largest spectral norm seen.  This is an estimate, not a
    certificate; pad the result before using it to pick a step size.
    """
    rng = np.random.default_rng(seed)
    pts = domain.sample(rng, n_probe)
    d = domain.dim
    theta = 0.0
    for x in pts:
        H = np.empty((d, d))
        for j in range(d):
            e = np.zeros(d)
            e[j] = h
            gp = np.asarray(grad_fn(project(domain, x + e)), dtype=float)
            gm = np.asarray(grad_fn(project(domain, x - e)), dtype=float)
            H[:, j] = (gp - gm) / (2.0 * h)
        H = 0.5 * (H + H.T)
        theta = max(theta, float(np.max(np.abs(np.linalg.eigvalsh(H)))))
    return theta
