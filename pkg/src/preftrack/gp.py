"""Gaussian-process posterior with incremental updates, and sample paths.

The posterior over an unknown function ``U`` given noisy point evaluations
``y_i = U(x_i) + eps_i`` (``eps_i ~ N(0, sigma^2)`` i.i.d.) has closed form

    mean(x) = k_n(x)^T (K_n + sigma^2 I)^{-1} y_n
    var(x)  = k(x, x) - k_n(x)^T (K_n + sigma^2 I)^{-1} k_n(x)

with ``k_n(x) = [k(x_1, x), ..., k(x_n, x)]``.  Observations arrive one at a
time inside an online loop, so :class:`GpPosterior` keeps the inverse of the
regularised Gram matrix in a blocked form: a dense inverse for the older
points plus a small Schur complement for the most recent ones, folded into
the dense block every ``CONSOLIDATE_BLOCK`` updates with one matrix-matrix
product.  Per-update cost stays quadratic in ``n`` (one matrix-vector solve)
and the arithmetic is exact, so the incremental posterior coincides with a
from-scratch refit.  The lower-triangular factor of ``K_n + sigma^2 I`` is
available lazily through :attr:`GpPosterior.factor`.

:func:`sample_path` draws an exact joint Gaussian vector on a lattice and
turns it into a smooth function by noise-free conditioning on the lattice
values, which is how synthetic user-satisfaction functions are generated.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.linalg as sla

from . import kernels
from .kernels import KernelSpec
from .solver import BoxDomain

STD_FLOOR = 1e-9
LATTICE_JITTER = 1e-10
CONSOLIDATE_BLOCK = 32


class NumericalError(RuntimeError):
    """Linear-algebra breakdown with a diagnostic message."""


@dataclass(frozen=True)
class Observation:
    """One noisy function evaluation at a decision point."""

    x: np.ndarray
    y: float


@dataclass(frozen=True)
class PointStats:
    """Posterior mean/std and their gradients at a single query point."""

    mean: float
    var: float
    std: float
    mean_grad: np.ndarray
    std_grad: np.ndarray


class GpPosterior:
    """Zero-mean GP regression posterior supporting one-point updates.

    Parameters
    ----------
    kernel : KernelSpec
        Stationary covariance function.
    noise_variance : float
        Observation noise variance ``sigma^2 > 0``.
    dim : int
        Dimension of the decision points.
    capacity : int
        Initial buffer capacity; pass the expected number of observations to
        avoid reallocation inside hot loops.
    """

    def __init__(self, kernel: KernelSpec, noise_variance: float, dim: int, capacity: int = 64):
        if not noise_variance > 0.0:
            raise ValueError("noise_variance must be positive")
        if dim < 1:
            raise ValueError("dim must be >= 1")
        self.kernel = kernel
        self.noise_variance = float(noise_variance)
        self._dim = int(dim)
        self._n = 0
        self._n0 = 0  # points covered by the dense inverse block
        cap = max(int(capacity), 8)
        self._X = np.zeros((cap, dim))
        self._y = np.zeros(cap)
        self._w = np.zeros(cap)
        self._P = np.zeros((cap, cap))
        self._G = np.zeros((cap, CONSOLIDATE_BLOCK))  # P0 @ K(X0, pending)
        self._S = np.zeros((CONSOLIDATE_BLOCK, CONSOLIDATE_BLOCK))  # pending Schur
        self._Sinv = np.zeros((CONSOLIDATE_BLOCK, CONSOLIDATE_BLOCK))
        self._scratch: np.ndarray | None = None  # flat dgemm workspace
        self._factor_n = -1
        self._factor: np.ndarray | None = None
        # memo of the query vectors at the most recent update point: the
        # partitioned inverse gives them in O(n), and the online loop queries
        # exactly there on its next tick
        self._memo_n = -1
        self._memo_x: np.ndarray | None = None
        self._memo_kvec: np.ndarray | None = None
        self._memo_z: np.ndarray | None = None
        # optional probe-grid tracker (see attach_probe_grid)
        self._grid: np.ndarray | None = None
        self._grid_mu: np.ndarray | None = None
        self._grid_var: np.ndarray | None = None
        self._grid_cross: np.ndarray | None = None

    # ------------------------------------------------------------------
    # basic accessors

    @property
    def n(self) -> int:
        return self._n

    @property
    def dim(self) -> int:
        return self._dim

    @property
    def inputs(self) -> np.ndarray:
        return self._X[: self._n]

    @property
    def outputs(self) -> np.ndarray:
        return self._y[: self._n]

    @property
    def weights(self) -> np.ndarray:
        """Solution of ``(K_n + sigma^2 I) w = y_n``."""
        return self._w[: self._n]

    @property
    def factor(self) -> np.ndarray:
        """Lower-triangular ``L`` with ``L L^T = K_n + sigma^2 I`` (lazy)."""
        if self._factor_n != self._n:
            K = kernels.gram(self.kernel, self.inputs)
            K[np.diag_indices_from(K)] += self.noise_variance
            try:
                self._factor = np.linalg.cholesky(K)
            except np.linalg.LinAlgError as exc:
                raise NumericalError(
                    f"Gram factorisation failed at n={self._n} "
                    f"(noise_variance={self.noise_variance})"
                ) from exc
            self._factor_n = self._n
        assert self._factor is not None
        return self._factor

    def copy(self) -> "GpPosterior":
        self._consolidate()
        out = GpPosterior(self.kernel, self.noise_variance, self._dim, capacity=max(self._n, 8))
        n = self._n
        out._ensure_capacity(n)
        out._n = n
        out._n0 = n
        out._X[:n] = self._X[:n]
        out._y[:n] = self._y[:n]
        out._w[:n] = self._w[:n]
        out._P[:n, :n] = self._P[:n, :n]
        return out

    @classmethod
    def fit(
        cls, kernel: KernelSpec, noise_variance: float, X: np.ndarray, y: np.ndarray
    ) -> "GpPosterior":
        """Construct a posterior from a whole dataset at once (dense solve)."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        y = np.atleast_1d(np.asarray(y, dtype=float))
        if X.shape[0] != y.shape[0]:
            raise ValueError("X and y must have matching length")
        out = cls(kernel, noise_variance, X.shape[1], capacity=X.shape[0])
        out._ensure_capacity(X.shape[0])
        out._n = X.shape[0]
        out._X[: out._n] = X
        out._y[: out._n] = y
        out._refresh()
        return out

    # ------------------------------------------------------------------
    # blocked-inverse internals

    def _solve(self, kvec: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Return ``z = (K_n + sigma^2 I)^{-1} kvec`` plus block intermediates.

        The second element is ``u = P0 @ kvec[:n0]``; the third is the
        pending-block partial solution ``zb`` (empty when nothing pends).
        """
        n0 = self._n0
        pend = self._n - n0
        k0 = kvec[:n0]
        u = self._P[:n0, :n0] @ k0
        if pend == 0:
            return u, u, np.empty(0)
        kp = kvec[n0 : self._n]
        rhs = kp - self._G[:n0, :pend].T @ k0
        zb = self._Sinv[:pend, :pend] @ rhs
        z = np.empty(self._n)
        z[:n0] = u - self._G[:n0, :pend] @ zb
        z[n0:] = zb
        return z, u, zb

    def _consolidate(self) -> None:
        """Fold pending observations into the dense inverse block (exact)."""
        n0 = self._n0
        pend = self._n - n0
        if pend == 0:
            return
        n = self._n
        Sinv = 0.5 * (self._Sinv[:pend, :pend] + self._Sinv[:pend, :pend].T)
        G = self._G[:n0, :pend]
        if n0:
            GS = G @ Sinv  # n0 x pend
            if self._scratch is None or self._scratch.shape[0] < n0 * n0:
                self._scratch = np.empty(self._P.shape[0] * self._P.shape[0])
            M = self._scratch[: n0 * n0].reshape(n0, n0)
            np.dot(GS, G.T, out=M)
            self._P[:n0, :n0] += M
            self._P[:n0, n0:n] = -GS
            self._P[n0:n, :n0] = -GS.T
        self._P[n0:n, n0:n] = Sinv
        self._n0 = n
        self._G[:n0, :pend] = 0.0
        self._S[:pend, :pend] = 0.0
        self._Sinv[:pend, :pend] = 0.0

    # ------------------------------------------------------------------
    # queries

    def _check_query(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if x.shape != (self._dim,):
            raise ValueError(f"query must have shape ({self._dim},), got {x.shape}")
        return x

    def _kz(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        if (
            self._memo_n == self._n
            and self._memo_x is not None
            and x.shape == self._memo_x.shape
            and np.array_equal(x, self._memo_x)
        ):
            return self._memo_kvec, self._memo_z
        kvec = kernels.cross(self.kernel, self._X[: self._n], x)
        z, _, _ = self._solve(kvec)
        return kvec, z

    def posterior_mean(self, x: np.ndarray) -> float | np.ndarray:
        """Posterior mean at one point ``(d,)`` or a batch ``(m, d)``."""
        x = np.asarray(x, dtype=float)
        if x.ndim == 2:
            if self._n == 0:
                return np.zeros(x.shape[0])
            kmat = kernels.gram(self.kernel, self._X[: self._n], x)
            return kmat.T @ self._w[: self._n]
        x = self._check_query(x)
        if self._n == 0:
            return 0.0
        kvec = kernels.cross(self.kernel, self._X[: self._n], x)
        return float(kvec @ self._w[: self._n])

    def posterior_var(self, x: np.ndarray) -> float | np.ndarray:
        """Posterior variance, clamped to ``[0, k(x, x)]``."""
        x = np.asarray(x, dtype=float)
        kxx = self.kernel.output_variance
        if x.ndim == 2:
            if self._n == 0:
                return np.full(x.shape[0], kxx)
            self._consolidate()
            kmat = kernels.gram(self.kernel, self._X[: self._n], x)
            z = self._P[: self._n, : self._n] @ kmat
            var = kxx - np.sum(kmat * z, axis=0)
            return np.clip(var, 0.0, kxx)
        x = self._check_query(x)
        if self._n == 0:
            return kxx
        kvec, z = self._kz(x)
        return float(min(max(kxx - kvec @ z, 0.0), kxx))

    def posterior_mean_grad(self, x: np.ndarray) -> np.ndarray:
        x = self._check_query(x)
        if self._n == 0:
            return np.zeros(self._dim)
        J = kernels.grad_cross(self.kernel, self._X[: self._n], x)
        return J.T @ self._w[: self._n]

    def posterior_std_grad(self, x: np.ndarray) -> np.ndarray:
        x = self._check_query(x)
        if self._n == 0:
            return np.zeros(self._dim)
        return self.stats(x).std_grad

    def stats(self, x: np.ndarray) -> PointStats:
        """Mean, variance, std and both gradients with a single solve."""
        x = self._check_query(x)
        kxx = self.kernel.output_variance
        if self._n == 0:
            return PointStats(0.0, kxx, float(np.sqrt(kxx)), np.zeros(self._dim), np.zeros(self._dim))
        kvec, z = self._kz(x)
        w = self._w[: self._n]
        var = float(min(max(kxx - kvec @ z, 0.0), kxx))
        std = float(np.sqrt(var))
        J = kernels.grad_cross(self.kernel, self._X[: self._n], x)
        mean_grad = J.T @ w
        var_grad = -2.0 * (J.T @ z)
        std_grad = var_grad / (2.0 * max(std, STD_FLOOR))
        return PointStats(float(kvec @ w), var, std, mean_grad, std_grad)

    # ------------------------------------------------------------------
    # updates

    def update(self, obs: Observation) -> "GpPosterior":
        """Condition on one more observation (in place; returns self).

        The result coincides with refitting from scratch on all points; the
        incremental cost is quadratic in the number of stored observations.
        """
        return self.add(obs.x, obs.y)

    def add(self, x: np.ndarray, y: float) -> "GpPosterior":
        x = self._check_query(x)
        n = self._n
        self._ensure_capacity(n + 1)
        kxx = self.kernel.output_variance
        n0 = self._n0
        pend = n - n0
        if n == 0:
            kvec = np.empty(0)
            z = np.empty(0)
            u = np.empty(0)
            zb = np.empty(0)
            var = kxx
        else:
            kvec = kernels.cross(self.kernel, self._X[:n], x)
            z, u, zb = self._solve(kvec)
            var = float(min(max(kxx - kvec @ z, 0.0), kxx))
        s = var + self.noise_variance
        # Schur pivot of the pending block (equals s when nothing is clamped)
        spp = kxx + self.noise_variance - (float(u @ kvec[:n0]) if n0 else 0.0)
        srow = kvec[n0:n] - self._G[:n0, :pend].T @ kvec[:n0] if pend else np.empty(0)
        pivot = spp - (float(srow @ zb) if pend else 0.0)
        if not np.isfinite(s) or s <= 0.0 or not np.isfinite(pivot) or pivot <= 0.0:
            self._consolidate()
            self._refresh()
            kvec, z = self._kz(x)
            u = z
            zb = np.empty(0)
            var = float(min(max(kxx - kvec @ z, 0.0), kxx))
            s = var + self.noise_variance
            if not np.isfinite(s) or s <= 0.0:
                raise NumericalError(f"update breakdown at n={n}: pivot {s!r} not positive")
            n0, pend = self._n0, 0
            spp = s
            srow = np.empty(0)
            pivot = s
        resid = (y - float(kvec @ self._w[:n])) / s if n else y / s
        # weights through the partitioned-inverse recursion
        if n:
            self._w[:n] -= z * resid
        self._w[n] = resid
        # pending-block bookkeeping: Schur row/column and its running inverse
        self._G[:n0, pend] = u
        if pend:
            self._S[pend, :pend] = srow
            self._S[:pend, pend] = srow
            inv_p = 1.0 / pivot
            Sinv = self._Sinv[:pend, :pend]
            Sinv += np.multiply.outer(zb * inv_p, zb)
            self._Sinv[pend, :pend] = -zb * inv_p
            self._Sinv[:pend, pend] = -zb * inv_p
            self._Sinv[pend, pend] = inv_p
        else:
            self._Sinv[0, 0] = 1.0 / pivot
        self._S[pend, pend] = spp
        if self._grid is not None:
            kg = kernels.gram(self.kernel, self._grid, x[None, :])[:, 0]
            q = kg - self._grid_cross[:, :n] @ z if n else kg
            self._grid_cross[:, n] = kg
            self._grid_mu += q * resid
            self._grid_var -= q * q / s
            np.clip(self._grid_var, 0.0, kxx, out=self._grid_var)
        self._X[n] = x
        self._y[n] = y
        self._n = n + 1
        # post-update query vectors at x via the partitioned inverse (O(n))
        corr = (float(kvec @ z) - kxx) / s if n else -kxx / s
        memo_k = np.empty(n + 1)
        memo_k[:n] = kvec
        memo_k[n] = kxx
        memo_z = np.empty(n + 1)
        np.multiply(z, 1.0 + corr, out=memo_z[:n])
        memo_z[n] = -corr
        self._memo_kvec = memo_k
        self._memo_z = memo_z
        self._memo_x = x.copy()
        self._memo_n = self._n
        if self._n - self._n0 >= CONSOLIDATE_BLOCK:
            self._consolidate()
        return self

    def _ensure_capacity(self, need: int) -> None:
        cap = self._P.shape[0]
        if need <= cap:
            return
        self._consolidate()
        while cap < need:
            cap *= 2
        X = np.zeros((cap, self._dim))
        y = np.zeros(cap)
        w = np.zeros(cap)
        X[: self._n] = self._X[: self._n]
        y[: self._n] = self._y[: self._n]
        w[: self._n] = self._w[: self._n]
        self._X, self._y, self._w = X, y, w
        self._P = np.zeros((cap, cap))
        self._G = np.zeros((cap, CONSOLIDATE_BLOCK))
        if self._grid is not None:
            gc = np.zeros((self._grid.shape[0], cap))
            gc[:, : self._n] = self._grid_cross[:, : self._n]
            self._grid_cross = gc
        if self._n:
            self._refresh()

    def _refresh(self) -> None:
        """Recompute inverse and weights from a dense factorisation."""
        n = self._n
        K = kernels.gram(self.kernel, self._X[:n])
        K[np.diag_indices_from(K)] += self.noise_variance
        try:
            L = np.linalg.cholesky(K)
        except np.linalg.LinAlgError as exc:
            raise NumericalError(
                f"dense refactorisation failed at n={n} "
                f"(noise_variance={self.noise_variance})"
            ) from exc
        eye = np.eye(n)
        self._P[:n, :n] = sla.cho_solve((L, True), eye, check_finite=False)
        self._w[:n] = sla.cho_solve((L, True), self._y[:n], check_finite=False)
        self._n0 = n
        self._memo_n = -1

    # ------------------------------------------------------------------
    # probe-grid tracker (cheap running posterior on a fixed grid)

    def attach_probe_grid(self, grid: np.ndarray) -> None:
        """Maintain posterior mean/var on a fixed grid across updates.

        Per-update cost is O(grid size * n); used for surrogate-drift
        diagnostics without re-querying the full posterior.
        """
        grid = np.atleast_2d(np.asarray(grid, dtype=float))
        if grid.shape[1] != self._dim:
            raise ValueError("probe grid dimension mismatch")
        self._grid = grid
        m = self.posterior_mean(grid)
        v = self.posterior_var(grid)
        self._grid_mu = np.asarray(m, dtype=float).copy()
        self._grid_var = np.asarray(v, dtype=float).copy()
        self._grid_cross = np.zeros((grid.shape[0], self._P.shape[0]))
        if self._n:
            self._grid_cross[:, : self._n] = kernels.gram(self.kernel, grid, self._X[: self._n])

    @property
    def probe_grid(self) -> np.ndarray | None:
        return self._grid

    @property
    def probe_mean(self) -> np.ndarray:
        if self._grid_mu is None:
            raise ValueError("no probe grid attached")
        return self._grid_mu

    @property
    def probe_std(self) -> np.ndarray:
        if self._grid_var is None:
            raise ValueError("no probe grid attached")
        return np.sqrt(self._grid_var)


# ----------------------------------------------------------------------
# exact sample paths on a lattice


class SamplePath:
    """One draw of a zero-mean GP, evaluable anywhere in the domain.

    The draw is exact on the lattice nodes; off-lattice values come from
    noise-free conditioning on the lattice draw, which keeps the path as
    smooth as the kernel allows (evaluation at a node reproduces the drawn
    value to floating-point accuracy).
    """

    def __init__(self, kernel: KernelSpec, grid: np.ndarray, values: np.ndarray, weights: np.ndarray):
        self.kernel = kernel
        self.grid = grid
        self.values = values
        self._weights = weights

    @property
    def dim(self) -> int:
        return self.grid.shape[1]

    def value(self, x: np.ndarray) -> float | np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.ndim == 2:
            kmat = kernels.gram(self.kernel, self.grid, x)
            return kmat.T @ self._weights
        kvec = kernels.cross(self.kernel, self.grid, x)
        return float(kvec @ self._weights)

    def grad(self, x: np.ndarray) -> np.ndarray:
        J = kernels.grad_cross(self.kernel, self.grid, np.atleast_1d(np.asarray(x, dtype=float)))
        return J.T @ self._weights


@lru_cache(maxsize=16)
def _lattice_factor(
    spec: KernelSpec, lo: tuple, hi: tuple, grid_resolution: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    domain = BoxDomain(np.array(lo), np.array(hi))
    grid = domain.lattice(grid_resolution)
    K = kernels.gram(spec, grid)
    lam, V = np.linalg.eigh(K)
    keep = lam >= LATTICE_JITTER
    root = np.sqrt(lam[keep])
    draw = V[:, keep] * root
    weight = V[:, keep] / root
    return grid, draw, weight


def sample_path(
    kernel: KernelSpec, domain: BoxDomain, grid_resolution: int, seed: int
) -> SamplePath:
    """Draw a GP sample path on a regular lattice over ``domain``.

    The lattice Gram matrix is eigen-factorised with small eigenvalues
    (below ``1e-10``) truncated; gridded squared-exponential Gram matrices
    are numerically rank deficient, and truncation both regularises the draw
    and makes the conditioning weights reproduce the nodes exactly.
    Deterministic for a given ``seed``.
    """
    if domain.dim > 2:
        raise NotImplementedError("lattice sampling supports dimension <= 2")
    if grid_resolution < 2:
        raise ValueError("grid_resolution must be >= 2")
    grid, draw, weight = _lattice_factor(
        kernel, tuple(domain.lo), tuple(domain.hi), grid_resolution
    )
    rng = np.random.default_rng(seed)
    z = rng.standard_normal(draw.shape[1])
    values = draw @ z
    weights = weight @ z
    return SamplePath(kernel, grid, values, weights)
