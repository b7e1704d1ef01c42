"""Multivariate normal probabilities over hyper-rectangles.

The main entry point is :func:`mvn_probability`, a randomized quasi-Monte
Carlo estimator built on a prime-square-root rank-1 lattice with random
shifts (Genz's separation-of-variables method).  :func:`mvn_probability_dense`
is an independent nested-quadrature oracle for small dimensions.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import integrate
from scipy.special import ndtr, ndtri

from .errors import NumericalError

# Phi^-1 argument is kept inside [_CLAMP, 1 - _CLAMP]
_CLAMP = 1e-16
# working-array budget (floats) for batched evaluation
_MAX_CELLS = 2**24


class NotPositiveDefiniteError(NumericalError, ValueError):
    """Raised when a Cholesky pivot is not strictly positive."""

    def __init__(self, pivot: int, value: float):
        super().__init__(f"matrix is not positive definite: pivot {pivot} has value {value!r}")
        self.pivot = pivot
        self.value = value


@dataclass(frozen=True)
class QmcParams:
    n_points: int = 2000
    n_shifts: int = 12
    alpha: float = 3.0
    seed: int = 0

    def __post_init__(self):
        if self.n_points < 1:
            raise ValueError("n_points must be >= 1")
        if self.n_shifts < 2:
            raise ValueError("n_shifts must be >= 2")
        if not self.alpha > 0:
            raise ValueError("alpha must be > 0")


@dataclass(frozen=True)
class MvnProblem:
    """P(lower <= X <= upper) for X ~ N(0, covariance)."""

    lower: np.ndarray
    upper: np.ndarray
    covariance: np.ndarray
    chol: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        lower = np.atleast_1d(np.asarray(self.lower, dtype=float))
        upper = np.atleast_1d(np.asarray(self.upper, dtype=float))
        cov = np.atleast_2d(np.asarray(self.covariance, dtype=float))
        k = lower.shape[0]
        if k == 0:
            raise ValueError("dimension must be >= 1")
        if upper.shape != (k,) or cov.shape != (k, k):
            raise ValueError("shape mismatch between bounds and covariance")
        if np.any(np.isnan(lower)) or np.any(np.isnan(upper)):
            raise ValueError("bounds must not be NaN")
        if np.any(lower > upper):
            raise ValueError("lower bound exceeds upper bound")
        if not np.allclose(cov, cov.T, rtol=1e-12, atol=1e-14):
            raise ValueError("covariance must be symmetric")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        object.__setattr__(self, "covariance", cov)

    @property
    def dim(self) -> int:
        return self.lower.shape[0]


@dataclass(frozen=True)
class MvnResult:
    p: float
    err: float


def cholesky(sigma) -> np.ndarray:
    """Lower-triangular ``L`` with ``L @ L.T == sigma`` (Cholesky-Banachiewicz)."""
    a = np.asarray(sigma, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("expected a square matrix")
    if not np.allclose(a, a.T, rtol=1e-12, atol=1e-14):
        raise ValueError("matrix must be symmetric")
    k = a.shape[0]
    low = np.zeros_like(a)
    for i in range(k):
        for j in range(i + 1):
            s = a[i, j] - np.dot(low[i, :j], low[j, :j])
            if i == j:
                if not s > 0.0:
                    raise NotPositiveDefiniteError(i, float(s))
                low[i, i] = np.sqrt(s)
            else:
                low[i, j] = s / low[j, j]
    return low


def _first_primes(k: int) -> np.ndarray:
    primes: list[int] = []
    cand = 2
    while len(primes) < k:
        if all(cand % p for p in primes if p * p <= cand):
            primes.append(cand)
        cand += 1
    return np.array(primes, dtype=float)


def _priority_order(lower, upper, cov) -> np.ndarray:
    # smallest marginal interval probability first
    sd = np.sqrt(np.diag(cov))
    width = ndtr(upper / sd) - ndtr(lower / sd)
    return np.argsort(width, kind="stable")


@lru_cache(maxsize=64)
def lattice_weights(dim: int, qmc: QmcParams) -> np.ndarray:
    """Periodized shifted lattice points, shape ``(n_shifts, n_points, dim)``.

    Shifts are drawn in shift order from a generator seeded with ``qmc.seed``,
    so the result does not depend on how the caller batches problems.
    """
    if dim == 0:
        return np.empty((qmc.n_shifts, qmc.n_points, 0))
    q = np.sqrt(_first_primes(dim))
    rng = np.random.Generator(np.random.Philox(qmc.seed))
    shifts = rng.random((qmc.n_shifts, dim))
    j = np.arange(1, qmc.n_points + 1, dtype=float)[:, None]
    base = np.mod(j * q, 1.0)
    pts = np.mod(base[None, :, :] + shifts[:, None, :], 1.0)
    w = np.abs(2.0 * pts - 1.0)
    w.flags.writeable = False
    return w


def qmc_batch(lower: np.ndarray, upper: np.ndarray, chol: np.ndarray, qmc: QmcParams):
    """Estimate many box probabilities sharing one Cholesky factor.

    ``lower``/``upper`` have shape ``(B, k)``.  All B problems use the same
    lattice and shifts, which makes the estimate a smooth function of the
    bounds.  Returns ``(p, err)`` arrays of shape ``(B,)``.
    """
    lower = np.atleast_2d(lower)
    upper = np.atleast_2d(upper)
    nb, k = lower.shape
    w = lattice_weights(k - 1, qmc).reshape(qmc.n_shifts * qmc.n_points, k - 1)
    chunk = max(1, _MAX_CELLS // (w.shape[0] * k))
    if nb > chunk:
        parts = [_qmc_core(lower[i:i + chunk], upper[i:i + chunk], chol, w, qmc)
                 for i in range(0, nb, chunk)]
        return np.concatenate([p for p, _ in parts]), np.concatenate([e for _, e in parts])
    return _qmc_core(lower, upper, chol, w, qmc)


def _qmc_core(lower, upper, chol, w, qmc):
    nb, k = lower.shape
    diag = np.diag(chol)
    npts = w.shape[0]

    d = ndtr(lower[:, 0] / diag[0])
    e = ndtr(upper[:, 0] / diag[0])
    d = np.broadcast_to(d[:, None], (nb, npts))
    e = np.broadcast_to(e[:, None], (nb, npts))
    f = e - d
    ys = np.empty((nb, npts, max(k - 1, 0)))
    for m in range(1, k):
        t = np.clip(d + w[None, :, m - 1] * (e - d), _CLAMP, 1.0 - _CLAMP)
        ys[:, :, m - 1] = ndtri(t)
        shift = ys[:, :, :m] @ chol[m, :m]
        d = ndtr((lower[:, m, None] - shift) / diag[m])
        e = ndtr((upper[:, m, None] - shift) / diag[m])
        f = f * (e - d)

    per_shift = f.reshape(nb, qmc.n_shifts, qmc.n_points).mean(axis=2)
    # running mean and variance-of-mean over the shifts
    p = np.zeros(nb)
    v = np.zeros(nb)
    for i in range(1, qmc.n_shifts + 1):
        delta = (per_shift[:, i - 1] - p) / i
        p = p + delta
        v = (i - 2) * v / i + delta**2
    err = qmc.alpha * np.sqrt(v)
    return np.clip(p, 0.0, 1.0), err


def mvn_probability(problem: MvnProblem, qmc: QmcParams = QmcParams(), reorder: bool = True) -> MvnResult:
    """Randomized lattice QMC estimate of ``P(lower <= X <= upper)``.

    With ``reorder`` the variables are sorted by ascending marginal interval
    probability before factoring; the estimand is unchanged.
    """
    lower, upper, cov = problem.lower, problem.upper, problem.covariance
    if reorder and problem.dim > 1:
        order = _priority_order(lower, upper, cov)
        lower, upper = lower[order], upper[order]
        cov = cov[np.ix_(order, order)]
        chol = cholesky(cov)
    else:
        chol = problem.chol if problem.chol is not None else cholesky(cov)
    p, err = qmc_batch(lower[None, :], upper[None, :], chol, qmc)
    return MvnResult(float(p[0]), float(err[0]))


def mvn_probability_dense(problem: MvnProblem, tol: float = 1e-9) -> float:
    """Nested adaptive quadrature oracle for ``dim <= 4``.

    Integrates the sequentially conditioned form in standardized coordinates;
    the innermost dimension is done in closed form.
    """
    k = problem.dim
    if k > 4:
        raise ValueError("dense oracle supports dim <= 4")
    low = np.linalg.cholesky(problem.covariance)
    a, b = problem.lower, problem.upper
    cut = 10.0

    def level(m: int, y: tuple) -> float:
        s = float(np.dot(low[m, :m], y)) if m else 0.0
        lo = (a[m] - s) / low[m, m]
        hi = (b[m] - s) / low[m, m]
        if m == k - 1:
            return float(ndtr(hi) - ndtr(lo))
        lo, hi = max(lo, -cut), min(hi, cut)
        if lo >= hi:
            return 0.0

        def g(t):
            return np.exp(-0.5 * t * t) / np.sqrt(2 * np.pi) * level(m + 1, y + (t,))

        val, _ = integrate.quad(g, lo, hi, epsabs=tol, epsrel=tol, limit=200)
        return val

    return min(max(level(0, ()), 0.0), 1.0)
