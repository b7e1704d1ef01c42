"""Expected wealth of a threshold-rebalanced portfolio.

The expectation is built from a renewal recursion over first-crossing
times::

    E[S(n)] = sum_{i=1..n} PR(i) * E[S(n-i)] + PT(n),   E[S(0)] = 1

where ``PT(t) = P(no crossing in t periods) * E[S(t) | no crossing]`` and
``PR(t) = P(first crossing at t) * E[S(t) | first crossing at t]``.

Both products are integrals over the endpoint log-ratio
``kappa = ln(Pi2(t)/Pi1(t))``.  Writing ``u = ln Pi1(t)``, the inner integral
over ``u`` given ``kappa`` is a Gaussian exponential moment and is done in
closed form, leaving one adaptive quadrature over ``kappa`` whose integrand
calls a band probability: the chance that every interior partial sum of the
log-ratio walk stayed between the thresholds.

Two laws for that band probability are available:

``"bridge"``
    the interior partial sums conditioned on the endpoint (a Gaussian
    bridge).  This makes the kappa reduction exact.
``"unconditional"``
    the unconditional law of the interior partial sums, with bounds shifted
    by ``j * mu``.  It ignores the conditioning on the endpoint and loses
    probability mass; kept for comparison.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np
from scipy.special import ndtr

from .engine import TrpConfig, TrpDerived, derive, trp_step
from .errors import DegenerateVarianceError, HorizonCapError
from .market import LogNormalParams, ReducedParams, reduce
from .mvn import MvnProblem, QmcParams, cholesky, mvn_probability, qmc_batch
from .quadrature import gauss_kronrod

LAWS = ("bridge", "unconditional")
DEFAULT_LAW = "bridge"
HORIZON_CAP = 40
# kappa integrals are truncated at this many standard deviations of kappa
TAIL_SDS = 8.0


@lru_cache(maxsize=256)
def _band_chol(tau: int, var: float, law: str) -> np.ndarray:
    j = np.arange(1, tau, dtype=float)
    cov = var * np.minimum.outer(j, j)
    if law == "bridge":
        cov = cov * (tau - np.maximum.outer(j, j)) / tau
    low = cholesky(cov)
    low.flags.writeable = False
    return low


def _check_law(law: str) -> None:
    if law not in LAWS:
        raise ValueError(f"law must be one of {LAWS}, got {law!r}")


def band_probability(tau: int, kappa, reduced: ReducedParams, derived: TrpDerived,
                     qmc: QmcParams = QmcParams(), law: str = DEFAULT_LAW):
    """P(all interior partial sums stay in the band | endpoint kappa).

    Vectorized over ``kappa``.  For ``tau == 1`` there are no interior sums
    and the result is 1.
    """
    _check_law(law)
    if tau < 1:
        raise ValueError("tau must be >= 1")
    kap = np.atleast_1d(np.asarray(kappa, dtype=float))
    if tau == 1:
        out = np.ones_like(kap)
    else:
        th1, th2 = derived.theta1, derived.theta2
        j = np.arange(1, tau, dtype=float)
        if law == "unconditional":
            lo = kap[:, None] - th1 - j * reduced.mu
            hi = kap[:, None] - th2 - j * reduced.mu
        else:
            shift = kap[:, None] * (1.0 - j / tau)
            lo = shift - th1
            hi = shift - th2
        out, _ = qmc_batch(lo, hi, _band_chol(tau, reduced.var, law), qmc)
    return out if np.ndim(kappa) else float(out[0])


def _walk_problem(tau: int, reduced: ReducedParams, lower, upper) -> MvnProblem:
    i = np.arange(1, tau + 1, dtype=float)
    cov = reduced.var * np.minimum.outer(i, i)
    return MvnProblem(np.asarray(lower) - i * reduced.mu, np.asarray(upper) - i * reduced.mu, cov)


def stay_probability(tau: int, reduced: ReducedParams, derived: TrpDerived,
                     qmc: QmcParams = QmcParams()) -> float:
    """P(partial sums of z stay in [theta2, theta1] for periods 1..tau)."""
    if tau < 1:
        raise ValueError("tau must be >= 1")
    th1, th2 = derived.theta1, derived.theta2
    if math.isinf(th1) and math.isinf(th2):
        return 1.0
    prob = _walk_problem(tau, reduced, np.full(tau, th2), np.full(tau, th1))
    return mvn_probability(prob, qmc).p


def first_crossing_probability(tau: int, reduced: ReducedParams, derived: TrpDerived,
                               qmc: QmcParams = QmcParams()) -> float:
    """P(first threshold crossing happens at period tau), from two direct MVN tails."""
    if tau < 1:
        raise ValueError("tau must be >= 1")
    th1, th2 = derived.theta1, derived.theta2
    total = 0.0
    lower = np.full(tau, th2)
    upper = np.full(tau, th1)
    if math.isfinite(th1):
        lo, hi = lower.copy(), upper.copy()
        lo[-1], hi[-1] = th1, math.inf
        total += mvn_probability(_walk_problem(tau, reduced, lo, hi), qmc).p
    if math.isfinite(th2):
        lo, hi = lower.copy(), upper.copy()
        lo[-1], hi[-1] = -math.inf, th2
        total += mvn_probability(_walk_problem(tau, reduced, lo, hi), qmc).p
    return total


def endpoint_weight(tau: int, kappa: np.ndarray, params: LogNormalParams, w1: float, w2: float) -> np.ndarray:
    """``f_kappa(kappa) * E[w1 * Pi1 + w2 * Pi2 | kappa]`` under independent log-normal endpoints."""
    var = params.var1 + params.var2
    m = tau * (params.mu2 - params.mu1)
    s2 = tau * var
    dev = kappa - m
    dens = np.exp(-dev * dev / (2 * s2)) / math.sqrt(2 * math.pi * s2)
    mean_u = tau * params.mu1 - (params.var1 / var) * dev
    var_u = tau * params.var1 * params.var2 / var
    e_pi1 = np.exp(mean_u + 0.5 * var_u)
    return dens * e_pi1 * (w1 + w2 * np.exp(kappa))


def _kappa_density(tau: int, kappa: np.ndarray, reduced: ReducedParams) -> np.ndarray:
    s2 = tau * reduced.var
    dev = kappa - tau * reduced.mu
    return np.exp(-dev * dev / (2 * s2)) / math.sqrt(2 * math.pi * s2)


def _validate(params: LogNormalParams) -> None:
    if not (params.var1 > 0 and params.var2 > 0):
        raise DegenerateVarianceError(
            "expected wealth needs var1 > 0 and var2 > 0; a zero-variance window "
            "cannot be evaluated (consider a variance floor)")


@lru_cache(maxsize=8192)
def _terms(tau: int, params: LogNormalParams, config: TrpConfig, qmc: QmcParams,
           law: str, rtol: float) -> tuple[float, float, float, float]:
    """(pt, kappa-route stay mass, pr, kappa-route first-crossing mass)."""
    _validate(params)
    reduced = reduce(params)
    derived = derive(config)
    th1, th2 = derived.theta1, derived.theta2
    b = config.b
    m = tau * reduced.mu
    half = TAIL_SDS * reduced.sd * math.sqrt(tau)
    lo_lim, hi_lim = m - half, m + half

    def integrand(w1, w2):
        def f(k):
            band = band_probability(tau, k, reduced, derived, qmc, law)
            return np.stack([endpoint_weight(tau, k, params, w1, w2) * band,
                             _kappa_density(tau, k, reduced) * band], axis=1)
        return f

    pt = stay_mass = 0.0
    a, c = max(th2, lo_lim), min(th1, hi_lim)
    if a < c:
        (pt, stay_mass), _ = gauss_kronrod(integrand(b, 1 - b), a, c, rtol=rtol)

    pr = fc_mass = 0.0
    if th1 < hi_lim:
        # stock-1 fraction fell to b - eps: buy stock 1
        (v, mass), _ = gauss_kronrod(integrand(derived.zeta1_dn, derived.zeta2_dn),
                                     max(th1, lo_lim), hi_lim, rtol=rtol, initial=2)
        pr += v
        fc_mass += mass
    if th2 > lo_lim:
        # stock-1 fraction rose to b + eps: sell stock 1
        (v, mass), _ = gauss_kronrod(integrand(derived.zeta1_up, derived.zeta2_up),
                                     lo_lim, min(th2, hi_lim), rtol=rtol, initial=2)
        pr += v
        fc_mass += mass
    return float(pt), float(stay_mass), float(pr), float(fc_mass)


def pt_product(tau: int, params: LogNormalParams, config: TrpConfig,
               qmc: QmcParams = QmcParams(), law: str = DEFAULT_LAW, rtol: float = 1e-4) -> float:
    """P(no crossing for tau periods) * E[S(tau) | no crossing]."""
    _check_law(law)
    return _terms(tau, params, config, qmc, law, rtol)[0]


def pr_product(tau: int, params: LogNormalParams, config: TrpConfig,
               qmc: QmcParams = QmcParams(), law: str = DEFAULT_LAW, rtol: float = 1e-4) -> float:
    """P(first crossing at tau) * E[S(tau) net of the trade cost | first crossing at tau]."""
    _check_law(law)
    return _terms(tau, params, config, qmc, law, rtol)[2]


@dataclass(frozen=True, eq=False)
class HorizonTable:
    """Per-horizon terms of the recursion; arrays are indexed by ``i - 1`` except ``es``.

    ``stay_mass``/``fc_mass`` are the same probabilities obtained by
    integrating the band probability against the endpoint density; under the
    bridge law they agree with the direct ``stay_p``/``fc_p``.
    """

    stay_p: np.ndarray
    fc_p: np.ndarray
    pr: np.ndarray
    pt: np.ndarray
    es: np.ndarray
    stay_mass: np.ndarray
    fc_mass: np.ndarray
    law: str = DEFAULT_LAW

    @property
    def n(self) -> int:
        return len(self.pt)

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["i", "stay_p", "fc_p", "pr", "pt", "es"])
            for i in range(1, self.n + 1):
                w.writerow([i] + [repr(float(v)) for v in
                                  (self.stay_p[i - 1], self.fc_p[i - 1], self.pr[i - 1],
                                   self.pt[i - 1], self.es[i])])


def recursion(pr, pt) -> np.ndarray:
    """Fold the renewal recursion; returns ``es[0..n]`` with ``es[0] = 1``."""
    n = len(pt)
    es = np.empty(n + 1)
    es[0] = 1.0
    for k in range(1, n + 1):
        es[k] = sum(pr[i - 1] * es[k - i] for i in range(1, k + 1)) + pt[k - 1]
    return es


def expected_wealth(n: int, params: LogNormalParams, config: TrpConfig,
                    qmc: QmcParams = QmcParams(), law: str = DEFAULT_LAW,
                    horizon_cap: int = HORIZON_CAP, rtol: float = 1e-4,
                    probabilities: bool = True) -> HorizonTable:
    """E[S(i)] for i = 0..n and the recursion terms.

    With ``probabilities=False`` the direct MVN probabilities ``stay_p`` and
    ``fc_p`` are skipped (NaN), which is all an objective evaluation needs.
    """
    _check_law(law)
    if n < 1:
        raise ValueError("n must be >= 1")
    if n > horizon_cap:
        raise HorizonCapError(f"horizon {n} exceeds cap {horizon_cap}")
    _validate(params)
    reduced = reduce(params)
    derived = derive(config)
    terms = np.array([_terms(i, params, config, qmc, law, rtol) for i in range(1, n + 1)])
    pt, stay_mass, pr, fc_mass = terms.T
    if probabilities:
        stay_p = np.array([stay_probability(i, reduced, derived, qmc) for i in range(1, n + 1)])
        fc_p = np.array([first_crossing_probability(i, reduced, derived, qmc) for i in range(1, n + 1)])
    else:
        stay_p = np.full(n, np.nan)
        fc_p = np.full(n, np.nan)
    return HorizonTable(stay_p=stay_p, fc_p=fc_p, pr=pr, pt=pt, es=recursion(pr, pt),
                        stay_mass=stay_mass, fc_mass=fc_mass, law=law)


def buy_and_hold_expectation(n: int, params: LogNormalParams, b: float) -> float:
    """E[S(n)] of buy-and-hold at weights (b, 1-b); exact ties for equal markets."""
    g1 = math.exp(n * (params.mu1 + 0.5 * params.var1))
    g2 = math.exp(n * (params.mu2 + 0.5 * params.var2))
    return g2 + b * (g1 - g2)


def mc_wealth_by_horizon(n: int, params: LogNormalParams, config: TrpConfig, paths: int,
                         seed: int, chunk: int = 1 << 16):
    """Monte Carlo mean and standard error of TRP wealth at every horizon 0..n."""
    if paths < 1:
        raise ValueError("paths must be >= 1")
    mean = np.ones(n + 1)
    stderr = np.zeros(n + 1)
    if n == 0:
        return mean, stderr
    rng = np.random.Generator(np.random.Philox(seed))
    s1 = np.zeros(n)
    s2 = np.zeros(n)
    sd1, sd2 = math.sqrt(params.var1), math.sqrt(params.var2)
    done = 0
    while done < paths:
        m = min(chunk, paths - done)
        g = rng.standard_normal((n, m, 2))
        h1 = np.full(m, config.b)
        h2 = np.full(m, 1.0 - config.b)
        for t in range(n):
            x1 = np.exp(params.mu1 + sd1 * g[t, :, 0])
            x2 = np.exp(params.mu2 + sd2 * g[t, :, 1])
            h1, h2 = trp_step(h1, h2, x1, x2, config)
            w = h1 + h2
            s1[t] += w.sum()
            s2[t] += (w * w).sum()
        done += m
    mean[1:] = s1 / paths
    if paths > 1:
        var = np.maximum(s2 / paths - mean[1:] ** 2, 0.0) * paths / (paths - 1)
        stderr[1:] = np.sqrt(var / paths)
    return mean, stderr


def mc_expected_wealth(n: int, params: LogNormalParams, config: TrpConfig, paths: int,
                       seed: int) -> tuple[float, float]:
    """Path Monte Carlo of :func:`~trpwealth.engine.run_trp` final wealth: (mean, stderr)."""
    mean, stderr = mc_wealth_by_horizon(n, params, config, paths, seed)
    return float(mean[n]), float(stderr[n])


def band_closed_form_tau2(kappa: float, reduced: ReducedParams, derived: TrpDerived, law: str) -> float:
    """One-dimensional band probability, used as a cheap check of the general path."""
    if law == "unconditional":
        mean, sd = reduced.mu, reduced.sd
    else:
        mean, sd = kappa / 2.0, reduced.sd / math.sqrt(2.0)
    lo = kappa - derived.theta1
    hi = kappa - derived.theta2
    return float(ndtr((hi - mean) / sd) - ndtr((lo - mean) / sd))
