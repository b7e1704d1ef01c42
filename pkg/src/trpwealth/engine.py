"""Path-level execution of threshold-rebalanced and baseline portfolios.

Costs: moving the stock-1 fraction from ``b_old`` to ``b`` on wealth ``S``
costs ``c * S * |b_old - b|``, where ``c`` is the round-trip rate
(``c_sell + c_buy``).  The cost is paid at the period the trade fires.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .market import PriceRelativeSeries

UPPER = "upper"
LOWER = "lower"


@dataclass(frozen=True)
class TrpConfig:
    b: float
    eps: float
    c: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.b <= 1.0:
            raise ValueError("b must lie in [0, 1]")
        if not 0.0 <= self.eps <= 1.0:
            raise ValueError("eps must lie in [0, 1]")
        if not 0.0 <= self.c <= 1.0:
            raise ValueError("c must lie in [0, 1]")

    @property
    def unreachable(self) -> bool:
        """True when neither boundary can ever be crossed."""
        return self.eps >= max(self.b, 1.0 - self.b)


@dataclass(frozen=True)
class TrpDerived:
    gamma1: float
    gamma2: float
    theta1: float
    theta2: float
    zeta1_up: float
    zeta2_up: float
    zeta1_dn: float
    zeta2_dn: float


def derive(config: TrpConfig) -> TrpDerived:
    """Crossing thresholds on ln(Pi2/Pi1) and post-trade gain coefficients.

    The ``up`` coefficients apply when the fraction in stock 1 drifts to
    ``b + eps`` or above (the log-ratio walk falls to ``theta2``), the ``dn``
    coefficients when it drifts to ``b - eps`` or below.
    """
    b, eps, c = config.b, config.eps, config.c
    if b <= 0.0 or b >= 1.0:
        raise ValueError("b must be strictly inside (0, 1); use buy-and-hold for b in {0, 1}")
    if eps < b:
        gamma1 = b * (1 - b + eps) / ((1 - b) * (b - eps))
        theta1 = math.log(gamma1)
    else:
        gamma1 = theta1 = math.inf
    if eps < 1 - b:
        gamma2 = b * (1 - b - eps) / ((1 - b) * (b + eps))
        theta2 = math.log(gamma2)
    else:
        gamma2, theta2 = 0.0, -math.inf
    k = c * (b - b * b)
    return TrpDerived(
        gamma1=gamma1, gamma2=gamma2, theta1=theta1, theta2=theta2,
        zeta1_up=b - k, zeta2_up=1 - b + k,
        zeta1_dn=b + k, zeta2_dn=1 - b - k,
    )


@dataclass(frozen=True)
class TradeEvent:
    period: int
    side: str
    cost: float


@dataclass(frozen=True, eq=False)
class WealthCurve:
    """``wealth[t]`` is wealth after period t; ``wealth[0] == 1`` (or the start value)."""

    wealth: np.ndarray
    events: tuple[TradeEvent, ...] = ()
    final_fraction: float = math.nan
    labels: tuple[str, ...] | None = field(default=None, compare=False)

    @property
    def final(self) -> float:
        return float(self.wealth[-1])

    @property
    def total_cost(self) -> float:
        return math.fsum(e.cost for e in self.events)

    def to_csv(self, path: str | Path) -> None:
        by_period: dict[int, list[TradeEvent]] = {}
        for e in self.events:
            by_period.setdefault(e.period, []).append(e)
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["period", "wealth", "event_side", "cost"])
            for t, s in enumerate(self.wealth.tolist()):
                evs = by_period.get(t, [])
                side = ";".join(e.side for e in evs)
                cost = repr(math.fsum(e.cost for e in evs)) if evs else ""
                w.writerow([t, repr(s), side, cost])


def _run(series: PriceRelativeSeries, b: float, c: float,
         trade: Callable[[int, float], float | None], start_wealth: float = 1.0) -> WealthCurve:
    """Generic holdings loop.

    ``trade(t, b_old)`` returns the target fraction to rebalance to after
    period ``t`` (1-based), or ``None`` to hold.
    """
    h1, h2 = start_wealth * b, start_wealth * (1.0 - b)
    wealth = [start_wealth]
    events = []
    for t, (x1, x2) in enumerate(zip(series.x1.tolist(), series.x2.tolist()), start=1):
        h1 *= x1
        h2 *= x2
        s = h1 + h2
        b_old = h1 / s
        target = trade(t, b_old)
        if target is not None and b_old != target:
            cost = c * s * abs(b_old - target)
            s -= cost
            h1, h2 = target * s, (1.0 - target) * s
            events.append(TradeEvent(t, UPPER if b_old > target else LOWER, cost))
        wealth.append(s)
    frac = h1 / (h1 + h2)
    return WealthCurve(np.array(wealth), tuple(events), frac, series.labels)


def run_trp(config: TrpConfig, series: PriceRelativeSeries, start_wealth: float = 1.0) -> WealthCurve:
    b, eps = config.b, config.eps
    lo, hi = b - eps, b + eps

    def rule(t, b_old):
        return b if (b_old <= lo or b_old >= hi) else None

    return _run(series, b, config.c, rule, start_wealth)


def run_crp(b: float, c: float, series: PriceRelativeSeries, start_wealth: float = 1.0) -> WealthCurve:
    return _run(series, b, c, lambda t, b_old: b, start_wealth)


def run_scrp(b: float, k: int, c: float, series: PriceRelativeSeries, start_wealth: float = 1.0) -> WealthCurve:
    """Rebalance to ``b`` after every ``k``-th period."""
    if k < 1:
        raise ValueError("k must be >= 1")
    return _run(series, b, c, lambda t, b_old: b if t % k == 0 else None, start_wealth)


def run_buy_and_hold(b: float, series: PriceRelativeSeries, start_wealth: float = 1.0) -> WealthCurve:
    return _run(series, b, 0.0, lambda t, b_old: None, start_wealth)


def trp_step(h1: np.ndarray, h2: np.ndarray, x1: np.ndarray, x2: np.ndarray, config: TrpConfig):
    """Vectorized single period of :func:`run_trp` over many independent paths."""
    h1 = h1 * x1
    h2 = h2 * x2
    s = h1 + h2
    b_old = h1 / s
    b = config.b
    cross = (b_old <= b - config.eps) | (b_old >= b + config.eps)
    s = np.where(cross, s - config.c * s * np.abs(b_old - b), s)
    return np.where(cross, b * s, h1), np.where(cross, (1.0 - b) * s, h2)
