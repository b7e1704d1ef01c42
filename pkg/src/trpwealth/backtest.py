"""Sliding-window backtest: fit on one window, trade the next.

Each block of ``window`` periods after the first window is traded with the
TRP chosen by :func:`~trpwealth.optimizer.optimize` on parameters estimated
from the preceding ``window`` periods.  Wealth and holdings carry across
blocks; switching to a new target is a costed trade.  Baselines run on the
same out-of-sample span, all starting from wealth 1.
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field

import numpy as np

from .engine import (LOWER, UPPER, TradeEvent, TrpConfig, WealthCurve, _run, run_buy_and_hold,
                     run_crp, run_scrp, run_trp)
from .estimation import mle, with_variance_floor
from .market import LogNormalParams, PriceRelativeSeries
from .mvn import QmcParams
from .optimizer import Optimum, SearchGrid, optimize
from .wealth import DEFAULT_LAW

TRP = "TRP"
CRP = "CRP"
SCRP = "SCRP"
BUY_AND_HOLD = "BuyAndHold"
COVER_UP = "CoverUP"
CRP_REFIT = "CRP-refit"
STRATEGIES = (TRP, CRP, SCRP, BUY_AND_HOLD, COVER_UP)


@dataclass(frozen=True)
class BacktestConfig:
    window: int = 200
    horizon: int = 20
    cost: float = 0.025
    grid: SearchGrid = SearchGrid()
    strategies: tuple[str, ...] = STRATEGIES
    seed: int = 0
    scrp_k: int = 5
    cover_grid_size: int = 21
    baseline_b: float = 0.5
    refit_baselines: bool = False
    qmc: QmcParams = QmcParams()
    law: str = DEFAULT_LAW
    variance_floor: float = 0.0
    sentinel: bool = True

    def __post_init__(self):
        if self.window < 2:
            raise ValueError("window must be >= 2")
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if not 0.0 <= self.cost <= 1.0:
            raise ValueError("cost must lie in [0, 1]")
        unknown = set(self.strategies) - set(STRATEGIES)
        if unknown:
            raise ValueError(f"unknown strategies: {sorted(unknown)}")
        if self.scrp_k < 1:
            raise ValueError("scrp_k must be >= 1")
        if self.cover_grid_size < 1:
            raise ValueError("cover_grid_size must be >= 1")
        if not 0.0 <= self.baseline_b <= 1.0:
            raise ValueError("baseline_b must lie in [0, 1]")


@dataclass(frozen=True)
class WindowFit:
    start: int
    params: LogNormalParams
    optimum: Optimum


@dataclass(frozen=True, eq=False)
class BacktestResult:
    curves: dict[str, WealthCurve]
    fits: tuple[WindowFit, ...] = ()
    config: BacktestConfig = field(default_factory=BacktestConfig)

    @property
    def periods(self) -> int:
        return len(next(iter(self.curves.values())).wealth) - 1

    def summary(self) -> dict:
        out = {
            "periods": self.periods,
            "strategies": {
                name: {"final_wealth": c.final, "trades": len(c.events), "total_cost": c.total_cost}
                for name, c in self.curves.items()
            },
        }
        if self.fits:
            out["windows"] = [
                {"start": f.start, **dataclasses.asdict(f.params), "b_star": f.optimum.b_star,
                 "eps_star": f.optimum.eps_star, "es_star": f.optimum.es_star}
                for f in self.fits
            ]
        return out


def cover_grid(size: int) -> np.ndarray:
    return np.linspace(0.0, 1.0, size) if size > 1 else np.array([0.5])


def run_cover_up(b_grid, c: float, series: PriceRelativeSeries, start_wealth: float = 1.0) -> WealthCurve:
    """Wealth-weighted mixture of costless CRP experts, executed with costs.

    After period t the portfolio is rebalanced to the average of the expert
    fractions weighted by each expert's wealth through t.
    """
    grid = np.asarray(b_grid, dtype=float)
    if grid.size == 0:
        raise ValueError("expert grid must be non-empty")
    x1, x2 = series.x1, series.x2
    # log-wealth of each expert after each period (row t = after t periods)
    gains = np.log(grid[None, :] * x1[:, None] + (1.0 - grid[None, :]) * x2[:, None])
    logw = np.vstack([np.zeros(grid.size), np.cumsum(gains, axis=0)])

    def mix(t: int) -> float:
        w = np.exp(logw[t] - logw[t].max())
        return float(np.dot(w, grid) / w.sum())

    return _run(series, mix(0), c, lambda t, b_old: mix(t), start_wealth)


def _shift(curve: WealthCurve, offset: int) -> tuple[TradeEvent, ...]:
    return tuple(TradeEvent(e.period + offset, e.side, e.cost) for e in curve.events)


def _fit(window: PriceRelativeSeries, config: BacktestConfig, qmc: QmcParams) -> tuple[LogNormalParams, Optimum]:
    params = mle(window)
    if config.variance_floor > 0:
        params = with_variance_floor(params, config.variance_floor)
    opt = optimize(params, config.horizon, config.cost, config.grid, qmc, law=config.law,
                   horizon_cap=max(config.horizon, 40), sentinel=config.sentinel)
    return params, opt


def run_sequential_trp(series: PriceRelativeSeries, config: BacktestConfig,
                       fit=_fit) -> tuple[WealthCurve, tuple[WindowFit, ...]]:
    """TRP re-fitted on each trailing window, traded on the following block."""
    w = config.window
    qmc = dataclasses.replace(config.qmc, seed=config.seed)
    wealth = [1.0]
    events: list[TradeEvent] = []
    fits = []
    frac = math.nan
    for start in range(w, len(series), w):
        params, opt = fit(series[start - w:start], config, qmc)
        fits.append(WindowFit(start, params, opt))
        trp = opt.config(config.cost)
        s = wealth[-1]
        offset = start - w
        if not math.isnan(frac) and frac != trp.b:
            cost = config.cost * s * abs(frac - trp.b)
            s -= cost
            events.append(TradeEvent(offset, UPPER if frac > trp.b else LOWER, cost))
            wealth[-1] = s
        block = series[start:start + w]
        curve = run_trp(trp, block, start_wealth=s)
        wealth.extend(curve.wealth[1:].tolist())
        events.extend(_shift(curve, offset))
        frac = curve.final_fraction
    labels = series.labels[w:] if series.labels is not None else None
    return WealthCurve(np.array(wealth), tuple(events), frac, labels), tuple(fits)


def _run_crp_refit(series: PriceRelativeSeries, config: BacktestConfig) -> WealthCurve:
    """CRP whose b is re-chosen per window as the best in-window costless CRP."""
    w = config.window
    grid = cover_grid(config.cover_grid_size)
    targets = np.empty(len(series) - w)
    for start in range(w, len(series), w):
        win = series[start - w:start]
        logw = np.log(grid[None, :] * win.x1[:, None] + (1 - grid[None, :]) * win.x2[:, None]).sum(axis=0)
        targets[start - w:start] = grid[int(np.argmax(logw))]
    return _run(series[w:], float(targets[0]), config.cost,
                lambda t, b_old: float(targets[t]) if t < len(targets) else None)


def sliding_backtest(series: PriceRelativeSeries, config: BacktestConfig = BacktestConfig()) -> BacktestResult:
    w = config.window
    if len(series) < 2 * w:
        raise ValueError(f"series of {len(series)} periods is shorter than two windows ({2 * w})")
    oos = series[w:]
    b, c = config.baseline_b, config.cost
    curves: dict[str, WealthCurve] = {}
    fits: tuple[WindowFit, ...] = ()
    for name in config.strategies:
        if name == TRP:
            curves[TRP], fits = run_sequential_trp(series, config)
        elif name == CRP:
            curves[CRP] = run_crp(b, c, oos)
        elif name == SCRP:
            curves[SCRP] = run_scrp(b, config.scrp_k, c, oos)
        elif name == BUY_AND_HOLD:
            curves[BUY_AND_HOLD] = run_buy_and_hold(b, oos)
        elif name == COVER_UP:
            curves[COVER_UP] = run_cover_up(cover_grid(config.cover_grid_size), c, oos)
    if config.refit_baselines:
        curves[CRP_REFIT] = _run_crp_refit(series, config)
    return BacktestResult(curves, fits, config)


def write_chart(result: BacktestResult, path) -> None:
    """Standalone SVG of every wealth curve on a log axis."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    with matplotlib.rc_context({"svg.hashsalt": "trpwealth", "svg.fonttype": "none"}):
        fig, ax = plt.subplots(figsize=(8, 4.5))
        for name, curve in result.curves.items():
            ax.plot(np.arange(len(curve.wealth)), curve.wealth, label=name, linewidth=1.0)
        ax.set_yscale("log")
        ax.set_xlabel("period")
        ax.set_ylabel("wealth")
        ax.legend(loc="upper left")
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
