"""Exhaustive (b, eps) search maximizing expected TRP wealth."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .engine import TrpConfig
from .market import LogNormalParams
from .mvn import QmcParams
from .wealth import DEFAULT_LAW, HORIZON_CAP, buy_and_hold_expectation, expected_wealth

# eps value that stands for "never trade" (buy-and-hold at weights (b, 1-b))
SENTINEL_EPS = 1.0


def _axis(lo: float, hi: float, step: float) -> np.ndarray:
    count = int(math.floor((hi - lo) / step + 1e-9)) + 1
    # rounding keeps grid values such as 0.15 free of accumulated drift
    return np.round(lo + step * np.arange(count), 12)


@dataclass(frozen=True)
class SearchGrid:
    b_min: float = 0.05
    b_max: float = 0.95
    b_step: float = 0.05
    eps_min: float = 0.0
    eps_max: float = 0.25
    eps_step: float = 0.01

    def __post_init__(self):
        if not 0.0 < self.b_min <= self.b_max < 1.0:
            raise ValueError("need 0 < b_min <= b_max < 1")
        if not 0.0 <= self.eps_min <= self.eps_max:
            raise ValueError("need 0 <= eps_min <= eps_max")
        if not (self.b_step > 0 and self.eps_step > 0):
            raise ValueError("steps must be > 0")

    @property
    def b_values(self) -> np.ndarray:
        return _axis(self.b_min, self.b_max, self.b_step)

    @property
    def eps_values(self) -> np.ndarray:
        return _axis(self.eps_min, self.eps_max, self.eps_step)

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in ("b_min", "b_max", "b_step", "eps_min", "eps_max", "eps_step")}


@dataclass(frozen=True)
class Optimum:
    b_star: float
    eps_star: float
    es_star: float
    evaluated_count: int
    surface: tuple[tuple[float, float, float], ...] = ()

    @property
    def is_sentinel(self) -> bool:
        return self.eps_star >= SENTINEL_EPS

    def config(self, c: float) -> TrpConfig:
        return TrpConfig(self.b_star, self.eps_star, c)

    def surface_to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["b", "eps", "es"])
            for b, eps, es in self.surface:
                w.writerow([repr(b), repr(eps), repr(es)])


def candidates(grid: SearchGrid, sentinel: bool = True) -> list[tuple[float, float]]:
    """Feasible grid points (eps < min(b, 1-b)) followed by one no-trade sentinel per b."""
    pts = []
    for b in grid.b_values.tolist():
        pts.extend((b, e) for e in grid.eps_values.tolist() if e < min(b, 1.0 - b))
    if sentinel:
        pts.extend((b, SENTINEL_EPS) for b in grid.b_values.tolist())
    return pts


def select(surface):
    """Best ``(b, eps, es)`` row: largest es, then smallest eps, then smallest b."""
    return max(surface, key=lambda r: (r[2], -r[1], -r[0]))


def optimize(params: LogNormalParams, n: int, c: float, grid: SearchGrid = SearchGrid(),
             qmc: QmcParams = QmcParams(), law: str = DEFAULT_LAW,
             horizon_cap: int = HORIZON_CAP, sentinel: bool = True) -> Optimum:
    """Brute-force argmax of E[S(n)] over the grid.

    Points whose band cannot be crossed on both sides are represented by the
    buy-and-hold sentinel at ``eps = 1``.  Ties go to the smaller eps, then
    the smaller b.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    pts = candidates(grid, sentinel)
    if not pts:
        raise ValueError("empty effective grid")
    surface = []
    for b, eps in pts:
        if eps >= SENTINEL_EPS:
            es = buy_and_hold_expectation(n, params, b)
        else:
            table = expected_wealth(n, params, TrpConfig(b, eps, c), qmc, law=law,
                                    horizon_cap=horizon_cap, probabilities=False)
            es = float(table.es[n])
        surface.append((b, eps, es))
    b_star, eps_star, es_star = select(surface)
    return Optimum(b_star, eps_star, es_star, len(surface), tuple(surface))
