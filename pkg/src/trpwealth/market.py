"""Two-asset i.i.d. log-normal market: parameters, sampling and ingestion."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class PriceRelativeSeries:
    """Per-period price relatives ``x1[t], x2[t]`` with optional date labels."""

    x1: np.ndarray
    x2: np.ndarray
    labels: tuple[str, ...] | None = None

    def __post_init__(self):
        x1 = _frozen(np.atleast_1d(self.x1) if np.size(self.x1) else [])
        x2 = _frozen(np.atleast_1d(self.x2) if np.size(self.x2) else [])
        if x1.shape != x2.shape or x1.ndim != 1:
            raise ValueError("x1 and x2 must be 1-D and of equal length")
        if np.any(~(x1 > 0)) or np.any(~(x2 > 0)) or not np.all(np.isfinite(x1)) or not np.all(np.isfinite(x2)):
            raise ValueError("price relatives must be finite and strictly positive")
        if self.labels is not None:
            labels = tuple(str(s) for s in self.labels)
            if len(labels) != len(x1):
                raise ValueError("one label per period is required")
            object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "x1", x1)
        object.__setattr__(self, "x2", x2)

    def __len__(self) -> int:
        return len(self.x1)

    def __getitem__(self, item: slice) -> "PriceRelativeSeries":
        if not isinstance(item, slice):
            raise TypeError("series supports slicing only")
        labels = self.labels[item] if self.labels is not None else None
        return PriceRelativeSeries(self.x1[item], self.x2[item], labels)

    def pairs(self) -> list[tuple[float, float]]:
        return list(zip(self.x1.tolist(), self.x2.tolist()))

    @property
    def log_ratio(self) -> np.ndarray:
        """z(t) = ln(x2/x1), the walk that drives threshold crossings."""
        return np.log(self.x2) - np.log(self.x1)


@dataclass(frozen=True)
class LogNormalParams:
    """ln x_i ~ N(mu_i, var_i) per period; var is a variance, not a std."""

    mu1: float
    mu2: float
    var1: float
    var2: float

    def __post_init__(self):
        for name in ("mu1", "mu2", "var1", "var2"):
            v = float(getattr(self, name))
            if not math.isfinite(v):
                raise ValueError(f"{name} must be finite")
            object.__setattr__(self, name, v)
        # zero variance is a legitimate MLE outcome; consumers that need a
        # density reject it themselves
        if self.var1 < 0 or self.var2 < 0:
            raise ValueError("variances must be non-negative")

    @property
    def mean_relative1(self) -> float:
        return math.exp(self.mu1 + 0.5 * self.var1)

    @property
    def mean_relative2(self) -> float:
        return math.exp(self.mu2 + 0.5 * self.var2)


@dataclass(frozen=True)
class ReducedParams:
    mu: float
    var: float

    def __post_init__(self):
        if not self.var > 0:
            raise ValueError("reduced variance must be > 0")

    @property
    def sd(self) -> float:
        return math.sqrt(self.var)


def reduce(params: LogNormalParams) -> ReducedParams:
    """Law of z(t) = ln x2(t) - ln x1(t)."""
    return ReducedParams(mu=params.mu2 - params.mu1, var=params.var1 + params.var2)


def sample_market(params: LogNormalParams, n: int, seed: int) -> PriceRelativeSeries:
    if n < 0:
        raise ValueError("n must be >= 0")
    if not (params.var1 > 0 and params.var2 > 0):
        raise ValueError("sampling requires strictly positive variances")
    rng = np.random.Generator(np.random.Philox(seed))
    g = rng.standard_normal((n, 2))
    x1 = np.exp(params.mu1 + math.sqrt(params.var1) * g[:, 0])
    x2 = np.exp(params.mu2 + math.sqrt(params.var2) * g[:, 1])
    return PriceRelativeSeries(x1, x2, tuple(str(t) for t in range(1, n + 1)))


def from_prices(closes1, closes2, labels=None) -> PriceRelativeSeries:
    c1 = np.asarray(closes1, dtype=float)
    c2 = np.asarray(closes2, dtype=float)
    if c1.shape != c2.shape or c1.ndim != 1:
        raise ValueError("price lists must be 1-D and of equal length")
    if len(c1) < 2:
        raise ValueError("need at least two closes")
    if np.any(~(c1 > 0)) or np.any(~(c2 > 0)):
        raise ValueError("prices must be strictly positive")
    rel_labels = tuple(labels[1:]) if labels is not None else None
    return PriceRelativeSeries(c1[1:] / c1[:-1], c2[1:] / c2[:-1], rel_labels)


def read_market_csv(path: str | Path, mode: str = "relatives") -> PriceRelativeSeries:
    """Read ``date,x1,x2`` (relatives) or ``date,close1,close2`` (prices)."""
    cols = {"relatives": ("x1", "x2"), "prices": ("close1", "close2")}
    if mode not in cols:
        raise ValueError(f"unknown mode {mode!r}")
    a, b = cols[mode]
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"date", a, b} <= set(reader.fieldnames):
            raise ValueError(f"CSV header must contain date,{a},{b}")
        rows = list(reader)
    dates = [r["date"] for r in rows]
    v1 = [float(r[a]) for r in rows]
    v2 = [float(r[b]) for r in rows]
    if mode == "prices":
        return from_prices(v1, v2, dates)
    return PriceRelativeSeries(v1, v2, tuple(dates))


def write_market_csv(series: PriceRelativeSeries, path: str | Path) -> None:
    labels = series.labels or tuple(str(t) for t in range(1, len(series) + 1))
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["date", "x1", "x2"])
        for lab, a, b in zip(labels, series.x1.tolist(), series.x2.tolist()):
            w.writerow([lab, repr(a), repr(b)])
