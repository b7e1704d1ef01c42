"""Maximum-likelihood fit of the log-normal market to a window of relatives."""
from __future__ import annotations

import numpy as np

from .market import LogNormalParams, PriceRelativeSeries


def mle(series: PriceRelativeSeries) -> LogNormalParams:
    """Sample mean and biased (1/N) variance of ``ln x1`` and ``ln x2``.

    A constant window yields a zero variance, which is returned as is;
    :func:`trpwealth.wealth.expected_wealth` refuses such parameters.
    """
    n = len(series)
    if n < 2:
        raise ValueError(f"need at least 2 samples, got {n}")
    out = {}
    for i, x in ((1, series.x1), (2, series.x2)):
        logs = np.log(x)
        if np.all(logs == logs[0]):
            # keep the constant case exact: var = 0 iff all logs are equal
            out[f"mu{i}"], out[f"var{i}"] = float(logs[0]), 0.0
            continue
        mu = float(np.mean(logs))
        out[f"mu{i}"] = mu
        out[f"var{i}"] = float(np.mean((logs - mu) ** 2))
    return LogNormalParams(**out)


def with_variance_floor(params: LogNormalParams, floor: float) -> LogNormalParams:
    """Raise each variance to at least ``floor``; ``floor = 0`` is a no-op."""
    if floor < 0:
        raise ValueError("floor must be >= 0")
    return LogNormalParams(params.mu1, params.mu2, max(params.var1, floor), max(params.var2, floor))
