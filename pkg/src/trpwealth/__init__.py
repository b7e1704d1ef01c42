"""Threshold-rebalanced portfolios: execution, expected wealth and parameter search."""
from .engine import TrpConfig, TrpDerived, WealthCurve, derive, run_buy_and_hold, run_crp, run_scrp, run_trp
from .estimation import mle
from .market import LogNormalParams, PriceRelativeSeries, ReducedParams, from_prices, reduce, sample_market
from .mvn import MvnProblem, MvnResult, QmcParams, cholesky, mvn_probability, mvn_probability_dense
from .optimizer import Optimum, SearchGrid, optimize
from .wealth import HorizonTable, expected_wealth, mc_expected_wealth

__all__ = [
    "LogNormalParams", "PriceRelativeSeries", "ReducedParams", "from_prices", "reduce", "sample_market",
    "TrpConfig", "TrpDerived", "WealthCurve", "derive", "run_trp", "run_crp", "run_scrp",
    "run_buy_and_hold", "MvnProblem", "MvnResult", "QmcParams", "cholesky", "mvn_probability",
    "mvn_probability_dense", "HorizonTable", "expected_wealth", "mc_expected_wealth", "mle",
    "SearchGrid", "Optimum", "optimize",
]
