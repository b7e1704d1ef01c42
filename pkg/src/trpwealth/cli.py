"""Command-line entry point: ``trpwealth <subcommand> [flags]``.

Exit codes: 0 success, 1 usage or input error, 2 numerical failure.
The effective configuration of every run is logged to stderr as JSON.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import backtest as bt
from .engine import TrpConfig
from .errors import NumericalError
from .estimation import mle, with_variance_floor
from .market import LogNormalParams, read_market_csv, sample_market, write_market_csv
from .mvn import MvnProblem, QmcParams, mvn_probability, mvn_probability_dense
from .optimizer import SearchGrid, optimize
from .wealth import HORIZON_CAP, LAWS, expected_wealth

log = logging.getLogger("trpwealth")

OUTDIR_ENV = "TRPWEALTH_OUTDIR"
DEFAULT_MARKET = LogNormalParams(0.006, 0.003, 0.05, 0.05)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _outdir(args) -> Path:
    return Path(args.outdir if args.outdir is not None else os.environ.get(OUTDIR_ENV, "."))


def _out_path(args, name: str) -> Path:
    p = Path(name)
    if not p.is_absolute():
        p = _outdir(args) / p
    p.parent.mkdir(parents=True, exist_ok=True)
    return p


def _emit(obj) -> None:
    sys.stdout.write(json.dumps(obj, indent=2) + "\n")


def _add_market(p, with_input: bool = True) -> None:
    g = p.add_argument_group("market")
    g.add_argument("--mu1", type=float, default=DEFAULT_MARKET.mu1, help="log drift of stock 1 per period")
    g.add_argument("--mu2", type=float, default=DEFAULT_MARKET.mu2, help="log drift of stock 2 per period")
    g.add_argument("--var1", type=float, default=DEFAULT_MARKET.var1, help="log variance of stock 1 per period")
    g.add_argument("--var2", type=float, default=DEFAULT_MARKET.var2, help="log variance of stock 2 per period")
    if with_input:
        g.add_argument("--input", default=None,
                       help="market CSV; when given, parameters are estimated from it instead")
        g.add_argument("--mode", choices=("relatives", "prices"), default="relatives", help="CSV layout")
        g.add_argument("--variance-floor", type=float, default=0.0,
                       help="lower bound applied to estimated variances (0 disables)")


def _add_qmc(p) -> None:
    g = p.add_argument_group("quasi-Monte Carlo")
    d = QmcParams()
    g.add_argument("--qmc-points", type=int, default=d.n_points, help="lattice points per shift")
    g.add_argument("--qmc-shifts", type=int, default=d.n_shifts, help="random shifts")
    g.add_argument("--qmc-alpha", type=float, default=d.alpha, help="error-estimate factor")


def _add_grid(p) -> None:
    g = p.add_argument_group("search grid")
    d = SearchGrid()
    for name in ("b_min", "b_max", "b_step", "eps_min", "eps_max", "eps_step"):
        g.add_argument("--" + name.replace("_", "-"), dest=name, type=float, default=getattr(d, name))
    g.add_argument("--no-sentinel", action="store_true", help="exclude the no-trade candidates")


def _qmc(args) -> QmcParams:
    return QmcParams(args.qmc_points, args.qmc_shifts, args.qmc_alpha, args.seed)


def _grid(args) -> SearchGrid:
    return SearchGrid(args.b_min, args.b_max, args.b_step, args.eps_min, args.eps_max, args.eps_step)


def _market(args) -> LogNormalParams:
    if getattr(args, "input", None):
        params = mle(read_market_csv(args.input, args.mode))
        return with_variance_floor(params, args.variance_floor) if args.variance_floor > 0 else params
    return LogNormalParams(args.mu1, args.mu2, args.var1, args.var2)


def cmd_simulate(args) -> None:
    series = sample_market(LogNormalParams(args.mu1, args.mu2, args.var1, args.var2), args.n, args.seed)
    path = _out_path(args, args.out)
    write_market_csv(series, path)
    _emit({"out": str(path), "periods": len(series)})


def cmd_estimate(args) -> None:
    series = read_market_csv(args.input, args.mode)
    params = mle(series)
    if args.variance_floor > 0:
        params = with_variance_floor(params, args.variance_floor)
    _emit({"mu1": params.mu1, "mu2": params.mu2, "var1": params.var1, "var2": params.var2,
           "n_samples": len(series)})


def cmd_expected_wealth(args) -> None:
    params = _market(args)
    table = expected_wealth(args.n, params, TrpConfig(args.b, args.eps, args.c), _qmc(args),
                            law=args.law, horizon_cap=args.horizon_cap)
    path = _out_path(args, args.out)
    table.to_csv(path)
    _emit({"out": str(path), "n": args.n, "es": float(table.es[args.n])})


def cmd_optimize(args) -> None:
    params = _market(args)
    grid = _grid(args)
    t0 = time.perf_counter()
    opt = optimize(params, args.n, args.c, grid, _qmc(args), law=args.law,
                   horizon_cap=args.horizon_cap, sentinel=not args.no_sentinel)
    runtime = (time.perf_counter() - t0) * 1000.0
    if args.surface:
        opt.surface_to_csv(_out_path(args, args.surface))
    _emit({"b_star": opt.b_star, "eps_star": opt.eps_star, "es_star": opt.es_star,
           "evaluated": opt.evaluated_count, "grid": grid.as_dict(),
           "runtime_ms": round(runtime, 3) if args.timing else None})


def cmd_backtest(args) -> None:
    series = read_market_csv(args.input, args.mode)
    config = bt.BacktestConfig(
        window=args.window, horizon=args.horizon, cost=args.c, grid=_grid(args),
        strategies=tuple(args.strategies), seed=args.seed, scrp_k=args.scrp_k,
        cover_grid_size=args.cover_grid, baseline_b=args.baseline_b,
        refit_baselines=args.refit_baselines, qmc=_qmc(args), law=args.law,
        variance_floor=args.variance_floor, sentinel=not args.no_sentinel)
    result = bt.sliding_backtest(series, config)
    files = {}
    for name, curve in result.curves.items():
        path = _out_path(args, f"{args.prefix}wealth_{name}.csv")
        curve.to_csv(path)
        files[name] = str(path)
    summary = result.summary()
    summary["files"] = files
    if args.svg:
        chart = _out_path(args, args.svg)
        bt.write_chart(result, chart)
        summary["chart"] = str(chart)
    spath = _out_path(args, f"{args.prefix}summary.json")
    spath.write_text(json.dumps(summary, indent=2) + "\n", encoding="utf-8")
    _emit(summary)


def _tridiagonal_cov(k: int) -> np.ndarray:
    prec = 2.0 * np.eye(k) - np.eye(k, k=1) - np.eye(k, k=-1)
    return np.linalg.inv(prec)


def cmd_mvn_debug(args) -> None:
    k = args.dim
    if k < 1:
        raise UsageError("--dim must be >= 1")
    if args.tridiagonal:
        cov = _tridiagonal_cov(k)
    else:
        cov = (1 - args.rho) * np.eye(k) + args.rho * np.ones((k, k))
    lo, hi = args.box
    problem = MvnProblem(np.full(k, lo), np.full(k, hi), cov)
    res = mvn_probability(problem, _qmc(args))
    out = {"p": res.p, "err": res.err}
    if k <= 4 and not args.no_dense:
        out["dense"] = mvn_probability_dense(problem)
    _emit(out)


def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.ArgumentDefaultsHelpFormatter
    parser = _Parser(prog="trpwealth", description=__doc__.splitlines()[0], formatter_class=fmt)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, func, help_):
        p = sub.add_parser(name, help=help_, formatter_class=fmt)
        p.set_defaults(func=func)
        p.add_argument("--seed", type=int, default=0, help="random seed")
        p.add_argument("--outdir", default=None,
                       help=f"output directory (default: ${OUTDIR_ENV} or the current directory)")
        return p

    p = add("simulate", cmd_simulate, "sample an i.i.d. log-normal market to CSV")
    _add_market(p, with_input=False)
    p.add_argument("--n", type=int, default=1100, help="number of periods")
    p.add_argument("--out", default="market.csv", help="output CSV")

    p = add("estimate", cmd_estimate, "maximum-likelihood market parameters from a CSV")
    p.add_argument("--input", required=True, help="market CSV")
    p.add_argument("--mode", choices=("relatives", "prices"), default="relatives", help="CSV layout")
    p.add_argument("--variance-floor", type=float, default=0.0,
                   help="lower bound applied to estimated variances (0 disables)")

    p = add("expected-wealth", cmd_expected_wealth, "per-horizon expected wealth table")
    _add_market(p)
    p.add_argument("--b", type=float, default=0.5, help="target fraction in stock 1")
    p.add_argument("--eps", type=float, default=0.1, help="threshold half-width")
    p.add_argument("--c", type=float, default=0.0, help="round-trip proportional cost")
    p.add_argument("--n", type=int, default=10, help="horizon")
    p.add_argument("--law", choices=LAWS, default=LAWS[0], help="band law")
    p.add_argument("--horizon-cap", type=int, default=HORIZON_CAP, help="largest allowed horizon")
    p.add_argument("--out", default="horizon_table.csv", help="output CSV")
    _add_qmc(p)

    p = add("optimize", cmd_optimize, "grid search for the best (b, eps)")
    _add_market(p)
    p.add_argument("--n", type=int, default=20, help="objective horizon")
    p.add_argument("--c", type=float, default=0.025, help="round-trip proportional cost")
    p.add_argument("--law", choices=LAWS, default=LAWS[0], help="band law")
    p.add_argument("--horizon-cap", type=int, default=HORIZON_CAP, help="largest allowed horizon")
    p.add_argument("--surface", default=None, help="optional CSV of the full objective surface")
    p.add_argument("--timing", action="store_true", help="report wall-clock runtime (not reproducible)")
    _add_grid(p)
    _add_qmc(p)

    p = add("backtest", cmd_backtest, "sliding-window backtest against baselines")
    p.add_argument("--input", required=True, help="market CSV")
    p.add_argument("--mode", choices=("relatives", "prices"), default="relatives", help="CSV layout")
    p.add_argument("--window", type=int, default=200, help="estimation window and block length")
    p.add_argument("--horizon", type=int, default=20, help="optimizer objective horizon")
    p.add_argument("--c", type=float, default=0.025, help="round-trip proportional cost")
    p.add_argument("--strategies", nargs="+", choices=bt.STRATEGIES, default=list(bt.STRATEGIES))
    p.add_argument("--scrp-k", type=int, default=5, help="SCRP rebalance interval")
    p.add_argument("--cover-grid", type=int, default=21, help="number of Cover experts")
    p.add_argument("--baseline-b", type=float, default=0.5, help="fraction used by static baselines")
    p.add_argument("--refit-baselines", action="store_true", help="add a per-window re-fitted CRP")
    p.add_argument("--variance-floor", type=float, default=0.0,
                   help="lower bound applied to estimated variances (0 disables)")
    p.add_argument("--law", choices=LAWS, default=LAWS[0], help="band law")
    p.add_argument("--prefix", default="", help="prefix for output file names")
    p.add_argument("--svg", default=None, help="optional SVG chart path")
    _add_grid(p)
    _add_qmc(p)

    p = add("mvn-debug", cmd_mvn_debug, "one MVN box probability with the QMC estimator")
    p.add_argument("--dim", type=int, default=3, help="dimension")
    p.add_argument("--box", nargs=2, type=float, default=[-1.0, 1.0], metavar=("LO", "HI"),
                   help="same interval on every coordinate")
    p.add_argument("--tridiagonal", action="store_true",
                   help="covariance is the inverse of tridiag(-1, 2, -1)")
    p.add_argument("--rho", type=float, default=0.0, help="equicorrelation when not tridiagonal")
    p.add_argument("--no-dense", action="store_true", help="skip the dense oracle")
    _add_qmc(p)
    return parser


def _effective(args) -> dict:
    d = {k: v for k, v in vars(args).items() if k != "func"}
    d["outdir"] = str(_outdir(args))
    return d


def main(argv=None) -> int:
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(message)s"))
    log.addHandler(handler)
    log.setLevel(logging.INFO)
    log.propagate = False
    try:
        return _main(argv)
    finally:
        log.removeHandler(handler)


def _main(argv) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    log.info(json.dumps({"command": args.command, "config": _effective(args)}, sort_keys=True))
    try:
        args.func(args)
    except NumericalError as exc:
        log.error("numerical failure: %s", exc)
        return 2
    except (UsageError, ValueError, OSError) as exc:
        log.error("error: %s", exc)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
