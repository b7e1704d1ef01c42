import json

import numpy as np
import pytest

from trpwealth.backtest import (BUY_AND_HOLD, COVER_UP, CRP, CRP_REFIT, SCRP, STRATEGIES, TRP,
                                BacktestConfig, run_cover_up, run_sequential_trp, sliding_backtest,
                                write_chart)
from trpwealth.engine import LOWER, UPPER, TrpConfig, run_buy_and_hold, run_crp, run_trp
from trpwealth.market import LogNormalParams, PriceRelativeSeries, sample_market
from trpwealth.optimizer import Optimum, SearchGrid

from conftest import FAST_QMC, SIM

SMALL_GRID = SearchGrid(0.3, 0.7, 0.2, 0.05, 0.1, 0.05)


def small_config(**kw):
    base = dict(window=50, horizon=4, cost=0.025, grid=SMALL_GRID, qmc=FAST_QMC)
    base.update(kw)
    return BacktestConfig(**base)


def test_short_series_rejected():
    s = sample_market(SIM, 99, seed=1)
    with pytest.raises(ValueError):
        sliding_backtest(s, small_config())
    with pytest.raises(ValueError):
        BacktestConfig(window=1)
    with pytest.raises(ValueError):
        BacktestConfig(strategies=("TRP", "Magic"))


def test_protocol_span_simulated():
    s = sample_market(SIM, 1100, seed=3)
    res = sliding_backtest(s, small_config(window=200, horizon=5))
    assert set(res.curves) == set(STRATEGIES)
    for curve in res.curves.values():
        assert len(curve.wealth) == 901 and curve.wealth[0] == 1.0
    assert res.periods == 900
    assert [f.start for f in res.fits] == [200, 400, 600, 800, 1000]


def test_protocol_span_long_window():
    s = sample_market(SIM, 5651, seed=4)
    res = sliding_backtest(s, small_config(window=1000, horizon=3))
    assert res.periods == 4651
    assert all(len(c.wealth) == 4652 for c in res.curves.values())


def test_cover_examples():
    s = sample_market(SIM, 40, seed=5)
    assert np.max(np.abs(run_cover_up([0.3], 0.02, s).wealth - run_crp(0.3, 0.02, s).wealth)) <= 1e-12
    ones = PriceRelativeSeries(np.ones(5), np.ones(5))
    assert np.all(run_cover_up(np.linspace(0, 1, 21), 0.01, ones).wealth == 1.0)
    assert run_cover_up([0.0, 1.0], 0.0, PriceRelativeSeries([2.0], [1.0])).final == 1.5
    with pytest.raises(ValueError):
        run_cover_up([], 0.0, s)


def test_out_of_sample_discipline():
    w, shock = 50, 130
    s = sample_market(SIM, 200, seed=6)
    x1 = s.x1.copy()
    x1[shock] *= 5.0
    shocked = PriceRelativeSeries(x1, s.x2)
    cfg = small_config(window=w)
    a, b = sliding_backtest(s, cfg), sliding_backtest(shocked, cfg)
    first_hit = shock - w + 1
    for name in a.curves:
        assert np.array_equal(a.curves[name].wealth[:first_hit], b.curves[name].wealth[:first_hit]), name
        assert not np.array_equal(a.curves[name].wealth, b.curves[name].wealth), name
    for fa, fb in zip(a.fits, b.fits):
        if fa.start <= shock:
            assert fa == fb
    assert a.fits[-1] != b.fits[-1]


def test_single_block_zero_eps_equals_crp():
    s = sample_market(SIM, 100, seed=7)
    grid = SearchGrid(0.2, 0.8, 0.2, 0.0, 0.0, 0.01)
    res = sliding_backtest(s, small_config(cost=0.0, grid=grid, sentinel=False))
    (fit,) = res.fits
    assert fit.optimum.eps_star == 0.0
    crp = run_crp(fit.optimum.b_star, 0.0, s[50:])
    assert np.array_equal(res.curves[TRP].wealth, crp.wealth)


def test_block_transition_is_costed_and_state_carried():
    s = sample_market(SIM, 150, seed=8)
    targets = iter([0.3, 0.7, 0.7])

    def fake_fit(window, config, qmc):
        return None, Optimum(next(targets), 1.0, 1.0, 1)

    cfg = small_config(cost=0.01)
    curve, fits = run_sequential_trp(s, cfg, fit=fake_fit)
    assert len(fits) == 2
    first = run_buy_and_hold(0.3, s[50:100])
    assert np.array_equal(curve.wealth[:50], first.wealth[:50])
    (event,) = curve.events
    frac = first.final_fraction
    assert event.period == 50 and event.side == (UPPER if frac > 0.7 else LOWER)
    assert event.cost == pytest.approx(0.01 * first.final * abs(frac - 0.7), rel=1e-14)
    assert curve.wealth[50] == pytest.approx(first.final - event.cost, rel=1e-14)
    second = run_buy_and_hold(0.7, s[100:150])
    assert curve.final == pytest.approx(curve.wealth[50] * second.final, rel=1e-12)


def test_summary_and_refit(tmp_path):
    s = sample_market(SIM, 150, seed=9)
    res = sliding_backtest(s, small_config(refit_baselines=True, strategies=(TRP, CRP, BUY_AND_HOLD)))
    assert set(res.curves) == {TRP, CRP, BUY_AND_HOLD, CRP_REFIT}
    summary = res.summary()
    json.dumps(summary)
    assert summary["periods"] == 100
    assert summary["strategies"][BUY_AND_HOLD]["trades"] == 0
    assert summary["strategies"][CRP]["trades"] == 100
    assert len(summary["windows"]) == 2
    write_chart(res, tmp_path / "c.svg")
    first = (tmp_path / "c.svg").read_bytes()
    write_chart(res, tmp_path / "c.svg")
    assert (tmp_path / "c.svg").read_bytes() == first and first.startswith(b"<?xml")
