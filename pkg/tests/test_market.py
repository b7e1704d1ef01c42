import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from trpwealth.market import (LogNormalParams, PriceRelativeSeries, ReducedParams, from_prices,
                              read_market_csv, reduce, sample_market, write_market_csv)

from conftest import SIM


def test_sample_shape_and_positivity():
    s = sample_market(SIM, 1100, seed=3)
    assert len(s) == 1100
    assert np.all(s.x1 > 0) and np.all(s.x2 > 0)


def test_sample_empty():
    assert len(sample_market(SIM, 0, seed=1)) == 0


def test_sample_moments_within_clt_bands():
    n = 10**5
    params = LogNormalParams(0.0, 0.0, 0.05, 0.05)
    s = sample_market(params, n, seed=11)
    for x in (s.x1, s.x2):
        lx = np.log(x)
        assert abs(lx.mean()) <= 4 * math.sqrt(0.05 / n)
        assert abs(lx.var() - 0.05) <= 4 * 0.05 * math.sqrt(2 / n)


def test_sample_reproducible():
    a, b = sample_market(SIM, 50, seed=9), sample_market(SIM, 50, seed=9)
    assert np.array_equal(a.x1, b.x1) and np.array_equal(a.x2, b.x2)
    c = sample_market(SIM, 50, seed=10)
    assert not np.array_equal(a.x1, c.x1)


def test_nonpositive_variance_rejected():
    with pytest.raises(ValueError):
        LogNormalParams(0.0, 0.0, -0.01, 0.05)
    with pytest.raises(ValueError):
        sample_market(LogNormalParams(0.0, 0.0, 0.0, 0.05), 3, seed=0)
    with pytest.raises(ValueError):
        ReducedParams(0.0, 0.0)


def test_from_prices_examples():
    s = from_prices([10, 11], [20, 19])
    assert s.pairs() == [(pytest.approx(1.1), pytest.approx(0.95))]
    s = from_prices([5, 5, 5], [2, 2, 2])
    assert s.pairs() == [(1.0, 1.0), (1.0, 1.0)]
    with pytest.raises(ValueError):
        from_prices([10, 0], [1, 2])
    with pytest.raises(ValueError):
        from_prices([10, 11, 12], [1, 2])


@given(st.lists(st.tuples(st.floats(0.01, 1e4), st.floats(0.01, 1e4)), min_size=2, max_size=40))
@settings(max_examples=60, deadline=None)
def test_from_prices_reconstructs_closes(closes):
    c1 = np.array([a for a, _ in closes])
    c2 = np.array([b for _, b in closes])
    s = from_prices(c1, c2)
    r1 = c1[0] * np.concatenate([[1.0], np.cumprod(s.x1)])
    r2 = c2[0] * np.concatenate([[1.0], np.cumprod(s.x2)])
    assert np.max(np.abs(r1 / c1 - 1)) <= 1e-12
    assert np.max(np.abs(r2 / c2 - 1)) <= 1e-12


def test_reduce_examples():
    r = reduce(SIM)
    assert r.mu == pytest.approx(-0.003, abs=1e-15)
    assert r.var == pytest.approx(0.10, abs=1e-15)
    assert reduce(LogNormalParams(0.2, 0.2, 0.1, 0.1)).mu == 0.0
    r = reduce(LogNormalParams(0.0, 0.01, 0.02, 0.03))
    assert (r.mu, r.var) == (pytest.approx(0.01), pytest.approx(0.05))


def test_series_validation():
    with pytest.raises(ValueError):
        PriceRelativeSeries([1.0, -1.0], [1.0, 1.0])
    with pytest.raises(ValueError):
        PriceRelativeSeries([1.0], [1.0, 1.0])
    s = PriceRelativeSeries([1.0, 2.0], [1.0, 0.5])
    with pytest.raises(ValueError):
        s.x1[0] = 3.0


def test_csv_roundtrip(tmp_path):
    s = sample_market(SIM, 20, seed=2)
    path = tmp_path / "m.csv"
    write_market_csv(s, path)
    back = read_market_csv(path)
    assert np.array_equal(back.x1, s.x1) and np.array_equal(back.x2, s.x2)
    assert back.labels == s.labels


def test_csv_prices_mode(tmp_path):
    path = tmp_path / "p.csv"
    path.write_text("date,close1,close2\n2020-01-01,10,20\n2020-01-02,11,19\n", encoding="utf-8")
    s = read_market_csv(path, mode="prices")
    assert s.labels == ("2020-01-02",)
    assert s.x1[0] == pytest.approx(1.1)
    with pytest.raises(ValueError):
        read_market_csv(path, mode="relatives")
