import math

import numpy as np
import pytest
from scipy.stats import norm

from trpwealth.engine import TrpConfig, derive
from trpwealth.errors import DegenerateVarianceError, HorizonCapError
from trpwealth.market import LogNormalParams, reduce
from trpwealth.mvn import QmcParams
from trpwealth.wealth import (band_closed_form_tau2, band_probability, buy_and_hold_expectation,
                              expected_wealth, first_crossing_probability, mc_expected_wealth,
                              mc_wealth_by_horizon, pr_product, pt_product, recursion,
                              stay_probability)

from conftest import FAST_QMC, SIM
from oracles import stay_frequency, tensor_products, walk_band_frequency

RED = reduce(SIM)
BASE = TrpConfig(0.5, 0.1)
DER = derive(BASE)
UNREACH = TrpConfig(0.4, 0.65, 0.02)


def one_period_mean(params, b):
    return b * params.mean_relative1 + (1 - b) * params.mean_relative2


@pytest.mark.parametrize("law", ["bridge", "unconditional"])
def test_band_tau1_is_one(law):
    assert band_probability(1, 0.37, RED, DER, law=law) == 1.0
    assert np.all(band_probability(1, np.array([-1.0, 2.0]), RED, DER, law=law) == 1.0)


@pytest.mark.parametrize("law", ["bridge", "unconditional"])
def test_band_tau2_closed_form(law):
    red = reduce(LogNormalParams(0.01, 0.01, 0.05, 0.05))
    assert red.mu == 0.0
    kap = np.linspace(-0.6, 0.6, 7)
    got = band_probability(2, kap, red, DER, law=law)
    want = [band_closed_form_tau2(k, red, DER, law) for k in kap]
    assert np.allclose(got, want, atol=1e-6)
    if law == "unconditional":
        sd = red.sd
        direct = norm.cdf((kap - DER.theta2) / sd) - norm.cdf((kap - DER.theta1) / sd)
        assert np.allclose(got, direct, atol=1e-6)


@pytest.mark.parametrize("law,kappa", [("unconditional", 0.0), ("bridge", 0.0), ("bridge", 0.3)])
def test_band_tau4_matches_path_frequency(law, kappa):
    p = band_probability(4, kappa, RED, DER, law=law)
    freq, se = walk_band_frequency(4, kappa, RED, DER, 10**6, seed=2024, law=law)
    assert abs(p - freq) <= 3 * se


def test_stay_examples():
    want = norm.cdf((DER.theta1 - RED.mu) / RED.sd) - norm.cdf((DER.theta2 - RED.mu) / RED.sd)
    assert stay_probability(1, RED, DER) == pytest.approx(want, abs=1e-9)
    far = derive(TrpConfig(0.5, 0.5))
    assert all(stay_probability(t, RED, far) == 1.0 for t in (1, 4, 9))
    p = stay_probability(5, RED, DER)
    freq, se = stay_frequency(5, RED, DER, 10**6, seed=77)
    assert abs(p - freq) <= 3 * se


def test_first_crossing_tau1():
    assert first_crossing_probability(1, RED, DER) == pytest.approx(1 - stay_probability(1, RED, DER), abs=1e-9)
    assert first_crossing_probability(3, RED, derive(TrpConfig(0.5, 0.5))) == 0.0


def test_pt_unreachable_closed_forms():
    b = UNREACH.b
    assert pt_product(1, SIM, UNREACH) == pytest.approx(one_period_mean(SIM, b), rel=1e-9)
    for tau in (2, 5, 9):
        assert pt_product(tau, SIM, UNREACH, FAST_QMC) == pytest.approx(
            buy_and_hold_expectation(tau, SIM, b), rel=5e-3)
        assert pr_product(tau, SIM, UNREACH, FAST_QMC) == 0.0


def test_pr_plus_pt_one_period_costless():
    total = pt_product(1, SIM, BASE, rtol=1e-9) + pr_product(1, SIM, BASE, rtol=1e-9)
    assert total == pytest.approx(one_period_mean(SIM, 0.5), abs=1e-6)


@pytest.mark.parametrize("law", ["bridge", "unconditional"])
def test_products_match_tensor_oracle(law):
    cfg = TrpConfig(0.5, 0.1, 0.01)
    pt, pr = tensor_products(3, SIM, cfg, FAST_QMC, law)
    assert pt_product(3, SIM, cfg, FAST_QMC, law) == pytest.approx(pt, rel=1e-3)
    assert pr_product(3, SIM, cfg, FAST_QMC, law) == pytest.approx(pr, rel=1e-3)


def test_recursion_base_and_fold():
    t = expected_wealth(1, SIM, TrpConfig(0.5, 0.1, 0.01), FAST_QMC)
    assert t.es[0] == 1.0
    assert t.es[1] == pytest.approx(t.pr[0] + t.pt[0], abs=1e-15)
    es = recursion([0.5, 0.25], [0.5, 0.3])
    assert es.tolist() == [1.0, 1.0, 0.5 * 1.0 + 0.25 + 0.3]


def test_expected_wealth_unreachable_matches_buy_and_hold():
    t = expected_wealth(10, SIM, UNREACH, FAST_QMC, probabilities=False)
    for n in range(1, 11):
        assert t.es[n] == pytest.approx(buy_and_hold_expectation(n, SIM, UNREACH.b), rel=5e-3)


def test_table_invariants_and_partition():
    t = expected_wealth(8, SIM, TrpConfig(0.5, 0.1, 0.01), FAST_QMC)
    assert np.all(t.stay_p > 0) and np.all(np.diff(t.stay_p) <= 1e-9)
    assert np.all((t.fc_p >= 0) & (t.fc_p <= 1))
    assert np.all(t.pt >= 0) and np.all(t.pr >= 0)
    prev = np.concatenate([[1.0], t.stay_p[:-1]])
    assert np.allclose(t.fc_p, prev - t.stay_p, atol=5e-3)
    assert t.fc_p.sum() + t.stay_p[-1] == pytest.approx(1.0, abs=5e-3)
    # the kappa-route masses recover the same probabilities under the bridge law
    assert np.allclose(t.stay_mass, t.stay_p, atol=2e-3)
    assert np.allclose(t.fc_mass, t.fc_p, atol=2e-3)
    assert t.fc_mass.sum() + t.stay_mass[-1] == pytest.approx(1.0, abs=5e-3)


def test_unconditional_law_loses_mass():
    t = expected_wealth(4, SIM, BASE, FAST_QMC, law="unconditional", probabilities=False)
    assert t.fc_mass.sum() + t.stay_mass[-1] < 0.9


def test_cost_monotonicity():
    es = [expected_wealth(6, SIM, TrpConfig(0.5, 0.1, c), FAST_QMC, probabilities=False).es[6]
          for c in (0.0, 0.01, 0.025)]
    assert es[0] >= es[1] >= es[2]


def test_costless_decomposition_against_paths():
    cfg = TrpConfig(0.5, 0.1, 0.0)
    t = expected_wealth(6, SIM, cfg, FAST_QMC, probabilities=False)
    mean, se = mc_wealth_by_horizon(6, SIM, cfg, 400_000, seed=31)
    for n in range(1, 7):
        assert abs(t.es[n] - mean[n]) <= max(4 * se[n], 2e-3 * mean[n])


def test_table_csv(tmp_path):
    t = expected_wealth(3, SIM, BASE, FAST_QMC)
    path = tmp_path / "h.csv"
    t.to_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "i,stay_p,fc_p,pr,pt,es" and len(lines) == 4


def test_mc_examples():
    assert mc_expected_wealth(0, SIM, BASE, 10, seed=1) == (1.0, 0.0)
    n = 8
    m, se = mc_expected_wealth(n, SIM, TrpConfig(0.3, 0.0, 0.0), 200_000, seed=3)
    assert abs(m - one_period_mean(SIM, 0.3) ** n) <= 3 * se
    m, se = mc_expected_wealth(n, SIM, UNREACH, 200_000, seed=4)
    assert abs(m - buy_and_hold_expectation(n, SIM, UNREACH.b)) <= 3 * se
    with pytest.raises(ValueError):
        mc_expected_wealth(3, SIM, BASE, 0, seed=1)


def test_errors():
    with pytest.raises(HorizonCapError):
        expected_wealth(41, SIM, BASE)
    with pytest.raises(ValueError):
        expected_wealth(0, SIM, BASE)
    with pytest.raises(DegenerateVarianceError):
        expected_wealth(2, LogNormalParams(0.0, 0.0, 0.0, 0.05), BASE)
    with pytest.raises(ValueError):
        band_probability(2, 0.0, RED, DER, law="exact")
