import math

import numpy as np
import pytest
from scipy import stats

from comire import simgen
from comire.errors import DomainError
from comire.samplers import rng_stream

from oracles import normal_cdf, scenario1_f0_cdf


def test_dose_quartiles_default():
    x = simgen.gen_doses(rng_stream(0), 2000, 2.0, 15.0)
    q = np.quantile(x, [0.25, 0.5, 0.75])
    np.testing.assert_allclose(q, [15.4, 24.9, 39.8], atol=2.0)
    np.testing.assert_allclose(stats.gamma.ppf([0.25, 0.5, 0.75], 2, scale=15), [14.4, 25.2, 40.4], atol=0.1)


def test_dose_shape_one_is_heavily_skewed():
    x = simgen.gen_doses(rng_stream(1), 5000, 1.0, 15.0)
    assert stats.skew(x) > 1.5
    assert simgen.gen_doses(rng_stream(1), 0).size == 0


def test_scenario_spec_validation():
    with pytest.raises(DomainError):
        simgen.ScenarioSpec(id=4, n=10)
    with pytest.raises(DomainError):
        simgen.ScenarioSpec(id=1, n=0)


def test_scenario1_truth():
    s = simgen.scenario1_state()
    np.testing.assert_array_equal(s.nu0, [0.05, 0.15, 0.80])
    np.testing.assert_array_equal(s.mu0, [37.0, 39.0, 40.0])
    np.testing.assert_array_equal(s.tau0, [1.0, 1.0, 1.0])
    assert (s.mu_inf, s.tau_inf) == (36.0, 1.0)
    assert simgen.scenario1_beta(0.0) == 0.0
    assert simgen.scenario1_beta(60.0) == pytest.approx(stats.gamma.cdf(60, 6, scale=10))
    # R_A(inf, 37) is the full beta = 1 risk
    r_inf = normal_cdf(1.0) - scenario1_f0_cdf(37.0)
    assert simgen.scenario1_risk(1e4, 37.0) == pytest.approx(r_inf, abs=1e-12)
    assert simgen.scenario1_risk(1e4, 37.0) == pytest.approx(0.811851, abs=2e-6)
    assert simgen.scenario1_risk(0.0, 37.0) == 0.0


def test_scenario1_generation_and_low_dose_fit():
    sc = simgen.gen_scenario1(rng_stream(2), 20_000)
    assert sc.data.n == 20_000 and np.all(sc.data.x >= 0)
    low = sc.data.y[sc.data.x < 5.0]  # beta(5) < 2e-4
    assert low.size > 500
    assert stats.kstest(low, lambda a: scenario1_f0_cdf_vec(a)).pvalue > 0.01


def scenario1_f0_cdf_vec(a):
    return np.array([scenario1_f0_cdf(v) for v in np.atleast_1d(a)])


def test_scenario2_means_and_cdf():
    np.testing.assert_allclose(simgen.scenario2_means(0.0), [35.5, 38.5, 40.5])
    want = 0.10 * normal_cdf(37 - (35.5 - 50 / 300)) + 0.25 * normal_cdf(37 - 37.5) \
        + 0.65 * normal_cdf(37 - (40.5 - 50 / 75))
    assert simgen.scenario2_cdf(50.0, 37.0) == pytest.approx(want, abs=1e-14)
    a = np.linspace(30, 45, 9)
    np.testing.assert_array_equal(simgen.scenario2_risk(np.zeros(9), a), np.zeros(9))
    assert np.all(np.diff(simgen.scenario2_risk(np.linspace(0, 100, 20), 37.0)) > 0)


def test_scenario2_generation():
    sc = simgen.gen_scenario2(rng_stream(3), 20_000)
    near = np.abs(sc.data.x - 50) < 3
    emp = np.mean(sc.data.y[near] <= 37.0)
    se = math.sqrt(emp * (1 - emp) / near.sum())
    assert abs(emp - simgen.scenario2_cdf(50.0, 37.0)) < 4 * se + 0.01


def test_scenario3_truth_and_mean():
    sc = simgen.gen_scenario3(rng_stream(4), 20_000)
    assert simgen.scenario_parameters(3)["mu"] == [37.0, 39.0, 41.0]
    y = sc.data.y
    assert abs(y.mean() - 39.5) < 3 * y.std(ddof=1) / math.sqrt(y.size)
    np.testing.assert_array_equal(sc.additional_risk(np.linspace(0, 100, 5), 37.0), np.zeros(5))
    assert abs(np.corrcoef(sc.data.x, y)[0, 1]) < 0.03


def test_generate_deterministic_given_seed():
    spec = simgen.ScenarioSpec(id=2, n=100, seed=9)
    a, b = simgen.generate(spec), simgen.generate(spec)
    np.testing.assert_array_equal(a.data.x, b.data.x)
    np.testing.assert_array_equal(a.data.y, b.data.y)
    c = simgen.generate(simgen.ScenarioSpec(id=2, n=100, seed=10))
    assert not np.array_equal(a.data.y, c.data.y)


def test_parameters_for_every_scenario():
    for k in (1, 2, 3):
        assert simgen.scenario_parameters(k)
    with pytest.raises(DomainError):
        simgen.scenario_parameters(0)
