import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, stats

from comire.errors import DataError, InvariantError, ConfigurationError
from comire.model import (
    Dataset,
    ModelConfig,
    ParamState,
    cdf_low,
    conditional_cdf,
    conditional_density,
    conditional_log_density,
    conditional_mean,
    density_high,
    density_low,
    log_likelihood,
)
from comire.samplers import rng_stream

from conftest import random_state, scenario1_state
from oracles import normal_cdf, scenario1_f0_cdf

BETA_ONE = np.array([1.0, 0.0])  # with the toy basis, beta(x) = min(2x, 1)


def hierarchical_sample(rng, state, basis, x, n):
    """Simulate y at dose x through basis label b, indicator d and component c."""
    from comire.basis import eval_basis

    psi = eval_basis(basis, x)
    b = rng.choice(state.w.size, size=n, p=state.w)
    d = rng.random(n) < psi[b]
    c = rng.choice(state.H, size=n, p=state.nu0)
    mean = np.where(d, state.mu_inf, state.mu0[c])
    sd = np.where(d, state.tau_inf ** -0.5, state.tau0[c] ** -0.5)
    return mean + sd * rng.standard_normal(n)


# -- types ------------------------------------------------------------------


def test_adversity_restriction_is_strict():
    with pytest.raises(InvariantError):
        ParamState.from_arrays([1.0], [37.0], [1.0], 37.0, 1.0, [1.0])
    with pytest.raises(InvariantError):
        ParamState.from_arrays([0.5, 0.5], [37.0, 36.0], [1.0, 1.0], 36.5, 1.0, [1.0])
    ParamState.from_arrays([1.0], [37.0], [1.0], np.nextafter(37.0, 0), 1.0, [1.0])


def test_state_validation():
    with pytest.raises(InvariantError):
        ParamState.from_arrays([0.5, 0.6], [37.0, 38.0], [1.0, 1.0], 30.0, 1.0, [1.0])
    with pytest.raises(InvariantError):
        ParamState.from_arrays([1.0], [37.0], [0.0], 30.0, 1.0, [1.0])
    with pytest.raises(InvariantError):
        ParamState.from_arrays([1.0], [37.0], [1.0], 30.0, -1.0, [1.0])


def test_dataset_validation():
    with pytest.raises(DataError):
        Dataset([1.0, 2.0], [1.0])
    with pytest.raises(DataError):
        Dataset([1.0, -2.0], [1.0, 2.0])
    with pytest.raises(DataError):
        Dataset([1.0, 2.0], [1.0, np.nan])
    assert len(Dataset([], [])) == 0


def test_config_defaults_and_validation(cubic_basis):
    cfg = ModelConfig.default(cubic_basis, prior_mean=39.0)
    np.testing.assert_allclose(cfg.alpha, np.full(10, 0.1))
    np.testing.assert_allclose(cfg.eta, np.full(10, 0.1))
    assert (cfg.H, cfg.J, cfg.kappa, cfg.a_tau, cfg.b_tau) == (10, 10, 10.0, 2.0, 2.0)
    with pytest.raises(ConfigurationError):
        ModelConfig(H=2, basis=cubic_basis, alpha=[1.0, 0.0], eta=np.ones(10))
    with pytest.raises(ConfigurationError):
        ModelConfig(H=2, basis=cubic_basis, alpha=[1.0, 1.0], eta=np.ones(3))


# -- densities ----------------------------------------------------------------


def test_standard_normal_mode():
    s = ParamState.from_arrays([1.0], [0.0], [1.0], -1.0, 1.0, [1.0])
    assert density_low(s, 0.0) == pytest.approx(0.3989422804014327, abs=1e-15)


def test_scenario1_low_density_at_40():
    s = scenario1_state(BETA_ONE)
    want = sum(v * math.exp(-0.5 * (40 - m) ** 2) / math.sqrt(2 * math.pi)
               for v, m in zip((0.05, 0.15, 0.80), (37, 39, 40)))
    assert density_low(s, 40.0) == pytest.approx(want, rel=1e-13)


def test_densities_integrate_to_one():
    s = scenario1_state(BETA_ONE)
    y = np.linspace(0, 80, 200_001)
    assert integrate.trapezoid(density_low(s, y), y) == pytest.approx(1.0, abs=1e-6)
    assert integrate.trapezoid(density_high(s, y), y) == pytest.approx(1.0, abs=1e-6)


def test_conditional_density_endpoints_and_midpoint(toy_basis):
    s = scenario1_state(BETA_ONE)
    y = np.linspace(30, 45, 31)
    np.testing.assert_allclose(conditional_density(s, toy_basis, 0.0, y), density_low(s, y), rtol=1e-14)
    np.testing.assert_allclose(conditional_density(s, toy_basis, 1.0, y), density_high(s, y), rtol=1e-14)
    two = ParamState.from_arrays([1.0], [1.0], [1.0], 0.0, 1.0, BETA_ONE)
    half = conditional_density(two, toy_basis, 0.25, y - 35)
    want = 0.5 * (stats.norm.pdf(y - 35, 1.0) + stats.norm.pdf(y - 35, 0.0))
    np.testing.assert_allclose(half, want, rtol=1e-13)


def test_log_density_survives_sharp_components(toy_basis):
    s = ParamState.from_arrays([0.5, 0.5], [0.0, 50.0], [1e6, 1e6], -10.0, 1e6, BETA_ONE)
    val = conditional_log_density(s, toy_basis, 0.0, 25.0)
    assert np.isfinite(val)
    # equidistant from both components, so the two halves add back up
    assert val == pytest.approx(0.5 * math.log(1e6 / (2 * math.pi)) - 0.5e6 * 625, rel=1e-12)


# -- CDF ------------------------------------------------------------------------


def test_cdf_reference_values(toy_basis):
    s = scenario1_state(BETA_ONE)
    assert conditional_cdf(s, toy_basis, 1.0, 37.0) == pytest.approx(0.841345, abs=1e-6)
    # 0.05 Phi(0) + 0.15 Phi(-2) + 0.80 Phi(-3) = 0.0294924...; the rounded
    # reference 0.029494 agrees to 2e-6
    assert conditional_cdf(s, toy_basis, 0.0, 37.0) == pytest.approx(0.029494, abs=2e-6)
    assert conditional_cdf(s, toy_basis, 0.0, 37.0) == pytest.approx(0.0294924382, abs=1e-10)
    assert conditional_cdf(s, toy_basis, 0.0, 37.0) == pytest.approx(scenario1_f0_cdf(37.0), abs=1e-15)
    assert conditional_cdf(s, toy_basis, 0.3, 40.0 + 40.0) == pytest.approx(1.0, abs=1e-12)
    assert conditional_cdf(s, toy_basis, 0.3, -1e3) == pytest.approx(0.0, abs=1e-12)


def test_cdf_is_integral_of_density(toy_basis):
    s = scenario1_state(BETA_ONE)
    for x in (0.0, 0.2, 0.7):
        for a in np.linspace(32, 44, 20):
            area = integrate.quad(lambda y: conditional_density(s, toy_basis, x, y), -np.inf, a,
                                  epsabs=1e-12, limit=200)[0]
            assert area == pytest.approx(conditional_cdf(s, toy_basis, x, a), abs=1e-6)


def test_cdf_vectorizes_over_thresholds(toy_basis):
    s = scenario1_state(BETA_ONE)
    a = np.linspace(30, 45, 7)
    got = conditional_cdf(s, toy_basis, 0.1, a)
    want = [conditional_cdf(s, toy_basis, 0.1, ai) for ai in a]
    np.testing.assert_allclose(got, want, rtol=1e-15)
    assert np.all(np.diff(got) > 0)
    np.testing.assert_allclose(cdf_low(s, a), [scenario1_f0_cdf(ai) for ai in a], atol=1e-15)


@pytest.mark.parametrize("x,beta", [(0.001, 0.002), (0.25, 0.5), (1.0, 1.0)])
def test_marginalization_equivalence(toy_basis, x, beta):
    """Simulating through the latent labels reproduces the conditional CDF."""
    s = scenario1_state(BETA_ONE)
    y = hierarchical_sample(rng_stream(60), s, toy_basis, x, 100_000)
    res = stats.kstest(y, lambda a: conditional_cdf(s, toy_basis, x, a))
    assert res.pvalue > 0.01


# -- conditional mean -----------------------------------------------------------


def test_conditional_mean_values(toy_basis):
    s = scenario1_state(BETA_ONE)
    assert conditional_mean(s, toy_basis, 0.0) == pytest.approx(39.70, abs=1e-12)
    assert conditional_mean(s, toy_basis, 1.0) == pytest.approx(36.0, abs=1e-12)
    assert conditional_mean(s, toy_basis, 0.25) == pytest.approx(37.85, abs=1e-12)


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_conditional_mean_nonincreasing(cubic_basis, seed):
    s = random_state(np.random.default_rng(seed), cubic_basis.J)
    m = conditional_mean(s, cubic_basis, np.linspace(0, 150, 300))
    assert np.all(np.diff(m) <= 1e-12)


# -- likelihood -------------------------------------------------------------------


def test_log_likelihood_single_and_duplicated(toy_basis):
    s = scenario1_state(np.array([0.6, 0.4]))
    one = Dataset([0.3], [37.2])
    assert log_likelihood(s, toy_basis, one) == pytest.approx(
        math.log(conditional_density(s, toy_basis, 0.3, 37.2)), rel=1e-14)
    rng = np.random.default_rng(3)
    d = Dataset(rng.uniform(0, 1, 10), rng.normal(38, 2, 10))
    dd = Dataset(np.r_[d.x, d.x], np.r_[d.y, d.y])
    assert log_likelihood(s, toy_basis, dd) == pytest.approx(2 * log_likelihood(s, toy_basis, d), rel=1e-14)


def test_log_likelihood_matches_sum_of_logs(toy_basis):
    s = scenario1_state(np.array([0.6, 0.4]))
    rng = np.random.default_rng(4)
    x, y = rng.uniform(0, 1.0, 10), rng.normal(38, 2, 10)
    want = 0.0
    for xi, yi in zip(x, y):
        beta = 0.6 * min(2 * xi, 1.0)
        f0 = sum(v * stats.norm.pdf(yi, m) for v, m in zip((0.05, 0.15, 0.80), (37, 39, 40)))
        want += math.log((1 - beta) * f0 + beta * stats.norm.pdf(yi, 36))
    assert log_likelihood(s, toy_basis, Dataset(x, y)) == pytest.approx(want, abs=1e-10)
    assert log_likelihood(s, toy_basis, Dataset([], [])) == 0.0


def test_normal_cdf_helper_consistent():
    # guards the oracle itself
    assert normal_cdf(1.0) == pytest.approx(0.841344746068543, abs=1e-15)
