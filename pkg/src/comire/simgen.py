"""Synthetic dose-response scenarios.

Doses follow a right-skewed gamma law.  Responses come from

* scenario 1: the convex mixture model itself (correct specification),
* scenario 2: a three-component mixture whose locations drift with dose,
* scenario 3: a dose-independent three-component mixture (no effect).

Each generator returns the data together with the truth needed to score a
fit: the true additional risk as a callable of ``(x, a)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import stats

from .errors import DomainError
from .model import Dataset, ParamState
from .samplers import rng_stream

DOSE_SHAPE = 2.0
DOSE_SCALE = 15.0

S1_NU0 = (0.05, 0.15, 0.80)
S1_MU0 = (37.0, 39.0, 40.0)
S1_MU_INF = 36.0
S1_BETA_SHAPE = 6.0
S1_BETA_RATE = 0.1

S2_WEIGHTS = (0.10, 0.25, 0.65)
S2_SLOPES = (-1.0 / 300.0, -1.0 / 50.0, -1.0 / 75.0)
S2_INTERCEPTS = (35.5, 38.5, 40.5)

S3_WEIGHTS = (0.25, 0.25, 0.50)
S3_MU = (37.0, 39.0, 41.0)


@dataclass(frozen=True)
class ScenarioSpec:
    id: int
    n: int
    dose_shape: float = DOSE_SHAPE
    dose_scale: float = DOSE_SCALE
    seed: int = 0

    def __post_init__(self):
        if self.id not in (1, 2, 3):
            raise DomainError(f"unknown scenario {self.id}; expected 1, 2 or 3")
        if self.n <= 0:
            raise DomainError("n must be positive")


@dataclass(frozen=True)
class Scenario:
    data: Dataset
    additional_risk: Callable
    cdf: Callable
    state: ParamState | None = None
    beta: Callable | None = None


def gen_doses(rng, n: int, shape: float = DOSE_SHAPE, scale: float = DOSE_SCALE) -> np.ndarray:
    if not (shape > 0 and scale > 0):
        raise DomainError("dose shape and scale must be positive")
    if n < 0:
        raise DomainError("n must be nonnegative")
    return rng.gamma(shape, scale, size=n)


def _mixture_draw(rng, weights, means):
    """One draw per row from unit-variance mixtures; ``means`` is ``(n, K)``."""
    n = means.shape[0]
    comp = rng.choice(len(weights), size=n, p=np.asarray(weights))
    return means[np.arange(n), comp] + rng.standard_normal(n)


# -- scenario 1 ------------------------------------------------------------


def scenario1_state() -> ParamState:
    """True parameters; the true beta is not spline-based, see :func:`scenario1_beta`."""
    return ParamState.from_arrays(S1_NU0, S1_MU0, (1.0, 1.0, 1.0), S1_MU_INF, 1.0, (1.0,))


def scenario1_beta(x):
    return stats.gamma.cdf(x, S1_BETA_SHAPE, scale=1.0 / S1_BETA_RATE)


def scenario1_cdf(x, a):
    a = np.asarray(a, dtype=float)
    beta = scenario1_beta(x)
    f0 = np.sum(np.asarray(S1_NU0) * stats.norm.cdf(a[..., None] - np.asarray(S1_MU0)), axis=-1)
    finf = stats.norm.cdf(a - S1_MU_INF)
    return (1.0 - beta) * f0 + beta * finf


def scenario1_risk(x, a):
    return scenario1_cdf(x, a) - scenario1_cdf(0.0, a)


def gen_scenario1(rng, n: int, shape: float = DOSE_SHAPE, scale: float = DOSE_SCALE) -> Scenario:
    """Data from the convex mixture with gamma-CDF dose-response."""
    if n <= 0:
        raise DomainError("n must be positive")
    x = gen_doses(rng, n, shape, scale)
    d = rng.random(n) < scenario1_beta(x)
    c = rng.choice(3, size=n, p=np.asarray(S1_NU0))
    mean = np.where(d, S1_MU_INF, np.asarray(S1_MU0)[c])
    y = mean + rng.standard_normal(n)
    return Scenario(Dataset(x, y), scenario1_risk, scenario1_cdf, scenario1_state(), scenario1_beta)


# -- scenario 2 ------------------------------------------------------------


def scenario2_means(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return np.asarray(S2_INTERCEPTS) + x[..., None] * np.asarray(S2_SLOPES)


def scenario2_cdf(x, a):
    x, a = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(a, dtype=float))
    return np.sum(np.asarray(S2_WEIGHTS) * stats.norm.cdf(a[..., None] - scenario2_means(x)), axis=-1)


def scenario2_risk(x, a):
    return scenario2_cdf(x, a) - scenario2_cdf(np.zeros_like(np.asarray(x, dtype=float)), a)


def gen_scenario2(rng, n: int, shape: float = DOSE_SHAPE, scale: float = DOSE_SCALE) -> Scenario:
    """Mixture with dose-dependent locations (misspecified for the model)."""
    if n <= 0:
        raise DomainError("n must be positive")
    x = gen_doses(rng, n, shape, scale)
    y = _mixture_draw(rng, S2_WEIGHTS, scenario2_means(x))
    return Scenario(Dataset(x, y), scenario2_risk, scenario2_cdf)


# -- scenario 3 ------------------------------------------------------------


def scenario3_cdf(x, a):
    x, a = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(a, dtype=float))
    return np.sum(np.asarray(S3_WEIGHTS) * stats.norm.cdf(a[..., None] - np.asarray(S3_MU)), axis=-1)


def scenario3_risk(x, a):
    return np.zeros(np.broadcast(np.asarray(x), np.asarray(a)).shape)


def gen_scenario3(rng, n: int, shape: float = DOSE_SHAPE, scale: float = DOSE_SCALE) -> Scenario:
    """Responses independent of dose."""
    if n <= 0:
        raise DomainError("n must be positive")
    x = gen_doses(rng, n, shape, scale)
    y = _mixture_draw(rng, S3_WEIGHTS, np.broadcast_to(np.asarray(S3_MU), (n, 3)))
    return Scenario(Dataset(x, y), scenario3_risk, scenario3_cdf)


GENERATORS = {1: gen_scenario1, 2: gen_scenario2, 3: gen_scenario3}


def scenario_parameters(scenario_id: int) -> dict:
    """True generating parameters of a scenario, as plain JSON-ready values."""
    if scenario_id == 1:
        return {"nu0": list(S1_NU0), "mu0": list(S1_MU0), "sd0": [1.0, 1.0, 1.0],
                "mu_inf": S1_MU_INF, "sd_inf": 1.0,
                "beta": {"family": "gamma_cdf", "shape": S1_BETA_SHAPE, "rate": S1_BETA_RATE}}
    if scenario_id == 2:
        return {"weights": list(S2_WEIGHTS), "intercepts": list(S2_INTERCEPTS),
                "slopes": list(S2_SLOPES), "sd": 1.0}
    if scenario_id == 3:
        return {"weights": list(S3_WEIGHTS), "mu": list(S3_MU), "sd": 1.0}
    raise DomainError(f"unknown scenario {scenario_id}; expected 1, 2 or 3")


def generate(spec: ScenarioSpec, rng=None) -> Scenario:
    rng = rng_stream(spec.seed) if rng is None else rng
    return GENERATORS[spec.id](rng, spec.n, spec.dose_shape, spec.dose_scale)
