import numpy as np
import pytest

from comire.basis import build_basis
from comire.model import ParamState

from oracles import SCENARIO1_MU0, SCENARIO1_MU_INF, SCENARIO1_NU0


@pytest.fixture(scope="session")
def toy_basis():
    """Linear basis on [0, 1] with one inner knot: psi_1 = min(2x, 1), psi_2 = 0."""
    return build_basis(1, (0.0, 1.0), 1)


@pytest.fixture(scope="session")
def cubic_basis():
    return build_basis(7, (0.0, 132.0), 3)


def scenario1_state(w):
    return ParamState.from_arrays(SCENARIO1_NU0, SCENARIO1_MU0, np.ones(3), SCENARIO1_MU_INF, 1.0, w)


def random_state(rng, J, H=None):
    """A valid state with random atoms; the adversity restriction holds by construction."""
    H = int(rng.integers(1, 6)) if H is None else H
    mu0 = rng.uniform(30, 45, H)
    mu_inf = mu0.min() - rng.uniform(0.2, 6.0)
    return ParamState.from_arrays(
        rng.dirichlet(np.ones(H)), mu0, rng.uniform(0.2, 3.0, H), mu_inf, rng.uniform(0.2, 3.0),
        rng.dirichlet(np.full(J, 0.7)),
    )


@pytest.fixture(scope="session")
def scenario1_fit():
    """Scenario 1 with n = 500 and seed 42, fitted with the default settings."""
    from fitting import reference_fit

    return reference_fit(1)
