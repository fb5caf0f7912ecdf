import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from comire.basis import SplineBasis, build_basis, check_simplex, eval_basis, eval_beta
from comire.errors import ConfigurationError, DomainError, InvariantError

from oracles import ispline_by_integration, ispline_by_recursion


@pytest.fixture(scope="module")
def cubic():
    return build_basis(7, (0.0, 132.0), 3)


def simplex(rng, J):
    return rng.dirichlet(np.full(J, 0.5))


def test_default_basis_has_ten_functions(cubic):
    assert cubic.J == 10
    assert cubic.zero_index == 9
    np.testing.assert_allclose(cubic.inner_knots, np.arange(1, 8) * 16.5)


def test_all_functions_vanish_at_zero(cubic):
    np.testing.assert_array_equal(eval_basis(cubic, 0.0), np.zeros(10))


def test_linear_single_knot_matches_integrated_msplines():
    basis = build_basis(1, (0.0, 1.0), 1)
    assert basis.J == 2
    t = basis.knot_vector
    for x in np.linspace(0.0, 1.0, 5):
        got = eval_basis(basis, x)
        expected = [ispline_by_integration(0, 1, t, x), 0.0]
        np.testing.assert_allclose(got, expected, atol=1e-12)
    # hand-integrated: the first function is min(2x, 1)
    np.testing.assert_allclose(eval_basis(basis, np.array([0.1, 0.25, 0.7]))[:, 0], [0.2, 0.5, 1.0])


@pytest.mark.parametrize("degree", [1, 2, 3])
def test_matches_mspline_integral_oracle(degree):
    basis = SplineBasis(degree, (2.0, 3.5, 7.0), (0.0, 10.0))
    t = basis.knot_vector
    for x in [0.3, 2.0, 4.1, 6.99, 9.5, 10.0]:
        got = eval_basis(basis, x)
        want = [ispline_by_integration(j, degree, t, x) for j in range(basis.J - 1)]
        np.testing.assert_allclose(got[:-1], want, atol=1e-10)
        assert got[-1] == 0.0


def test_midpoint_matches_bspline_suffix_sums():
    basis = build_basis(1, (0.0, 2.0), 3)
    t = basis.knot_vector
    x = 1.0
    want = [ispline_by_recursion(j, 3, t, x) for j in range(basis.J - 1)]
    np.testing.assert_allclose(eval_basis(basis, x)[:-1], want, atol=1e-10)


def test_zero_function_and_clamping(cubic):
    inside = eval_basis(cubic, np.array([0.0, 50.0, 132.0]))
    assert np.all(inside[:, -1] == 0.0)
    beyond = eval_basis(cubic, 500.0)
    np.testing.assert_allclose(beyond, np.ones(10))
    # non-zero functions already reach 1 at the right boundary
    np.testing.assert_allclose(eval_basis(cubic, 132.0)[:-1], np.ones(9), atol=1e-12)


def test_negative_or_nan_dose_rejected(cubic):
    with pytest.raises(DomainError):
        eval_basis(cubic, -0.1)
    with pytest.raises(DomainError):
        eval_basis(cubic, np.array([1.0, np.nan]))


@pytest.mark.parametrize("kwargs", [
    dict(degree=0, inner_knots=(1.0,), boundary_knots=(0.0, 2.0)),
    dict(degree=3, inner_knots=(1.0, 1.0), boundary_knots=(0.0, 2.0)),
    dict(degree=3, inner_knots=(1.0,), boundary_knots=(0.5, 2.0)),
    dict(degree=3, inner_knots=(3.0,), boundary_knots=(0.0, 2.0)),
])
def test_invalid_basis_rejected(kwargs):
    with pytest.raises(ConfigurationError):
        SplineBasis(**kwargs)


def test_build_basis_validation():
    with pytest.raises(ConfigurationError):
        build_basis(0, (0, 1))
    with pytest.raises(ConfigurationError):
        build_basis(3, (0, 0))
    with pytest.raises(ConfigurationError):
        build_basis(3, (0, 1), degree=0)


def test_unit_weight_selects_column(cubic):
    x = np.linspace(0, 140, 29)
    psi = eval_basis(cubic, x)
    for j in range(cubic.J):
        np.testing.assert_allclose(eval_beta(cubic, np.eye(cubic.J)[j], x), psi[:, j])


def test_uniform_weights_average_the_basis(cubic):
    x = 0.5 * (cubic.inner_knots[2] + cubic.inner_knots[3])
    w = np.full(10, 0.1)
    assert eval_beta(cubic, w, x) == pytest.approx(eval_basis(cubic, x).mean(), abs=1e-14)


def test_beta_is_monotone_for_random_weights(cubic):
    rng = np.random.default_rng(7)
    x = np.linspace(0.0, 150.0, 1000)
    psi = eval_basis(cubic, x)
    for _ in range(100):
        w = simplex(rng, cubic.J)
        beta = psi @ w
        assert beta[0] == 0.0
        assert np.all(np.diff(beta) >= -1e-14)
        assert np.all(beta[x <= cubic.dose_max] <= 1.0 - w[cubic.zero_index] + 1e-12)


def test_off_simplex_weights_rejected(cubic):
    with pytest.raises(InvariantError):
        eval_beta(cubic, np.full(10, 0.2), 1.0)
    with pytest.raises(InvariantError):
        eval_beta(cubic, np.r_[1.1, -0.1, np.zeros(8)], 1.0)
    with pytest.raises(InvariantError):
        eval_beta(cubic, np.full(5, 0.2), 1.0)
    check_simplex(np.r_[1.0 + 5e-11, np.zeros(9)])


@settings(max_examples=60, deadline=None)
@given(
    x1=st.floats(0, 200, allow_nan=False),
    x2=st.floats(0, 200, allow_nan=False),
    degree=st.integers(1, 4),
    k=st.integers(1, 9),
)
def test_basis_is_componentwise_monotone_in_unit_range(x1, x2, degree, k):
    basis = build_basis(k, (0.0, 120.0), degree)
    lo, hi = sorted((x1, x2))
    a, b = eval_basis(basis, lo), eval_basis(basis, hi)
    assert np.all((a >= 0) & (a <= 1) & (b >= 0) & (b <= 1))
    assert np.all(a <= b + 1e-13)
    assert a.sum() <= basis.J


@settings(max_examples=60, deadline=None)
@given(lam=st.floats(0, 1), seed=st.integers(0, 2**32 - 1), x=st.floats(0, 150))
def test_beta_is_linear_in_weights(lam, seed, x):
    basis = build_basis(7, (0.0, 132.0), 3)
    rng = np.random.default_rng(seed)
    w, v = simplex(rng, 10), simplex(rng, 10)
    mix = lam * w + (1 - lam) * v
    mix /= mix.sum()
    got = eval_beta(basis, mix, x)
    want = lam * eval_beta(basis, w, x) + (1 - lam) * eval_beta(basis, v, x)
    assert got == pytest.approx(want, abs=1e-12)


def test_vector_and_scalar_evaluation_agree(cubic):
    x = np.array([0.0, 3.3, 77.0, 131.9])
    M = eval_basis(cubic, x)
    for i, xi in enumerate(x):
        np.testing.assert_array_equal(M[i], eval_basis(cubic, xi))
    assert cubic(3.3).shape == (10,)
