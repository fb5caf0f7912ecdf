"""Convex mixture regression model: parameters and density functionals.

The conditional density of the response at dose ``x`` is

    f_x(y) = {1 - beta(x)} f_0(y) + beta(x) f_inf(y),

where ``f_0`` is an H-component Gaussian mixture (the response density at zero
dose) and ``f_inf`` a single Gaussian centred on a more adverse value than
every component of ``f_0`` (``mu_inf < min_h mu0_h``).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import special

from .basis import SplineBasis, check_simplex, eval_basis
from .errors import ConfigurationError, DataError, InvariantError

_LOG_2PI = np.log(2.0 * np.pi)


@dataclass(frozen=True)
class ExtremalLow:
    nu0: np.ndarray
    mu0: np.ndarray
    tau0: np.ndarray

    def __post_init__(self):
        for name in ("nu0", "mu0", "tau0"):
            object.__setattr__(self, name, np.atleast_1d(np.asarray(getattr(self, name), dtype=float)))
        if not (self.nu0.shape == self.mu0.shape == self.tau0.shape) or self.nu0.ndim != 1:
            raise InvariantError("nu0, mu0 and tau0 must be vectors of equal length")
        check_simplex(self.nu0, name="nu0")
        if np.any(~(self.tau0 > 0)) or np.any(~np.isfinite(self.tau0)):
            raise InvariantError("all precisions tau0 must be positive and finite")
        if np.any(~np.isfinite(self.mu0)):
            raise InvariantError("component means mu0 must be finite")

    @property
    def H(self) -> int:
        return self.nu0.size


@dataclass(frozen=True)
class ExtremalHigh:
    mu_inf: float
    tau_inf: float

    def __post_init__(self):
        object.__setattr__(self, "mu_inf", float(self.mu_inf))
        object.__setattr__(self, "tau_inf", float(self.tau_inf))
        if not np.isfinite(self.mu_inf):
            raise InvariantError("mu_inf must be finite")
        if not (self.tau_inf > 0 and np.isfinite(self.tau_inf)):
            raise InvariantError("tau_inf must be positive and finite")


@dataclass(frozen=True)
class ParamState:
    """One complete draw of the model parameters.

    Construction enforces the adversity restriction ``mu_inf < min(mu0)``
    strictly.
    """

    low: ExtremalLow
    high: ExtremalHigh
    w: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "w", check_simplex(np.asarray(self.w, dtype=float)))
        if not self.high.mu_inf < self.low.mu0.min():
            raise InvariantError(
                f"adversity restriction violated: mu_inf={self.high.mu_inf!r} "
                f">= min(mu0)={self.low.mu0.min()!r}"
            )

    @classmethod
    def from_arrays(cls, nu0, mu0, tau0, mu_inf, tau_inf, w) -> "ParamState":
        return cls(ExtremalLow(nu0, mu0, tau0), ExtremalHigh(mu_inf, tau_inf), w)

    @property
    def nu0(self):
        return self.low.nu0

    @property
    def mu0(self):
        return self.low.mu0

    @property
    def tau0(self):
        return self.low.tau0

    @property
    def mu_inf(self):
        return self.high.mu_inf

    @property
    def tau_inf(self):
        return self.high.tau_inf

    @property
    def H(self) -> int:
        return self.low.H

    def mean_low(self) -> float:
        """Mean response at zero dose, ``nu0 . mu0``."""
        return float(self.nu0 @ self.mu0)


@dataclass(frozen=True)
class Dataset:
    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float).reshape(-1)
        y = np.asarray(self.y, dtype=float).reshape(-1)
        if x.shape != y.shape:
            raise DataError(f"x and y lengths differ ({x.size} vs {y.size})")
        if np.any(~np.isfinite(x)) or np.any(~np.isfinite(y)):
            raise DataError("dataset contains missing or non-finite values")
        if np.any(x < 0):
            raise DataError("doses must be nonnegative")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.x.size

    def __len__(self):
        return self.n


@dataclass(frozen=True)
class ModelConfig:
    """Fixed hyperparameters and basis settings."""

    H: int
    basis: SplineBasis
    alpha: np.ndarray
    eta: np.ndarray
    a_tau: float = 2.0
    b_tau: float = 2.0
    prior_mean: float = 0.0
    kappa: float = 10.0

    def __post_init__(self):
        alpha = np.atleast_1d(np.asarray(self.alpha, dtype=float))
        eta = np.atleast_1d(np.asarray(self.eta, dtype=float))
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "eta", eta)
        if self.H < 1:
            raise ConfigurationError("H must be at least 1")
        if alpha.size != self.H:
            raise ConfigurationError(f"alpha must have length H={self.H}")
        if eta.size != self.basis.J:
            raise ConfigurationError(f"eta must have length J={self.basis.J}")
        for name, v in (("alpha", alpha), ("eta", eta), ("a_tau", self.a_tau),
                        ("b_tau", self.b_tau), ("kappa", self.kappa)):
            if np.any(~(np.asarray(v) > 0)) or np.any(~np.isfinite(v)):
                raise ConfigurationError(f"{name} must be positive and finite")
        if not np.isfinite(self.prior_mean):
            raise ConfigurationError("prior_mean must be finite")

    @property
    def J(self) -> int:
        return self.basis.J

    @classmethod
    def default(cls, basis: SplineBasis, H: int = 10, prior_mean: float = 0.0,
                kappa: float = 10.0, a_tau: float = 2.0, b_tau: float = 2.0) -> "ModelConfig":
        """Symmetric shrinkage priors ``alpha_h = 1/H`` and ``eta_j = 1/J``."""
        return cls(H=H, basis=basis, alpha=np.full(H, 1.0 / H), eta=np.full(basis.J, 1.0 / basis.J),
                   a_tau=a_tau, b_tau=b_tau, prior_mean=prior_mean, kappa=kappa)


# ---------------------------------------------------------------------------
# kernels


def normal_logpdf(y, mean, precision):
    y = np.asarray(y, dtype=float)
    return 0.5 * (np.log(precision) - _LOG_2PI) - 0.5 * precision * (y - mean) ** 2


def component_logpdf(state: ParamState, y) -> np.ndarray:
    """``log nu0_h + log phi(y; mu0_h, 1/tau0_h)`` with shape ``(n, H)``."""
    y = np.atleast_1d(np.asarray(y, dtype=float))
    with np.errstate(divide="ignore"):
        lognu = np.log(state.nu0)
    return lognu + normal_logpdf(y[:, None], state.mu0, state.tau0)


def log_density_low(state: ParamState, y):
    y = np.asarray(y, dtype=float)
    out = special.logsumexp(component_logpdf(state, y), axis=1)
    return out if y.ndim else float(out[0])


def log_density_high(state: ParamState, y):
    out = normal_logpdf(y, state.mu_inf, state.tau_inf)
    return out if np.ndim(out) else float(out)


def density_low(state: ParamState, y):
    """``f_0(y) = sum_h nu0_h phi(y; mu0_h, 1/tau0_h)``."""
    return np.exp(log_density_low(state, y))


def density_high(state: ParamState, y):
    return np.exp(log_density_high(state, y))


def beta_at(state: ParamState, basis: SplineBasis, x):
    return np.clip(eval_basis(basis, x) @ state.w, 0.0, 1.0)


def _mix_log(beta, log_f0, log_finf):
    with np.errstate(divide="ignore"):
        return np.logaddexp(np.log1p(-beta) + log_f0, np.log(beta) + log_finf)


def conditional_log_density(state: ParamState, basis: SplineBasis, x, y):
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    if x.ndim == 0:
        beta = beta_at(state, basis, x)
    else:
        x, y = np.broadcast_arrays(x, y)
        beta = beta_at(state, basis, x)
    out = _mix_log(beta, log_density_low(state, y), log_density_high(state, y))
    return out if np.ndim(out) else float(out)


def conditional_density(state: ParamState, basis: SplineBasis, x, y):
    """``f_x(y) = {1 - beta(x)} f_0(y) + beta(x) f_inf(y)``."""
    return np.exp(conditional_log_density(state, basis, x, y))


def cdf_low(state: ParamState, a):
    a = np.asarray(a, dtype=float)
    z = (a[..., None] - state.mu0) * np.sqrt(state.tau0)
    return special.ndtr(z) @ state.nu0


def cdf_high(state: ParamState, a):
    return special.ndtr((np.asarray(a, dtype=float) - state.mu_inf) * np.sqrt(state.tau_inf))


def conditional_cdf(state: ParamState, basis: SplineBasis, x, a):
    """``F_x(a) = {1 - beta(x)} F_0(a) + beta(x) F_inf(a)``."""
    beta = beta_at(state, basis, x)
    f0, finf = cdf_low(state, a), cdf_high(state, a)
    return (1.0 - beta) * f0 + beta * finf


def conditional_mean(state: ParamState, basis: SplineBasis, x):
    m0 = state.mean_low()
    return m0 + (state.mu_inf - m0) * beta_at(state, basis, x)


def log_likelihood(state: ParamState, basis: SplineBasis, data: Dataset) -> float:
    """Sum over observations of ``log f_{x_i}(y_i)``."""
    if np.any(~np.isfinite(data.y)):
        raise DataError("responses must be finite")
    if data.n == 0:
        return 0.0
    return float(np.sum(conditional_log_density(state, basis, data.x, data.y)))
