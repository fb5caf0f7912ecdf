"""Posterior predictive checks and MCMC convergence diagnostics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .basis import SplineBasis, eval_basis
from .errors import DomainError, UsageError
from .gibbs import PosteriorDraws
from .model import Dataset, ParamState, log_likelihood
from .risk import draw_risk_at_infinity
from .samplers import rng_stream

GEWEKE_FIRST = 0.1
GEWEKE_LAST = 0.5
GEWEKE_THRESHOLD = 3.0


@dataclass(frozen=True)
class PpcResult:
    grid: np.ndarray
    observed_curve: np.ndarray
    replicate_curves: np.ndarray  # (n_replicates, grid size)
    replicate_draws: np.ndarray
    tail_flag: float

    @property
    def envelope(self):
        return np.nanmin(self.replicate_curves, axis=0), np.nanmax(self.replicate_curves, axis=0)


def simulate_predictive_dataset(rng, draw: ParamState, basis: SplineBasis, x_values) -> Dataset:
    """Responses at ``x_values`` simulated through the latent-label hierarchy."""
    x = np.asarray(x_values, dtype=float).reshape(-1)
    n = x.size
    beta = eval_basis(basis, x) @ draw.w if n else np.zeros(0)
    d = rng.random(n) < beta
    c = rng.choice(draw.H, size=n, p=draw.nu0 / draw.nu0.sum())
    mean = np.where(d, draw.mu_inf, draw.mu0[c])
    sd = np.where(d, 1.0 / np.sqrt(draw.tau_inf), 1.0 / np.sqrt(draw.tau0[c]))
    y = mean + sd * rng.standard_normal(n)
    return Dataset(x, y)


def silverman_bandwidth(x) -> float:
    """Silverman's rule of thumb, ``0.9 min(sd, IQR/1.34) n^(-1/5)``."""
    x = np.asarray(x, dtype=float)
    if x.size < 2:
        raise DomainError("need at least two doses to choose a bandwidth")
    sd = np.std(x, ddof=1)
    q75, q25 = np.percentile(x, [75, 25])
    spread = min(sd, (q75 - q25) / 1.34) if q75 > q25 else sd
    if not spread > 0:
        raise DomainError("doses have no spread; pass an explicit bandwidth")
    return float(0.9 * spread * x.size ** (-0.2))


def smoothed_empirical_cdf(data: Dataset, a: float, dose_grid, bandwidth: float) -> np.ndarray:
    """Gaussian-kernel (Nadaraya-Watson) estimate of ``pr(y <= a | x)`` on ``dose_grid``.

    Grid points with zero total kernel weight are returned as NaN.
    """
    if not bandwidth > 0:
        raise DomainError("bandwidth must be positive")
    grid = np.asarray(dose_grid, dtype=float)
    hit = (data.y <= a).astype(float)
    K = np.exp(-0.5 * ((grid[:, None] - data.x[None, :]) / bandwidth) ** 2)
    num = K @ hit
    # hits plus misses, so all-hit and no-hit data give exactly 1 and 0
    total = num + K @ (1.0 - hit)
    with np.errstate(invalid="ignore", divide="ignore"):
        curve = num / total
    curve[~(total > 0)] = np.nan
    return np.clip(curve, 0.0, 1.0)


def default_ppc_grid(x, size: int = 100, upper_quantile: float = 0.99) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return np.linspace(0.0, float(np.quantile(x, upper_quantile)), size)


def replicate_indices(n_draws: int, n_replicates: int) -> np.ndarray:
    """Evenly spaced retained draws."""
    return np.round(np.linspace(0, n_draws - 1, n_replicates)).astype(int)


def run_ppc(draws: PosteriorDraws, basis: SplineBasis, data: Dataset, a: float,
            n_replicates: int = 50, bandwidth: float | None = None, grid=None,
            seed: int = 0) -> PpcResult:
    """Compare the observed smoothed ``F_x(a)`` with curves from replicated datasets.

    Replicate ``r`` is simulated from an evenly spaced retained draw with its
    own random stream ``(seed, r)``.
    """
    if n_replicates < 1:
        raise UsageError("n_replicates must be at least 1")
    if n_replicates > len(draws):
        raise UsageError(f"n_replicates={n_replicates} exceeds the {len(draws)} retained draws")
    if data.n == 0:
        raise UsageError("posterior predictive checks need observed data")
    bandwidth = silverman_bandwidth(data.x) if bandwidth is None else float(bandwidth)
    grid = default_ppc_grid(data.x) if grid is None else np.asarray(grid, dtype=float)
    observed = smoothed_empirical_cdf(data, a, grid, bandwidth)
    idx = replicate_indices(len(draws), n_replicates)
    reps = np.empty((n_replicates, grid.size))
    for r, i in enumerate(idx):
        sim = simulate_predictive_dataset(rng_stream(seed, r), draws.state(i), basis, data.x)
        reps[r] = smoothed_empirical_cdf(sim, a, grid, bandwidth)
    lo, hi = np.nanmin(reps, axis=0), np.nanmax(reps, axis=0)
    valid = np.isfinite(observed) & np.isfinite(lo)
    outside = valid & ((observed < lo) | (observed > hi))
    tail = float(outside.sum() / valid.sum()) if valid.any() else float("nan")
    return PpcResult(grid, observed, reps, idx, tail)


# ---------------------------------------------------------------------------
# convergence


def spectral_density_zero(x, max_lag: int) -> float:
    """Bartlett-window estimate of the spectral density at frequency zero.

    Normalized so that for an uncorrelated series it estimates the variance.
    """
    x = np.asarray(x, dtype=float)
    n = x.size
    xc = x - x.mean()
    max_lag = int(min(max_lag, n - 1))
    gamma0 = xc @ xc / n
    s = gamma0
    for k in range(1, max_lag + 1):
        s += 2.0 * (1.0 - k / (max_lag + 1.0)) * (xc[:-k] @ xc[k:]) / n
    return float(max(s, 0.0))


def bartlett_bandwidth(x) -> int:
    """Automatic Bartlett lag from an AR(1) plug-in, ``1.1447 (alpha n)^(1/3)``.

    Adapts the window to the chain's autocorrelation; an uncorrelated chain
    gets a lag of about one.
    """
    x = np.asarray(x, dtype=float)
    xc = x - x.mean()
    den = xc[:-1] @ xc[:-1]
    rho = float(np.clip(xc[:-1] @ xc[1:] / den, -0.97, 0.97)) if den > 0 else 0.0
    alpha = 4.0 * rho**2 / ((1.0 - rho) ** 2 * (1.0 + rho) ** 2)
    return max(1, int(np.ceil(1.1447 * (alpha * x.size) ** (1.0 / 3.0))))


def geweke_z(chain, first_frac: float = GEWEKE_FIRST, last_frac: float = GEWEKE_LAST) -> float:
    """Geweke z-score comparing the means of an early and a late chain window.

    Returns NaN when both windows are constant.
    """
    x = np.asarray(chain, dtype=float)
    n = x.size
    if n < 100:
        raise DomainError(f"chain too short for the Geweke diagnostic ({n} < 100)")
    if not (0 < first_frac < 1 and 0 < last_frac < 1 and first_frac + last_frac <= 1):
        raise DomainError("window fractions must be positive and sum to at most 1")
    a = x[: int(np.floor(first_frac * n))]
    b = x[n - int(np.floor(last_frac * n)):]
    va = spectral_density_zero(a, bartlett_bandwidth(a)) / a.size
    vb = spectral_density_zero(b, bartlett_bandwidth(b)) / b.size
    diff = a.mean() - b.mean()
    if va + vb == 0:
        return 0.0 if diff == 0 and np.ptp(x) > 0 else float("nan")
    return float(diff / np.sqrt(va + vb))


def default_monitor_doses(x) -> np.ndarray:
    """Observed dose deciles, where the data pin the dose-response down."""
    return np.quantile(np.asarray(x, dtype=float), np.linspace(0.1, 0.9, 9))


def monitored_scalars(draws: PosteriorDraws, basis: SplineBasis, a: float, doses,
                      data: Dataset | None = None) -> dict:
    """Identified, label-invariant scalar summaries of each draw, keyed by name.

    Component labels can switch and neighbouring I-spline coefficients trade
    mass freely, so neither the individual atoms nor the individual ``w_j`` are
    monitored; their identified functionals are.
    """
    doses = np.atleast_1d(np.asarray(doses, dtype=float))
    r_inf = draw_risk_at_infinity(draws, a)
    out = {
        "mu_inf": draws.mu_inf,
        "tau_inf": draws.tau_inf,
        "mean_low": np.sum(draws.nu0 * draws.mu0, axis=1),
        "F0_a": np.sum(draws.nu0 * ndtr((a - draws.mu0) * np.sqrt(draws.tau0)), axis=1),
        "Finf_a": ndtr((a - draws.mu_inf) * np.sqrt(draws.tau_inf)),
        "risk_inf_a": r_inf,
    }
    beta = draws.w @ eval_basis(basis, doses).T
    for k, x in enumerate(doses):
        out[f"beta({x:.4g})"] = beta[:, k]
    for k, x in enumerate(doses):
        out[f"risk({x:.4g})"] = beta[:, k] * r_inf
    if data is not None and data.n:
        out["loglik"] = np.array([log_likelihood(s, basis, data) for s in draws.states()])
    return out


@dataclass(frozen=True)
class DiagnosticRow:
    chain: int
    name: str
    z: float

    @property
    def passed(self):
        return bool(np.isfinite(self.z) and abs(self.z) < GEWEKE_THRESHOLD)

    @property
    def status(self) -> str:
        if not np.isfinite(self.z):
            return "n/a"
        return "pass" if self.passed else "fail"


def geweke_report(draws: PosteriorDraws, basis: SplineBasis, a: float, doses=None,
                  data: Dataset | None = None) -> list:
    """Geweke z for every monitored scalar of every chain.

    ``doses`` defaults to the deciles of the observed doses when ``data`` is
    given, and to ten points across the basis range otherwise.
    """
    if doses is None:
        if data is not None and data.n:
            doses = default_monitor_doses(data.x)
        else:
            doses = np.linspace(0.0, basis.dose_max, 12)[1:-1]
    rows = []
    for chain_id in np.unique(draws.chain):
        part = draws.for_chain(int(chain_id))
        for name, values in monitored_scalars(part, basis, a, doses, data).items():
            rows.append(DiagnosticRow(int(chain_id), name, geweke_z(values)))
    return rows
