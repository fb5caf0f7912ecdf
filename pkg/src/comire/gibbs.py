"""Partially collapsed Gibbs sampler for convex mixture regression.

One sweep updates, in order,

1. the basis labels ``b`` with the extremal-membership indicators integrated out,
2. the basis weights ``w | b`` (Dirichlet),
3. the membership indicators ``d | w, theta`` (Bernoulli),
4. the low-dose component labels ``c`` of units with ``d = 0``,
5. the low-dose mixture weights ``nu0 | c, d`` (Dirichlet),
6. each low-dose atom ``(mu0_h, tau0_h)``, with ``mu0_h`` truncated to
   ``(mu_inf, inf)``,
7. the high-dose atom ``(mu_inf, tau_inf)``, with ``mu_inf`` truncated to
   ``(-inf, min_h mu0_h)``.

Every step samples an exact full conditional; there are no accept/reject
moves.  Labels are stored 0-based.
"""

from __future__ import annotations

import csv
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .basis import SplineBasis, eval_basis
from .errors import ConfigurationError, NumericalError
from .model import (
    Dataset,
    ExtremalHigh,
    ExtremalLow,
    ModelConfig,
    ParamState,
    component_logpdf,
    log_density_high,
    log_density_low,
)
from .samplers import (
    rng_stream,
    sample_categorical_rows,
    sample_dirichlet,
    sample_gamma,
    sample_truncated_normal,
)

log = logging.getLogger(__name__)

STEP_NAMES = ("b", "w", "d", "c", "nu0", "theta0", "theta_inf")


@dataclass
class AugmentedState:
    """Per-observation latent labels.

    ``c[i]`` is meaningful only where ``d[i] == 0``.
    """

    b: np.ndarray
    c: np.ndarray
    d: np.ndarray

    @classmethod
    def empty(cls, n: int) -> "AugmentedState":
        return cls(np.zeros(n, dtype=np.intp), np.zeros(n, dtype=np.intp), np.zeros(n, dtype=np.intp))


@dataclass(frozen=True)
class ChainSettings:
    iterations: int = 5000
    burn_in: int = 2000
    thin: int = 5
    chains: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.iterations < 1:
            raise ConfigurationError("iterations must be positive")
        if not 0 <= self.burn_in < self.iterations:
            raise ConfigurationError("burn_in must satisfy 0 <= burn_in < iterations")
        if self.thin < 1:
            raise ConfigurationError("thin must be at least 1")
        if self.chains < 1:
            raise ConfigurationError("chains must be at least 1")
        if self.seed < 0:
            raise ConfigurationError("seed must be nonnegative")

    @property
    def retained_per_chain(self) -> int:
        return (self.iterations - self.burn_in) // self.thin


@dataclass
class PosteriorDraws:
    """Retained draws, stacked along the first axis."""

    w: np.ndarray
    nu0: np.ndarray
    mu0: np.ndarray
    tau0: np.ndarray
    mu_inf: np.ndarray
    tau_inf: np.ndarray
    iteration: np.ndarray
    chain: np.ndarray
    # every update is an exact full-conditional draw, always accepted
    step_kinds: dict = field(default_factory=lambda: {s: "exact-conditional" for s in STEP_NAMES})

    def __len__(self):
        return self.mu_inf.shape[0]

    @property
    def H(self) -> int:
        return self.nu0.shape[1]

    @property
    def J(self) -> int:
        return self.w.shape[1]

    def state(self, i: int) -> ParamState:
        return ParamState.from_arrays(self.nu0[i], self.mu0[i], self.tau0[i],
                                      self.mu_inf[i], self.tau_inf[i], self.w[i])

    def states(self):
        for i in range(len(self)):
            yield self.state(i)

    def for_chain(self, chain_id: int) -> "PosteriorDraws":
        return self.subset(self.chain == chain_id)

    def subset(self, index) -> "PosteriorDraws":
        return PosteriorDraws(self.w[index], self.nu0[index], self.mu0[index], self.tau0[index],
                              self.mu_inf[index], self.tau_inf[index], self.iteration[index],
                              self.chain[index])

    @classmethod
    def concatenate(cls, parts) -> "PosteriorDraws":
        parts = list(parts)
        cat = lambda name: np.concatenate([getattr(p, name) for p in parts])
        return cls(*(cat(n) for n in ("w", "nu0", "mu0", "tau0", "mu_inf", "tau_inf",
                                      "iteration", "chain")))

    def column_names(self) -> list:
        return draw_columns(self.J, self.H)


def draw_columns(J: int, H: int) -> list:
    return (["iteration"] + [f"w_{j + 1}" for j in range(J)] + [f"nu0_{h + 1}" for h in range(H)]
            + [f"mu0_{h + 1}" for h in range(H)] + [f"tau0_{h + 1}" for h in range(H)]
            + ["mu_inf", "tau_inf"])


# ---------------------------------------------------------------------------
# single steps


def _extremal_log_densities(state: ParamState, data: Dataset):
    return log_density_low(state, data.y), log_density_high(state, data.y)


def step_update_b(rng, state: ParamState, basis: SplineBasis, data: Dataset,
                  psi=None, log_dens=None) -> np.ndarray:
    """Basis labels with ``pr(b_i = j) ~ w_j [{1 - psi_j(x_i)} f_0(y_i) + psi_j(x_i) f_inf(y_i)]``."""
    if data.n == 0:
        return np.zeros(0, dtype=np.intp)
    psi = eval_basis(basis, data.x) if psi is None else psi
    l0, linf = _extremal_log_densities(state, data) if log_dens is None else log_dens
    m = np.maximum(l0, linf)
    r0 = np.exp(l0 - m)[:, None]
    rinf = np.exp(linf - m)[:, None]
    P = state.w * ((1.0 - psi) * r0 + psi * rinf)
    return sample_categorical_rows(rng, P)


def step_update_w(rng, config: ModelConfig, aug: AugmentedState) -> np.ndarray:
    counts = np.bincount(aug.b, minlength=config.J)
    return sample_dirichlet(rng, config.eta + counts)


def step_update_d(rng, state: ParamState, basis: SplineBasis, data: Dataset,
                  psi=None, log_dens=None) -> np.ndarray:
    """Membership in the high-dose extremal component."""
    if data.n == 0:
        return np.zeros(0, dtype=np.intp)
    psi = eval_basis(basis, data.x) if psi is None else psi
    beta = np.clip(psi @ state.w, 0.0, 1.0)
    l0, linf = _extremal_log_densities(state, data) if log_dens is None else log_dens
    with np.errstate(divide="ignore"):
        log_num = np.log(beta) + linf
        log_den = np.logaddexp(np.log1p(-beta) + l0, log_num)
    bad = ~np.isfinite(log_den)
    if np.any(bad):
        raise NumericalError(f"zero mixture density for observation {int(np.flatnonzero(bad)[0])}")
    prob = np.exp(log_num - log_den)
    return (rng.random(data.n) < prob).astype(np.intp)


def step_update_c(rng, state: ParamState, data: Dataset, aug: AugmentedState) -> np.ndarray:
    """Low-dose component labels, refreshed only where ``d == 0``."""
    c = aug.c.copy()
    low = aug.d == 0
    if not np.any(low):
        return c
    logp = component_logpdf(state, data.y[low])
    top = logp.max(axis=1, keepdims=True)
    bad = ~np.isfinite(top[:, 0])
    if np.any(bad):
        i = int(np.flatnonzero(low)[np.flatnonzero(bad)[0]])
        raise NumericalError(f"component probabilities vanish for observation {i}")
    c[low] = sample_categorical_rows(rng, np.exp(logp - top))
    return c


def low_component_counts(H: int, aug: AugmentedState) -> np.ndarray:
    return np.bincount(aug.c[aug.d == 0], minlength=H)


def step_update_nu0(rng, config: ModelConfig, aug: AugmentedState) -> np.ndarray:
    return sample_dirichlet(rng, config.alpha + low_component_counts(config.H, aug))


def step_update_theta0(rng, config: ModelConfig, state: ParamState, data: Dataset,
                       aug: AugmentedState, nu0=None) -> ExtremalLow:
    """Atoms of the low-dose mixture.

    For each component the precision is drawn given the current location,
    then the location given the new precision, truncated to ``(mu_inf, inf)``.
    """
    H = config.H
    low = aug.d == 0
    c0 = aug.c[low]
    y0 = data.y[low]
    mu0 = state.mu0.copy()
    tau0 = state.tau0.copy()
    n_h = np.bincount(c0, minlength=H).astype(float)
    sum_y = np.bincount(c0, weights=y0, minlength=H)
    ss = np.bincount(c0, weights=(y0 - mu0[c0]) ** 2, minlength=H)
    inv_kappa = 1.0 / config.kappa
    tau0 = sample_gamma(rng, config.a_tau + n_h / 2.0, config.b_tau + ss / 2.0)
    for h in range(H):
        var = 1.0 / (inv_kappa + n_h[h] * tau0[h])
        mean = var * (inv_kappa * config.prior_mean + tau0[h] * sum_y[h])
        try:
            mu0[h] = sample_truncated_normal(rng, mean, var, state.mu_inf, np.inf)
        except NumericalError as exc:
            raise NumericalError(f"low-dose component {h}: {exc}") from exc
    return ExtremalLow(state.nu0 if nu0 is None else nu0, mu0, tau0)


def step_update_theta_inf(rng, config: ModelConfig, state: ParamState, data: Dataset,
                          aug: AugmentedState) -> ExtremalHigh:
    """High-dose atom; the location is truncated to ``(-inf, min_h mu0_h)``."""
    high = aug.d == 1
    y1 = data.y[high]
    n_inf = float(y1.size)
    ss = float(np.sum((y1 - state.mu_inf) ** 2))
    tau = float(sample_gamma(rng, config.a_tau + n_inf / 2.0, config.b_tau + ss / 2.0))
    inv_kappa = 1.0 / config.kappa
    var = 1.0 / (inv_kappa + n_inf * tau)
    mean = var * (inv_kappa * config.prior_mean + tau * float(y1.sum()))
    try:
        mu = sample_truncated_normal(rng, mean, var, -np.inf, float(state.mu0.min()))
    except NumericalError as exc:
        raise NumericalError(f"high-dose component: {exc}") from exc
    return ExtremalHigh(mu, tau)


# ---------------------------------------------------------------------------
# sweeps and chains


def gibbs_sweep(rng, config: ModelConfig, state: ParamState, data: Dataset,
                aug: AugmentedState, psi=None) -> ParamState:
    """Run steps 1-7 once; ``aug`` is updated in place."""
    basis = config.basis
    psi = eval_basis(basis, data.x) if (psi is None and data.n) else psi
    log_dens = _extremal_log_densities(state, data) if data.n else None
    aug.b = step_update_b(rng, state, basis, data, psi, log_dens)
    w = step_update_w(rng, config, aug)
    state = ParamState(state.low, state.high, w)
    aug.d = step_update_d(rng, state, basis, data, psi, log_dens)
    aug.c = step_update_c(rng, state, data, aug)
    nu0 = step_update_nu0(rng, config, aug)
    low = step_update_theta0(rng, config, state, data, aug, nu0=nu0)
    state = ParamState(low, state.high, w)
    high = step_update_theta_inf(rng, config, state, data, aug)
    return ParamState(low, high, w)


def initial_state(rng, config: ModelConfig, data: Dataset) -> ParamState:
    """Starting point: weights from their priors, atoms spread over the data."""
    H = config.H
    w = sample_dirichlet(rng, config.eta)
    nu0 = sample_dirichlet(rng, config.alpha)
    if data.n >= 2 and np.ptp(data.y) > 0:
        y = data.y
        probs = 0.5 + 0.5 * (np.arange(H) + 0.5) / H
        mu0 = np.quantile(y, probs)
        sd = float(np.std(y, ddof=1))
        mu_inf = float(np.quantile(y, 0.05)) - sd
        tau = 1.0 / sd**2
    else:
        spread = np.sqrt(config.kappa)
        mu0 = config.prior_mean + spread * (np.arange(H) + 0.5) / H
        mu_inf = config.prior_mean - spread
        tau = config.a_tau / config.b_tau
    return ParamState.from_arrays(nu0, mu0, np.full(H, tau), mu_inf, tau, w)


def run_chain(config: ModelConfig, data: Dataset, settings: ChainSettings,
              chain_id: int = 0, init: ParamState | None = None) -> PosteriorDraws:
    """Run one chain with its own random stream and return the retained draws."""
    rng = rng_stream(settings.seed, chain_id)
    state = initial_state(rng, config, data) if init is None else init
    aug = AugmentedState.empty(data.n)
    psi = eval_basis(config.basis, data.x) if data.n else None
    S = settings.retained_per_chain
    H, J = config.H, config.J
    out = PosteriorDraws(
        w=np.empty((S, J)), nu0=np.empty((S, H)), mu0=np.empty((S, H)), tau0=np.empty((S, H)),
        mu_inf=np.empty(S), tau_inf=np.empty(S), iteration=np.empty(S, dtype=np.int64),
        chain=np.full(S, chain_id, dtype=np.int64),
    )
    k = 0
    for t in range(1, settings.iterations + 1):
        try:
            state = gibbs_sweep(rng, config, state, data, aug, psi)
        except NumericalError as exc:
            raise NumericalError(f"chain {chain_id}, iteration {t}: {exc}") from exc
        if t > settings.burn_in and (t - settings.burn_in) % settings.thin == 0 and k < S:
            out.w[k], out.nu0[k], out.mu0[k], out.tau0[k] = state.w, state.nu0, state.mu0, state.tau0
            out.mu_inf[k], out.tau_inf[k] = state.mu_inf, state.tau_inf
            out.iteration[k] = t
            k += 1
    log.debug("chain %d finished: %d draws retained", chain_id, k)
    return out


def _run_chain_args(args):
    return run_chain(*args)


def run_chains(config: ModelConfig, data: Dataset, settings: ChainSettings,
               workers: int = 1) -> PosteriorDraws:
    """Run ``settings.chains`` independent chains and merge their draws."""
    jobs = [(config, data, settings, k) for k in range(settings.chains)]
    if workers > 1 and settings.chains > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_run_chain_args, jobs))
    else:
        parts = [run_chain(*job) for job in jobs]
    return PosteriorDraws.concatenate(parts)


# ---------------------------------------------------------------------------
# persistence


def write_draws(path, draws: PosteriorDraws) -> None:
    """One row per retained iteration; floats written with round-trip precision."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(draws.column_names())
        for i in range(len(draws)):
            row = [str(int(draws.iteration[i]))]
            for arr in (draws.w[i], draws.nu0[i], draws.mu0[i], draws.tau0[i],
                        (draws.mu_inf[i], draws.tau_inf[i])):
                row.extend(repr(float(v)) for v in arr)
            writer.writerow(row)


def read_draws(path, chain_id: int = 0) -> PosteriorDraws:
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [r for r in reader if r]
    J = sum(1 for h in header if h.startswith("w_"))
    H = sum(1 for h in header if h.startswith("nu0_"))
    if header != draw_columns(J, H):
        raise ConfigurationError(f"{path}: unexpected draw file header")
    arr = np.array(rows, dtype=float).reshape(len(rows), len(header))
    col = 1
    parts = {}
    for name, width in (("w", J), ("nu0", H), ("mu0", H), ("tau0", H)):
        parts[name] = arr[:, col:col + width]
        col += width
    return PosteriorDraws(parts["w"], parts["nu0"], parts["mu0"], parts["tau0"],
                          arr[:, col], arr[:, col + 1], arr[:, 0].astype(np.int64),
                          np.full(len(rows), chain_id, dtype=np.int64))
