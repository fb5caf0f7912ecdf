"""Random-variate primitives used by the Gibbs sampler and the simulators.

All samplers draw from a :class:`numpy.random.Generator`.  Independent
per-chain streams come from :func:`rng_stream`, which spawns children of a
single :class:`numpy.random.SeedSequence`, so ``(seed, stream_id)`` pins the
sequence down exactly and distinct ids never share state.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import special

from .errors import DomainError, NumericalError

# Truncation regions starting further than this many standard deviations into
# a tail are sampled by exponential rejection instead of by inversion.
TAIL_SWITCH = 5.0
MIN_REGION_MASS = 1e-300
_LOG_MIN_MASS = math.log(MIN_REGION_MASS)


def rng_stream(seed: int, stream_id: int = 0) -> np.random.Generator:
    """Reproducible generator for chain/stream ``stream_id`` of ``seed``."""
    if seed < 0 or stream_id < 0:
        raise DomainError("seed and stream_id must be nonnegative")
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(stream_id),))
    return np.random.Generator(np.random.PCG64(ss))


def std_normal_cdf(z):
    """Standard normal CDF, accurate to full double precision in both tails."""
    return special.ndtr(z)


def std_normal_logcdf(z):
    return special.log_ndtr(z)


def sample_gamma(rng: np.random.Generator, shape, rate, size=None):
    """Gamma variate with the shape/rate parametrization (mean shape/rate)."""
    shape = np.asarray(shape, dtype=float)
    rate = np.asarray(rate, dtype=float)
    if np.any(~(shape > 0)) or np.any(~(rate > 0)):
        raise DomainError(f"gamma parameters must be positive (shape={shape}, rate={rate})")
    return rng.gamma(shape, 1.0 / rate, size=size)


def _log_gamma_variates(rng, shape):
    """log of Gamma(shape, 1) variates, safe for shapes far below 1.

    For small shapes a plain gamma draw underflows to 0 with non-negligible
    probability; ``G(a) = G(a + 1) * U**(1/a)`` keeps the draw in log space.
    """
    small = shape < 1.0
    out = np.empty_like(shape)
    g = rng.gamma(np.where(small, shape + 1.0, shape))
    out[:] = np.log(g)
    if np.any(small):
        u = rng.random(int(small.sum()))
        out[small] += np.log1p(-u) / shape[small]
    return out


def sample_dirichlet(rng: np.random.Generator, concentration) -> np.ndarray:
    """Dirichlet draw as normalized gamma variates."""
    a = np.atleast_1d(np.asarray(concentration, dtype=float))
    if a.ndim != 1 or a.size == 0:
        raise DomainError("concentration must be a nonempty vector")
    if np.any(~(a > 0)) or np.any(~np.isfinite(a)):
        raise DomainError(f"Dirichlet concentrations must be positive and finite, got {a}")
    if a.size == 1:
        return np.ones(1)
    if a.min() >= 1.0:
        g = rng.gamma(a)
        return g / g.sum()
    logg = _log_gamma_variates(rng, a)
    w = np.exp(logg - logg.max())
    return w / w.sum()


def sample_categorical(rng: np.random.Generator, weights) -> int:
    """Index in ``0..len(weights)-1`` drawn proportionally to ``weights``."""
    p = np.asarray(weights, dtype=float)
    if p.ndim != 1 or p.size == 0:
        raise DomainError("weights must be a nonempty vector")
    if np.any(p < 0) or np.any(~np.isfinite(p)):
        raise DomainError("categorical weights must be finite and nonnegative")
    total = p.sum()
    if not total > 0:
        raise DomainError("at least one categorical weight must be positive")
    u = (1.0 - rng.random()) * total
    idx = int(np.searchsorted(np.cumsum(p), u, side="left"))
    return min(idx, p.size - 1)


def sample_categorical_rows(rng: np.random.Generator, weights: np.ndarray) -> np.ndarray:
    """One categorical draw per row of a nonnegative ``(n, K)`` weight matrix.

    Rows need not be normalized.  Raises :class:`NumericalError` naming the
    first row whose weights sum to zero.
    """
    P = np.asarray(weights, dtype=float)
    n, K = P.shape
    if n == 0:
        return np.zeros(0, dtype=np.intp)
    cum = np.cumsum(P, axis=1)
    total = cum[:, -1]
    bad = ~(total > 0) | ~np.isfinite(total)
    if np.any(bad):
        i = int(np.flatnonzero(bad)[0])
        raise NumericalError(f"categorical probabilities vanish for observation {i}")
    # u in (0, 1] so zero-weight leading categories can never be picked
    u = (1.0 - rng.random(n)) * total
    idx = (cum < u[:, None]).sum(axis=1)
    return np.minimum(idx, K - 1)


def _region_log_mass(alpha: float, beta: float) -> float:
    """log P(alpha < Z < beta) for standard normal Z, with alpha >= 0 or beta <= 0 handled stably."""
    if alpha >= 0:
        la, lb = special.log_ndtr(-alpha), special.log_ndtr(-beta)
    elif beta <= 0:
        la, lb = special.log_ndtr(beta), special.log_ndtr(alpha)
    else:
        return math.log(special.ndtr(beta) - special.ndtr(alpha))
    if lb == -np.inf:
        return float(la)
    return float(la + math.log1p(-math.exp(lb - la)))


def _upper_tail_standard(rng, alpha: float, beta: float) -> float:
    """Standard normal truncated to (alpha, beta) with alpha >= 0."""
    if alpha < TAIL_SWITCH:
        # invert through the survival function, which is accurate in the tail
        sa = special.ndtr(-alpha)
        sb = special.ndtr(-beta)
        while True:
            u = sa - rng.random() * (sa - sb)
            z = -special.ndtri(u)
            if alpha < z < beta:
                return float(z)
    # Robert (1995) exponential proposal with the optimal rate
    lam = 0.5 * (alpha + math.sqrt(alpha * alpha + 4.0))
    width = beta - alpha
    cut = -math.expm1(-lam * width) if np.isfinite(width) else 1.0
    while True:
        z = alpha - math.log1p(-rng.random() * cut) / lam
        if not alpha < z < beta:
            continue
        if rng.random() <= math.exp(-0.5 * (z - lam) ** 2):
            return float(z)


def sample_truncated_normal(rng: np.random.Generator, mean: float, variance: float,
                            lower: float = -np.inf, upper: float = np.inf) -> float:
    """Normal(mean, variance) variate restricted to the open interval (lower, upper)."""
    if not variance > 0 or not np.isfinite(variance):
        raise DomainError(f"variance must be positive and finite, got {variance}")
    if not lower < upper:
        raise DomainError(f"empty truncation interval ({lower}, {upper})")
    if not np.isfinite(mean):
        raise DomainError(f"mean must be finite, got {mean}")
    sd = math.sqrt(variance)
    alpha = (lower - mean) / sd
    beta = (upper - mean) / sd
    logmass = _region_log_mass(alpha, beta)
    if logmass < _LOG_MIN_MASS:
        raise NumericalError(
            f"truncation region ({lower}, {upper}) has probability below {MIN_REGION_MASS:g} "
            f"under N({mean}, {variance}) (standardized bounds {alpha:.3g}, {beta:.3g})"
        )
    while True:
        if alpha >= 0:
            z = _upper_tail_standard(rng, alpha, beta)
        elif beta <= 0:
            z = -_upper_tail_standard(rng, -beta, -alpha)
        else:
            pa, pb = special.ndtr(alpha), special.ndtr(beta)
            z = float(special.ndtri(pa + rng.random() * (pb - pa)))
        y = mean + sd * z
        if lower < y < upper:
            return y
