"""Risk functionals: additional risk, benchmark doses and the TV reading of beta.

Under the convex mixture the additional risk factorizes as

    R_A(x, a) = F_x(a) - F_0(a) = beta(x) {F_inf(a) - F_0(a)},

so the benchmark dose for a risk level ``q`` solves
``beta(x) = q / R_A(inf, a)``, a monotone root-finding problem.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .basis import SplineBasis, eval_basis
from .errors import DegenerateModelError, DomainError, UsageError
from .gibbs import PosteriorDraws
from .model import (
    ParamState,
    beta_at,
    cdf_high,
    cdf_low,
    density_high,
    density_low,
)

log = logging.getLogger(__name__)

BMD_TOL = 1e-6
BMDL_LEVEL = 0.05


@dataclass(frozen=True)
class RiskQuery:
    a: float
    q: float
    dose_grid: np.ndarray

    def __post_init__(self):
        grid = np.asarray(self.dose_grid, dtype=float)
        object.__setattr__(self, "dose_grid", grid)
        if not 0 < self.q < 1:
            raise DomainError(f"benchmark risk q must lie in (0, 1), got {self.q}")
        if grid.ndim != 1 or grid.size == 0 or np.any(grid < 0) or np.any(np.diff(grid) <= 0):
            raise DomainError("dose grid must be nonempty, nonnegative and strictly increasing")


@dataclass(frozen=True)
class RiskCurve:
    x: np.ndarray
    mean: np.ndarray
    lo95: np.ndarray
    hi95: np.ndarray


@dataclass(frozen=True)
class BmdSummary:
    q: float
    samples: np.ndarray
    mean: float
    lo: float
    hi: float
    bmdl: float
    n_missing: int


def risk_at_infinity(state: ParamState, a):
    """``R_A(inf, a) = F_inf(a) - F_0(a)``."""
    return cdf_high(state, a) - cdf_low(state, a)


def additional_risk(state: ParamState, basis: SplineBasis, x, a):
    """``R_A(x, a) = beta(x) {F_inf(a) - F_0(a)}``."""
    return beta_at(state, basis, x) * risk_at_infinity(state, a)


def bisect_increasing(fn, target: float, lo: float, hi: float, tol: float = BMD_TOL):
    """Smallest ``x`` in ``[lo, hi]`` with ``fn(x) >= target`` for nondecreasing ``fn``.

    Returns ``None`` when ``fn(hi) < target``.
    """
    if fn(lo) >= target:
        return float(lo)
    if fn(hi) < target:
        return None
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if fn(mid) >= target:
            hi = mid
        else:
            lo = mid
    return float(hi)


def _bisect_rows(basis, W, target, lo, hi, tol):
    """Row-wise bisection of ``beta_s(x) = W[s] . psi(x)`` against ``target[s]``."""
    S = W.shape[0]
    lo = np.full(S, float(lo))
    hi = np.full(S, float(hi))
    at_lo = np.einsum("sj,sj->s", eval_basis(basis, lo), W)
    at_hi = np.einsum("sj,sj->s", eval_basis(basis, hi), W)
    out = np.full(S, np.nan)
    done_lo = at_lo >= target
    out[done_lo] = lo[done_lo]
    active = ~done_lo & (at_hi >= target)
    while np.any(active) and np.max(hi[active] - lo[active]) > tol:
        mid = 0.5 * (lo + hi)
        val = np.einsum("sj,sj->s", eval_basis(basis, mid), W)
        up = active & (val >= target)
        down = active & ~(val >= target)
        hi[up] = mid[up]
        lo[down] = mid[down]
    out[active] = hi[active]
    return out


def bmd(state: ParamState, basis: SplineBasis, q: float, a: float, search_interval=None,
        tol: float = BMD_TOL):
    """Benchmark dose: smallest dose at which the additional risk reaches ``q``.

    Returns ``None`` if the risk level is not reached inside ``search_interval``
    (default ``[0, dose_max]``).
    """
    if not 0 < q < 1:
        raise DomainError(f"benchmark risk q must lie in (0, 1), got {q}")
    r_inf = float(risk_at_infinity(state, a))
    if not r_inf > 0:
        raise DegenerateModelError(f"R_A(inf, {a}) = {r_inf:.3g} is not positive")
    lo, hi = (0.0, basis.dose_max) if search_interval is None else search_interval
    target = q / r_inf
    return bisect_increasing(lambda x: float(beta_at(state, basis, x)), target, lo, hi, tol)


def risk_matrix(draws: PosteriorDraws, basis: SplineBasis, x, a) -> np.ndarray:
    """``R_A(x, a)`` for every draw (rows) and dose (columns)."""
    beta = draws.w @ eval_basis(basis, np.atleast_1d(x)).T
    return beta * draw_risk_at_infinity(draws, a)[:, None]


def draw_risk_at_infinity(draws: PosteriorDraws, a) -> np.ndarray:
    f0 = np.sum(draws.nu0 * ndtr((a - draws.mu0) * np.sqrt(draws.tau0)), axis=1)
    finf = ndtr((a - draws.mu_inf) * np.sqrt(draws.tau_inf))
    return finf - f0


def posterior_risk_curve(draws: PosteriorDraws, basis: SplineBasis, query: RiskQuery) -> RiskCurve:
    """Pointwise posterior mean and central 95% band of ``R_A(x, a)``."""
    if len(draws) == 0:
        raise UsageError("no posterior draws")
    R = risk_matrix(draws, basis, query.dose_grid, query.a)
    lo, hi = np.quantile(R, [0.025, 0.975], axis=0)
    return RiskCurve(query.dose_grid, R.mean(axis=0), lo, hi)


def posterior_bmd(draws: PosteriorDraws, basis: SplineBasis, q: float, a: float,
                  search_interval=None, tol: float = BMD_TOL) -> BmdSummary:
    """Posterior sample of the benchmark dose with mean, 95% interval and BMDL.

    Draws whose risk never reaches ``q`` in the search interval (including
    draws with ``R_A(inf, a) <= 0``) are counted and left out of the summaries.
    """
    if len(draws) == 0:
        raise UsageError("no posterior draws")
    if not 0 < q < 1:
        raise DomainError(f"benchmark risk q must lie in (0, 1), got {q}")
    lo, hi = (0.0, basis.dose_max) if search_interval is None else search_interval
    r_inf = draw_risk_at_infinity(draws, a)
    with np.errstate(divide="ignore", invalid="ignore"):
        target = np.where(r_inf > 0, q / r_inf, np.inf)
    samples = _bisect_rows(basis, draws.w, target, lo, hi, tol)
    return summarize_bmd(q, samples)


def summarize_bmd(q: float, samples) -> BmdSummary:
    samples = np.asarray(samples, dtype=float)
    ok = np.isfinite(samples)
    n_missing = int((~ok).sum())
    if not np.any(ok):
        raise DegenerateModelError(f"benchmark risk {q} is not reached by any posterior draw")
    if n_missing:
        warnings.warn(f"q={q}: {n_missing} of {samples.size} draws never reach the benchmark risk",
                      RuntimeWarning, stacklevel=2)
    kept = samples[ok]
    lo95, hi95 = np.quantile(kept, [0.025, 0.975])
    bmdl = np.quantile(kept, BMDL_LEVEL)
    return BmdSummary(q, samples, float(kept.mean()), float(lo95), float(hi95), float(bmdl), n_missing)


# ---------------------------------------------------------------------------
# total variation


def adaptive_simpson(f, a: float, b: float, tol: float = 1e-12, max_depth: int = 50) -> float:
    """Adaptive Simpson quadrature of a vectorized integrand.

    Intervals are refined level by level, so each level costs one vectorized
    call of ``f``.
    """
    lo = np.array([a], dtype=float)
    hi = np.array([b], dtype=float)
    flo, fhi, fmid = f(lo), f(hi), f(0.5 * (lo + hi))
    whole = (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi)
    eps = np.array([tol])
    total = 0.0
    for depth in range(max_depth + 1):
        mid = 0.5 * (lo + hi)
        lq, rq = 0.5 * (lo + mid), 0.5 * (mid + hi)
        flq, frq = f(lq), f(rq)
        left = (mid - lo) / 6.0 * (flo + 4.0 * flq + fmid)
        right = (hi - mid) / 6.0 * (fmid + 4.0 * frq + fhi)
        delta = left + right - whole
        done = np.abs(delta) <= 15.0 * eps
        if depth == max_depth:
            done[:] = True
        total += float(np.sum((left + right + delta / 15.0)[done]))
        keep = ~done
        if not np.any(keep):
            break
        lo = np.concatenate([lo[keep], mid[keep]])
        hi = np.concatenate([mid[keep], hi[keep]])
        new_flo = np.concatenate([flo[keep], fmid[keep]])
        new_fhi = np.concatenate([fmid[keep], fhi[keep]])
        fmid = np.concatenate([flq[keep], frq[keep]])
        whole = np.concatenate([left[keep], right[keep]])
        eps = np.concatenate([eps[keep], eps[keep]]) / 2.0
        flo, fhi = new_flo, new_fhi
    return total


def tv_support(state: ParamState):
    means = np.append(state.mu0, state.mu_inf)
    sigma_max = float(np.max(1.0 / np.sqrt(np.append(state.tau0, state.tau_inf))))
    return float(means.min() - 10.0 * sigma_max), float(means.max() + 10.0 * sigma_max)


def total_variation(f1, f2, support, tol: float = 1e-12) -> float:
    """``0.5 * integral |f1 - f2|`` over ``support``."""
    lo, hi = support
    return 0.5 * adaptive_simpson(lambda y: np.abs(f1(y) - f2(y)), lo, hi, tol)


def tv_ratio(state: ParamState, basis: SplineBasis, x, support=None, tol: float = 1e-10):
    """``d_TV(F_x, F_0) / d_TV(F_inf, F_0)`` by quadrature; equals ``beta(x)``.

    ``x`` may be a vector of doses, in which case the denominator is shared.
    """
    support = tv_support(state) if support is None else support
    f0 = lambda y: density_low(state, y)
    denom = total_variation(lambda y: density_high(state, y), f0, support, tol)
    if not denom > 0:
        raise DegenerateModelError("extremal densities coincide; the ratio is undefined")
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.empty(xs.size)
    for i, bx in enumerate(beta_at(state, basis, xs)):
        fx = lambda y: (1.0 - bx) * density_low(state, y) + bx * density_high(state, y)
        out[i] = total_variation(fx, f0, support, tol)
    out /= denom
    return out if np.ndim(x) else float(out[0])
