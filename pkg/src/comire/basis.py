"""Monotone I-spline basis for the dose-response function.

The dose-response function is a convex combination

    beta(x) = sum_j w_j psi_j(x),    w on the probability simplex,

of nondecreasing basis functions psi_j with psi_j(0) = 0 and range [0, 1].
The psi_j are I-splines (Ramsay, 1988), obtained here as suffix sums of a
clamped B-spline basis of order ``degree + 1``.  The last column of the basis
is a "zero" function that vanishes on the whole observed dose range and jumps
to 1 beyond it; putting weight on it lets beta level off below 1 inside the
observed range.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import BSpline

from .errors import ConfigurationError, DomainError, InvariantError

SIMPLEX_TOL = 1e-10


@dataclass(frozen=True)
class SplineBasis:
    """I-spline basis on ``[0, boundary_knots[1]]`` plus one zero function.

    Parameters
    ----------
    degree : int
        Polynomial degree of the I-splines (3 for cubic).
    inner_knots : tuple of float
        Strictly increasing interior knots, all inside the boundary knots.
    boundary_knots : tuple of float
        ``(0, dose_max)``.

    Notes
    -----
    With ``K`` inner knots there are ``K + degree`` non-constant I-splines.
    The steepest-at-the-right one (the last B-spline on its own) is replaced
    by the zero function, so ``J = K + degree`` in total; for 7 inner knots
    and cubic splines this gives ``J = 10``.
    """

    degree: int
    inner_knots: tuple
    boundary_knots: tuple

    def __post_init__(self):
        inner = tuple(float(k) for k in self.inner_knots)
        lo, hi = (float(b) for b in self.boundary_knots)
        object.__setattr__(self, "inner_knots", inner)
        object.__setattr__(self, "boundary_knots", (lo, hi))
        if int(self.degree) != self.degree or self.degree < 1:
            raise ConfigurationError(f"degree must be an integer >= 1, got {self.degree}")
        object.__setattr__(self, "degree", int(self.degree))
        if lo != 0.0:
            raise ConfigurationError(f"left boundary knot must be 0, got {lo}")
        if not np.isfinite(hi) or hi <= lo:
            raise ConfigurationError(f"dose range must be positive and finite, got [{lo}, {hi}]")
        knots = np.array((lo,) + inner + (hi,))
        if np.any(np.diff(knots) <= 0):
            raise ConfigurationError("knots must be strictly increasing with no ties")

    @property
    def dose_max(self) -> float:
        return self.boundary_knots[1]

    @property
    def order(self) -> int:
        return self.degree + 1

    @property
    def knot_vector(self) -> np.ndarray:
        """Clamped knot vector for the order ``degree + 1`` B-splines."""
        lo, hi = self.boundary_knots
        k = self.order
        return np.concatenate([np.full(k, lo), self.inner_knots, np.full(k, hi)])

    @property
    def n_bsplines(self) -> int:
        return len(self.inner_knots) + self.order

    @property
    def J(self) -> int:
        return self.n_bsplines - 1

    @property
    def zero_index(self) -> int:
        """Column index of the identically-zero basis function."""
        return self.J - 1

    def bspline_matrix(self, x) -> np.ndarray:
        """Order ``degree + 1`` B-spline design matrix, x clipped to the range."""
        x = np.clip(np.atleast_1d(np.asarray(x, dtype=float)), 0.0, self.dose_max)
        dm = BSpline.design_matrix(x, self.knot_vector, self.degree)
        return dm.toarray()

    def __call__(self, x) -> np.ndarray:
        return eval_basis(self, x)


def build_basis(inner_knot_count: int, dose_range, degree: int = 3) -> SplineBasis:
    """Basis with ``inner_knot_count`` equally spaced inner knots on ``dose_range``."""
    lo, hi = (float(v) for v in dose_range)
    if inner_knot_count < 1:
        raise ConfigurationError("at least one inner knot is required")
    if lo != 0.0:
        raise ConfigurationError(f"dose range must start at 0, got {lo}")
    if not hi > lo:
        raise ConfigurationError(f"dose range must have positive length, got [{lo}, {hi}]")
    inner = np.linspace(lo, hi, inner_knot_count + 2)[1:-1]
    return SplineBasis(degree=degree, inner_knots=tuple(inner), boundary_knots=(lo, hi))


def eval_basis(basis: SplineBasis, x) -> np.ndarray:
    """Evaluate all J basis functions.

    Returns an array of shape ``(J,)`` for scalar ``x`` and ``(n, J)`` for a
    vector of doses.
    """
    xa = np.asarray(x, dtype=float)
    scalar = xa.ndim == 0
    xa = np.atleast_1d(xa)
    if np.any(np.isnan(xa)) or np.any(xa < 0):
        raise DomainError("doses must be nonnegative")
    B = basis.bspline_matrix(xa)
    # suffix sums: column j holds sum_{l > j} B_l
    suffix = np.cumsum(B[:, ::-1], axis=1)[:, ::-1]
    out = np.empty((xa.size, basis.J))
    out[:, : basis.J - 1] = suffix[:, 1 : basis.J]
    out[:, basis.J - 1] = (xa > basis.dose_max).astype(float)
    np.clip(out, 0.0, 1.0, out=out)
    return out[0] if scalar else out


def check_simplex(w, tol: float = SIMPLEX_TOL, name: str = "w") -> np.ndarray:
    w = np.asarray(w, dtype=float)
    if w.ndim != 1 or w.size == 0:
        raise InvariantError(f"{name} must be a nonempty vector")
    if np.any(~np.isfinite(w)) or np.any(w < -tol) or abs(w.sum() - 1.0) > tol:
        raise InvariantError(f"{name} is not on the probability simplex (sum={w.sum()!r})")
    return w


def eval_beta(basis: SplineBasis, w, x):
    """Dose-response function ``beta(x) = sum_j w_j psi_j(x)``."""
    w = check_simplex(w)
    if w.size != basis.J:
        raise InvariantError(f"expected {basis.J} weights, got {w.size}")
    return eval_basis(basis, x) @ w
