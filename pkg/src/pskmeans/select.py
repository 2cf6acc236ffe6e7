"""Smoothing-parameter selection by the V-curve.

For each lambda on a geometric grid the fit gives a residual sum of squares
``omega`` and a roughness ``theta``. With ``psi = log omega`` and
``phi = log theta``, the V-curve is the Euclidean distance between adjacent
points ``(psi, phi)``; the chosen lambda sits where that distance is
smallest, i.e. where the trade-off curve moves least per grid step.

When the basis is small relative to the number of observations, fits at
tiny lambda all equal the unpenalized regression spline and the curve
collapses to a point, so V tends to zero there without marking a corner.
The search is therefore restricted to the *active* part of the grid,
``lambda >= active_shrink / s_max``, where ``s_max`` is the largest
generalized eigenvalue of ``(D^T D, B^T B)``: below that floor even the
roughest coefficient mode is shrunk by less than a factor
``1 + active_shrink``. If ``B^T B`` is singular there is no plateau and no
floor.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from .basis import BasisMatrix, KnotGrid, eval_basis
from .errors import DegenerateRoughnessError, LengthMismatchError
from .smooth import Series, _check_fit_inputs, difference_matrix, reduce_rows, solve_penalized

DEFAULT_LAMBDA_MIN = 1e-5
DEFAULT_LAMBDA_MAX = 1e8
DEFAULT_LAMBDA_COUNT = 100
DEFAULT_ACTIVE_SHRINK = 10.0
_ZERO_REL = 1e-12


def default_lambda_grid(lo: float = DEFAULT_LAMBDA_MIN, hi: float = DEFAULT_LAMBDA_MAX,
                        count: int = DEFAULT_LAMBDA_COUNT) -> np.ndarray:
    if not (0 < lo < hi) or count < 3:
        raise ValueError(f"need 0 < lo < hi and count >= 3, got {lo}, {hi}, {count}")
    return np.geomspace(lo, hi, int(count))


@dataclass(frozen=True)
class VCurveTrace:
    lambdas: np.ndarray
    psi: np.ndarray
    phi: np.ndarray
    v: np.ndarray
    argmin_index: int
    lambda_star: float
    active_from: int = 0
    lambda_floor: float = 0.0
    coefficients: np.ndarray | None = field(default=None, repr=False)


def _check_lambda_grid(lambda_grid) -> np.ndarray:
    lams = np.asarray(lambda_grid, dtype=np.float64)
    if lams.ndim != 1 or lams.size < 3:
        raise ValueError("lambda grid needs at least 3 points")
    if np.any(~np.isfinite(lams)) or np.any(lams <= 0):
        raise ValueError("lambda grid entries must be finite and > 0")
    if np.any(np.diff(lams) <= 0):
        raise ValueError("lambda grid must be strictly increasing")
    return lams


def vcurve_from_psi_phi(lambdas: np.ndarray, psi: np.ndarray, phi: np.ndarray, start: int = 0):
    """Return ``(v, argmin_index, lambda_star)`` for a traced L-curve.

    ``v[k]`` is the distance between grid points ``k`` and ``k + 1``; the
    minimum is searched over ``v[start:]``, ties going to the smaller lambda.
    ``lambda_star`` is the geometric mean of the two lambdas bounding the
    winning interval.
    """
    v = np.hypot(np.diff(psi), np.diff(phi))
    start = min(max(int(start), 0), v.size - 1)
    k = start + int(np.argmin(v[start:]))
    lambda_star = float(np.sqrt(lambdas[k] * lambdas[k + 1]))
    return v, k, lambda_star


def penalty_floor(btb: np.ndarray, dtd: np.ndarray, active_shrink: float = DEFAULT_ACTIVE_SHRINK) -> float:
    """Smallest lambda at which the roughest mode is shrunk by ``1 + active_shrink``.

    Returns 0 when ``B^T B`` is singular or ``active_shrink`` is 0.
    """
    if active_shrink <= 0:
        return 0.0
    p = btb.shape[0]
    try:
        s_max = linalg.eigh(dtd, btb, eigvals_only=True, subset_by_index=[p - 1, p - 1],
                            check_finite=False)[0]
    except linalg.LinAlgError:
        return 0.0
    if not np.isfinite(s_max) or s_max <= 0:
        return 0.0
    return float(active_shrink / s_max)


def vcurve_trace(series: Series, grid: KnotGrid, order: int = 3, lambda_grid=None,
                 basis: BasisMatrix | np.ndarray | None = None,
                 active_shrink: float = DEFAULT_ACTIVE_SHRINK) -> VCurveTrace:
    """Fit ``series`` at every grid lambda and locate the V-curve minimum.

    ``v`` covers the whole grid; the minimum is taken over the intervals at
    or above the penalty floor (``active_shrink=0`` searches everything).
    Raises ``DegenerateRoughnessError`` when a fit has zero roughness or
    zero residual, where the logarithms are undefined.
    """
    lams = _check_lambda_grid(default_lambda_grid() if lambda_grid is None else lambda_grid)
    _check_fit_inputs(series.n_observed, 0.0, order)
    b = np.asarray(basis) if basis is not None else eval_basis(grid, series.x).values
    if b.shape != (series.x.size, grid.n_basis):
        raise LengthMismatchError(f"basis shape {b.shape} does not match series/grid")
    penalty = difference_matrix(grid.n_basis, order)
    r, c = reduce_rows(b, series.y, series.mask)
    coefs = solve_penalized(r, c, penalty.matrix, lams)

    keep = ~series.mask
    resid = series.y[keep][None, :] - coefs @ b[keep].T
    omega = np.einsum("ij,ij->i", resid, resid)
    da = coefs @ penalty.matrix.T
    theta = np.einsum("ij,ij->i", da, da)
    # rounding leaves ~1e-15 relative noise in the differences of an exact null-space fit
    coef_scale = np.abs(coefs).max(axis=1)
    theta_zero = theta <= da.shape[1] * (_ZERO_REL * coef_scale) ** 2
    omega_zero = omega <= keep.sum() * (_ZERO_REL * np.abs(series.y[keep]).max()) ** 2
    if np.any(theta_zero):
        raise DegenerateRoughnessError(
            f"zero roughness at lambda={lams[np.argmax(theta_zero)]:g}; the fit lies in the penalty null space")
    if np.any(omega_zero):
        raise DegenerateRoughnessError(
            f"zero residual at lambda={lams[np.argmax(omega_zero)]:g}; the fit interpolates exactly")
    psi = np.log(omega)
    phi = np.log(theta)
    floor = penalty_floor(r.T @ r, penalty.gram, active_shrink)
    start = int(np.searchsorted(lams, floor))
    v, k, lambda_star = vcurve_from_psi_phi(lams, psi, phi, start)
    return VCurveTrace(lams, psi, phi, v, k, lambda_star, min(start, v.size - 1), floor, coefs)


def select_lambda(series: Series, grid: KnotGrid, order: int = 3, lambda_grid=None,
                  basis: BasisMatrix | np.ndarray | None = None,
                  active_shrink: float = DEFAULT_ACTIVE_SHRINK) -> float:
    """Lambda minimizing the V-curve (geometric midpoint of the best adjacent pair)."""
    return vcurve_trace(series, grid, order, lambda_grid, basis, active_shrink).lambda_star
