"""Difference penalties and penalized least-squares fits (P-splines).

A fit minimizes ``||y - B a||^2 + lam * ||D_d a||^2`` over the observed
points of a series, where ``B`` is a B-spline basis and ``D_d`` the d-th
order difference matrix on the coefficients.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from .basis import BasisMatrix, KnotGrid, eval_basis
from .errors import (InsufficientDataError, LengthMismatchError, OrderTooLargeError,
                     SingularSystemError)

_PIVOT_TOL = np.sqrt(np.finfo(np.float64).eps)


@dataclass(frozen=True)
class PenaltyOp:
    order: int
    size: int
    matrix: np.ndarray = field(repr=False)

    def apply(self, a):
        return self.matrix @ np.asarray(a, dtype=np.float64)

    @property
    def gram(self) -> np.ndarray:
        """``D^T D``."""
        return self.matrix.T @ self.matrix


@dataclass(frozen=True)
class Series:
    """One time series. ``mask`` is True where ``y`` is missing."""

    x: np.ndarray
    y: np.ndarray
    mask: np.ndarray
    series_id: str = ""

    def __post_init__(self):
        x = np.asarray(self.x, dtype=np.float64)
        y = np.asarray(self.y, dtype=np.float64)
        mask = np.asarray(self.mask, dtype=bool)
        if x.ndim != 1 or x.shape != y.shape or x.shape != mask.shape:
            raise LengthMismatchError(
                f"x, y and mask must be 1-d with equal length, got {x.shape}, {y.shape}, {mask.shape}")
        if x.size > 1 and np.any(np.diff(x) <= 0):
            raise ValueError("x must be strictly increasing")
        if np.any(~np.isfinite(y[~mask])):
            raise ValueError("observed y values must be finite")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "mask", mask)

    @classmethod
    def from_arrays(cls, x, y, mask=None, series_id=""):
        """Build a series; NaN entries of ``y`` count as missing when no mask is given."""
        y = np.asarray(y, dtype=np.float64)
        if mask is None:
            mask = np.isnan(y)
        return cls(x, y, mask, series_id)

    @property
    def n_observed(self) -> int:
        return int(np.count_nonzero(~self.mask))

    @property
    def observed(self):
        keep = ~self.mask
        return self.x[keep], self.y[keep]


@dataclass(frozen=True)
class SplineFit:
    coefficients: np.ndarray
    lam: float
    fit_ss: float
    roughness: float
    grid: KnotGrid
    order: int


@lru_cache(maxsize=64)
def _difference_matrix_cached(size: int, order: int) -> np.ndarray:
    m = np.diff(np.eye(size), n=order, axis=0)
    m.setflags(write=False)
    return m


def difference_matrix(size: int, order: int) -> PenaltyOp:
    """Return the ``(size - order) x size`` forward-difference operator of the given order."""
    if int(size) != size or int(order) != order:
        raise ValueError("size and order must be integers")
    if order < 1:
        raise ValueError(f"order must be >= 1, got {order}")
    if order >= size:
        raise OrderTooLargeError(f"order {order} needs more than {order} coefficients, got {size}")
    return PenaltyOp(int(order), int(size), _difference_matrix_cached(int(size), int(order)))


def _check_fit_inputs(n_observed: int, lam: float, order: int):
    if not np.isfinite(lam) or lam < 0:
        raise ValueError(f"lambda must be finite and >= 0, got {lam}")
    if n_observed < order + 1:
        raise InsufficientDataError(
            f"{n_observed} observed point(s), need at least {order + 1} for penalty order {order}")


def reduce_rows(basis: np.ndarray, y: np.ndarray, mask: np.ndarray):
    """Compress the observed rows of ``basis`` and ``y`` to a triangular system.

    Returns ``(r, c)`` with ``r^T r = B^T B`` and ``r^T c = B^T y`` over the
    rows that are not masked.
    """
    keep = ~mask
    q, r = np.linalg.qr(basis[keep])
    return r, q.T @ y[keep]


def solve_penalized(r: np.ndarray, c: np.ndarray, dmat: np.ndarray, lams) -> np.ndarray:
    """Minimize ``|c - r a|^2 + lam |D a|^2`` for every ``lam`` in ``lams``.

    ``r, c`` come from ``reduce_rows``. The stacked system ``[r; sqrt(lam) D]``
    is solved by a batched QR rather than through the normal equations, whose
    rounding error grows with ``lam`` and would leave null-space fits (e.g.
    constants) off by ~1e-6 at ``lam = 1e8``. Returns an array of shape
    ``(len(lams), n_basis)``. A single fit and a lambda sweep go through the
    same code, so their coefficients agree bit for bit.
    """
    lams = np.atleast_1d(np.asarray(lams, dtype=np.float64))
    n_lam = lams.size
    p = r.shape[1]
    stack = np.concatenate([np.broadcast_to(r, (n_lam,) + r.shape),
                            np.sqrt(lams)[:, None, None] * dmat[None, :, :]], axis=1)
    if stack.shape[1] < p:
        raise SingularSystemError(f"{stack.shape[1]} equations cannot determine {p} coefficients")
    q, rr = np.linalg.qr(stack)
    rhs = np.concatenate([c, np.zeros(dmat.shape[0])])
    qtb = np.einsum("lmp,m->lp", q, rhs)
    diag = np.abs(np.diagonal(rr, axis1=1, axis2=2))
    singular = diag.min(axis=1) <= _PIVOT_TOL * diag.max(axis=1)
    if np.any(singular):
        bad = lams[np.argmax(singular)]
        raise SingularSystemError(f"penalized least-squares system is numerically singular at lambda={bad:g}")
    return np.linalg.solve(rr, qtb[..., None])[..., 0]


def fit_pspline(series: Series, grid: KnotGrid, lam: float, order: int = 3,
                basis: BasisMatrix | np.ndarray | None = None) -> SplineFit:
    """Fit a P-spline to the observed points of ``series``.

    Parameters
    ----------
    series : Series
        Data; masked entries contribute no rows.
    grid : KnotGrid
        Knot layout of the basis.
    lam : float
        Penalty weight. ``0`` gives a plain regression spline and raises
        ``SingularSystemError`` when that is not identifiable.
    order : int
        Difference order of the penalty.
    basis : array, optional
        Precomputed basis at ``series.x`` (shared across series on one grid).
    """
    lam = float(lam)
    _check_fit_inputs(series.n_observed, lam, order)
    penalty = difference_matrix(grid.n_basis, order)
    b = np.asarray(basis) if basis is not None else eval_basis(grid, series.x).values
    if b.shape != (series.x.size, grid.n_basis):
        raise LengthMismatchError(f"basis shape {b.shape} does not match series/grid")
    r, c = reduce_rows(b, series.y, series.mask)
    a = solve_penalized(r, c, penalty.matrix, lam)[0]
    keep = ~series.mask
    resid = series.y[keep] - b[keep] @ a
    da = penalty.matrix @ a
    return SplineFit(a, lam, float(resid @ resid), float(da @ da), grid, order)


def predict(fit: SplineFit, x_new) -> np.ndarray:
    """Evaluate the fitted curve ``B(x_new) a``."""
    return eval_basis(fit.grid, x_new).values @ fit.coefficients
