"""Equidistant knot grids and B-spline basis evaluation.

The grid follows the usual P-spline layout: ``n_segments`` equal intervals
cover ``[domain_lo, domain_hi]`` and ``degree`` extra knots with the same
spacing are added beyond each end, giving ``n_segments + degree`` basis
functions that are all translates of one shape.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidCountError, InvalidDomainError, PointOutsideDomainError

_DOMAIN_TOL = 1e-12
MAX_DEGREE = 10


@dataclass(frozen=True)
class KnotGrid:
    domain_lo: float
    domain_hi: float
    n_segments: int
    degree: int
    knots: np.ndarray = field(repr=False, compare=False)

    @property
    def spacing(self) -> float:
        return (self.domain_hi - self.domain_lo) / self.n_segments

    @property
    def n_basis(self) -> int:
        return self.n_segments + self.degree

    def __eq__(self, other):
        if not isinstance(other, KnotGrid):
            return NotImplemented
        return (self.domain_lo, self.domain_hi, self.n_segments, self.degree) == (
            other.domain_lo, other.domain_hi, other.n_segments, other.degree)

    def __hash__(self):
        return hash((self.domain_lo, self.domain_hi, self.n_segments, self.degree))


@dataclass(frozen=True)
class BasisMatrix:
    """Dense ``n_points x n_basis`` matrix of basis function values."""

    values: np.ndarray
    grid: KnotGrid
    eval_points: np.ndarray

    @property
    def shape(self):
        return self.values.shape

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.values, dtype=dtype)


def make_knots(domain_lo: float, domain_hi: float, n_segments: int, degree: int) -> KnotGrid:
    """Build an equidistant knot grid with ``degree`` knots added past each end.

    Parameters
    ----------
    domain_lo, domain_hi : float
        Ends of the domain, ``domain_lo < domain_hi``.
    n_segments : int
        Number of equal intervals between the domain ends.
    degree : int
        Degree of the B-splines, between 0 and 10.

    Returns
    -------
    KnotGrid
        Grid with ``n_segments + 2 * degree + 1`` knots.
    """
    lo = float(domain_lo)
    hi = float(domain_hi)
    if not (np.isfinite(lo) and np.isfinite(hi)) or lo >= hi:
        raise InvalidDomainError(f"need domain_lo < domain_hi, got {lo} and {hi}")
    if int(n_segments) != n_segments or n_segments < 1:
        raise InvalidCountError(f"n_segments must be a positive integer, got {n_segments}")
    if int(degree) != degree or not 0 <= degree <= MAX_DEGREE:
        raise InvalidCountError(f"degree must be an integer in [0, {MAX_DEGREE}], got {degree}")
    n_segments = int(n_segments)
    degree = int(degree)
    h = (hi - lo) / n_segments
    # lo + k*h (not cumulative sums) keeps the grid reproducible and exact at integer offsets
    offsets = np.arange(-degree, n_segments + degree + 1, dtype=np.float64)
    knots = lo + offsets * h
    knots[degree] = lo
    knots[degree + n_segments] = hi
    knots.setflags(write=False)
    return KnotGrid(lo, hi, n_segments, degree, knots)


def _check_domain(grid: KnotGrid, x: np.ndarray) -> np.ndarray:
    tol = _DOMAIN_TOL * max(1.0, abs(grid.domain_lo), abs(grid.domain_hi))
    bad = (x < grid.domain_lo - tol) | (x > grid.domain_hi + tol) | ~np.isfinite(x)
    if np.any(bad):
        first = x[np.argmax(bad)]
        raise PointOutsideDomainError(
            f"{int(bad.sum())} point(s) outside [{grid.domain_lo}, {grid.domain_hi}], e.g. {first}")
    return np.clip(x, grid.domain_lo, grid.domain_hi)


def eval_basis(grid: KnotGrid, x) -> BasisMatrix:
    """Evaluate every B-spline of ``grid`` at the points ``x`` (Cox-de Boor).

    Points equal to ``domain_hi`` belong to the last interval, so every row
    sums to one on the closed domain.
    """
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    if x.ndim != 1:
        raise ValueError("x must be one-dimensional")
    xc = _check_domain(grid, x)
    t = grid.knots
    q = grid.degree
    n = x.size

    # interval index in the knot vector: t[j] <= x < t[j + 1]
    seg = np.floor((xc - grid.domain_lo) / grid.spacing).astype(np.intp)
    seg = np.clip(seg, 0, grid.n_segments - 1)
    # floor may land one interval off where x sits on a knot
    seg = np.where(xc < t[seg + q], seg - 1, seg)
    seg = np.where(xc >= t[seg + q + 1], seg + 1, seg)
    seg = np.clip(seg, 0, grid.n_segments - 1)
    left = seg + q

    # local triangular table: only the q + 1 functions nonzero on the interval
    local = np.zeros((n, q + 1))
    local[:, 0] = 1.0
    rows = np.arange(n)
    for k in range(1, q + 1):
        saved = np.zeros(n)
        for r in range(k):
            # functions j = left - k + r (+1) at degree k - 1 live in local[:, r]
            t_right = t[left + r + 1]
            t_left = t[left + r + 1 - k]
            w = local[:, r] / (t_right - t_left)
            local[:, r] = saved + (t_right - xc) * w
            saved = (xc - t_left) * w
        local[:, k] = saved

    values = np.zeros((n, grid.n_basis))
    for r in range(q + 1):
        values[rows, left - q + r] = local[:, r]
    return BasisMatrix(values, grid, x.copy())
