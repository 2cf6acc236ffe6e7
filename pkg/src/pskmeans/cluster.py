"""Multi-restart k-means on spline-coefficient vectors."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import EmptyInputError, InvalidKError, LengthMismatchError, ZeroVarianceError

log = logging.getLogger(__name__)

DISTANCES = ("sq_euclid", "pearson")
INITS = ("random_partition", "forgy", "kmeans++")
MAX_ITER = 300


@dataclass(frozen=True)
class CoefficientMatrix:
    """``n_basis x N`` matrix; column ``i`` holds the coefficients of series ``i``."""

    values: np.ndarray
    series_ids: tuple = ()

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 2:
            raise ValueError("coefficient matrix must be 2-d")
        if not np.all(np.isfinite(v)):
            raise ValueError("coefficient matrix has non-finite entries")
        ids = tuple(str(s) for s in self.series_ids) or tuple(f"s{i}" for i in range(v.shape[1]))
        if len(ids) != v.shape[1]:
            raise LengthMismatchError(f"{len(ids)} series ids for {v.shape[1]} columns")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "series_ids", ids)

    @property
    def n_series(self) -> int:
        return self.values.shape[1]


@dataclass
class Partition:
    labels: np.ndarray
    centroids: np.ndarray
    objective: float
    n_iterations: int
    restart_index: int
    seed: int
    distance: str = "sq_euclid"
    restart_objectives: np.ndarray = field(default=None, repr=False)
    history: np.ndarray = field(default=None, repr=False)

    @property
    def k(self) -> int:
        return self.centroids.shape[1]


def dist_sq_euclid(a, c) -> float:
    a = np.asarray(a, dtype=np.float64)
    c = np.asarray(c, dtype=np.float64)
    if a.shape != c.shape:
        raise LengthMismatchError(f"vectors differ in shape: {a.shape} vs {c.shape}")
    d = a - c
    return float(d @ d)


def dist_pearson(a, c) -> float:
    """``1 - r`` with ``r`` the sample Pearson correlation; lies in ``[0, 2]``."""
    a = np.asarray(a, dtype=np.float64)
    c = np.asarray(c, dtype=np.float64)
    if a.shape != c.shape:
        raise LengthMismatchError(f"vectors differ in shape: {a.shape} vs {c.shape}")
    za = _standardize(a[None, :])[0]
    zc = _standardize(c[None, :])[0]
    if not (np.any(za) and np.any(zc)):
        raise ZeroVarianceError("Pearson correlation undefined for a constant vector")
    return float(np.clip(1.0 - za @ zc, 0.0, 2.0))


def _standardize(rows: np.ndarray) -> np.ndarray:
    """Center each row and scale it to unit norm; constant rows become zero."""
    centered = rows - rows.mean(axis=1, keepdims=True)
    norms = np.linalg.norm(centered, axis=1, keepdims=True)
    # relative threshold: rows that are constant up to rounding
    scale = np.maximum(np.abs(rows).max(axis=1, keepdims=True), 1.0)
    flat = norms <= 1e-13 * scale * np.sqrt(rows.shape[1])
    out = np.divide(centered, norms, out=np.zeros_like(centered), where=~flat)
    return out


def pairwise_distances(points: np.ndarray, centroids: np.ndarray, distance: str) -> np.ndarray:
    """``N x K`` distances between rows of ``points`` and rows of ``centroids``.

    Under the Pearson distance a constant vector has distance 2 to everything.
    """
    if distance == "sq_euclid":
        d = points[:, None, :] - centroids[None, :, :]
        return np.einsum("nkp,nkp->nk", d, d)
    if distance == "pearson":
        zp = _standardize(points)
        zc = _standardize(centroids)
        out = np.clip(1.0 - zp @ zc.T, 0.0, 2.0)
        dead = ~np.any(zp, axis=1)[:, None] | ~np.any(zc, axis=1)[None, :]
        out[dead] = 2.0
        return out
    raise ValueError(f"unknown distance {distance!r}; expected one of {DISTANCES}")


def _centroids(points: np.ndarray, labels: np.ndarray, k: int) -> np.ndarray:
    sums = np.zeros((k, points.shape[1]))
    np.add.at(sums, labels, points)
    counts = np.bincount(labels, minlength=k)
    return sums / np.maximum(counts, 1)[:, None]


def _objective(points, labels, cents, distance) -> float:
    return float(pairwise_distances(points, cents, distance)[np.arange(points.shape[0]), labels].sum())


def _init_labels(points, k, distance, rng, init) -> np.ndarray:
    n = points.shape[0]
    if init == "random_partition":
        # random balanced split, so no initial cluster is empty
        return rng.permutation(n) % k
    if init == "forgy":
        # k distinct columns as starting centroids
        idx = rng.choice(n, size=k, replace=False)
        return np.argmin(pairwise_distances(points, points[idx], distance), axis=1)
    # k-means++ seeding, then labels from the nearest seed
    idx = [int(rng.integers(n))]
    for _ in range(1, k):
        d = pairwise_distances(points, points[idx], distance).min(axis=1)
        total = d.sum()
        nxt = int(rng.choice(n, p=d / total)) if total > 0 else int(rng.integers(n))
        idx.append(nxt)
    return np.argmin(pairwise_distances(points, points[idx], distance), axis=1)


def _fill_empty(points, labels, cents, k, distance):
    """Move the point farthest from its own centroid into each empty cluster."""
    counts = np.bincount(labels, minlength=k)
    for empty in np.flatnonzero(counts == 0):
        own = pairwise_distances(points, cents, distance)[np.arange(len(labels)), labels]
        own[counts[labels] <= 1] = -np.inf  # never empty another cluster
        far = int(np.argmax(own))
        counts[labels[far]] -= 1
        labels[far] = empty
        counts[empty] = 1
        cents = _centroids(points, labels, k)
    return labels, cents


def _one_restart(points, k, distance, max_iter, rng, init):
    labels = _init_labels(points, k, distance, rng, init)
    cents = _centroids(points, labels, k)
    labels, cents = _fill_empty(points, labels, cents, k, distance)
    history = [_objective(points, labels, cents, distance)]
    n_iter = 0
    for n_iter in range(1, max_iter + 1):
        dist = pairwise_distances(points, cents, distance)
        new = np.argmin(dist, axis=1)
        # keep the current label on ties so the loop cannot cycle
        cur = dist[np.arange(len(labels)), labels]
        new = np.where(cur <= dist[np.arange(len(labels)), new], labels, new)
        changed = not np.array_equal(new, labels)
        labels = new
        cents = _centroids(points, labels, k)
        labels, cents = _fill_empty(points, labels, cents, k, distance)
        history.append(_objective(points, labels, cents, distance))
        if not changed:
            break
    return labels, cents, history[-1], n_iter, np.asarray(history)


def kmeans(A: CoefficientMatrix | np.ndarray, k: int, distance: str = "sq_euclid",
           restarts: int = 50, max_iter: int = MAX_ITER, seed: int = 0,
           init: str = "forgy") -> Partition:
    """Best-of-``restarts`` k-means over the columns of ``A``.

    Each restart draws fresh random starting centroids (``forgy``: K
    distinct columns; ``random_partition``: means of a random split of the
    columns into K groups; ``kmeans++``: distance-weighted seeding), then
    alternates nearest-centroid assignment and mean updates until no label
    changes or ``max_iter`` is reached. Centroids are coordinatewise means
    under both distances. The restart with the smallest objective wins;
    ties go to the earliest restart.
    """
    values = A.values if isinstance(A, CoefficientMatrix) else np.asarray(A, dtype=np.float64)
    if values.ndim != 2 or values.size == 0:
        raise EmptyInputError("coefficient matrix is empty")
    if distance not in DISTANCES:
        raise ValueError(f"unknown distance {distance!r}; expected one of {DISTANCES}")
    if init not in INITS:
        raise ValueError(f"unknown init {init!r}; expected one of {INITS}")
    n = values.shape[1]
    if int(k) != k or not 1 < k < n:
        raise InvalidKError(f"need 1 < K < N, got K={k}, N={n}")
    if restarts < 1 or max_iter < 1:
        raise ValueError("restarts and max_iter must be >= 1")
    k = int(k)
    points = values.T
    if distance == "pearson":
        flat = ~np.any(_standardize(points), axis=1)
        if flat.any():
            log.warning("%d constant coefficient vector(s); Pearson distance set to 2 for them",
                        int(flat.sum()))

    children = np.random.SeedSequence(seed).spawn(restarts)
    best = None
    objectives = np.empty(restarts)
    for r, child in enumerate(children):
        out = _one_restart(points, k, distance, max_iter, np.random.default_rng(child), init)
        objectives[r] = out[2]
        if best is None or out[2] < best[2]:
            best = out + (r,)
    labels, cents, obj, n_iter, history, r = best
    return Partition(labels=labels.astype(np.int64), centroids=cents.T.copy(), objective=obj,
                     n_iterations=n_iter, restart_index=r, seed=seed, distance=distance,
                     restart_objectives=objectives, history=history)


def centroid_update(A, labels: Sequence[int], k: int) -> np.ndarray:
    """Coordinatewise mean of the columns assigned to each cluster (``n_basis x k``)."""
    values = A.values if isinstance(A, CoefficientMatrix) else np.asarray(A, dtype=np.float64)
    return _centroids(values.T, np.asarray(labels, dtype=np.intp), k).T
