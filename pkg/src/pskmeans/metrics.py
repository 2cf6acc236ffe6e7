"""Adjusted Rand Index (Hubert and Arabie, 1985)."""
from __future__ import annotations

from math import comb

import numpy as np

from .errors import LengthMismatchError


def contingency_table(labels_a, labels_b) -> np.ndarray:
    """Cross-tabulate two labelings; rows follow sorted ``labels_a``, columns sorted ``labels_b``."""
    a = np.asarray(labels_a)
    b = np.asarray(labels_b)
    if a.ndim != 1 or a.shape != b.shape:
        raise LengthMismatchError(f"label sequences must have equal length, got {a.shape} and {b.shape}")
    _, ia = np.unique(a, return_inverse=True)
    _, ib = np.unique(b, return_inverse=True)
    table = np.zeros((ia.max(initial=-1) + 1, ib.max(initial=-1) + 1), dtype=np.int64)
    np.add.at(table, (ia, ib), 1)
    return table


def _pairs(counts) -> int:
    return sum(comb(int(c), 2) for c in np.ravel(counts))


def adjusted_rand_index(labels_a, labels_b) -> float:
    """Chance-corrected agreement between two partitions of the same items.

    Pair counts are summed as Python integers, so only the final division
    is done in floating point. When both partitions put every item in one
    cluster, or every item in its own cluster, the index is 0/0; it is then
    reported as 1.0 if the partitions coincide and 0.0 otherwise.
    """
    table = contingency_table(labels_a, labels_b)
    n = int(table.sum())
    if n < 2:
        raise ValueError(f"need at least 2 items, got {n}")
    index = _pairs(table)
    rows = _pairs(table.sum(axis=1))
    cols = _pairs(table.sum(axis=0))
    total = comb(n, 2)
    # scale numerator and denominator by 2 * total to stay in integers
    num = 2 * (index * total - rows * cols)
    den = (rows + cols) * total - 2 * rows * cols
    if den == 0:
        same = table.shape[0] == table.shape[1] and np.count_nonzero(table) == table.shape[0]
        return 1.0 if same else 0.0
    return num / den
