import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pskmeans.cluster import (CoefficientMatrix, centroid_update, dist_pearson, dist_sq_euclid,
                              kmeans, pairwise_distances)
from pskmeans.errors import (EmptyInputError, InvalidKError, LengthMismatchError,
                             ZeroVarianceError)
from pskmeans.metrics import adjusted_rand_index


def test_sq_euclid_examples():
    assert dist_sq_euclid([1.5, -2.0], [1.5, -2.0]) == 0.0
    assert dist_sq_euclid([0, 0], [3, 4]) == 25.0
    with pytest.raises(LengthMismatchError):
        dist_sq_euclid([0, 0], [1, 2, 3])


def test_sq_euclid_loop_oracle(rng):
    for _ in range(50):
        a, c = rng.standard_normal(13), rng.standard_normal(13)
        total = 0.0
        for ai, ci in zip(a, c):
            total += (ai - ci) * (ai - ci)
        assert dist_sq_euclid(a, c) == pytest.approx(total, rel=1e-12)


def test_pearson_examples():
    assert dist_pearson([1, 2, 3], [2, 4, 6]) == pytest.approx(0.0, abs=1e-15)
    assert dist_pearson([1, 2, 3], [3, 2, 1]) == pytest.approx(2.0, abs=1e-15)
    a = np.array([0.3, -1.2, 4.0, 2.2])
    assert dist_pearson(a, a + 17.5) == pytest.approx(0.0, abs=1e-14)


def test_pearson_matches_corrcoef(rng):
    for _ in range(20):
        a, c = rng.standard_normal(13), rng.standard_normal(13)
        assert dist_pearson(a, c) == pytest.approx(1 - np.corrcoef(a, c)[0, 1], abs=1e-12)


def test_pearson_zero_variance():
    with pytest.raises(ZeroVarianceError):
        dist_pearson([1, 1, 1], [1, 2, 3])
    # matrix form treats a flat vector as maximally distant
    d = pairwise_distances(np.array([[2.0, 2.0, 2.0], [1.0, 2.0, 3.0]]),
                           np.array([[1.0, 2.0, 3.0]]), "pearson")
    np.testing.assert_allclose(d[:, 0], [2.0, 0.0], atol=1e-15)


def test_pairwise_matches_scalar(rng):
    pts, cents = rng.standard_normal((7, 5)), rng.standard_normal((3, 5))
    for name, fn in (("sq_euclid", dist_sq_euclid), ("pearson", dist_pearson)):
        d = pairwise_distances(pts, cents, name)
        ref = np.array([[fn(p, c) for c in cents] for p in pts])
        np.testing.assert_allclose(d, ref, rtol=1e-12, atol=1e-12)


def test_centroid_update_single_cluster(rng):
    A = rng.standard_normal((13, 20))
    np.testing.assert_allclose(centroid_update(A, np.zeros(20, int), 1)[:, 0], A.mean(axis=1))


def test_centroid_update_groups(rng):
    A = rng.standard_normal((4, 9))
    labels = np.array([0, 1, 2, 0, 1, 2, 0, 0, 1])
    c = centroid_update(A, labels, 3)
    for k in range(3):
        np.testing.assert_allclose(c[:, k], A[:, labels == k].mean(axis=1))


@pytest.mark.parametrize("distance", ["sq_euclid", "pearson"])
def test_identical_groups(distance):
    a = np.array([1.0, 3.0, 2.0, 5.0])
    b = np.array([4.0, -1.0, 0.5, 0.0])
    A = np.column_stack([a] * 6 + [b] * 5)
    truth = [0] * 6 + [1] * 5
    p = kmeans(A, 2, distance, restarts=5, seed=3)
    assert p.objective == pytest.approx(0.0, abs=1e-12)
    assert adjusted_rand_index(p.labels, truth) == 1.0


def _blobs(rng, n=60, p=13, sep=10.0):
    truth = np.repeat([0, 1], n // 2)
    centers = np.zeros((2, p))
    centers[1, 0] = sep
    return (centers[truth] + rng.standard_normal((n, p))).T, truth


def test_gaussian_blobs_recovered():
    hits = 0
    for seed in range(100):
        A, truth = _blobs(np.random.default_rng(1000 + seed))
        p = kmeans(A, 2, "sq_euclid", restarts=10, seed=seed)
        hits += adjusted_rand_index(p.labels, truth) == 1.0
    assert hits >= 95


@pytest.mark.parametrize("init", ["random_partition", "forgy", "kmeans++"])
def test_monotone_descent(rng, init):
    A = rng.standard_normal((5, 80))
    for seed in range(5):
        p = kmeans(A, 4, "sq_euclid", restarts=1, seed=seed, init=init)
        h = p.history
        assert np.all(np.diff(h) <= 1e-10 * np.maximum(1, h[:-1]))


@pytest.mark.parametrize("distance", ["sq_euclid", "pearson"])
def test_objective_recomputable(rng, distance):
    A = rng.standard_normal((6, 40))
    p = kmeans(A, 3, distance, restarts=4, seed=1)
    fn = dist_sq_euclid if distance == "sq_euclid" else dist_pearson
    j = sum(fn(A[:, i], p.centroids[:, p.labels[i]]) for i in range(40))
    assert p.objective == pytest.approx(j, rel=1e-8)
    np.testing.assert_allclose(p.centroids, centroid_update(A, p.labels, 3), atol=1e-12)
    assert set(p.labels.tolist()) == {0, 1, 2}


def test_permutation_equivariance():
    rng = np.random.default_rng(8)
    A = np.column_stack([rng.normal(m, 0.3, (4, 15)) for m in (0, 3, 6)])
    perm = rng.permutation(A.shape[1])
    p1 = kmeans(A, 3, restarts=10, seed=2)
    p2 = kmeans(A[:, perm], 3, restarts=10, seed=2)
    assert adjusted_rand_index(p1.labels[perm], p2.labels) == 1.0


@pytest.mark.parametrize("distance", ["sq_euclid", "pearson"])
def test_deterministic(rng, distance):
    A = rng.standard_normal((13, 50))
    p1 = kmeans(A, 4, distance, restarts=7, seed=11)
    p2 = kmeans(A.copy(), 4, distance, restarts=7, seed=11)
    assert p1.labels.tobytes() == p2.labels.tobytes()
    assert p1.objective == p2.objective


def test_best_of_restarts(rng):
    A = rng.standard_normal((3, 60))
    p = kmeans(A, 5, restarts=20, seed=4)
    assert p.objective <= p.restart_objectives.min()
    assert p.restart_objectives[p.restart_index] == p.objective
    assert p.restart_index == int(np.argmin(p.restart_objectives))


def test_invalid_inputs(rng):
    A = rng.standard_normal((4, 10))
    for k in (0, 1, 10, 11, 2.5):
        with pytest.raises(InvalidKError):
            kmeans(A, k)
    with pytest.raises(EmptyInputError):
        kmeans(np.empty((0, 0)), 2)
    with pytest.raises(ValueError):
        kmeans(A, 2, distance="manhattan")
    with pytest.raises(ValueError):
        kmeans(A, 2, restarts=0)
    with pytest.raises(ValueError):
        CoefficientMatrix(np.array([[1.0, np.nan]]))


def test_no_empty_clusters_with_duplicates():
    # many duplicate columns make empty clusters likely during iteration
    A = np.column_stack([np.zeros(3)] * 10 + [np.ones(3)] * 2 + [np.array([5.0, 5, 5])])
    for seed in range(20):
        for init in ("random_partition", "forgy", "kmeans++"):
            p = kmeans(A, 3, restarts=1, seed=seed, init=init)
            assert np.bincount(p.labels, minlength=3).min() >= 1


def test_constant_columns_under_pearson(rng, caplog):
    A = rng.standard_normal((5, 12))
    A[:, 0] = 1.0
    p = kmeans(A, 2, "pearson", restarts=3, seed=0)
    assert p.labels.shape == (12,)
    assert "constant" in caplog.text


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(4, 30), k=st.integers(2, 3))
def test_labels_in_range_property(seed, n, k):
    A = np.random.default_rng(seed).standard_normal((3, n))
    p = kmeans(A, k, restarts=2, seed=seed)
    assert p.labels.min() >= 0 and p.labels.max() < k
    assert np.bincount(p.labels, minlength=k).min() >= 1
    assert p.objective >= 0
