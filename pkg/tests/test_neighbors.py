import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bi3.dataset import Column, FeatureSchema, NOMINAL, NUMERIC
from bi3.errors import PreconditionError, UnsupportedInstanceError
from bi3.neighbors import (MetricConfig, distance, flexible_neighborhood, knn, minority_counts)
from conftest import make_dataset
from oracles import brute_knn, brute_order

MINMAX = MetricConfig(normalization="minmax")


def test_distance_examples():
    num = FeatureSchema.numeric(2)
    assert distance((0, 0), (3, 4), num) == 5.0
    assert distance((1.5, -2), (1.5, -2), num) == 0.0
    mixed = FeatureSchema((Column("x", NUMERIC), Column("color", NOMINAL, ("red", "blue"))))
    assert distance((0, 0), (0, 1), mixed) == 1.0
    # index mode treats category codes as numbers
    assert distance((0, 0), (0, 1), mixed, MetricConfig(nominal="index")) == 1.0


def test_distance_errors():
    with pytest.raises(ValueError):
        distance((0, 0), (1,), FeatureSchema.numeric(2))
    with pytest.raises(PreconditionError):
        distance((0, 0), (1, 1), FeatureSchema.numeric(2), MINMAX)
    ranges = (np.array([0.0, 0.0]), np.array([2.0, 4.0]))
    assert distance((0, 0), (2, 4), FeatureSchema.numeric(2), MINMAX, ranges) == pytest.approx(2 ** 0.5)


def test_metric_config_validation():
    with pytest.raises(ValueError):
        MetricConfig(normalization="zscore")
    with pytest.raises(ValueError):
        MetricConfig(nominal="hamming")


def test_collinear_tie_broken_by_index():
    ds = make_dataset([[0.0], [1.0], [2.0]], [1, -1, 1])
    nb = knn(ds, 1, 2)
    assert nb.indices.tolist() == [0, 2]
    assert nb.distances.tolist() == [1.0, 1.0]


def test_k_equal_n_minus_one_returns_everything_sorted():
    rng = np.random.default_rng(0)
    X = rng.standard_normal((12, 3))
    ds = make_dataset(X, [1] * 4 + [-1] * 8)
    nb = knn(ds, 5, 11)
    assert nb.indices.tolist() == brute_order(X, 5, [0, 0, 0])
    assert np.all(np.diff(nb.distances) >= 0)


def test_random_fifty_points_match_brute_force():
    rng = np.random.default_rng(42)
    X = rng.standard_normal((50, 4))
    ds = make_dataset(X, [1] * 10 + [-1] * 40)
    for i in range(50):
        nb = knn(ds, i, 5)
        want_idx, want_sq = brute_knn(X, i, 5, [0] * 4)
        assert nb.indices.tolist() == want_idx
        assert np.allclose(nb.distances ** 2, want_sq)


def test_knn_k_out_of_range():
    ds = make_dataset([[0.0], [1.0], [2.0]], [1, -1, 1])
    for k in (0, 3):
        with pytest.raises(PreconditionError):
            knn(ds, 0, k)


def test_nominal_overlap_neighbors():
    X = [[0, 0.0], [1, 0.1], [0, 0.5], [2, 0.0]]
    ds = make_dataset(X, [1, -1, 1, -1], nominal_cols=(0,), categories=3)
    # overlap: rows 1 and 3 are 1 nominal unit away; row 2 only 0.5 numeric
    assert knn(ds, 0, 1).indices.tolist() == [2]
    # index mode: category 2 is 2 units away
    assert knn(ds, 0, 3, MetricConfig(nominal="index")).indices.tolist() == [2, 1, 3]


def test_flexible_not_applied_when_minority_neighbor_present():
    # query at 0, neighbors ordered (+,-,-,+,-)
    X = [[0.0], [1.0], [2.0], [3.0], [4.0], [5.0], [6.0]]
    y = [1, 1, -1, -1, 1, -1, -1]
    nb = flexible_neighborhood(make_dataset(X, y), 0, 5)
    assert (nb.M, nb.k, nb.flexible_applied) == (3, 5, False)


def test_flexible_grows_to_nearest_minority():
    # query at 0; seven majority samples before the other minority sample at 8
    X = [[0.0]] + [[float(t)] for t in range(1, 8)] + [[8.0], [9.0], [10.0]]
    y = [1] + [-1] * 7 + [1, -1, -1]
    nb = flexible_neighborhood(make_dataset(X, y), 0, 5)
    assert (nb.M, nb.k, nb.flexible_applied) == (7, 8, True)
    assert nb.labels.tolist() == [-1] * 7 + [1]
    assert nb.indices.tolist() == list(range(1, 9))


def test_flexible_errors():
    ds = make_dataset([[0.0], [1.0], [2.0], [3.0]], [1, -1, -1, -1])
    with pytest.raises(UnsupportedInstanceError):
        flexible_neighborhood(ds, 0, 2)
    with pytest.raises(PreconditionError):
        flexible_neighborhood(ds, 1, 2)


def test_minority_counts_agree_with_single_queries():
    rng = np.random.default_rng(7)
    X = rng.standard_normal((80, 2))
    y = np.where(np.arange(80) < 12, 1, -1)
    ds = make_dataset(X, y)
    counts = minority_counts(ds, 5)
    for i, M, k, flag in zip(counts.indices, counts.M, counts.k, counts.flexible_applied):
        nb = flexible_neighborhood(ds, i, 5)
        assert (nb.M, nb.k, nb.flexible_applied) == (M, k, flag)


@st.composite
def labelled_points(draw, ties=True):
    n = draw(st.integers(4, 30))
    d = draw(st.integers(1, 3))
    seed = draw(st.integers(0, 2**32 - 1))
    rng = np.random.default_rng(seed)
    X = rng.integers(0, 4, (n, d)).astype(float) if ties else rng.standard_normal((n, d))
    n_pos = draw(st.integers(2, n // 2))
    y = np.array([1] * n_pos + [-1] * (n - n_pos))
    rng.shuffle(y)
    return X, y


@given(labelled_points(), st.integers(1, 6))
def test_flexible_invariants(data, k0):
    X, y = data
    ds = make_dataset(X, y)
    k0 = min(k0, ds.n - 1)
    for i in ds.positive_indices:
        nb = flexible_neighborhood(ds, i, k0)
        assert nb.k - nb.M >= 1
        assert 0 <= nb.M <= nb.k
        if nb.flexible_applied:
            assert nb.k > k0 and nb.k - nb.M == 1
            assert (nb.labels[:-1] == -1).all() and nb.labels[-1] == 1
        order = brute_order(X, i, [0] * X.shape[1])
        assert nb.indices.tolist() == order[:nb.k]


@given(labelled_points(ties=False), st.integers(0, 2**32 - 1))
def test_knn_permutation_invariance(data, seed):
    X, y = data
    perm = np.random.default_rng(seed).permutation(len(y))
    ds = make_dataset(X, y)
    permuted = make_dataset(X[perm], y[perm])
    inv = np.argsort(perm)
    k = min(3, len(y) - 1)
    for i in range(len(y)):
        a = knn(ds, i, k).indices
        b = knn(permuted, inv[i], k).indices
        assert perm[b].tolist() == a.tolist()


@given(labelled_points(ties=False), st.lists(st.floats(0.01, 1000), min_size=3, max_size=3))
def test_minmax_scale_invariance(data, scales):
    X, y = data
    Xs = X * np.array(scales[:X.shape[1]])
    a = make_dataset(X, y)
    b = make_dataset(Xs, y)
    k = min(4, len(y) - 1)
    for i in range(len(y)):
        na, nb = knn(a, i, k, MINMAX), knn(b, i, k, MINMAX)
        assert na.indices.tolist() == nb.indices.tolist()
        assert np.allclose(na.distances, nb.distances)


def test_constant_column_is_ignored_under_minmax():
    X = np.array([[5.0, 0.0], [5.0, 1.0], [5.0, 3.0]])
    ds = make_dataset(X, [1, -1, 1])
    nb = knn(ds, 0, 2, MINMAX)
    assert nb.distances.tolist() == pytest.approx([1 / 3, 1.0])
