import numpy as np
import pandas as pd
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays
from sklearn.metrics import adjusted_rand_score, calinski_harabasz_score, silhouette_score

from sdekit.cluster import (CH_INFINITY, best_of, calinski_harabasz, centroid_table, kmeans, name_clusters,
                            normalize, select_k, silhouette)
from sdekit.events import FEATURE_NAMES


def _blobs(seed=0, k=3, n=15, spread=0.3):
    rng = np.random.default_rng(seed)
    centres = rng.uniform(-10, 10, (k, 4))
    x = np.vstack([c + spread * rng.standard_normal((n, 4)) for c in centres])
    return x, np.repeat(np.arange(k), n)


def test_scores_match_sklearn():
    rng = np.random.default_rng(5)
    x = rng.standard_normal((40, 3))
    labels = rng.integers(0, 4, 40)
    assert silhouette(x, labels) == pytest.approx(silhouette_score(x, labels), rel=1e-12)
    assert calinski_harabasz(x, labels) == pytest.approx(calinski_harabasz_score(x, labels), rel=1e-12)


def test_singleton_clusters_score_zero():
    x = np.array([[0.0], [0.1], [5.0]])
    labels = np.array([0, 0, 1])
    assert silhouette(x, labels) == pytest.approx(silhouette_score(x, labels))


def test_zero_within_dispersion_gives_ch_infinity():
    x = np.array([[0.0, 0.0], [0.0, 0.0], [1.0, 1.0], [1.0, 1.0]])
    assert calinski_harabasz(x, [0, 0, 1, 1]) == CH_INFINITY


def test_score_input_checks():
    with pytest.raises(ValueError, match="two clusters"):
        silhouette(np.ones((3, 2)), [0, 0, 0])
    with pytest.raises(ValueError):
        calinski_harabasz(np.ones((3, 2)), [0, 1, 2])


def test_normalize_population_std_and_constant_columns():
    df = pd.DataFrame({"a": [1.0, 2.0, 3.0], "b": [7.0, 7.0, 7.0]})
    fm = normalize(df)
    np.testing.assert_allclose(fm.values[:, 0], (df.a - 2.0) / np.std([1, 2, 3]))
    assert np.all(fm.values[:, 1] == 0.0) and list(fm.zero_variance) == [False, True]
    np.testing.assert_allclose(fm.inverse(fm.values), df.to_numpy())
    assert fm.columns == ("a", "b")


def test_normalize_input_checks():
    with pytest.raises(ValueError, match="two rows"):
        normalize(np.ones((1, 3)))
    with pytest.raises(ValueError, match="non-finite"):
        normalize(np.array([[1.0, np.nan], [2.0, 1.0]]))


def test_kmeans_recovers_blobs():
    x, truth = _blobs()
    m = best_of(x, 3, seed=1)
    assert adjusted_rand_score(truth, m.labels) == 1.0
    assert all(a >= b - 1e-9 for a, b in zip(m.inertia_history, m.inertia_history[1:]))


def test_kmeans_deterministic_for_seed():
    x, _ = _blobs(2, k=4)
    a, b = kmeans(x, 4, seed=9), kmeans(x, 4, seed=9)
    np.testing.assert_array_equal(a.labels, b.labels)
    np.testing.assert_array_equal(a.centroids, b.centroids)


def test_kmeans_no_empty_clusters_on_duplicates():
    x = np.array([[0.0]] * 5 + [[1.0]])
    m = kmeans(x, 3, seed=0)
    assert len(np.unique(m.labels)) == 3


def test_kmeans_k_bounds():
    with pytest.raises(ValueError):
        kmeans(np.ones((3, 2)), 4)


def test_select_k_finds_true_count():
    x, truth = _blobs(3, k=4, n=10)
    m = select_k(x, (2, 6), seed=0)
    assert m.k == 4
    assert list(m.scores["k"]) == [2, 3, 4, 5, 6]
    assert adjusted_rand_score(truth, m.labels) == 1.0


def test_select_k_range_checks():
    with pytest.raises(ValueError, match="k range"):
        select_k(np.ones((4, 2)), (2, 5))
    with pytest.raises(ValueError, match="empty"):
        select_k(np.ones((4, 2)), [])


def test_names_follow_backup_peak_then_duration():
    cols = list(FEATURE_NAMES)
    fc, dur = cols.index("max_fc_discharge"), cols.index("duration")
    cents = np.zeros((4, len(cols)))
    cents[:, fc] = [1.0, 5.0, 1.0, 3.0]
    cents[:, dur] = [100, 10, 20, 50]
    model = kmeans(np.vstack([cents, cents]), 4, seed=0)
    model.centroids_original = cents
    model.centroids = cents
    names = name_clusters(model, cols)
    assert [names[j][1] for j in range(4)] == ["E", "S", "C", "P"]
    table = centroid_table(model, cols)
    assert set(table["tag"]) == {"S", "P", "C", "E"}


@settings(max_examples=40, deadline=None)
@given(arrays(float, st.tuples(st.integers(2, 30), st.integers(1, 5)),
              elements=st.floats(-1e3, 1e3, allow_nan=False)))
def test_normalized_columns_have_zero_mean_unit_std(x):
    fm = normalize(x)
    for j in range(x.shape[1]):
        col = fm.values[:, j]
        assert abs(col.mean()) < 1e-6
        if not fm.zero_variance[j]:
            assert col.std() == pytest.approx(1.0, rel=1e-6)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.integers(2, 5))
def test_silhouette_in_range_and_matches_sklearn(seed, k):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((20, 2))
    labels = np.arange(20) % k
    s = silhouette(x, labels)
    assert -1.0 <= s <= 1.0
    assert s == pytest.approx(silhouette_score(x, labels), abs=1e-12)
