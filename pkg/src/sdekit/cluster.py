"""Event clustering: z-score normalisation, k-means and cluster-count selection."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

logger = logging.getLogger(__name__)

CH_INFINITY = float(np.finfo(float).max)
CLUSTER_NAMES = ("severe power deficit", "power deficit", "cascading", "energy deficit")
CLUSTER_TAGS = ("S", "P", "C", "E")


@dataclass
class FeatureMatrix:
    """Z-scored feature rows plus what is needed to undo the transform."""

    values: np.ndarray
    mean: np.ndarray
    std: np.ndarray
    zero_variance: np.ndarray
    columns: tuple[str, ...] = ()

    def inverse(self, z: np.ndarray) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        scale = np.where(self.zero_variance, 0.0, self.std)
        return z * scale + self.mean


def normalize(features) -> FeatureMatrix:
    """Column-wise z-score with population std; constant columns become 0 and are flagged."""
    columns = tuple(features.columns) if isinstance(features, pd.DataFrame) else ()
    x = np.asarray(features, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.shape[0] < 2:
        raise ValueError("normalisation needs at least two rows")
    if not np.isfinite(x).all():
        raise ValueError("feature matrix has missing or non-finite entries")
    mean = x.mean(axis=0)
    std = x.std(axis=0)
    zero = std <= 1e-12 * np.maximum(1.0, np.abs(mean))
    z = np.where(zero, 0.0, (x - mean) / np.where(zero, 1.0, std))
    return FeatureMatrix(z, mean, std, zero, columns)


def _as_array(matrix) -> np.ndarray:
    x = matrix.values if isinstance(matrix, FeatureMatrix) else np.asarray(matrix, dtype=float)
    return x[:, None] if x.ndim == 1 else x


def _sq_dists(x, centres):
    return ((x[:, None, :] - centres[None, :, :]) ** 2).sum(axis=2)


@dataclass
class ClusterModel:
    k: int
    centroids: np.ndarray
    labels: np.ndarray
    inertia: float
    seed: int
    silhouette: float = np.nan
    calinski_harabasz: float = np.nan
    ch_degenerate: bool = False
    centroids_original: np.ndarray | None = None
    inertia_history: list[float] = field(default_factory=list)
    n_iter: int = 0
    scores: pd.DataFrame | None = None


def _kmeans_pp(x, k, rng):
    n = len(x)
    centres = [x[rng.integers(n)]]
    for _ in range(1, k):
        d2 = _sq_dists(x, np.array(centres)).min(axis=1)
        total = d2.sum()
        if total <= 0:
            idx = rng.integers(n)
        else:
            idx = rng.choice(n, p=d2 / total)
        centres.append(x[idx])
    return np.array(centres, dtype=float)


def kmeans(matrix, k: int, seed: int = 0, max_iter: int = 300, tol: float = 1e-9) -> ClusterModel:
    """Lloyd's algorithm from a seeded k-means++ start.

    Empty clusters are refilled with the point farthest from its centre.
    """
    x = _as_array(matrix)
    n = len(x)
    if not 1 <= k <= n:
        raise ValueError(f"k={k} must lie in [1, {n}]")
    rng = np.random.default_rng(seed)
    centres = _kmeans_pp(x, k, rng)
    history = []
    labels = np.zeros(n, dtype=int)
    it = 0
    for it in range(1, max_iter + 1):
        d2 = _sq_dists(x, centres)
        labels = d2.argmin(axis=1)
        history.append(float(d2[np.arange(n), labels].sum()))
        counts = np.bincount(labels, minlength=k)
        for empty in np.flatnonzero(counts == 0):
            own = d2[np.arange(n), labels]
            # only steal from clusters that keep at least one member
            donors = counts[labels] > 1
            far = int(np.argmax(np.where(donors, own, -1.0)))
            counts[labels[far]] -= 1
            labels[far] = empty
            counts[empty] = 1
        new = np.array([x[labels == j].mean(axis=0) for j in range(k)])
        shift = float(np.sqrt(((new - centres) ** 2).sum(axis=1)).max())
        centres = new
        if shift < tol:
            break
    d2 = _sq_dists(x, centres)
    inertia = float(d2[np.arange(n), labels].sum())
    history.append(inertia)
    model = ClusterModel(k=k, centroids=centres, labels=labels, inertia=inertia, seed=seed,
                         inertia_history=history, n_iter=it)
    if isinstance(matrix, FeatureMatrix):
        model.centroids_original = matrix.inverse(centres)
    return model


def silhouette(matrix, labels) -> float:
    """Mean silhouette width with Euclidean distances; singletons score 0."""
    x = _as_array(matrix)
    labels = np.asarray(labels)
    ids = np.unique(labels)
    if len(ids) < 2:
        raise ValueError("silhouette needs at least two clusters")
    dist = np.sqrt(_sq_dists(x, x))
    s = np.zeros(len(x))
    for i in range(len(x)):
        own = labels == labels[i]
        if own.sum() == 1:
            continue
        a = dist[i, own].sum() / (own.sum() - 1)
        b = min(dist[i, labels == j].mean() for j in ids if j != labels[i])
        denom = max(a, b)
        s[i] = 0.0 if denom == 0 else (b - a) / denom
    return float(s.mean())


def calinski_harabasz(matrix, labels) -> float:
    """Between/within dispersion ratio, each scaled by its degrees of freedom.

    Returns :data:`CH_INFINITY` when the within-cluster scatter is zero.
    """
    x = _as_array(matrix)
    labels = np.asarray(labels)
    ids = np.unique(labels)
    n, k = len(x), len(ids)
    if not 1 < k < n:
        raise ValueError(f"calinski_harabasz needs 1 < k < n (k={k}, n={n})")
    centre = x.mean(axis=0)
    between = within = 0.0
    for j in ids:
        pts = x[labels == j]
        c = pts.mean(axis=0)
        between += len(pts) * float(((c - centre) ** 2).sum())
        within += float(((pts - c) ** 2).sum())
    if within == 0.0:
        logger.warning("zero within-cluster dispersion; Calinski-Harabasz is infinite")
        return CH_INFINITY
    return (between / (k - 1)) / (within / (n - k))


def _restart_seeds(seed: int, n: int) -> list[int]:
    return [int(s) for s in np.random.SeedSequence(seed).generate_state(n)]


def best_of(matrix, k: int, seed: int = 0, restarts: int = 10) -> ClusterModel:
    """Lowest-inertia k-means over seed-derived restarts."""
    best = None
    for s in _restart_seeds(seed, restarts):
        m = kmeans(matrix, k, s)
        if best is None or m.inertia < best.inertia - 1e-12:
            best = m
    best.seed = seed
    return best


def select_k(matrix, k_range, seed: int = 0, restarts: int = 10) -> ClusterModel:
    """Pick k by silhouette, then Calinski-Harabasz, then smaller k.

    The returned model carries the full score table in ``scores``.
    """
    x = _as_array(matrix)
    ks = list(range(k_range[0], k_range[1] + 1)) if isinstance(k_range, tuple) else list(k_range)
    if not ks:
        raise ValueError("empty k range")
    if min(ks) < 2 or max(ks) > max(len(x) - 1, 2):
        raise ValueError(f"k range {ks} must lie within [2, {len(x) - 1}]")
    rows, models = [], {}
    for k in ks:
        m = best_of(matrix, k, seed, restarts)
        m.silhouette = silhouette(x, m.labels) if len(np.unique(m.labels)) > 1 else -1.0
        if 1 < k < len(x):
            m.calinski_harabasz = calinski_harabasz(x, m.labels)
            m.ch_degenerate = m.calinski_harabasz == CH_INFINITY
        models[k] = m
        rows.append({"k": k, "silhouette": m.silhouette, "calinski_harabasz": m.calinski_harabasz,
                     "inertia": m.inertia})
    scores = pd.DataFrame(rows)
    order = sorted(ks, key=lambda k: (-models[k].silhouette,
                                      -np.nan_to_num(models[k].calinski_harabasz, nan=-np.inf), k))
    chosen = models[order[0]]
    chosen.scores = scores
    return chosen


def name_clusters(model: ClusterModel, columns) -> dict[int, tuple[str, str]]:
    """Map cluster id to (name, tag) by descending back-up peak, then ascending duration.

    Uses de-normalised centroids when available. More than four clusters get
    generic names.
    """
    cols = list(columns)
    cents = model.centroids_original if model.centroids_original is not None else model.centroids
    fc, dur = cols.index("max_fc_discharge"), cols.index("duration")
    order = sorted(range(model.k), key=lambda j: (-cents[j, fc], cents[j, dur]))
    out = {}
    for rank, j in enumerate(order):
        if rank < len(CLUSTER_NAMES):
            out[j] = (CLUSTER_NAMES[rank], CLUSTER_TAGS[rank])
        else:
            out[j] = (f"type {rank + 1}", f"T{rank + 1}")
    return out


def centroid_table(model: ClusterModel, columns) -> pd.DataFrame:
    cols = list(columns)
    names = name_clusters(model, cols)
    rows = []
    for j in range(model.k):
        row = {"cluster": j, "name": names[j][0], "tag": names[j][1],
               "size": int((model.labels == j).sum())}
        row.update({f"z_{c}": float(v) for c, v in zip(cols, model.centroids[j])})
        if model.centroids_original is not None:
            row.update({c: float(v) for c, v in zip(cols, model.centroids_original[j])})
        rows.append(row)
    return pd.DataFrame(rows)
