"""Partition agreement, ensemble diversity, distance distortion and a k-means baseline."""

from dataclasses import dataclass
from itertools import combinations

import numpy as np
from scipy.spatial.distance import pdist

from .errors import InfeasibleError, RpecluError
from .gmm import HardPartition, kmeanspp_centers


@dataclass(frozen=True)
class AriReport:
    ari: float
    n: int


@dataclass(frozen=True)
class DistortionReport:
    epsilon: float
    fraction_within: float
    d_used: int
    n_pairs: int

    @property
    def empty(self):
        return self.n_pairs == 0


def _labels(a):
    if isinstance(a, HardPartition):
        return a.labels
    return np.asarray(a).ravel()


def _pairs(counts):
    # exact integer pair counts; python ints avoid overflow for large n
    return sum(int(c) * (int(c) - 1) // 2 for c in np.ravel(counts))


def adjusted_rand_index(a, b):
    """Hubert-Arabie adjusted Rand index from the contingency table of two labelings."""
    la, lb = _labels(a), _labels(b)
    if la.shape != lb.shape:
        raise RpecluError(f"partitions differ in length: {la.size} vs {lb.size}")
    n = la.size
    _, ia = np.unique(la, return_inverse=True)
    _, ib = np.unique(lb, return_inverse=True)
    table = np.zeros((ia.max() + 1, ib.max() + 1), dtype=np.int64)
    np.add.at(table, (ia, ib), 1)

    index = _pairs(table)
    sum_a = _pairs(table.sum(axis=1))
    sum_b = _pairs(table.sum(axis=0))
    total = n * (n - 1) // 2
    # (index - expected) / (max - expected), scaled by 2 * total to stay in integers
    num = 2 * (total * index - sum_a * sum_b)
    denom = total * (sum_a + sum_b) - 2 * sum_a * sum_b
    if denom == 0:
        # both labelings trivial (one cluster or all singletons): they coincide
        return AriReport(1.0, n)
    return AriReport(num / denom, n)


def ari(a, b):
    """Shorthand returning the ARI value as a float."""
    return adjusted_rand_index(a, b).ari


def pairwise_diversity(partitions):
    """Min, mean and max ARI over all unordered pairs of partitions."""
    partitions = list(partitions)
    if len(partitions) < 2:
        raise RpecluError("diversity needs at least two partitions")
    values = np.array([ari(p, q) for p, q in combinations(partitions, 2)])
    return float(values.min()), float(values.mean()), float(values.max())


def jl_distortion(x, pair, epsilon, scale=None):
    """Fraction of point pairs whose projected distance stays within a factor ``1 +/- epsilon``.

    Projected distances are multiplied by ``scale`` (default ``sqrt(p/d)``)
    since an orthonormal-column map shrinks squared lengths by d/p on average.
    Pairs of coincident points are excluded.
    """
    if not 0 < epsilon < 1:
        raise RpecluError("epsilon must lie in (0, 1)")
    a = pair.a if hasattr(pair, "a") else np.asarray(pair, dtype=float)
    x = np.asarray(x, dtype=float)
    p, d = a.shape
    if scale is None:
        scale = np.sqrt(p / d)
    if scale <= 0:
        raise RpecluError("scale must be positive")
    orig = pdist(x)
    proj = scale * pdist(x @ a)
    valid = orig > 0
    n_pairs = int(valid.sum())
    if n_pairs == 0:
        return DistortionReport(float(epsilon), float("nan"), d, 0)
    o, q = orig[valid], proj[valid]
    inside = (q >= (1 - epsilon) * o) & (q <= (1 + epsilon) * o)
    return DistortionReport(float(epsilon), float(inside.mean()), d, n_pairs)


def lloyd(x, centers, max_iter=300):
    """Lloyd iterations from the given centres.

    Returns labels (0-based), centres and the within-cluster sum of squares
    after each assignment step.
    """
    centers = np.array(centers, dtype=float)
    history = []
    labels = None
    for _ in range(max_iter):
        d2 = ((x[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        new_labels = np.argmin(d2, axis=1)
        history.append(float(d2[np.arange(x.shape[0]), new_labels].sum()))
        if labels is not None and np.array_equal(new_labels, labels):
            break
        labels = new_labels
        for k in range(centers.shape[0]):
            members = x[labels == k]
            if len(members):
                centers[k] = members.mean(axis=0)
    return labels, centers, history


def kmeans_baseline(x, g, seed=0, n_starts=5):
    """Best-of-``n_starts`` k-means (k-means++ seeding) by within-cluster sum of squares."""
    x = np.asarray(x, dtype=float)
    if x.shape[0] < g:
        raise InfeasibleError(f"n={x.shape[0]} observations cannot form g={g} clusters")
    rng = np.random.default_rng(seed)
    best_labels, best_wcss = None, np.inf
    for _ in range(n_starts):
        labels, _, history = lloyd(x, kmeanspp_centers(x, g, rng))
        if history[-1] < best_wcss:
            best_labels, best_wcss = labels, history[-1]
    return HardPartition(best_labels + 1, g)
