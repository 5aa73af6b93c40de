"""External cluster-quality metrics and the class-distance baseline.

Cluster accuracy matches clusters to classes one-to-one (maximum-weight
matching on the contingency table), so surplus clusters count as false
positives; purity takes each cluster's majority class and therefore never
falls below cluster accuracy.  Distance statistics use the same squared
Euclidean distance as the rest of the toolkit.
"""

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .featureset import FeatureSet, squared_distances
from .kmeans import Clustering


class DegenerateClassError(ValueError):
    """A class has too few samples for within-class statistics."""


@dataclass(frozen=True)
class DistanceStats:
    """Mean/std of within-class and between-class squared distances."""

    mu_intra: float
    sigma_intra: float
    mu_inter: float
    sigma_inter: float
    normalized: bool


def contingency_table(pred: Clustering, truth) -> np.ndarray:
    """K x L matrix of co-occurrence counts between clusters and classes."""
    truth = np.asarray(truth, dtype=np.int64)
    if truth.ndim != 1 or truth.shape[0] != pred.n:
        raise ValueError(f"truth labels must be 1-D of length {pred.n}")
    k = pred.cluster_count
    l = int(truth.max()) + 1
    table = np.zeros((k, l), dtype=np.int64)
    np.add.at(table, (pred.assignment, truth), 1)
    return table


def cluster_accuracy(pred: Clustering, truth) -> float:
    """Fraction explained by the best one-to-one cluster-to-class matching.

    Rectangular tables are matched injectively (min(K, L) pairs); clusters
    left unmatched contribute nothing.
    """
    table = contingency_table(pred, truth)
    rows, cols = linear_sum_assignment(table, maximize=True)
    return float(table[rows, cols].sum()) / pred.n


def purity(pred: Clustering, truth) -> float:
    """Average majority-class share per cluster: (1/N) sum_k max_l |S_k & l|."""
    table = contingency_table(pred, truth)
    return float(table.max(axis=1).sum()) / pred.n


def singleton_fraction(pred: Clustering) -> float:
    """Share of clusters that contain exactly one sample."""
    sizes = np.bincount(pred.assignment, minlength=pred.cluster_count)
    return float(np.sum(sizes == 1)) / pred.cluster_count


def class_distance_stats(fs: FeatureSet, normalize: bool = False) -> DistanceStats:
    """Mean/std of same-class and different-class pairwise squared distances.

    With `normalize` all four values are divided by the global mean pairwise
    distance (absolute scales depend on the feature dimension).
    """
    counts = np.bincount(fs.labels, minlength=fs.class_count)
    present = np.flatnonzero(counts)
    if present.size < 2:
        raise DegenerateClassError(f"need >= 2 classes with samples, got {present.size}")
    small = [int(c) for c in present if counts[c] < 2]
    if small:
        raise DegenerateClassError(f"classes {small} have < 2 samples; intra stats undefined")
    d = squared_distances(fs)
    iu, ju = np.triu_indices(fs.n, k=1)
    same = fs.labels[iu] == fs.labels[ju]
    intra = d[same]
    inter = d[~same]
    scale = 1.0
    if normalize:
        total_mean = float(d.mean())
        if total_mean <= 0:
            raise DegenerateClassError("all points coincide; cannot normalize distances")
        scale = total_mean
    return DistanceStats(
        mu_intra=float(intra.mean()) / scale,
        sigma_intra=float(intra.std()) / scale,
        mu_inter=float(inter.mean()) / scale,
        sigma_inter=float(inter.std()) / scale,
        normalized=normalize,
    )


def overlap_delta(stats: DistanceStats) -> float:
    """Class overlap (mu_intra + sigma_intra) - (mu_inter + sigma_inter).

    Positive values mean the within-class spread reaches past the
    between-class distances, i.e. overlapping classes.
    """
    return (stats.mu_intra + stats.sigma_intra) - (stats.mu_inter + stats.sigma_inter)
