"""Lloyd's k-means with seeded k-means++ initialization.

The objective is the sum of squared Euclidean distances from each row to
its assigned centroid.  It is checked to be non-increasing across
iterations on every run.  Ties in nearest-centroid assignment break
toward the lowest centroid index; an emptied cluster is re-seeded at the
point farthest from its current centroid so k stays fixed.
"""

import struct
from dataclasses import dataclass

import numpy as np

from .featureset import (
    FeatureSet,
    MalformedHeaderError,
    FeatureSetError,
    TruncatedPayloadError,
)

_CLUSTER_MAGIC = b"LPCL"
_CLUSTER_VERSION = 1
_CLUSTER_HEADER = struct.Struct("<4sIII")


@dataclass(frozen=True)
class Clustering:
    """Assignment of n items to contiguous cluster ids 0..K-1, none empty."""

    assignment: np.ndarray

    def __post_init__(self):
        a = np.array(self.assignment, dtype=np.int64, copy=True)
        if a.ndim != 1 or a.shape[0] < 1:
            raise ValueError(f"assignment must be a non-empty 1-D array, got shape {a.shape}")
        ids = np.unique(a)
        if ids[0] != 0 or ids[-1] != ids.shape[0] - 1:
            raise ValueError("cluster ids must be contiguous 0..K-1 with no gaps")
        a.flags.writeable = False
        object.__setattr__(self, "assignment", a)

    @property
    def n(self) -> int:
        return self.assignment.shape[0]

    @property
    def cluster_count(self) -> int:
        return int(self.assignment.max()) + 1

    @staticmethod
    def from_labels(raw) -> "Clustering":
        """Canonicalize arbitrary ids to 0..K-1 in order of first appearance."""
        raw = np.asarray(raw, dtype=np.int64)
        _, first = np.unique(raw, return_index=True)
        order = raw[np.sort(first)]
        remap = {int(old): new for new, old in enumerate(order)}
        return Clustering(np.array([remap[int(v)] for v in raw], dtype=np.int64))

    def __eq__(self, other) -> bool:
        if not isinstance(other, Clustering):
            return NotImplemented
        return np.array_equal(self.assignment, other.assignment)


@dataclass(frozen=True)
class KmeansResult:
    clustering: Clustering
    centroids: np.ndarray
    objective: float
    iterations: int
    converged: bool


def _assign(x: np.ndarray, centers: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Nearest centroid per row (argmin breaks ties at the lowest index)."""
    d2 = ((x[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
    labels = np.argmin(d2, axis=1)
    return labels, d2[np.arange(x.shape[0]), labels]


def _init_plusplus(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """k-means++ seeding: next center drawn with probability ~ nearest sq. distance."""
    n = x.shape[0]
    centers = np.empty((k, x.shape[1]))
    centers[0] = x[int(rng.integers(n))]
    closest = ((x - centers[0]) ** 2).sum(axis=1)
    for j in range(1, k):
        total = closest.sum()
        if total <= 0.0:
            idx = int(rng.integers(n))
        else:
            r = rng.random() * total
            idx = int(min(np.searchsorted(np.cumsum(closest), r, side="right"), n - 1))
        centers[j] = x[idx]
        closest = np.minimum(closest, ((x - centers[j]) ** 2).sum(axis=1))
    return centers


def _lloyd(x: np.ndarray, k: int, rng, max_iter: int, tol: float) -> KmeansResult:
    n = x.shape[0]
    centers = _init_plusplus(x, k, rng)
    labels, dist = _assign(x, centers)
    objective = float(dist.sum())
    iterations = 0
    converged = False
    while iterations < max_iter:
        iterations += 1
        new_centers = centers.copy()
        counts = np.bincount(labels, minlength=k)
        for c in range(k):
            if counts[c] > 0:
                new_centers[c] = x[labels == c].mean(axis=0)
        empties = np.flatnonzero(counts == 0)
        if empties.size:
            # Re-seed each empty cluster at the point farthest from its
            # assigned centroid, so k stays fixed.
            d_own = ((x - new_centers[labels]) ** 2).sum(axis=1)
            taken = np.zeros(n, dtype=bool)
            for c in empties:
                cand = np.where(taken, -np.inf, d_own)
                far = int(np.argmax(cand))
                new_centers[c] = x[far]
                taken[far] = True
        shift = float(((new_centers - centers) ** 2).sum(axis=1).max())
        centers = new_centers
        labels, dist = _assign(x, centers)
        new_objective = float(dist.sum())
        if new_objective > objective * (1 + 1e-9) + 1e-12:
            raise RuntimeError(
                f"objective increased from {objective} to {new_objective} at iteration {iterations}"
            )
        objective = new_objective
        if shift < tol:
            converged = True
            break
    # Canonicalize cluster ids by first appearance and reorder the centroid
    # rows to match, so centroids[assignment[i]] is row i's centroid.
    _, first = np.unique(labels, return_index=True)
    order = labels[np.sort(first)]
    return KmeansResult(
        clustering=Clustering.from_labels(labels),
        centroids=centers[order],
        objective=objective,
        iterations=iterations,
        converged=converged,
    )


def kmeans(
    fs: FeatureSet,
    k: int,
    seed: int,
    max_iter: int = 300,
    tol: float = 1e-4,
    restarts: int = 1,
) -> KmeansResult:
    """Cluster `fs` into exactly k clusters; deterministic for a fixed seed.

    `tol` bounds the squared centroid displacement that counts as converged.
    With `restarts` > 1 the run with the lowest objective wins (ties keep
    the earliest restart).
    """
    if not 1 <= k <= fs.n:
        raise ValueError(f"k must be in [1, {fs.n}], got {k}")
    if max_iter < 1:
        raise ValueError(f"max_iter must be >= 1, got {max_iter}")
    if restarts < 1:
        raise ValueError(f"restarts must be >= 1, got {restarts}")
    x = fs.data.astype(np.float64)
    children = np.random.SeedSequence(seed).spawn(restarts)
    best = None
    for child in children:
        result = _lloyd(x, k, np.random.Generator(np.random.PCG64(child)), max_iter, tol)
        if best is None or result.objective < best.objective:
            best = result
    return best


def save_clustering(c: Clustering, path) -> None:
    """Write a clustering container (same style as the feature labels)."""
    header = _CLUSTER_HEADER.pack(_CLUSTER_MAGIC, _CLUSTER_VERSION, c.n, c.cluster_count)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(c.assignment.astype("<u4").tobytes())


def load_clustering(path) -> Clustering:
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < _CLUSTER_HEADER.size:
        raise MalformedHeaderError(f"header needs {_CLUSTER_HEADER.size} bytes, file has {len(blob)}")
    magic, version, n, k = _CLUSTER_HEADER.unpack_from(blob)
    if magic != _CLUSTER_MAGIC:
        raise MalformedHeaderError(f"bad magic {magic!r}")
    if version != _CLUSTER_VERSION:
        raise MalformedHeaderError(f"unsupported clustering version {version}")
    expected = _CLUSTER_HEADER.size + n * 4
    if len(blob) < expected:
        raise TruncatedPayloadError(f"payload needs {expected} bytes, file has {len(blob)}")
    if len(blob) > expected:
        raise FeatureSetError(f"{len(blob) - expected} trailing bytes after payload")
    ids = np.frombuffer(blob, dtype="<u4", count=n, offset=_CLUSTER_HEADER.size).astype(np.int64)
    c = Clustering(ids)
    if c.cluster_count != k:
        raise FeatureSetError(f"header declares {k} clusters, payload holds {c.cluster_count}")
    return c
