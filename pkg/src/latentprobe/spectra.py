"""PCA explained-variance profiles and dimensionality reduction.

The covariance of mean-centered rows uses 1/(n-1) normalization; component
signs are fixed by making each eigenvector's largest-magnitude coordinate
positive, so profiles and projections are deterministic.
"""

from dataclasses import dataclass

import numpy as np

from .featureset import FeatureSet

_RATIO_TOL = 1e-9


class DegenerateDataError(ValueError):
    """Data has no variance; the profile is undefined."""


@dataclass(frozen=True)
class VarianceProfile:
    """Eigenvalues of the sample covariance with their variance shares."""

    eigenvalues: np.ndarray
    ratios: np.ndarray
    cumulative: np.ndarray

    def __post_init__(self):
        eig = np.array(self.eigenvalues, dtype=np.float64, copy=True)
        if np.any(np.diff(eig) > 0):
            raise ValueError("eigenvalues must be sorted descending")
        if np.any(eig < 0):
            raise ValueError("eigenvalues must be non-negative")
        ratios = np.array(self.ratios, dtype=np.float64, copy=True)
        cumulative = np.array(self.cumulative, dtype=np.float64, copy=True)
        if abs(ratios.sum() - 1.0) > _RATIO_TOL:
            raise ValueError(f"ratios sum to {ratios.sum()}, expected 1")
        if abs(cumulative[-1] - 1.0) > _RATIO_TOL or np.any(np.diff(cumulative) < -_RATIO_TOL):
            raise ValueError("cumulative shares must be non-decreasing and end at 1")
        for arr in (eig, ratios, cumulative):
            arr.flags.writeable = False
        object.__setattr__(self, "eigenvalues", eig)
        object.__setattr__(self, "ratios", ratios)
        object.__setattr__(self, "cumulative", cumulative)


def _pca_basis(fs: FeatureSet) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(mean, descending eigenvalues, eigenvector columns) of the sample covariance."""
    if fs.n < 2:
        raise ValueError(f"need at least 2 rows for a covariance, got {fs.n}")
    x = fs.data.astype(np.float64)
    mean = x.mean(axis=0)
    cov = np.cov(x - mean, rowvar=False, ddof=1).reshape(fs.d, fs.d)
    eigenvalues, vectors = np.linalg.eigh(cov)
    order = np.argsort(eigenvalues)[::-1]
    eigenvalues = np.clip(eigenvalues[order], 0.0, None)
    vectors = vectors[:, order]
    # Sign convention: largest-magnitude coordinate positive.
    for j in range(vectors.shape[1]):
        peak = np.argmax(np.abs(vectors[:, j]))
        if vectors[peak, j] < 0:
            vectors[:, j] = -vectors[:, j]
    return mean, eigenvalues, vectors


def pca_profile(fs: FeatureSet) -> VarianceProfile:
    """Explained-variance profile of the feature matrix."""
    _, eigenvalues, _ = _pca_basis(fs)
    total = eigenvalues.sum()
    if total <= 0:
        raise DegenerateDataError("all rows identical; variance profile undefined")
    ratios = eigenvalues / total
    return VarianceProfile(eigenvalues=eigenvalues, ratios=ratios, cumulative=np.cumsum(ratios))


def components_for_ratio(profile: VarianceProfile, threshold: float) -> int:
    """Smallest m whose first m components reach the cumulative share `threshold`."""
    if not 0.0 < threshold <= 1.0:
        raise ValueError(f"threshold must be in (0, 1], got {threshold}")
    reached = np.flatnonzero(profile.cumulative >= threshold - _RATIO_TOL)
    return int(reached[0]) + 1


def reduce(fs: FeatureSet, m: int) -> FeatureSet:
    """Project onto the top-m principal components; labels are preserved."""
    if not 1 <= m <= fs.d:
        raise ValueError(f"m must be in [1, {fs.d}], got {m}")
    mean, _, vectors = _pca_basis(fs)
    projected = (fs.data.astype(np.float64) - mean) @ vectors[:, :m]
    return FeatureSet(data=projected, labels=fs.labels, class_count=fs.class_count)


def project_2d(fs: FeatureSet) -> FeatureSet:
    """Two-dimensional PCA projection for scatter export."""
    if fs.d < 2:
        raise ValueError("need at least 2 feature dimensions for a 2-D projection")
    return reduce(fs, 2)
