"""Synthetic Gaussian-mixture feature spaces and a severity-driven corruption.

These generators stand in for real latent spaces at desk scale.  Class
means sit on a regular simplex so `separation` has an exact geometric
meaning: every pair of means is `separation * noise_std` apart.  The
corruption model is a shared drift direction plus isotropic noise whose
scale grows with severity; no corruption model for latent spaces exists
upstream, so this is an explicit stand-in chosen to mimic the observed
behavior (clusters pulled along a direction, class overlap growing with
severity).

All randomness comes from seeded PCG64 generators, so every operation is
a pure function of its spec.
"""

from dataclasses import dataclass

import numpy as np

from .featureset import FeatureSet


@dataclass(frozen=True)
class MixtureSpec:
    """Gaussian mixture with `class_count` isotropic classes in `dim` dims."""

    class_count: int
    dim: int
    per_class: int
    separation: float
    noise_std: float
    seed: int

    def __post_init__(self):
        if self.class_count < 2:
            raise ValueError(f"class_count must be >= 2, got {self.class_count}")
        if self.per_class < 1:
            raise ValueError(f"per_class must be >= 1, got {self.per_class}")
        if self.separation < 0:
            raise ValueError(f"separation must be >= 0, got {self.separation}")
        if self.noise_std <= 0:
            raise ValueError(f"noise_std must be > 0, got {self.noise_std}")
        # A regular simplex on L mutually equidistant means needs L-1 dims.
        if self.separation > 0 and self.dim < self.class_count - 1:
            raise ValueError(
                f"dim={self.dim} cannot hold {self.class_count} equidistant means; "
                f"need dim >= {self.class_count - 1}"
            )


@dataclass(frozen=True)
class CorruptionSpec:
    """Severity-parameterized corruption: common drift plus noise inflation."""

    severities: tuple
    drift_scale: float
    noise_growth: float
    drift_seed: int

    def __post_init__(self):
        sev = tuple(int(s) for s in self.severities)
        if len(sev) < 1:
            raise ValueError("need at least one severity level")
        if any(b <= a for a, b in zip(sev, sev[1:])):
            raise ValueError(f"severities must be strictly increasing, got {sev}")
        if self.noise_growth < 0:
            raise ValueError(f"noise_growth must be >= 0, got {self.noise_growth}")
        object.__setattr__(self, "severities", sev)


def _simplex_means(class_count: int, dim: int, pair_distance: float) -> np.ndarray:
    """L mean vectors in `dim` dims, every pair exactly `pair_distance` apart."""
    if pair_distance == 0:
        return np.zeros((class_count, dim))
    centered = np.eye(class_count) - 1.0 / class_count
    # Orthonormal basis of the (L-1)-dim span; differences keep their norms.
    q, _ = np.linalg.qr(centered.T)
    coords = centered @ q[:, : class_count - 1]
    coords *= pair_distance / np.sqrt(2.0)
    means = np.zeros((class_count, dim))
    means[:, : class_count - 1] = coords
    return means


def generate_mixture(spec: MixtureSpec) -> FeatureSet:
    """Draw `per_class` samples per class around equidistant means."""
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    means = _simplex_means(spec.class_count, spec.dim, spec.separation * spec.noise_std)
    n = spec.class_count * spec.per_class
    data = np.empty((n, spec.dim))
    labels = np.empty(n, dtype=np.int64)
    for k in range(spec.class_count):
        block = slice(k * spec.per_class, (k + 1) * spec.per_class)
        data[block] = means[k] + spec.noise_std * rng.standard_normal((spec.per_class, spec.dim))
        labels[block] = k
    return FeatureSet(data=data, labels=labels, class_count=spec.class_count)


def corrupt(fs: FeatureSet, spec: CorruptionSpec, s: int) -> FeatureSet:
    """Apply severity-s corruption: x + s*drift_scale*v + N(0, (s*noise_growth)^2 I).

    The drift direction v is one fixed unit vector drawn from `drift_seed`
    (shared across severities); the additive noise is seeded by
    (drift_seed, s), so the result is deterministic per severity.  Labels
    are unchanged.
    """
    if s not in spec.severities:
        raise ValueError(f"unknown severity {s}, spec has {spec.severities}")
    drift_rng = np.random.Generator(np.random.PCG64(spec.drift_seed))
    v = drift_rng.standard_normal(fs.d)
    v /= np.linalg.norm(v)
    data = fs.data.astype(np.float64) + s * spec.drift_scale * v
    if spec.noise_growth > 0:
        noise_rng = np.random.Generator(np.random.PCG64([spec.drift_seed, s]))
        data = data + s * spec.noise_growth * noise_rng.standard_normal(data.shape)
    return FeatureSet(data=data, labels=fs.labels, class_count=fs.class_count)


def centroid_classifier_accuracy(train: FeatureSet, test: FeatureSet) -> float:
    """Nearest-class-mean accuracy; the desk-scale stand-in for model accuracy.

    Class means are fitted on `train` and each `test` row is assigned to
    the nearest mean (squared Euclidean).
    """
    if train.class_count != test.class_count:
        raise ValueError("train and test must share the class set")
    means = np.empty((train.class_count, train.d))
    for k in range(train.class_count):
        members = train.data[train.labels == k]
        if members.shape[0] == 0:
            raise ValueError(f"class {k} has no training samples")
        means[k] = members.astype(np.float64).mean(axis=0)
    x = test.data.astype(np.float64)
    d2 = ((x[:, None, :] - means[None, :, :]) ** 2).sum(axis=2)
    pred = np.argmin(d2, axis=1)
    return float(np.mean(pred == test.labels))
