import numpy as np
import pytest

from oracles import covariance_eigenvalues
from latentprobe.featureset import FeatureSet, squared_distances
from latentprobe.kmeans import kmeans
from latentprobe.clustermetrics import cluster_accuracy
from latentprobe.spectra import (
    DegenerateDataError,
    components_for_ratio,
    pca_profile,
    project_2d,
    reduce,
)
from latentprobe.synth import MixtureSpec, generate_mixture


def diag_3_1_features():
    # integer points (float32-exact) whose sample covariance is proportional
    # to diag(3, 1): eight rows give diag(6/7, 2/7), same variance ratios
    pts = [[1, 0], [-1, 0], [1, 0], [-1, 0], [1, 0], [-1, 0], [0, 1], [0, -1]]
    return FeatureSet(pts, [0] * 8, 1)


class TestPcaProfile:
    def test_rank_one_line(self):
        t = np.linspace(-2.0, 2.0, 9).reshape(-1, 1)
        fs = FeatureSet(t @ np.array([[1.0, 2.0, -0.5]]), [0] * 9, 1)
        profile = pca_profile(fs)
        assert profile.ratios[0] == pytest.approx(1.0, abs=1e-7)

    def test_diag_covariance_ratios(self):
        profile = pca_profile(diag_3_1_features())
        np.testing.assert_allclose(profile.ratios, [0.75, 0.25], atol=1e-9)

    def test_isotropic_ratios_near_uniform(self):
        rng = np.random.Generator(np.random.PCG64(0))
        d = 5
        fs = FeatureSet(rng.standard_normal((4000, d)), [0] * 4000, 1)
        profile = pca_profile(fs)
        np.testing.assert_allclose(profile.ratios, np.full(d, 1 / d), atol=0.03)

    def test_matches_charpoly_oracle(self):
        rng = np.random.Generator(np.random.PCG64(9))
        for d in (2, 3, 4, 5, 6):
            fs = FeatureSet(rng.standard_normal((40, d)) * 2.0, [0] * 40, 1)
            profile = pca_profile(fs)
            oracle = covariance_eigenvalues(fs.data)
            np.testing.assert_allclose(profile.eigenvalues, oracle, atol=1e-8)

    def test_profile_invariants(self):
        rng = np.random.Generator(np.random.PCG64(4))
        fs = FeatureSet(rng.standard_normal((30, 6)), [0] * 30, 1)
        profile = pca_profile(fs)
        assert abs(profile.ratios.sum() - 1.0) < 1e-9
        assert np.all(np.diff(profile.eigenvalues) <= 1e-12)
        assert np.all(np.diff(profile.cumulative) >= -1e-12)
        assert profile.cumulative[-1] == pytest.approx(1.0, abs=1e-9)

    def test_degenerate_data(self):
        fs = FeatureSet(np.ones((5, 3)), [0] * 5, 1)
        with pytest.raises(DegenerateDataError):
            pca_profile(fs)

    def test_needs_two_rows(self):
        fs = FeatureSet([[1.0, 2.0]], [0], 1)
        with pytest.raises(ValueError):
            pca_profile(fs)


class TestComponentsForRatio:
    def test_diag_thresholds(self):
        profile = pca_profile(diag_3_1_features())
        assert components_for_ratio(profile, 0.75) == 1
        assert components_for_ratio(profile, 0.80) == 2

    def test_threshold_one_gives_rank(self):
        t = np.linspace(-1.0, 1.0, 8).reshape(-1, 1)
        basis = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
        data = np.hstack([t, t**3]) @ basis  # rank 2 in 3 dims
        fs = FeatureSet(data, [0] * 8, 1)
        assert components_for_ratio(pca_profile(fs), 1.0) == 2

    def test_rank_one_any_threshold(self):
        t = np.linspace(-2.0, 2.0, 9).reshape(-1, 1)
        fs = FeatureSet(t @ np.array([[2.0, 1.0]]), [0] * 9, 1)
        profile = pca_profile(fs)
        for threshold in (0.05, 0.5, 1.0):
            assert components_for_ratio(profile, threshold) == 1

    def test_non_decreasing_in_threshold(self):
        rng = np.random.Generator(np.random.PCG64(5))
        fs = FeatureSet(rng.standard_normal((50, 6)) * [5, 3, 2, 1, 0.5, 0.1], [0] * 50, 1)
        profile = pca_profile(fs)
        counts = [components_for_ratio(profile, t) for t in np.linspace(0.05, 1.0, 20)]
        assert all(b >= a for a, b in zip(counts, counts[1:]))

    def test_threshold_bounds(self):
        profile = pca_profile(diag_3_1_features())
        with pytest.raises(ValueError):
            components_for_ratio(profile, 0.0)
        with pytest.raises(ValueError):
            components_for_ratio(profile, 1.5)


class TestReduce:
    def test_full_rank_preserves_kmeans_objective(self):
        rng = np.random.Generator(np.random.PCG64(6))
        fs = FeatureSet(rng.standard_normal((40, 4)), [0] * 40, 1)
        rotated = reduce(fs, 4)
        a = kmeans(fs, k=3, seed=7)
        b = kmeans(rotated, k=3, seed=7)
        assert b.objective == pytest.approx(a.objective, rel=1e-5)

    def test_rank_one_distances_exact(self):
        # variance confined to the first axis: the projection is a copy
        t = np.linspace(-3.0, 3.0, 7).reshape(-1, 1)
        fs = FeatureSet(np.hstack([t, np.zeros((7, 2))]), [0] * 7, 1)
        reduced = reduce(fs, 1)
        np.testing.assert_allclose(
            squared_distances(reduced), squared_distances(fs), atol=1e-9
        )

    def test_distances_never_increase(self):
        rng = np.random.Generator(np.random.PCG64(7))
        fs = FeatureSet(rng.standard_normal((25, 6)), [0] * 25, 1)
        full = squared_distances(fs)
        for m in (1, 2, 4, 6):
            # float32 storage adds ~1e-7 relative noise on top of the isometry
            assert np.all(squared_distances(reduce(fs, m)) <= full * (1 + 1e-5) + 1e-9)

    def test_mixture_accuracy_survives_reduction(self):
        spec = MixtureSpec(class_count=4, dim=16, per_class=40, separation=6.0, noise_std=1.0, seed=3)
        fs = generate_mixture(spec)
        profile = pca_profile(fs)
        m = components_for_ratio(profile, 0.75)
        reduced = reduce(fs, m)
        full_acc = cluster_accuracy(kmeans(fs, 4, seed=1, restarts=5).clustering, fs.labels)
        red_acc = cluster_accuracy(
            kmeans(reduced, 4, seed=1, restarts=5).clustering, reduced.labels
        )
        assert abs(full_acc - red_acc) <= 0.02

    def test_labels_preserved(self):
        fs = generate_mixture(
            MixtureSpec(class_count=3, dim=5, per_class=10, separation=4.0, noise_std=1.0, seed=2)
        )
        assert np.array_equal(reduce(fs, 2).labels, fs.labels)

    def test_m_out_of_range(self):
        fs = diag_3_1_features()
        with pytest.raises(ValueError):
            reduce(fs, 0)
        with pytest.raises(ValueError):
            reduce(fs, 3)

    def test_project_2d(self):
        rng = np.random.Generator(np.random.PCG64(8))
        fs = FeatureSet(rng.standard_normal((20, 5)), rng.integers(0, 2, 20), 2)
        flat = project_2d(fs)
        assert flat.d == 2 and flat.n == fs.n
