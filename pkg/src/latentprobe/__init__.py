"""latentprobe: clusterability-based robustness indicators for feature spaces.

Measure how well a classifier's latent features cluster (k-means and
minimum-cost multicut), turn the clustering scores into relative-performance
indicators, and correlate the indicators with measured corruption
robustness across a model zoo.
"""

from .featureset import (
    Chunk,
    FeatureSet,
    FeatureSetError,
    load_features,
    pairwise_distance,
    save_features,
    save_features_csv,
    split_disjoint,
)
from .synth import CorruptionSpec, MixtureSpec, centroid_classifier_accuracy, corrupt, generate_mixture
from .kmeans import Clustering, KmeansResult, kmeans, load_clustering, save_clustering
from .clustermetrics import (
    DistanceStats,
    class_distance_stats,
    cluster_accuracy,
    overlap_delta,
    purity,
    singleton_fraction,
)
from .multicut import (
    CostGraph,
    EdgeLabeling,
    SweepTable,
    build_cost_graph,
    cluster_parallel,
    estimate_temperature,
    is_valid_decomposition,
    objective,
    refine_kl,
    solve,
    solve_gaec,
    threshold_sweep,
)
from .indicators import (
    CorrelationReport,
    ModelRecord,
    aggregate_corruption_accuracy,
    combined_accuracy,
    combined_purity,
    correlate,
    kendall_tau,
    load_bundled_fixture,
    load_records,
    r_squared,
    relative_performance,
    robustness,
)
from .spectra import VarianceProfile, components_for_ratio, pca_profile, project_2d, reduce

__version__ = "0.1.0"
