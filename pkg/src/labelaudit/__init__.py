"""Training-free corrupted-label detection from feature neighborhoods.

Given pre-extracted feature vectors and noisy labels, flag the instances
whose labels disagree with their neighborhood's consensus: either by local
majority vote or by per-class score ranking with thresholds from an estimated
label-noise model. No model is trained at any point.
"""
from .bounds import RankBound, k_breakeven, rank_f1_bound, reg_inc_beta, vote_lower_bound
from .data import (
    DetectionReport,
    LabeledDataset,
    infer_n_classes,
    load_features,
    load_labels,
    majority_flags,
    read_report,
    validate_features,
    write_labels,
    write_report,
)
from .detect import (
    ClassPartition,
    DetectorConfig,
    class_partition,
    cosine_score,
    own_class_scores,
    rank_detect,
    run_pipeline,
    vote_detect,
)
from .errors import ConfigError, DataError, LabelAuditError
from .hoc import (
    ConsensusStats,
    NoiseModel,
    consensus_stats,
    fit_noise_model,
    moment_objective,
    posterior_clean,
    predicted_moments,
    project_simplex,
)
from .kernels import HAVE_COMPILED
from .knn import KnnIndex, build_index, knn_soft_labels, l2_normalize_rows, perturb_features
from .metrics import (
    DetectionMetrics,
    detection_metrics,
    neighbor_mismatch_profile,
    neighbor_mismatch_rate,
)
from .noise import (
    NoiseSpec,
    inject,
    inject_asymmetric,
    inject_instance_dependent,
    inject_symmetric,
)

__version__ = "0.1.0"

__all__ = [
    "ClassPartition",
    "ConfigError",
    "ConsensusStats",
    "DataError",
    "DetectionMetrics",
    "DetectionReport",
    "DetectorConfig",
    "HAVE_COMPILED",
    "KnnIndex",
    "LabelAuditError",
    "LabeledDataset",
    "NoiseModel",
    "NoiseSpec",
    "RankBound",
    "build_index",
    "class_partition",
    "consensus_stats",
    "cosine_score",
    "detection_metrics",
    "fit_noise_model",
    "infer_n_classes",
    "inject",
    "inject_asymmetric",
    "inject_instance_dependent",
    "inject_symmetric",
    "k_breakeven",
    "knn_soft_labels",
    "l2_normalize_rows",
    "load_features",
    "load_labels",
    "majority_flags",
    "moment_objective",
    "neighbor_mismatch_profile",
    "neighbor_mismatch_rate",
    "own_class_scores",
    "perturb_features",
    "posterior_clean",
    "predicted_moments",
    "project_simplex",
    "rank_detect",
    "rank_f1_bound",
    "read_report",
    "reg_inc_beta",
    "run_pipeline",
    "validate_features",
    "vote_detect",
    "vote_lower_bound",
    "write_labels",
    "write_report",
]
