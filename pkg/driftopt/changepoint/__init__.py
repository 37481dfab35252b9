from driftopt.changepoint.clustering import cluster_segments, segment_values
from driftopt.changepoint.detector import (
    DetectionResult,
    DetectorConfig,
    detect_change_points,
    experiment_threshold,
    labels_from_change_points,
    theorem_params,
    theorem_threshold,
    window_statistics,
)

__all__ = [
    "DetectionResult",
    "DetectorConfig",
    "cluster_segments",
    "detect_change_points",
    "experiment_threshold",
    "labels_from_change_points",
    "segment_values",
    "theorem_params",
    "theorem_threshold",
    "window_statistics",
]
