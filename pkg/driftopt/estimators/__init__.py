from driftopt.estimators.ope import (
    EstimatorConfig,
    EstimatorKind,
    PartitionedEstimate,
    clipped_class_membership,
    clipping_sensitivity,
    dm_estimate,
    dr_estimate,
    evaluate,
    importance_weights,
    ips_estimate,
    partitioned_ips_estimate,
)
from driftopt.estimators.reward_model import RewardModel, fit_reward_model, least_squares

__all__ = [
    "EstimatorConfig",
    "EstimatorKind",
    "PartitionedEstimate",
    "RewardModel",
    "clipped_class_membership",
    "clipping_sensitivity",
    "dm_estimate",
    "dr_estimate",
    "evaluate",
    "fit_reward_model",
    "importance_weights",
    "ips_estimate",
    "least_squares",
    "partitioned_ips_estimate",
]
