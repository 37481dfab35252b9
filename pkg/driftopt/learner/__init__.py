from driftopt.learner.objective import ObjectiveKind, PartitionView, objective_and_gradient
from driftopt.learner.training import (
    BundleDocument,
    PolicyBundle,
    TrainConfig,
    TrainingCurve,
    closed_form_softmax,
    corollary_params,
    gradient_ascent,
    ips_action_values,
    load_bundle,
    save_bundle,
    train_stationary_baseline,
    train_sub_policies,
)

__all__ = [
    "BundleDocument",
    "ObjectiveKind",
    "PartitionView",
    "PolicyBundle",
    "TrainConfig",
    "TrainingCurve",
    "closed_form_softmax",
    "corollary_params",
    "gradient_ascent",
    "ips_action_values",
    "load_bundle",
    "objective_and_gradient",
    "save_bundle",
    "train_stationary_baseline",
    "train_sub_policies",
]
