from driftopt.core.data import (
    LatentSequence,
    LoggedDataset,
    LoggedInteraction,
    Segment,
    occupancy_gap,
    segments_of,
)
from driftopt.core.exceptions import (
    ConfigurationError,
    DataError,
    DriftoptError,
    InputError,
)
from driftopt.core.features import ActionSpace, FeatureMap, FeatureMode
from driftopt.core.policy import (
    PROBABILITY_FLOOR,
    SoftmaxPolicy,
    action_distribution,
    sample_categorical,
    sample_policy_action,
)
from driftopt.core.rng import make_rng, spawn_rngs

__all__ = [
    "PROBABILITY_FLOOR",
    "ActionSpace",
    "ConfigurationError",
    "DataError",
    "DriftoptError",
    "FeatureMap",
    "FeatureMode",
    "InputError",
    "LatentSequence",
    "LoggedDataset",
    "LoggedInteraction",
    "Segment",
    "SoftmaxPolicy",
    "action_distribution",
    "make_rng",
    "occupancy_gap",
    "sample_categorical",
    "sample_policy_action",
    "segments_of",
    "spawn_rngs",
]
