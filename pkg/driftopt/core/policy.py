from dataclasses import dataclass

import numpy as np
from scipy.special import softmax

from driftopt.core.exceptions import ConfigurationError, InputError
from driftopt.core.features import FeatureMap

# Smallest positive normal double; keeps every action probability strictly positive.
PROBABILITY_FLOOR = np.finfo(float).tiny


@dataclass(frozen=True)
class SoftmaxPolicy:
    """Linear soft categorical policy pi(a | x; theta) proportional to exp(theta^T f(x, a))."""

    theta: np.ndarray
    feature_map: FeatureMap

    def __post_init__(self) -> None:
        theta = np.array(self.theta, dtype=float)
        if theta.ndim != 1 or theta.shape[0] != self.feature_map.dim:
            raise ConfigurationError(
                f"theta has shape {theta.shape} but the feature map has dimension {self.feature_map.dim}"
            )
        if not np.all(np.isfinite(theta)):
            raise ConfigurationError("theta must be finite")
        theta.setflags(write=False)
        object.__setattr__(self, "theta", theta)

    @classmethod
    def uniform(cls, feature_map: FeatureMap) -> "SoftmaxPolicy":
        return cls(np.zeros(feature_map.dim), feature_map)

    @property
    def n_actions(self) -> int:
        return self.feature_map.n_actions

    def action_probabilities(self, contexts) -> np.ndarray:
        """Action distributions for a batch of contexts, shape (n, K)."""
        return probabilities_from_logits(self.feature_map.logits(self.theta, contexts))


def probabilities_from_logits(logits: np.ndarray) -> np.ndarray:
    # scipy's softmax subtracts the row maximum before exponentiating.
    probs = softmax(logits, axis=-1)
    return np.maximum(probs, PROBABILITY_FLOOR)


def action_distribution(policy: SoftmaxPolicy, context) -> np.ndarray:
    """pi(. | x) for a single context."""
    return policy.action_probabilities(context)[0]


def sample_categorical(probs: np.ndarray, rng: np.random.Generator) -> np.ndarray | int:
    """Draw one index per row of ``probs`` by inverse-CDF sampling.

    A 1-D ``probs`` returns a single int; a 2-D ``probs`` returns an int array.
    """
    probs = np.asarray(probs, dtype=float)
    single = probs.ndim == 1
    table = np.atleast_2d(probs)
    if not (table.min() >= 0 and np.abs(table.sum(axis=1) - 1.0).max() <= 1e-8):
        raise InputError("Sampling requires rows of non-negative probabilities summing to 1")
    cdf = np.cumsum(table, axis=1)
    u = rng.random(table.shape[0]) * cdf[:, -1]
    draws = np.minimum((cdf <= u[:, None]).sum(axis=1), table.shape[1] - 1)
    return int(draws[0]) if single else draws


def sample_policy_action(policy: SoftmaxPolicy, context, rng: np.random.Generator) -> int:
    return sample_categorical(action_distribution(policy, context), rng)
