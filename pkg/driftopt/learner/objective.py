"""Entropy-regularized clipped off-policy objectives and their gradients.

Values are totals over the partition's rounds:

    ips:  sum_t w_t r_t + tau * sum_t H(pi(.|x_t))
    dr:   sum_t [sum_a pi(a|x_t) r_hat(x_t, a) + w_t (r_t - r_hat(x_t, a_t))] + tau * sum_t H
    poem: sum_t w_t r_t - lambda * n * sqrt(var_t(w_t r_t) / n) + tau * sum_t H

with w_t = min{M, pi(a_t|x_t) / p_t}. The gradient of a clipped weight is zero
wherever w_t has reached M.
"""

from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from driftopt.core.data import LoggedDataset
from driftopt.core.exceptions import InputError
from driftopt.core.features import FeatureMap, FeatureMode
from driftopt.core.policy import probabilities_from_logits
from driftopt.estimators.reward_model import RewardModel


class ObjectiveKind(str, Enum):
    IPS = "ips"
    DR = "dr"
    POEM = "poem"


@dataclass(frozen=True)
class PartitionView:
    """Sufficient statistics of the rounds of one partition.

    Tabular rounds sharing (context, action, propensity) collapse into one group
    carrying its round count, reward sum and squared-reward sum. Dense rounds
    keep one group each.
    """

    feature_map: FeatureMap
    contexts: np.ndarray
    actions: np.ndarray
    propensities: np.ndarray
    counts: np.ndarray
    reward_sums: np.ndarray
    squared_sums: np.ndarray
    predicted: np.ndarray | None = None

    @property
    def n_rounds(self) -> int:
        return int(self.counts.sum())

    @property
    def n_groups(self) -> int:
        return len(self.counts)

    @classmethod
    def build(
        cls,
        data: LoggedDataset,
        feature_map: FeatureMap,
        reward_model: RewardModel | None = None,
        state: int | None = None,
    ) -> "PartitionView":
        data.check_actions(feature_map.n_actions)
        contexts = feature_map.as_contexts(data.contexts) if len(data) else data.contexts
        if feature_map.mode == FeatureMode.TABULAR and len(data):
            keys = np.column_stack((contexts.astype(float), data.actions.astype(float), data.propensities))
            unique, inverse = np.unique(keys, axis=0, return_inverse=True)
            inverse = inverse.ravel()
            view = cls(
                feature_map=feature_map,
                contexts=unique[:, 0].astype(np.int64),
                actions=unique[:, 1].astype(np.int64),
                propensities=unique[:, 2],
                counts=np.bincount(inverse, minlength=len(unique)).astype(float),
                reward_sums=np.bincount(inverse, weights=data.rewards, minlength=len(unique)),
                squared_sums=np.bincount(inverse, weights=data.rewards**2, minlength=len(unique)),
            )
        else:
            view = cls(
                feature_map=feature_map,
                contexts=contexts,
                actions=data.actions,
                propensities=data.propensities,
                counts=np.ones(len(data)),
                reward_sums=data.rewards.copy(),
                squared_sums=data.rewards**2,
            )
        if reward_model is None:
            return view
        states = None if state is None else np.full(view.n_groups, state)
        predicted = reward_model.predict_all(view.contexts, states) if view.n_groups else np.zeros((0, feature_map.n_actions))
        return replace(view, predicted=predicted)


def _entropy(probs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    log_probs = np.log(probs)
    return -np.sum(probs * log_probs, axis=1), log_probs


def objective_and_gradient(
    theta: np.ndarray,
    view: PartitionView,
    kind: ObjectiveKind = ObjectiveKind.IPS,
    M: float = float("inf"),
    tau: float = 0.0,
    var_penalty: float = 0.0,
) -> tuple[float, np.ndarray]:
    """Objective value and gradient with respect to theta, both summed over rounds."""
    theta = np.asarray(theta, dtype=float)
    if not np.all(np.isfinite(theta)):
        raise InputError("theta must be finite")
    kind = ObjectiveKind(kind)
    G = view.n_groups
    if G == 0:
        return 0.0, np.zeros_like(theta)

    probs = probabilities_from_logits(view.feature_map.logits(theta, view.contexts))
    rows = np.arange(G)
    logged = probs[rows, view.actions]
    ratio = logged / view.propensities
    active = ratio < M
    weights = np.where(active, ratio, M)

    # d(value) / d(pi(a | x_g)), accumulated per group and action
    dvalue = np.zeros_like(probs)

    if kind == ObjectiveKind.DR:
        if view.predicted is None:
            raise InputError("The DR objective needs a partition view built with a reward model")
        residual = view.reward_sums - view.counts * view.predicted[rows, view.actions]
        value = float(np.sum(view.counts * np.sum(probs * view.predicted, axis=1)) + np.dot(weights, residual))
        dvalue += view.counts[:, None] * view.predicted
        dvalue[rows, view.actions] += np.where(active, residual / view.propensities, 0.0)
    else:
        value = float(np.dot(weights, view.reward_sums))
        dvalue[rows, view.actions] += np.where(active, view.reward_sums / view.propensities, 0.0)

    if kind == ObjectiveKind.POEM and var_penalty > 0:
        n = view.counts.sum()
        mean = value / n
        variance = max(float(np.dot(weights**2, view.squared_sums)) / n - mean**2, 0.0)
        spread = np.sqrt(n * variance)
        value -= var_penalty * spread
        if spread > 0:
            dpenalty = var_penalty * (weights * view.squared_sums - mean * view.reward_sums) / spread
            dvalue[rows, view.actions] -= np.where(active, dpenalty / view.propensities, 0.0)

    if tau > 0:
        entropy, log_probs = _entropy(probs)
        value += tau * float(np.dot(view.counts, entropy))
        dvalue -= tau * view.counts[:, None] * log_probs

    # softmax chain rule: d pi_a / d logit_b = pi_a (1[a = b] - pi_b)
    centered = probs * (dvalue - np.sum(probs * dvalue, axis=1, keepdims=True))
    gradient = view.feature_map.pullback(view.contexts, centered)
    return value, gradient
