"""Off-policy value estimators on logged bandit data.

All estimators return totals over the logged rounds (not per-round averages),
so a partitioned estimate is the plain sum of its per-state parts.
"""

import logging
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from sklearn.utils import check_scalar

from driftopt.core.data import LatentSequence, LoggedDataset
from driftopt.core.exceptions import ConfigurationError, DataError, InputError
from driftopt.core.policy import SoftmaxPolicy
from driftopt.estimators.reward_model import RewardModel, fit_reward_model

logger = logging.getLogger(__name__)

PolicySet = Mapping[int, SoftmaxPolicy]


class EstimatorKind(str, Enum):
    IPS = "ips"
    DM = "dm"
    DR = "dr"


class EstimatorConfig(BaseModel):
    model_config = ConfigDict(ser_json_inf_nan="constants")

    M: float = Field(float("inf"), gt=0.0, description="Importance weight clipping; inf disables clipping")
    kind: EstimatorKind = Field(EstimatorKind.IPS, description="Estimator to use")


def _clip(M: float | None) -> float:
    if M is None:
        return float("inf")
    check_scalar(M, name="M", target_type=(int, float), min_val=0.0, include_boundaries="neither")
    return float(M)


def _check_propensities(data: LoggedDataset) -> None:
    if np.any(data.propensities <= 0):
        raise DataError("Propensities must be strictly positive")


def importance_weights(data: LoggedDataset, policy: SoftmaxPolicy, M: float | None = None) -> np.ndarray:
    """min{M, pi(a_t | x_t) / p_t} for every logged round."""
    _check_propensities(data)
    data.check_actions(policy.n_actions)
    probs = policy.action_probabilities(data.contexts)
    ratio = probs[np.arange(len(data)), data.actions] / data.propensities
    return np.minimum(ratio, _clip(M))


def ips_estimate(data: LoggedDataset, policy: SoftmaxPolicy, config: EstimatorConfig | None = None) -> float:
    """Clipped IPS: sum_t min{M, pi(a_t|x_t)/p_t} r_t."""
    M = (config or EstimatorConfig()).M
    return float(np.dot(importance_weights(data, policy, M), data.rewards))


@dataclass(frozen=True)
class PartitionedEstimate:
    total: float
    per_state: dict[int, float] = field(default_factory=dict)


def _check_labels(data: LoggedDataset, labels: LatentSequence, policy_set: PolicySet) -> None:
    if len(labels) != len(data):
        raise InputError(f"Got {len(labels)} labels for {len(data)} logged rounds")
    missing = sorted({int(z) for z in np.unique(labels.labels)} - set(policy_set))
    if missing:
        raise ConfigurationError(f"No sub-policy for latent states {[z + 1 for z in missing]}")


def partitioned_ips_estimate(
    data: LoggedDataset,
    policy_set: PolicySet,
    labels: LatentSequence,
    config: EstimatorConfig | None = None,
) -> PartitionedEstimate:
    """V_hat(Pi) = sum_z V_hat_z(pi_z), V_hat_z summing only rounds labelled z."""
    _check_labels(data, labels, policy_set)
    per_state = {}
    for z in np.unique(labels.labels):
        part = data.subset(labels.labels == z)
        per_state[int(z)] = ips_estimate(part, policy_set[int(z)], config)
    return PartitionedEstimate(total=float(sum(per_state.values())), per_state=per_state)


def dm_estimate(
    data: LoggedDataset,
    policy: SoftmaxPolicy,
    reward_model: RewardModel,
    states=None,
) -> float:
    """Direct method: sum_t sum_a pi(a|x_t) r_hat(x_t, a)."""
    probs = policy.action_probabilities(data.contexts)
    return float(np.sum(probs * reward_model.predict_all(data.contexts, states)))


def dr_estimate(
    data: LoggedDataset,
    policy: SoftmaxPolicy,
    reward_model: RewardModel,
    config: EstimatorConfig | None = None,
    states=None,
) -> float:
    """Doubly robust: DM term plus the clipped importance-weighted residual."""
    M = (config or EstimatorConfig()).M
    weights = importance_weights(data, policy, M)
    predicted = reward_model.predict_all(data.contexts, states)
    probs = policy.action_probabilities(data.contexts)
    model_term = np.sum(probs * predicted, axis=1)
    residual = data.rewards - predicted[np.arange(len(data)), data.actions]
    return float(np.sum(model_term + weights * residual))


def clipped_class_membership(policy: SoftmaxPolicy, logging_policy: SoftmaxPolicy, contexts, M: float) -> bool:
    """True iff pi(a|x) / pi_0(a|x) <= M for every sampled context and every action."""
    M = _clip(M)
    if np.isinf(M):
        return True
    ratio = policy.action_probabilities(contexts) / logging_policy.action_probabilities(contexts)
    return bool(np.all(ratio <= M))


def clipping_sensitivity(data: LoggedDataset, policy: SoftmaxPolicy, Ms: Iterable[float]) -> dict[float, float]:
    """IPS estimate for each clipping level."""
    return {float(M): ips_estimate(data, policy, EstimatorConfig(M=M)) for M in Ms}


def evaluate(
    data: LoggedDataset,
    target,
    config: EstimatorConfig | None = None,
    labels: LatentSequence | None = None,
    reward_model: RewardModel | None = None,
) -> PartitionedEstimate:
    """Estimate the value of a single policy or of a per-state bundle.

    A bundle needs ``labels``; DM and DR fit a least-squares reward model (per
    state when labels are given) unless one is supplied.
    """
    config = config or EstimatorConfig()
    if isinstance(target, SoftmaxPolicy):
        if labels is None:
            labels = LatentSequence(np.zeros(len(data), dtype=np.int64), 1)
            policy_set = {0: target}
        else:
            policy_set = dict.fromkeys(range(labels.n_states), target)
    else:
        if labels is None:
            raise InputError("Evaluating a policy bundle requires latent labels")
        policy_set = dict(getattr(target, "policies", target))
    _check_labels(data, labels, policy_set)

    if config.kind == EstimatorKind.IPS:
        return partitioned_ips_estimate(data, policy_set, labels, config)

    feature_map = next(iter(policy_set.values())).feature_map
    if reward_model is None:
        reward_model = fit_reward_model(data, feature_map, labels if labels.n_states > 1 else None)
        logger.info(f"Fitted reward model with residual sigma {reward_model.sigma:.4f}")
    per_state = {}
    for z in np.unique(labels.labels):
        mask = labels.labels == z
        part = data.subset(mask)
        states = np.full(len(part), z)
        if config.kind == EstimatorKind.DM:
            per_state[int(z)] = dm_estimate(part, policy_set[int(z)], reward_model, states)
        else:
            per_state[int(z)] = dr_estimate(part, policy_set[int(z)], reward_model, config, states)
    return PartitionedEstimate(total=float(sum(per_state.values())), per_state=per_state)
