import logging
from collections.abc import Mapping
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy.special import softmax

from driftopt.changepoint.detector import theorem_params
from driftopt.core.data import LatentSequence, LoggedDataset
from driftopt.core.exceptions import ConfigurationError, InputError
from driftopt.core.features import FeatureMap
from driftopt.core.io import PolicyDocument, read_document, write_document
from driftopt.core.policy import SoftmaxPolicy
from driftopt.estimators.reward_model import RewardModel, fit_reward_model
from driftopt.learner.objective import ObjectiveKind, PartitionView, objective_and_gradient

logger = logging.getLogger(__name__)

# Accepted steps may lower the objective by at most this much (rounding).
ASCENT_TOLERANCE = 1e-12


class TrainConfig(BaseModel):
    model_config = ConfigDict(ser_json_inf_nan="constants")

    M: float = Field(100.0, gt=0.0, description="Importance weight clipping")
    tau: float = Field(0.01, ge=0.0, description="Entropy temperature")
    steps: int = Field(2000, ge=1, description="Gradient ascent steps")
    learning_rate: float = Field(0.05, gt=0.0, description="Initial step size")
    min_learning_rate: float = Field(1e-12, gt=0.0, description="Stop once step halving goes below this")
    var_penalty: float = Field(1.0, ge=0.0, description="POEM variance penalty lambda")
    objective: ObjectiveKind = Field(ObjectiveKind.IPS, description="Training objective")
    ridge: float = Field(1e-8, ge=0.0, description="Ridge damping of the DR reward model")
    max_workers: int | None = Field(None, ge=1, description="Threads used for per-state training")


@dataclass
class TrainingCurve:
    """Per-round objective after every accepted step, plus optimizer bookkeeping."""

    values: list[float] = field(default_factory=list)
    rejected: int = 0
    final_learning_rate: float = 0.0
    n_rounds: int = 0


@dataclass(frozen=True)
class PolicyBundle:
    """One sub-policy per latent state."""

    policies: dict[int, SoftmaxPolicy]
    diagnostics: dict[int, TrainingCurve] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.policies:
            raise ConfigurationError("A policy bundle needs at least one sub-policy")
        maps = {p.feature_map for p in self.policies.values()}
        if len(maps) != 1:
            raise ConfigurationError("Sub-policies must share one feature map")

    @property
    def n_states(self) -> int:
        return max(self.policies) + 1

    @property
    def feature_map(self) -> FeatureMap:
        return next(iter(self.policies.values())).feature_map

    def __getitem__(self, state: int) -> SoftmaxPolicy:
        try:
            return self.policies[state]
        except KeyError:
            raise ConfigurationError(f"No sub-policy for latent state {state + 1}") from None

    def covers(self, n_states: int) -> bool:
        return all(z in self.policies for z in range(n_states))

    def expert_probabilities(self, context) -> np.ndarray:
        """pi_z(. | x) for every state, shape (L, K)."""
        return np.stack([self[z].action_probabilities(context)[0] for z in range(self.n_states)])

    @classmethod
    def uniform(cls, feature_map: FeatureMap, n_states: int) -> "PolicyBundle":
        return cls({z: SoftmaxPolicy.uniform(feature_map) for z in range(n_states)})

    @classmethod
    def stationary(cls, policy: SoftmaxPolicy, n_states: int = 1) -> "PolicyBundle":
        return cls(dict.fromkeys(range(n_states), policy))


def gradient_ascent(view: PartitionView, config: TrainConfig, theta0: np.ndarray | None = None) -> tuple[np.ndarray, TrainingCurve]:
    """Plain gradient ascent on the per-round objective, halving the step on any decrease."""
    theta = np.zeros(view.feature_map.dim) if theta0 is None else np.array(theta0, dtype=float)
    n = max(view.n_rounds, 1)

    def evaluate(params: np.ndarray) -> tuple[float, np.ndarray]:
        value, gradient = objective_and_gradient(
            params, view, config.objective, config.M, config.tau, config.var_penalty
        )
        return value / n, gradient / n

    value, gradient = evaluate(theta)
    curve = TrainingCurve(values=[value], n_rounds=view.n_rounds)
    lr = config.learning_rate
    for _ in range(config.steps):
        candidate = theta + lr * gradient
        try:
            new_value, new_gradient = evaluate(candidate)
        except InputError:
            new_value = -np.inf
        if not np.isfinite(new_value) or new_value < value - ASCENT_TOLERANCE:
            curve.rejected += 1
            lr /= 2.0
            if lr < config.min_learning_rate:
                break
            continue
        theta, value, gradient = candidate, new_value, new_gradient
        curve.values.append(value)
    curve.final_learning_rate = lr
    return theta, curve


def _reward_model(data: LoggedDataset, feature_map: FeatureMap, labels: LatentSequence | None, config: TrainConfig) -> RewardModel | None:
    if config.objective != ObjectiveKind.DR:
        return None
    return fit_reward_model(data, feature_map, labels, ridge=config.ridge)


def train_sub_policies(
    data: LoggedDataset,
    labels: LatentSequence,
    feature_map: FeatureMap,
    config: TrainConfig | None = None,
) -> PolicyBundle:
    """Learn one sub-policy per latent state on the rounds carrying that label.

    States are trained independently and in parallel. A state with no rounds gets
    the uniform policy.
    """
    config = config or TrainConfig()
    if len(labels) != len(data):
        raise InputError(f"Got {len(labels)} labels for {len(data)} logged rounds")
    reward_model = _reward_model(data, feature_map, labels if labels.n_states > 1 else None, config)

    def train(z: int) -> tuple[SoftmaxPolicy, TrainingCurve]:
        mask = labels.labels == z
        if not mask.any():
            logger.warning(f"No logged rounds for latent state {z + 1}; using the uniform policy")
            return SoftmaxPolicy.uniform(feature_map), TrainingCurve()
        state = z if reward_model is not None and reward_model.per_state else None
        view = PartitionView.build(data.subset(mask), feature_map, reward_model, state)
        theta, curve = gradient_ascent(view, config)
        logger.info(
            f"State {z + 1}: {view.n_rounds} rounds, objective {curve.values[0]:.4f} -> {curve.values[-1]:.4f}"
        )
        return SoftmaxPolicy(theta, feature_map), curve

    with ThreadPoolExecutor(max_workers=config.max_workers) as executor:
        results = list(executor.map(train, range(labels.n_states)))
    return PolicyBundle(
        policies={z: policy for z, (policy, _) in enumerate(results)},
        diagnostics={z: curve for z, (_, curve) in enumerate(results)},
    )


def train_stationary_baseline(
    data: LoggedDataset,
    feature_map: FeatureMap,
    config: TrainConfig | None = None,
) -> tuple[SoftmaxPolicy, TrainingCurve]:
    """One policy on all rounds with the IPS, DR or POEM objective."""
    config = config or TrainConfig()
    if len(data) == 0:
        raise InputError("Cannot train on empty data")
    reward_model = _reward_model(data, feature_map, None, config)
    view = PartitionView.build(data, feature_map, reward_model)
    theta, curve = gradient_ascent(view, config)
    logger.info(f"Stationary {config.objective.value}: objective {curve.values[0]:.4f} -> {curve.values[-1]:.4f}")
    return SoftmaxPolicy(theta, feature_map), curve


def ips_action_values(data: LoggedDataset, n_actions: int) -> np.ndarray:
    """Per-round IPS value of each deterministic action: (1/n) sum_{t: a_t = a} r_t / p_t."""
    if len(data) == 0:
        raise InputError("Cannot estimate action values on empty data")
    return np.bincount(data.actions, weights=data.rewards / data.propensities, minlength=n_actions) / len(data)


def closed_form_softmax(action_values, tau: float) -> np.ndarray:
    """Maximizer of sum_a pi(a) V(a) + tau H(pi) over the simplex: softmax(V / tau)."""
    if tau <= 0:
        raise InputError("tau must be positive")
    return softmax(np.asarray(action_values, dtype=float) / tau)


def corollary_params(horizon: int, delta_lower: float, delta: float) -> tuple[int, float]:
    """Detector window and threshold recommended for a known lower bound on the change size."""
    return theorem_params(horizon, delta_lower, delta)


class BundleDocument(BaseModel):
    """Sub-policies in state order (state i + 1 at index i)."""

    policies: list[PolicyDocument]
    final_objective: list[float | None] = Field(default_factory=list)

    @classmethod
    def from_bundle(cls, bundle: PolicyBundle) -> "BundleDocument":
        finals = []
        for z in range(bundle.n_states):
            curve = bundle.diagnostics.get(z)
            finals.append(curve.values[-1] if curve and curve.values else None)
        return cls(
            policies=[PolicyDocument.from_policy(bundle[z]) for z in range(bundle.n_states)],
            final_objective=finals,
        )

    def to_bundle(self) -> PolicyBundle:
        return PolicyBundle({z: doc.to_policy() for z, doc in enumerate(self.policies)})


def save_bundle(bundle: PolicyBundle | Mapping[int, SoftmaxPolicy], path: str | Path) -> None:
    if not isinstance(bundle, PolicyBundle):
        bundle = PolicyBundle(dict(bundle))
    write_document(BundleDocument.from_bundle(bundle), path)


def load_bundle(path: str | Path) -> PolicyBundle:
    return read_document(BundleDocument, path).to_bundle()
