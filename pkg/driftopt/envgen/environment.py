import logging
from collections.abc import Mapping, Sequence
from dataclasses import dataclass
from pathlib import Path
from typing import Literal

import numpy as np
from pydantic import BaseModel, Field, model_validator

from driftopt.core.data import LatentSequence, LoggedDataset, Segment
from driftopt.core.exceptions import ConfigurationError
from driftopt.core.features import FeatureMap
from driftopt.core.io import read_document, write_document
from driftopt.core.policy import SoftmaxPolicy, sample_categorical
from driftopt.envgen.schedules import RampDirection, cyclic_schedule, ramp_schedule

logger = logging.getLogger(__name__)

# Logit gap of the per-state argmax policies; large enough that every other
# action's probability underflows to the floor.
OPTIMAL_LOGIT_GAP = 1000.0


class EnvConfig(BaseModel):
    """Settings of the synthetic piecewise-stationary environment."""

    n_actions: int = Field(5, ge=2, description="Number of actions K")
    n_states: int = Field(5, ge=1, description="Number of latent states L")
    horizon: int = Field(100_000, ge=1, description="Number of rounds T")
    period: int = Field(10_000, ge=1, description="Rounds between latent state changes")
    noise_sigma: float = Field(0.5, ge=0.0, description="Standard deviation of Gaussian rewards")
    logging_noise: float = Field(0.1, ge=0.0, description="Standard deviation of the logging policy perturbation")
    schedule: Literal["ramp", "cyclic"] = Field("ramp", description="Latent schedule kind")
    direction: RampDirection = Field(RampDirection.UP, description="Direction of the ramp schedule")
    cyclic_states: list[int] | None = Field(
        None, description="0-based state order of a cyclic schedule; may repeat states"
    )

    @model_validator(mode="after")
    def _check_schedule(self):
        if self.cyclic_states is not None:
            if not self.cyclic_states:
                raise ValueError("cyclic_states must not be empty")
            if min(self.cyclic_states) < 0 or max(self.cyclic_states) >= self.n_states:
                raise ValueError(f"cyclic_states must lie in [0, {self.n_states})")
        return self

    def latent_schedule(self) -> LatentSequence:
        if self.schedule == "cyclic":
            states = self.cyclic_states if self.cyclic_states is not None else list(range(self.n_states))
            return cyclic_schedule(self.horizon, states, self.period, n_states=self.n_states)
        return ramp_schedule(self.horizon, self.n_states, self.period, self.direction)


@dataclass(frozen=True)
class EnvSpec:
    """Context-free piecewise-stationary bandit with Gaussian rewards N(mu(a, z), sigma^2)."""

    mean_reward: np.ndarray
    noise_sigma: float
    schedule: LatentSequence
    logging_policy: SoftmaxPolicy

    def __post_init__(self) -> None:
        mean_reward = np.array(self.mean_reward, dtype=float)
        if mean_reward.ndim != 2:
            raise ConfigurationError("mean_reward must be a K x L matrix")
        n_actions, n_states = mean_reward.shape
        if self.schedule.n_states != n_states:
            raise ConfigurationError(f"Schedule has {self.schedule.n_states} states, mean_reward has {n_states}")
        if self.logging_policy.n_actions != n_actions:
            raise ConfigurationError("Logging policy and mean_reward disagree on the number of actions")
        if self.noise_sigma < 0:
            raise ConfigurationError("noise_sigma must be non-negative")
        mean_reward.setflags(write=False)
        object.__setattr__(self, "mean_reward", mean_reward)

    @property
    def n_actions(self) -> int:
        return self.mean_reward.shape[0]

    @property
    def n_states(self) -> int:
        return self.mean_reward.shape[1]

    @property
    def horizon(self) -> int:
        return len(self.schedule)

    @property
    def feature_map(self) -> FeatureMap:
        return self.logging_policy.feature_map

    def logging_distribution(self) -> np.ndarray:
        return self.logging_policy.action_probabilities(0)[0]

    def expected_reward(self, probs: np.ndarray, state: int) -> float:
        """sum_a probs(a) mu(a, z)."""
        return float(np.dot(probs, self.mean_reward[:, state]))


@dataclass(frozen=True)
class ValueTable:
    """Analytic values of a list of policies.

    ``per_state[i, z]`` is V_z of policy ``i`` under state z; ``labels`` is the
    latent sequence the per-round values follow.
    """

    per_state: np.ndarray
    labels: LatentSequence

    def per_round(self, index: int) -> np.ndarray:
        return self.per_state[index, self.labels.labels]

    def total(self, index: int) -> float:
        return float(self.labels.counts() @ self.per_state[index])


def generate_synthetic_env(rng: np.random.Generator, config: EnvConfig | None = None) -> EnvSpec:
    """Draw mu(a, z) ~ Uniform(0, 1) and a logging policy softmax(mean_z mu(a, z) + eps)."""
    config = config or EnvConfig()
    K, L = config.n_actions, config.n_states
    mean_reward = rng.uniform(0.0, 1.0, size=(K, L))
    eps = rng.normal(0.0, config.logging_noise, size=K) if config.logging_noise > 0 else np.zeros(K)
    logging_theta = mean_reward.mean(axis=1) + eps
    schedule = config.latent_schedule()
    logger.info(f"Generated environment K={K} L={L} T={config.horizon} with {schedule.num_segments} segments")
    return EnvSpec(
        mean_reward=mean_reward,
        noise_sigma=config.noise_sigma,
        schedule=schedule,
        logging_policy=SoftmaxPolicy(logging_theta, FeatureMap.context_free(K)),
    )


def simulate_log(env: EnvSpec, rng: np.random.Generator, labels: LatentSequence | None = None) -> LoggedDataset:
    """Log one round per entry of ``labels`` (default: the env schedule) under the logging policy."""
    labels = env.schedule if labels is None else labels
    T = len(labels)
    probs = env.logging_distribution()
    actions = sample_categorical(np.broadcast_to(probs, (T, env.n_actions)), rng)
    means = env.mean_reward[actions, labels.labels]
    rewards = means + env.noise_sigma * rng.standard_normal(T) if env.noise_sigma > 0 else means.copy()
    return LoggedDataset(
        contexts=np.zeros(T, dtype=np.int64),
        actions=actions,
        rewards=rewards,
        propensities=probs[actions],
    )


def _policy_for(policies: Mapping[int, SoftmaxPolicy] | Sequence[SoftmaxPolicy], state: int) -> SoftmaxPolicy:
    try:
        return policies[state]
    except (KeyError, IndexError):
        raise ConfigurationError(f"No sub-policy for latent state {state + 1}") from None


def state_values(env: EnvSpec, policy: SoftmaxPolicy) -> np.ndarray:
    """V_z(pi) for every state z, shape (L,)."""
    return env.mean_reward.T @ policy.action_probabilities(0)[0]


def value_table(env: EnvSpec, policies: Sequence[SoftmaxPolicy], labels: LatentSequence | None = None) -> ValueTable:
    labels = env.schedule if labels is None else labels
    per_state = np.array([state_values(env, p) for p in policies]).reshape(len(policies), env.n_states)
    return ValueTable(per_state=per_state, labels=labels)


def true_value(
    env: EnvSpec,
    policy_set: Mapping[int, SoftmaxPolicy] | Sequence[SoftmaxPolicy],
    assignment: LatentSequence | None = None,
) -> float:
    """V(Pi) = sum_t sum_a pi_{z_t}(a) mu(a, z_t), computed exactly."""
    assignment = env.schedule if assignment is None else assignment
    counts = assignment.counts()
    total = 0.0
    for z in np.flatnonzero(counts):
        policy = _policy_for(policy_set, int(z))
        total += counts[z] * env.expected_reward(policy.action_probabilities(0)[0], int(z))
    return float(total)


def optimal_bundle(env: EnvSpec) -> dict[int, SoftmaxPolicy]:
    """Per-state argmax policies, deterministic up to the probability floor."""
    bundle = {}
    for z in range(env.n_states):
        theta = np.zeros(env.n_actions)
        theta[int(np.argmax(env.mean_reward[:, z]))] = OPTIMAL_LOGIT_GAP
        bundle[z] = SoftmaxPolicy(theta, env.feature_map)
    return bundle


def optimal_value(env: EnvSpec, labels: LatentSequence | None = None) -> float:
    """sum_t max_a mu(a, z_t)."""
    labels = env.schedule if labels is None else labels
    return float(labels.counts() @ env.mean_reward.max(axis=0))


class EnvDocument(BaseModel):
    """Persisted environment. Segments are 1-based and inclusive: [start, end, state]."""

    mean_reward: list[list[float]] = Field(..., description="K x L mean reward matrix")
    noise_sigma: float = Field(..., ge=0.0)
    segments: list[tuple[int, int, int]] = Field(..., description="Latent schedule as segments")
    logging_theta: list[float] = Field(..., description="Logging policy weights")

    @classmethod
    def from_env(cls, env: EnvSpec) -> "EnvDocument":
        return cls(
            mean_reward=env.mean_reward.tolist(),
            noise_sigma=env.noise_sigma,
            segments=[(s.start + 1, s.stop, s.label + 1) for s in env.schedule.segments()],
            logging_theta=[float(v) for v in env.logging_policy.theta],
        )

    def to_env(self) -> EnvSpec:
        mean_reward = np.array(self.mean_reward, dtype=float)
        K, L = mean_reward.shape
        schedule = LatentSequence.from_segments(
            (Segment(start - 1, end, state - 1) for start, end, state in self.segments), L
        )
        return EnvSpec(
            mean_reward=mean_reward,
            noise_sigma=self.noise_sigma,
            schedule=schedule,
            logging_policy=SoftmaxPolicy(np.array(self.logging_theta), FeatureMap.context_free(K)),
        )


def save_env(env: EnvSpec, path: str | Path) -> None:
    write_document(EnvDocument.from_env(env), path)


def load_env(path: str | Path) -> EnvSpec:
    return read_document(EnvDocument, path).to_env()
