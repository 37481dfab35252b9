import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from pydantic import BaseModel, Field

from driftopt.core.data import LatentSequence, occupancy_gap
from driftopt.core.exceptions import ConfigurationError
from driftopt.deploy.switchers import Switcher
from driftopt.envgen.environment import EnvSpec
from driftopt.learner.training import PolicyBundle

logger = logging.getLogger(__name__)


class DeployConfig(BaseModel):
    horizon: int | None = Field(None, ge=1, description="Rounds to deploy; defaults to the env schedule length")
    latent_shift: int = Field(0, description="Cyclic shift of the latent sequence used at deployment")
    eta: float | None = Field(None, gt=0.0, description="Exp4.S learning rate override")
    beta: float | None = Field(None, ge=0.0, le=1.0, description="Exp4.S mixing rate override")
    gamma: float | None = Field(None, ge=0.0, le=1.0, description="Exp4.S exploration override")
    record_snapshots: bool = Field(True, description="Keep per-round mixtures and expert weights in the trace")


@dataclass
class DeploymentTrace:
    """Per-round record of an online deployment."""

    switcher: str
    contexts: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    expected_rewards: np.ndarray
    optimal_rewards: np.ndarray
    labels: LatentSequence
    mixtures: np.ndarray | None = None
    expert_weights: np.ndarray | None = None
    metadata: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.actions)

    @property
    def mean_reward(self) -> float:
        return float(np.mean(self.rewards))

    @property
    def mean_expected_reward(self) -> float:
        return float(np.mean(self.expected_rewards))

    @property
    def regret(self) -> float:
        """sum_t max_a mu(a, z_t) - E[r_t], computed from the analytic expected rewards."""
        return float(np.sum(self.optimal_rewards - self.expected_rewards))

    def regret_curve(self) -> np.ndarray:
        return np.cumsum(self.optimal_rewards - self.expected_rewards)

    def summary(self) -> dict:
        return {
            "switcher": self.switcher,
            "horizon": len(self),
            "mean_reward": self.mean_reward,
            "mean_expected_reward": self.mean_expected_reward,
            "regret": self.regret,
            **self.metadata,
        }

    def write(self, path: str | Path) -> None:
        """One JSON line per round with 1-based round, action and latent state, plus snapshots when recorded."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w") as fh:
            for t in range(len(self)):
                record = {
                    "t": t + 1,
                    "context": self.contexts[t].tolist(),
                    "action": int(self.actions[t]) + 1,
                    "reward": float(self.rewards[t]),
                    "expected_reward": float(self.expected_rewards[t]),
                    "state": int(self.labels.labels[t]) + 1,
                }
                if self.mixtures is not None:
                    record["mixture"] = self.mixtures[t].tolist()
                if self.expert_weights is not None:
                    record["experts"] = self.expert_weights[t].tolist()
                fh.write(json.dumps(record) + "\n")


def deployment_labels(env: EnvSpec, horizon: int | None, latent_shift: int = 0) -> LatentSequence:
    """The env schedule, cycled or cut to ``horizon`` and optionally shifted."""
    labels = env.schedule
    horizon = horizon or env.horizon
    if horizon > env.horizon:
        logger.warning(f"Horizon {horizon} exceeds the {env.horizon}-round schedule; cycling it")
    labels = labels.resized(horizon)
    return labels.shifted(latent_shift) if latent_shift else labels


def run_deployment(
    env: EnvSpec,
    bundle: PolicyBundle,
    switcher: Switcher,
    rng: np.random.Generator,
    horizon: int | None = None,
    latent_override: LatentSequence | None = None,
    record_snapshots: bool = True,
) -> DeploymentTrace:
    """Play ``horizon`` rounds against ``env``, choosing actions with ``switcher``.

    Rounds follow the env schedule (cycled if needed) unless ``latent_override``
    supplies a different latent sequence.
    """
    reference = deployment_labels(env, horizon or (len(latent_override) if latent_override is not None else None))
    labels = reference if latent_override is None else latent_override
    if labels.n_states > env.n_states:
        raise ConfigurationError(f"Latent sequence uses {labels.n_states} states, env has {env.n_states}")
    T = len(labels)
    switcher.reset(bundle, labels)

    contexts = np.zeros(T, dtype=np.int64)
    actions = np.empty(T, dtype=np.int64)
    rewards = np.empty(T)
    expected = np.empty(T)
    mixtures = np.empty((T, env.n_actions)) if record_snapshots else None
    weights = []
    noise = rng.standard_normal(T)
    mean_reward = env.mean_reward

    for t in range(T):
        z = labels.labels[t]
        context = contexts[t]
        draw = switcher.select(t, context, rng)
        actions[t] = draw.action
        rewards[t] = mean_reward[draw.action, z] + env.noise_sigma * noise[t]
        expected[t] = env.expected_reward(draw.mixture, z)
        if record_snapshots:
            mixtures[t] = draw.mixture
            weights.append(np.array(switcher.snapshot()))
        switcher.update(t, context, draw, float(rewards[t]))

    metadata = {}
    if latent_override is not None:
        gap, relaxed = occupancy_gap(reference, labels)
        metadata = {"occupancy_gap": gap, "occupancy_gap_l2": relaxed}
    trace = DeploymentTrace(
        switcher=switcher.name,
        contexts=contexts,
        actions=actions,
        rewards=rewards,
        expected_rewards=expected,
        optimal_rewards=mean_reward.max(axis=0)[labels.labels],
        labels=labels,
        mixtures=mixtures,
        expert_weights=np.array(weights) if record_snapshots else None,
        metadata=metadata,
    )
    logger.info(f"Deployed {switcher.name} for {T} rounds: mean reward {trace.mean_reward:.4f}, regret {trace.regret:.2f}")
    return trace
