import numpy as np
import pytest

from driftopt.core.data import LatentSequence, LoggedDataset
from driftopt.core.features import FeatureMap
from driftopt.core.policy import SoftmaxPolicy
from driftopt.envgen.environment import EnvSpec
from driftopt.hmm.model import HmmParams


class Helpers:
    @staticmethod
    def make_env(mean_reward, labels, noise_sigma: float = 0.0, logging_theta=None) -> EnvSpec:
        mean_reward = np.asarray(mean_reward, dtype=float)
        K, L = mean_reward.shape
        theta = np.zeros(K) if logging_theta is None else np.asarray(logging_theta, dtype=float)
        return EnvSpec(
            mean_reward=mean_reward,
            noise_sigma=noise_sigma,
            schedule=LatentSequence(np.asarray(labels), L),
            logging_policy=SoftmaxPolicy(theta, FeatureMap.context_free(K)),
        )

    @staticmethod
    def make_dataset(actions, rewards, propensities, contexts=None) -> LoggedDataset:
        actions = np.asarray(actions)
        return LoggedDataset(
            contexts=np.zeros(len(actions), dtype=np.int64) if contexts is None else np.asarray(contexts),
            actions=actions,
            rewards=np.asarray(rewards, dtype=float),
            propensities=np.asarray(propensities, dtype=float),
        )

    @staticmethod
    def policy(probs) -> SoftmaxPolicy:
        """Context-free softmax policy with the given action distribution."""
        probs = np.asarray(probs, dtype=float)
        return SoftmaxPolicy(np.log(probs), FeatureMap.context_free(len(probs)))


@pytest.fixture
def helpers():
    return Helpers


@pytest.fixture
def two_state_params():
    return HmmParams(
        initial=np.array([0.5, 0.5]),
        transition=np.array([[0.9, 0.1], [0.2, 0.8]]),
        beta=np.array([[0.0, 1.0], [1.0, 0.0]]),
        sigma=0.5,
        feature_map=FeatureMap.context_free(2),
    )
