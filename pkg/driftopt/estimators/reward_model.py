from dataclasses import dataclass

import numpy as np

from driftopt.core.data import LatentSequence, LoggedDataset
from driftopt.core.exceptions import ConfigurationError, InputError
from driftopt.core.features import FeatureMap

DEFAULT_RIDGE = 1e-8


@dataclass(frozen=True)
class RewardModel:
    """Linear reward model r_hat_z(x, a) = beta_z^T f(x, a).

    ``weights`` has one row per latent state, or a single row shared by every
    round for stationary baselines.
    """

    weights: np.ndarray
    feature_map: FeatureMap
    sigma: float = 0.0

    def __post_init__(self) -> None:
        weights = np.atleast_2d(np.array(self.weights, dtype=float))
        if weights.shape[1] != self.feature_map.dim:
            raise ConfigurationError(f"Reward weights have dimension {weights.shape[1]}, features {self.feature_map.dim}")
        if not np.all(np.isfinite(weights)):
            raise ConfigurationError("Reward weights must be finite")
        weights.setflags(write=False)
        object.__setattr__(self, "weights", weights)

    @classmethod
    def zeros(cls, feature_map: FeatureMap, n_states: int = 1) -> "RewardModel":
        return cls(np.zeros((n_states, feature_map.dim)), feature_map)

    @property
    def per_state(self) -> bool:
        return self.weights.shape[0] > 1

    @property
    def n_states(self) -> int:
        return self.weights.shape[0]

    def _state_rows(self, n: int, states) -> np.ndarray:
        if states is None:
            if self.per_state:
                raise InputError("A per-state reward model needs latent states to predict")
            return np.zeros(n, dtype=np.int64)
        states = np.broadcast_to(np.asarray(states, dtype=np.int64), (n,))
        if not self.per_state:
            return np.zeros(n, dtype=np.int64)
        if states.min() < 0 or states.max() >= self.n_states:
            raise InputError(f"Latent state outside [0, {self.n_states})")
        return states

    def predict(self, contexts, actions, states=None) -> np.ndarray:
        """r_hat for the given (context, action) pairs, shape (n,)."""
        features = self.feature_map.features(contexts, actions)
        rows = self._state_rows(features.shape[0], states)
        return np.einsum("nd,nd->n", features, self.weights[rows])

    def predict_all(self, contexts, states=None) -> np.ndarray:
        """r_hat for every action, shape (n, K)."""
        contexts = self.feature_map.as_contexts(contexts)
        n = contexts.shape[0]
        rows = self._state_rows(n, states)
        out = np.empty((n, self.feature_map.n_actions))
        for z in np.unique(rows):
            mask = rows == z
            out[mask] = self.feature_map.logits(self.weights[z], contexts[mask])
        return out


def least_squares(features: np.ndarray, rewards: np.ndarray, ridge: float = DEFAULT_RIDGE, sample_weight=None) -> np.ndarray:
    """Ridge-damped (weighted) least squares solution of features @ beta ~ rewards."""
    weights = np.ones(len(rewards)) if sample_weight is None else np.asarray(sample_weight, dtype=float)
    gram = features.T @ (features * weights[:, None])
    rhs = features.T @ (weights * rewards)
    return np.linalg.solve(gram + ridge * np.eye(features.shape[1]), rhs)


def fit_reward_model(
    data: LoggedDataset,
    feature_map: FeatureMap,
    labels: LatentSequence | None = None,
    ridge: float = DEFAULT_RIDGE,
) -> RewardModel:
    """Fit beta by least squares on (f(x_t, a_t), r_t), one fit per state when ``labels`` is given."""
    features = feature_map.features(data.contexts, data.actions)
    if labels is None:
        beta = least_squares(features, data.rewards, ridge)
        residuals = data.rewards - features @ beta
        return RewardModel(beta[None, :], feature_map, float(np.sqrt(np.mean(residuals**2))) if len(data) else 0.0)

    if len(labels) != len(data):
        raise InputError(f"Got {len(labels)} labels for {len(data)} logged rounds")
    weights = np.zeros((labels.n_states, feature_map.dim))
    residuals = np.zeros(len(data))
    for z in range(labels.n_states):
        mask = labels.labels == z
        if not mask.any():
            continue
        weights[z] = least_squares(features[mask], data.rewards[mask], ridge)
        residuals[mask] = data.rewards[mask] - features[mask] @ weights[z]
    sigma = float(np.sqrt(np.mean(residuals**2))) if len(data) else 0.0
    return RewardModel(weights, feature_map, sigma)
