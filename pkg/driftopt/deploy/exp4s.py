"""Exp4.S: exponential weights over sub-policy experts with fixed-share mixing."""

import logging
import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.special import softmax

from driftopt.core.exceptions import ConfigurationError
from driftopt.core.policy import sample_categorical

logger = logging.getLogger(__name__)

MIN_ETA = 1e-6


@dataclass(frozen=True)
class Exp4sState:
    """Expert weights w_t and the hyperparameters eta, beta (mixing) and gamma (exploration)."""

    weights: np.ndarray
    eta: float
    beta: float
    gamma: float = 0.0
    clamp_warned: bool = False

    def __post_init__(self) -> None:
        weights = np.array(self.weights, dtype=float)
        if weights.ndim != 1 or np.any(weights < 0) or abs(weights.sum() - 1.0) > 1e-10:
            raise ConfigurationError("Expert weights must be non-negative and sum to 1")
        if not self.eta > 0:
            raise ConfigurationError("eta must be positive")
        if not 0.0 <= self.gamma <= 1.0 or not 0.0 <= self.beta <= 1.0:
            raise ConfigurationError("beta and gamma must lie in [0, 1]")
        weights.setflags(write=False)
        object.__setattr__(self, "weights", weights)

    @classmethod
    def initial(cls, n_experts: int, eta: float, beta: float, gamma: float = 0.0) -> "Exp4sState":
        return cls(np.full(n_experts, 1.0 / n_experts), eta, beta, gamma)

    @property
    def n_experts(self) -> int:
        return self.weights.shape[0]


@dataclass(frozen=True)
class ExpertDraw:
    """One round's decision: the action, the mixture it was drawn from, and each expert's distribution."""

    action: int
    mixture: np.ndarray
    expert_probs: np.ndarray


def exp4s_hyperparams(horizon: int, n_segments: int, n_actions: int, n_experts: int) -> tuple[float, float, float]:
    """eta = sqrt(log L / (l K)) with l = T / S, beta = 1 / L, gamma = 0."""
    if min(horizon, n_segments, n_actions, n_experts) < 1:
        raise ConfigurationError("Exp4.S hyperparameters need positive sizes")
    block = horizon / n_segments
    eta = math.sqrt(math.log(n_experts) / (block * n_actions))
    return max(eta, MIN_ETA), 1.0 / n_experts, 0.0


def exp4s_mixture(state: Exp4sState, expert_probs: np.ndarray) -> np.ndarray:
    """E_t(a) = (1 - gamma) sum_z w_t(z) pi_z(a | x_t) + gamma / K.

    The exploration mass gamma is spread uniformly over the K actions, not over the L experts.
    """
    n_actions = expert_probs.shape[1]
    mixture = (1.0 - state.gamma) * (state.weights @ expert_probs) + state.gamma / n_actions
    return mixture / mixture.sum()


def exp4s_step(state: Exp4sState, expert_probs: np.ndarray, rng: np.random.Generator) -> ExpertDraw:
    if expert_probs.shape[0] != state.n_experts:
        raise ConfigurationError(f"Got {expert_probs.shape[0]} experts for {state.n_experts} weights")
    mixture = exp4s_mixture(state, expert_probs)
    return ExpertDraw(action=sample_categorical(mixture, rng), mixture=mixture, expert_probs=expert_probs)


def exp4s_costs(draw: ExpertDraw, reward: float) -> np.ndarray:
    """Propagated expert costs c_tilde(z) = c_hat(a_t) pi_z(a_t | x_t), c_hat(a_t) = (1 - r_t) / E_t(a_t)."""
    cost = (1.0 - reward) / draw.mixture[draw.action]
    return cost * draw.expert_probs[:, draw.action]


def exp4s_update(state: Exp4sState, draw: ExpertDraw, reward: float) -> Exp4sState:
    """Exponential-weights step on the propagated costs, then w = (1 - beta) w_tilde + beta / L."""
    clamped = min(max(float(reward), 0.0), 1.0)
    warned = state.clamp_warned
    if clamped != reward and not warned:
        logger.warning(f"Reward {reward:.4f} outside [0, 1]; clamping it for Exp4.S cost estimates")
        warned = True
    costs = exp4s_costs(draw, clamped)
    with np.errstate(divide="ignore"):
        updated = softmax(np.log(state.weights) - state.eta * costs)
    weights = (1.0 - state.beta) * updated + state.beta / state.n_experts
    return replace(state, weights=weights / weights.sum(), clamp_warned=warned)
