from dataclasses import dataclass
from pathlib import Path

import numpy as np
from pydantic import BaseModel, Field
from scipy.stats import norm

from driftopt.core.data import LoggedDataset
from driftopt.core.exceptions import ConfigurationError, InputError
from driftopt.core.features import FeatureMap
from driftopt.core.io import read_document, write_document


@dataclass(frozen=True)
class HmmParams:
    """HMM with Gaussian linear emissions r ~ N(beta_z^T f(x, a), sigma_z^2).

    ``sigma`` is a scalar shared by all states or a vector with one entry per state.
    """

    initial: np.ndarray
    transition: np.ndarray
    beta: np.ndarray
    sigma: float | np.ndarray
    feature_map: FeatureMap

    def __post_init__(self) -> None:
        initial = np.array(self.initial, dtype=float)
        transition = np.array(self.transition, dtype=float)
        beta = np.atleast_2d(np.array(self.beta, dtype=float))
        sigma = np.array(self.sigma, dtype=float)
        L = initial.shape[0]
        if transition.shape != (L, L):
            raise ConfigurationError(f"Transition matrix must be {L}x{L}, got {transition.shape}")
        if beta.shape != (L, self.feature_map.dim):
            raise ConfigurationError(f"beta must have shape ({L}, {self.feature_map.dim}), got {beta.shape}")
        if np.any(initial < 0) or abs(initial.sum() - 1.0) > 1e-10:
            raise ConfigurationError("Initial distribution must be non-negative and sum to 1")
        if np.any(transition < 0) or np.any(np.abs(transition.sum(axis=1) - 1.0) > 1e-10):
            raise ConfigurationError("Transition rows must be non-negative and sum to 1")
        if sigma.ndim > 1 or (sigma.ndim == 1 and sigma.shape[0] != L):
            raise ConfigurationError("sigma must be a scalar or have one entry per state")
        if np.any(~(sigma > 0)):
            raise ConfigurationError("sigma must be positive")
        for name, value in (("initial", initial), ("transition", transition), ("beta", beta), ("sigma", sigma)):
            value.setflags(write=False)
            object.__setattr__(self, name, value)

    @property
    def n_states(self) -> int:
        return self.initial.shape[0]

    @property
    def per_state_sigma(self) -> bool:
        return np.ndim(self.sigma) == 1

    def sigmas(self) -> np.ndarray:
        return np.broadcast_to(self.sigma, (self.n_states,)).copy()

    def permuted(self, order) -> "HmmParams":
        """Relabel states so that new state i is old state ``order[i]``."""
        order = np.asarray(order)
        return HmmParams(
            initial=self.initial[order],
            transition=self.transition[np.ix_(order, order)],
            beta=self.beta[order],
            sigma=self.sigma[order] if self.per_state_sigma else self.sigma,
            feature_map=self.feature_map,
        )


def predict_reward(params: HmmParams, context, action: int, state: int) -> float:
    """beta_z^T f(x, a)."""
    if not 0 <= state < params.n_states:
        raise InputError(f"Latent state {state} outside [0, {params.n_states})")
    return float(params.feature_map.evaluate(context, action) @ params.beta[state])


def emission_log_density(params: HmmParams, contexts, actions, rewards) -> np.ndarray:
    """log N(r_t; beta_z^T f(x_t, a_t), sigma_z^2) for every round and state, shape (T, L)."""
    features = params.feature_map.features(contexts, actions)
    return emission_log_density_from_features(params, features, np.asarray(rewards, dtype=float))


def emission_log_density_from_features(params: HmmParams, features: np.ndarray, rewards: np.ndarray) -> np.ndarray:
    means = features @ params.beta.T
    log_density = norm.logpdf(rewards[:, None], loc=means, scale=params.sigmas()[None, :])
    if not np.all(np.isfinite(log_density)):
        raise InputError("Emission density is not finite")
    return log_density


def emission_density(params: HmmParams, context, action: int, reward: float) -> np.ndarray:
    """P(r | x, a, z) for every state z, shape (L,)."""
    return np.exp(emission_log_density(params, context, np.array([action]), np.array([reward]))[0])


def data_log_density(params: HmmParams, data: LoggedDataset) -> np.ndarray:
    return emission_log_density(params, data.contexts, data.actions, data.rewards)


class HmmDocument(BaseModel):
    """Flat numeric form of :class:`HmmParams`; state order is the row order."""

    initial: list[float] = Field(..., description="P0")
    transition: list[list[float]] = Field(..., description="Row-stochastic transition matrix")
    beta: list[list[float]] = Field(..., description="Per-state regression weights")
    sigma: float | list[float] = Field(..., description="Emission standard deviation(s)")
    feature_map: FeatureMap
    log_likelihood: float | None = None

    @classmethod
    def from_params(cls, params: HmmParams, log_likelihood: float | None = None) -> "HmmDocument":
        return cls(
            initial=params.initial.tolist(),
            transition=params.transition.tolist(),
            beta=params.beta.tolist(),
            sigma=params.sigma.tolist() if params.per_state_sigma else float(params.sigma),
            feature_map=params.feature_map,
            log_likelihood=log_likelihood,
        )

    def to_params(self) -> HmmParams:
        return HmmParams(
            initial=np.array(self.initial),
            transition=np.array(self.transition),
            beta=np.array(self.beta),
            sigma=np.array(self.sigma) if isinstance(self.sigma, list) else self.sigma,
            feature_map=self.feature_map,
        )


def save_hmm(params: HmmParams, path: str | Path, log_likelihood: float | None = None) -> None:
    write_document(HmmDocument.from_params(params, log_likelihood), path)


def load_hmm(path: str | Path) -> HmmParams:
    return read_document(HmmDocument, path).to_params()
