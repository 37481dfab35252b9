"""Posterior sampling deployment: act from the sub-policies weighted by the filtered latent posterior."""

from dataclasses import dataclass, replace

import numpy as np
from scipy.special import logsumexp

from driftopt.core.data import LoggedDataset
from driftopt.core.exceptions import ConfigurationError
from driftopt.core.policy import sample_categorical
from driftopt.deploy.exp4s import ExpertDraw
from driftopt.hmm.model import HmmParams, data_log_density, emission_log_density

# Below this unnormalized mass the update is redone in the log domain.
MIN_MASS = 1e-300


@dataclass(frozen=True)
class PosteriorSamplerState:
    """Filtered posterior Q_t over latent states before observing round t."""

    posterior: np.ndarray
    hmm: HmmParams

    def __post_init__(self) -> None:
        posterior = np.array(self.posterior, dtype=float)
        if posterior.shape != (self.hmm.n_states,):
            raise ConfigurationError(f"Posterior has shape {posterior.shape}, HMM has {self.hmm.n_states} states")
        if np.any(posterior < 0) or abs(posterior.sum() - 1.0) > 1e-10:
            raise ConfigurationError("Posterior must be a probability vector")
        posterior.setflags(write=False)
        object.__setattr__(self, "posterior", posterior)

    @classmethod
    def initial(cls, hmm: HmmParams) -> "PosteriorSamplerState":
        return cls(hmm.initial, hmm)


def posterior_mixture(posterior: np.ndarray, expert_probs: np.ndarray) -> np.ndarray:
    """w_t(a) = sum_z Q_t(z) pi_z(a | x_t)."""
    mixture = posterior @ expert_probs
    return mixture / mixture.sum()


def posterior_sample_step(state: PosteriorSamplerState, expert_probs: np.ndarray, rng: np.random.Generator) -> ExpertDraw:
    """Draw a_t from w_t(a) = sum_z Q_t(z) pi_z(a | x_t)."""
    if expert_probs.shape[0] != state.hmm.n_states:
        raise ConfigurationError(f"Got {expert_probs.shape[0]} sub-policies for {state.hmm.n_states} HMM states")
    mixture = posterior_mixture(state.posterior, expert_probs)
    return ExpertDraw(action=sample_categorical(mixture, rng), mixture=mixture, expert_probs=expert_probs)


def filter_step(posterior: np.ndarray, log_likelihood: np.ndarray, transition: np.ndarray) -> np.ndarray:
    """Q_{t+1}(z) proportional to sum_z' Q_t(z') P(r_t | z') Phi(z', z)."""
    shifted = posterior * np.exp(log_likelihood - log_likelihood.max())
    predicted = shifted @ transition
    mass = predicted.sum()
    if mass < MIN_MASS:
        with np.errstate(divide="ignore"):
            log_joint = np.log(posterior) + log_likelihood
            log_predicted = logsumexp(log_joint[:, None] + np.log(transition), axis=0)
        predicted = np.exp(log_predicted - logsumexp(log_predicted))
        mass = predicted.sum()
    return predicted / mass


def posterior_update_from_log_likelihood(state: PosteriorSamplerState, log_likelihood: np.ndarray) -> PosteriorSamplerState:
    """Q_{t+1}(z) proportional to sum_z' Q_t(z') P(r_t | z') Phi(z', z)."""
    log_likelihood = np.asarray(log_likelihood, dtype=float)
    return replace(state, posterior=filter_step(state.posterior, log_likelihood, state.hmm.transition))



def posterior_update(state: PosteriorSamplerState, context, action: int, reward: float) -> PosteriorSamplerState:
    log_likelihood = emission_log_density(state.hmm, context, np.array([action]), np.array([reward]))[0]
    return posterior_update_from_log_likelihood(state, log_likelihood)


def filter_posteriors(hmm: HmmParams, data: LoggedDataset) -> np.ndarray:
    """Q_t for t = 1..T+1 (each conditioned on the rounds before it), shape (T + 1, L)."""
    log_density = data_log_density(hmm, data)
    state = PosteriorSamplerState.initial(hmm)
    out = [state.posterior]
    for row in log_density:
        state = posterior_update_from_log_likelihood(state, row)
        out.append(state.posterior)
    return np.array(out)
