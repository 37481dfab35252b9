"""Expert switching strategies for deploying a policy bundle online."""

from abc import ABC, abstractmethod
from enum import Enum

import numpy as np

from driftopt.core.data import LatentSequence
from driftopt.core.exceptions import ConfigurationError
from driftopt.core.policy import SoftmaxPolicy, sample_categorical
from driftopt.deploy.exp4s import ExpertDraw, Exp4sState, exp4s_step, exp4s_update
from driftopt.deploy.posterior import filter_step, posterior_mixture
from driftopt.hmm.model import HmmParams
from driftopt.learner.training import PolicyBundle


class SwitcherKind(str, Enum):
    EXP4S = "exp4s"
    POSTERIOR = "posterior"
    STATIONARY = "stationary"
    ORACLE = "oracle"


class Switcher(ABC):
    """Chooses an action each round from a bundle of sub-policies and learns from the reward."""

    name: str

    def __init__(self) -> None:
        self.bundle: PolicyBundle | None = None
        self._expert_cache: dict = {}

    def reset(self, bundle: PolicyBundle, labels: LatentSequence) -> None:
        self.bundle = bundle
        self._expert_cache = {}

    def expert_probabilities(self, context) -> np.ndarray:
        # Tabular contexts repeat, so their expert distributions are cached.
        if np.ndim(context) == 0:
            key = int(context)
            if key not in self._expert_cache:
                self._expert_cache[key] = self.bundle.expert_probabilities(context)
            return self._expert_cache[key]
        return self.bundle.expert_probabilities(context)

    @abstractmethod
    def select(self, t: int, context, rng: np.random.Generator) -> ExpertDraw: ...

    def update(self, t: int, context, draw: ExpertDraw, reward: float) -> None:
        return None

    def snapshot(self) -> np.ndarray:
        """Current weights over experts."""
        return np.ones(1)


class Exp4sSwitcher(Switcher):
    name = "exp4s"

    def __init__(self, eta: float, beta: float, gamma: float = 0.0) -> None:
        super().__init__()
        self.eta, self.beta, self.gamma = eta, beta, gamma
        self.state: Exp4sState | None = None

    def reset(self, bundle: PolicyBundle, labels: LatentSequence) -> None:
        super().reset(bundle, labels)
        self.state = Exp4sState.initial(bundle.n_states, self.eta, self.beta, self.gamma)

    def select(self, t: int, context, rng: np.random.Generator) -> ExpertDraw:
        return exp4s_step(self.state, self.expert_probabilities(context), rng)

    def update(self, t: int, context, draw: ExpertDraw, reward: float) -> None:
        self.state = exp4s_update(self.state, draw, reward)

    def snapshot(self) -> np.ndarray:
        return self.state.weights


class PosteriorSwitcher(Switcher):
    """Posterior sampling over the bundle, filtering Q_t with the fitted HMM after every reward."""

    name = "posterior"

    def __init__(self, hmm: HmmParams) -> None:
        super().__init__()
        self.hmm = hmm
        self.posterior: np.ndarray | None = None
        self._sigmas = hmm.sigmas()
        self._log_sigmas = np.log(self._sigmas)
        self._mean_cache: dict = {}

    def reset(self, bundle: PolicyBundle, labels: LatentSequence) -> None:
        if not bundle.covers(self.hmm.n_states):
            raise ConfigurationError(f"Bundle does not cover all {self.hmm.n_states} HMM states")
        super().reset(bundle, labels)
        self.posterior = np.array(self.hmm.initial, dtype=float)
        self._mean_cache = {}

    def emission_means(self, context) -> np.ndarray:
        """beta_z^T f(x, a) for every state and action, shape (L, K)."""
        if np.ndim(context) == 0 and int(context) in self._mean_cache:
            return self._mean_cache[int(context)]
        fm = self.hmm.feature_map
        means = np.stack([fm.logits(beta, context)[0] for beta in self.hmm.beta])
        if np.ndim(context) == 0:
            self._mean_cache[int(context)] = means
        return means

    def select(self, t: int, context, rng: np.random.Generator) -> ExpertDraw:
        experts = self.expert_probabilities(context)
        if experts.shape[0] != self.hmm.n_states:
            raise ConfigurationError(f"Got {experts.shape[0]} sub-policies for {self.hmm.n_states} HMM states")
        mixture = posterior_mixture(self.posterior, experts)
        return ExpertDraw(action=sample_categorical(mixture, rng), mixture=mixture, expert_probs=experts)

    def update(self, t: int, context, draw: ExpertDraw, reward: float) -> None:
        # Gaussian log density up to a constant shared by every state.
        z_scores = (reward - self.emission_means(context)[:, draw.action]) / self._sigmas
        log_likelihood = -0.5 * z_scores**2 - self._log_sigmas
        self.posterior = filter_step(self.posterior, log_likelihood, self.hmm.transition)

    def snapshot(self) -> np.ndarray:
        return self.posterior


class StationarySwitcher(Switcher):
    """Always plays one policy; the bundle is ignored."""

    name = "stationary"

    def __init__(self, policy: SoftmaxPolicy) -> None:
        super().__init__()
        self.policy = policy

    def reset(self, bundle: PolicyBundle, labels: LatentSequence) -> None:
        super().reset(PolicyBundle.stationary(self.policy), labels)

    def select(self, t: int, context, rng: np.random.Generator) -> ExpertDraw:
        experts = self.expert_probabilities(context)
        return ExpertDraw(action=sample_categorical(experts[0], rng), mixture=experts[0], expert_probs=experts)


class OracleSwitcher(Switcher):
    """Debug switcher that plays the sub-policy of the true latent state."""

    name = "oracle"

    def __init__(self) -> None:
        super().__init__()
        self.labels: np.ndarray | None = None

    def reset(self, bundle: PolicyBundle, labels: LatentSequence) -> None:
        if not bundle.covers(labels.n_states):
            raise ConfigurationError(f"Bundle does not cover all {labels.n_states} latent states")
        super().reset(bundle, labels)
        self.labels = labels.labels

    def select(self, t: int, context, rng: np.random.Generator) -> ExpertDraw:
        experts = self.expert_probabilities(context)
        mixture = experts[self.labels[t]]
        return ExpertDraw(action=sample_categorical(mixture, rng), mixture=mixture, expert_probs=experts)
