import logging
from dataclasses import dataclass, field

import numpy as np
from pydantic import BaseModel, Field
from sklearn.cluster import KMeans

from driftopt.core.data import LoggedDataset
from driftopt.core.exceptions import InputError
from driftopt.core.features import FeatureMap
from driftopt.core.rng import spawn_rngs
from driftopt.estimators.reward_model import least_squares
from driftopt.hmm.inference import PosteriorTable, forward_backward_batch
from driftopt.hmm.model import HmmParams, emission_log_density_from_features

logger = logging.getLogger(__name__)

# A state whose total posterior mass falls below this is re-seeded.
DEGENERATE_MASS = 1e-8

# Window sizing and shrinkage for the k-means initialization.
WINDOWS_PER_STATE = 16
MIN_WINDOW_ROUNDS_PER_DIM = 8
WINDOW_SHRINKAGE = 1.0
KMEANS_RESTARTS = 10


class HmmFitConfig(BaseModel):
    n_states: int = Field(..., ge=1, description="Number of latent states L")
    max_iters: int = Field(100, ge=1, description="Maximum EM iterations per restart")
    tol: float = Field(1e-6, ge=0.0, description="Stop when the log-likelihood gain falls below this")
    restarts: int = Field(10, ge=1, description="EM restarts; restart 0 starts from windowed k-means")
    per_state_sigma: bool = Field(False, description="Fit one emission std per state")
    stickiness: float = Field(0.99, gt=0.0, lt=1.0, description="Initial self-transition probability")
    min_sigma: float = Field(1e-6, gt=0.0, description="Lower bound on the emission std")
    ridge: float = Field(1e-8, ge=0.0, description="Ridge damping of the weighted least squares")


@dataclass(frozen=True)
class HmmFitResult:
    params: HmmParams
    log_likelihood_trace: list[float]
    n_iter: int
    converged: bool
    restart: int
    restart_log_likelihoods: list[float] = field(default_factory=list)

    @property
    def log_likelihood(self) -> float:
        return self.log_likelihood_trace[-1]


def _sticky_transition(L: int, stickiness: float) -> np.ndarray:
    if L == 1:
        return np.ones((1, 1))
    transition = np.full((L, L), (1.0 - stickiness) / (L - 1))
    np.fill_diagonal(transition, stickiness)
    return transition


def _params_from_assignment(
    features: np.ndarray,
    rewards: np.ndarray,
    feature_map: FeatureMap,
    config: HmmFitConfig,
    assignment: np.ndarray,
) -> HmmParams:
    """Least squares per assigned state, one pooled sigma, sticky transitions and a uniform P0."""
    T, L = len(rewards), config.n_states
    beta = np.zeros((L, features.shape[1]))
    residuals = np.empty(T)
    for z in range(L):
        rows = np.flatnonzero(assignment == z)
        if len(rows) == 0:
            beta[z] = least_squares(features, rewards, config.ridge)
            continue
        beta[z] = least_squares(features[rows], rewards[rows], config.ridge)
        residuals[rows] = rewards[rows] - features[rows] @ beta[z]
    sigma = max(float(np.sqrt(np.mean(residuals**2))), config.min_sigma)
    if config.per_state_sigma:
        sigma = np.full(L, sigma)
    return HmmParams(
        initial=np.full(L, 1.0 / L),
        transition=_sticky_transition(L, config.stickiness),
        beta=beta,
        sigma=sigma,
        feature_map=feature_map,
    )


def _block_init(
    features: np.ndarray,
    rewards: np.ndarray,
    feature_map: FeatureMap,
    config: HmmFitConfig,
    offset: int,
) -> HmmParams:
    """Per-block least squares over L contiguous blocks of the rounds rotated by ``offset``."""
    T = len(rewards)
    order = np.roll(np.arange(T), -offset)
    assignment = np.empty(T, dtype=np.int64)
    for z, block in enumerate(np.array_split(order, config.n_states)):
        assignment[block] = z
    return _params_from_assignment(features, rewards, feature_map, config, assignment)


def _window_init(
    features: np.ndarray,
    rewards: np.ndarray,
    feature_map: FeatureMap,
    config: HmmFitConfig,
    rng: np.random.Generator,
) -> HmmParams | None:
    """k-means over short-window reward fits; ``None`` when there are fewer windows than states.

    Window fits are ridge-shrunk toward the pooled fit.
    """
    T, d = features.shape
    L = config.n_states
    if L == 1:
        return _params_from_assignment(features, rewards, feature_map, config, np.zeros(T, dtype=np.int64))
    length = max(T // (WINDOWS_PER_STATE * L), MIN_WINDOW_ROUNDS_PER_DIM * d)
    n_windows = T // length
    if n_windows < L:
        return None
    windows = np.array_split(np.arange(T), n_windows)
    pooled = least_squares(features, rewards, config.ridge)
    fits = np.array(
        [pooled + least_squares(features[w], rewards[w] - features[w] @ pooled, WINDOW_SHRINKAGE) for w in windows]
    )
    kmeans = KMeans(n_clusters=L, n_init=KMEANS_RESTARTS, random_state=int(rng.integers(2**31 - 1))).fit(fits)
    assignment = np.repeat(kmeans.labels_, [len(w) for w in windows])
    return _params_from_assignment(features, rewards, feature_map, config, assignment)



def _maximize(
    params: HmmParams,
    table: PosteriorTable,
    features: np.ndarray,
    rewards: np.ndarray,
    config: HmmFitConfig,
    rng: np.random.Generator,
) -> HmmParams:
    T, L = table.posterior.shape
    posterior = table.posterior
    mass = posterior.sum(axis=0)

    initial = posterior[0] / posterior[0].sum()
    counts = table.transition_counts
    row_mass = counts.sum(axis=1, keepdims=True)
    transition = np.where(row_mass > 0, counts / np.where(row_mass > 0, row_mass, 1.0), params.transition)

    beta = np.array(params.beta)
    squared = np.zeros((T, L))
    for z in range(L):
        if mass[z] < DEGENERATE_MASS:
            continue
        beta[z] = least_squares(features, rewards, config.ridge, sample_weight=posterior[:, z])
        squared[:, z] = (rewards - features @ beta[z]) ** 2

    weighted = (posterior * squared).sum(axis=0)
    if config.per_state_sigma:
        sigma = np.sqrt(np.divide(weighted, mass, out=np.array(params.sigmas()) ** 2, where=mass >= DEGENERATE_MASS))
        sigma = np.maximum(sigma, config.min_sigma)
    else:
        sigma = max(float(np.sqrt(weighted.sum() / T)), config.min_sigma)

    for z in np.flatnonzero(mass < DEGENERATE_MASS):
        length = max(1, T // L)
        start = int(rng.integers(0, T - length + 1))
        block = slice(start, start + length)
        beta[z] = least_squares(features[block], rewards[block], config.ridge)
        transition[z] = _sticky_transition(L, config.stickiness)[z]
        logger.warning(f"Latent state {z + 1} lost its posterior mass; re-seeded from rounds {start + 1}..{start + length}")

    return HmmParams(
        initial=initial,
        transition=transition,
        beta=beta,
        sigma=sigma,
        feature_map=params.feature_map,
    )


def _run_em(
    features: np.ndarray,
    rewards: np.ndarray,
    inits: list[HmmParams],
    config: HmmFitConfig,
    rngs: list[np.random.Generator],
) -> list[tuple[HmmParams, list[float], bool]]:
    """EM for every restart in lockstep; each E-step is one batched forward-backward.

    A restart leaves the batch once its log-likelihood gain drops below ``tol``.
    """
    params = list(inits)
    evaluated = list(inits)
    traces: list[list[float]] = [[] for _ in inits]
    converged = [False] * len(inits)
    active = list(range(len(inits)))
    for _ in range(config.max_iters):
        if not active:
            break
        tables = forward_backward_batch(
            [params[r] for r in active],
            [emission_log_density_from_features(params[r], features, rewards) for r in active],
        )
        remaining = []
        for r, table in zip(active, tables):
            traces[r].append(table.log_likelihood)
            evaluated[r] = params[r]
            if len(traces[r]) > 1 and traces[r][-1] - traces[r][-2] < config.tol:
                converged[r] = True
                continue
            params[r] = _maximize(params[r], table, features, rewards, config, rngs[r])
            remaining.append(r)
        active = remaining
    return [(evaluated[r], traces[r], converged[r]) for r in range(len(inits))]


def restart_offsets(horizon: int, n_states: int, restarts: int) -> list[int]:
    """Block offsets spread evenly over one block length."""
    block = max(1, horizon // n_states)
    return [(r * block) // restarts for r in range(restarts)]


def fit_hmm(
    data: LoggedDataset,
    feature_map: FeatureMap,
    config: HmmFitConfig,
    rng: np.random.Generator,
) -> HmmFitResult:
    """Baum-Welch with restarts run in lockstep; keeps the restart with the best log-likelihood."""
    if len(data) == 0:
        raise InputError("Cannot fit an HMM to empty data")
    if len(data) < config.n_states:
        raise InputError(f"Need at least {config.n_states} rounds to fit {config.n_states} states")
    data.check_actions(feature_map.n_actions)
    features = feature_map.features(data.contexts, data.actions)
    rewards = data.rewards
    offsets = restart_offsets(len(data), config.n_states, config.restarts)
    rngs = spawn_rngs(rng, config.restarts)

    window = _window_init(features, rewards, feature_map, config, rngs[0])
    inits = [
        window if restart == 0 and window is not None else _block_init(features, rewards, feature_map, config, offset)
        for restart, offset in enumerate(offsets)
    ]
    outcomes = _run_em(features, rewards, inits, config, rngs)

    finals = [trace[-1] for _, trace, _ in outcomes]
    best = int(np.argmax(finals))
    params, trace, converged = outcomes[best]
    logger.info(
        f"HMM fit L={config.n_states}: best restart {best + 1}/{config.restarts}, "
        f"log-likelihood {trace[-1]:.3f} after {len(trace)} iterations"
    )
    return HmmFitResult(
        params=params,
        log_likelihood_trace=trace,
        n_iter=len(trace),
        converged=converged,
        restart=best,
        restart_log_likelihoods=finals,
    )
