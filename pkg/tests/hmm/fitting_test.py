import itertools
import logging

import numpy as np
import pytest
from pydantic import ValidationError

from driftopt.core.data import LatentSequence
from driftopt.core.exceptions import InputError
from driftopt.core.features import FeatureMap
from driftopt.core.rng import make_rng
from driftopt.envgen.environment import simulate_log
from driftopt.estimators.reward_model import least_squares
from driftopt.hmm.fitting import HmmFitConfig, _block_init, _maximize, _window_init, fit_hmm, restart_offsets
from driftopt.hmm.inference import PosteriorTable, smooth_labels


def _switching_log(helpers, seed: int, horizon: int = 600, sigma: float = 0.3):
    env = helpers.make_env([[0.1, 0.9], [0.8, 0.2]], np.repeat([0, 1, 0], horizon // 3), noise_sigma=sigma)
    return env, simulate_log(env, make_rng(seed, "hmm-log"))


def test_single_state_is_least_squares(helpers):
    env, data = _switching_log(helpers, 0)
    fm = env.feature_map
    result = fit_hmm(data, fm, HmmFitConfig(n_states=1, restarts=1), make_rng(0))
    features = fm.features(data.contexts, data.actions)
    beta = least_squares(features, data.rewards)
    np.testing.assert_allclose(result.params.beta[0], beta, atol=1e-8)
    np.testing.assert_array_equal(result.params.transition, [[1.0]])
    sigma = np.sqrt(np.mean((data.rewards - features @ beta) ** 2))
    assert float(result.params.sigma) == pytest.approx(sigma, rel=1e-6)
    expected = np.sum(-0.5 * np.log(2 * np.pi * sigma**2) - (data.rewards - features @ beta) ** 2 / (2 * sigma**2))
    assert result.log_likelihood == pytest.approx(expected, rel=1e-6)


@pytest.mark.parametrize("seed", range(5))
def test_log_likelihood_never_decreases(helpers, seed):
    _, data = _switching_log(helpers, seed, horizon=300, sigma=0.6)
    config = HmmFitConfig(n_states=2, restarts=1, max_iters=40, tol=0.0)
    result = fit_hmm(data, FeatureMap.context_free(2), config, make_rng(seed))
    assert np.all(np.diff(result.log_likelihood_trace) >= -1e-9)


def test_recovers_well_separated_states(helpers):
    env, data = _switching_log(helpers, 3, horizon=1500, sigma=0.1)
    result = fit_hmm(data, env.feature_map, HmmFitConfig(n_states=2, restarts=3), make_rng(3))
    labels, _ = smooth_labels(result.params, data)
    truth = env.schedule.labels
    accuracy = max(np.mean(labels.labels == truth), np.mean(labels.labels == 1 - truth))
    assert accuracy >= 0.95


def test_best_restart_is_kept(helpers):
    _, data = _switching_log(helpers, 4)
    result = fit_hmm(data, FeatureMap.context_free(2), HmmFitConfig(n_states=2, restarts=3, max_iters=30), make_rng(4))
    assert len(result.restart_log_likelihoods) == 3
    assert result.log_likelihood == max(result.restart_log_likelihoods)
    assert result.restart_log_likelihoods[result.restart] == result.log_likelihood
    assert result.n_iter == len(result.log_likelihood_trace)


def test_fit_is_reproducible(helpers):
    _, data = _switching_log(helpers, 5, horizon=300)
    config = HmmFitConfig(n_states=2, restarts=2, max_iters=20)
    first = fit_hmm(data, FeatureMap.context_free(2), config, make_rng(9))
    second = fit_hmm(data, FeatureMap.context_free(2), config, make_rng(9))
    np.testing.assert_array_equal(first.params.beta, second.params.beta)
    assert first.log_likelihood_trace == second.log_likelihood_trace


def test_per_state_sigma_fit(helpers):
    _, data = _switching_log(helpers, 6, horizon=300)
    config = HmmFitConfig(n_states=2, restarts=1, per_state_sigma=True, max_iters=20)
    result = fit_hmm(data, FeatureMap.context_free(2), config, make_rng(6))
    assert result.params.per_state_sigma
    assert result.params.sigmas().shape == (2,)


def test_degenerate_state_is_reseeded(caplog, two_state_params):
    T = 20
    rng = make_rng(0)
    features = FeatureMap.context_free(2).features(np.zeros(T, dtype=int), rng.integers(0, 2, T))
    rewards = rng.normal(size=T)
    posterior = np.zeros((T, 2))
    posterior[:, 0] = 1.0
    counts = np.array([[T - 1.0, 0.0], [0.0, 0.0]])
    table = PosteriorTable(np.zeros((T, 2)), np.zeros((T, 2)), posterior, -1.0, counts)
    config = HmmFitConfig(n_states=2)
    with caplog.at_level(logging.WARNING):
        params = _maximize(two_state_params, table, features, rewards, config, make_rng(1))
    assert "re-seeded" in caplog.text
    np.testing.assert_allclose(params.transition[1], [0.01, 0.99])
    assert np.all(np.isfinite(params.beta))


def test_restart_offsets_span_one_block():
    assert restart_offsets(100, 2, 5) == [0, 10, 20, 30, 40]
    assert restart_offsets(3, 5, 2) == [0, 0]


def test_fit_needs_enough_rounds(helpers):
    data = helpers.make_dataset([0], [1.0], [0.5])
    with pytest.raises(InputError):
        fit_hmm(data, FeatureMap.context_free(2), HmmFitConfig(n_states=2), make_rng(0))


def test_config_validation():
    with pytest.raises(ValidationError):
        HmmFitConfig(n_states=0)
    with pytest.raises(ValidationError):
        HmmFitConfig(n_states=2, stickiness=1.0)


def test_labels_type(helpers, two_state_params):
    _, data = _switching_log(helpers, 7, horizon=30)
    labels, _ = smooth_labels(two_state_params, data)
    assert isinstance(labels, LatentSequence)


def _three_state_log(helpers, seed: int):
    mean_reward = np.array([[0.1, 0.9, 0.5], [0.8, 0.2, 0.5], [0.3, 0.3, 0.9]])
    env = helpers.make_env(mean_reward, np.repeat([0, 1, 2, 1, 0, 2], 500), noise_sigma=0.3)
    return env, simulate_log(env, make_rng(seed, "hmm-log-3"))


def _best_match_error(beta: np.ndarray, mean_reward: np.ndarray) -> float:
    return min(
        float(np.abs(beta[list(order)] - mean_reward.T).max()) for order in itertools.permutations(range(len(beta)))
    )


def test_window_init_finds_every_state(helpers):
    env, data = _three_state_log(helpers, 0)
    features = env.feature_map.features(data.contexts, data.actions)
    config = HmmFitConfig(n_states=3)
    init = _window_init(features, data.rewards, env.feature_map, config, make_rng(0))
    assert _best_match_error(init.beta, env.mean_reward) < 0.1
    blocks = _block_init(features, data.rewards, env.feature_map, config, 0)
    assert _best_match_error(blocks.beta, env.mean_reward) > _best_match_error(init.beta, env.mean_reward)


def test_window_init_needs_one_window_per_state(helpers):
    _, data = _switching_log(helpers, 0, horizon=30)
    fm = FeatureMap.context_free(2)
    features = fm.features(data.contexts, data.actions)
    assert _window_init(features, data.rewards, fm, HmmFitConfig(n_states=2), make_rng(0)) is None
    result = fit_hmm(data, fm, HmmFitConfig(n_states=2, restarts=1, max_iters=5), make_rng(0))
    assert np.all(np.isfinite(result.params.beta))


@pytest.mark.parametrize("seed", range(3))
def test_single_restart_recovers_three_states(helpers, seed):
    env, data = _three_state_log(helpers, seed)
    result = fit_hmm(data, env.feature_map, HmmFitConfig(n_states=3, restarts=1, max_iters=50), make_rng(seed))
    assert _best_match_error(result.params.beta, env.mean_reward) < 0.08
    labels, _ = smooth_labels(result.params, data)
    truth = env.schedule.labels
    accuracy = max(np.mean(np.asarray(order)[labels.labels] == truth) for order in itertools.permutations(range(3)))
    assert accuracy >= 0.9
