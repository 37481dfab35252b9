import json

import numpy as np
import pytest
from pydantic import ValidationError

from driftopt.core.exceptions import ConfigurationError
from driftopt.core.rng import make_rng
from driftopt.deploy.exp4s import exp4s_hyperparams
from driftopt.deploy.runner import DeployConfig, deployment_labels, run_deployment
from driftopt.deploy.switchers import Exp4sSwitcher, OracleSwitcher, PosteriorSwitcher, StationarySwitcher
from driftopt.envgen.environment import EnvConfig, generate_synthetic_env, optimal_bundle
from driftopt.hmm.model import HmmParams
from driftopt.learner.training import PolicyBundle


@pytest.fixture
def env():
    config = EnvConfig(n_actions=4, n_states=3, horizon=3000, period=500, noise_sigma=0.1)
    return generate_synthetic_env(make_rng(0, "env"), config)


@pytest.fixture
def diagonal_env(helpers):
    means = np.full((3, 3), 0.1)
    np.fill_diagonal(means, 0.9)
    return helpers.make_env(means, np.repeat([0, 1, 2, 0, 1, 2], 500), noise_sigma=0.1)


def _true_hmm(env, stickiness=0.998) -> HmmParams:
    L = env.n_states
    transition = np.full((L, L), (1 - stickiness) / (L - 1))
    np.fill_diagonal(transition, stickiness)
    return HmmParams(
        initial=np.full(L, 1.0 / L),
        transition=transition,
        beta=env.mean_reward.T,
        sigma=env.noise_sigma,
        feature_map=env.feature_map,
    )


def test_oracle_with_optimal_bundle_has_zero_regret(env):
    trace = run_deployment(env, PolicyBundle(optimal_bundle(env)), OracleSwitcher(), make_rng(0))
    assert trace.regret == 0.0
    assert len(trace) == env.horizon


def test_uniform_bundle_earns_mean_reward(env):
    bundle = PolicyBundle.uniform(env.feature_map, env.n_states)
    switcher = Exp4sSwitcher(*exp4s_hyperparams(env.horizon, 6, env.n_actions, env.n_states))
    trace = run_deployment(env, bundle, switcher, make_rng(1))
    expected = env.mean_reward.mean(axis=0)[env.schedule.labels]
    np.testing.assert_allclose(trace.expected_rewards, expected)
    np.testing.assert_allclose(trace.expert_weights.sum(axis=1), 1.0)


def test_posterior_switcher_beats_a_stationary_policy(diagonal_env):
    env = diagonal_env
    bundle = PolicyBundle(optimal_bundle(env))
    posterior = run_deployment(env, bundle, PosteriorSwitcher(_true_hmm(env)), make_rng(2))
    stationary = run_deployment(env, bundle, StationarySwitcher(bundle[0]), make_rng(2))
    assert posterior.regret < stationary.regret
    assert posterior.regret < 0.05 * env.horizon


def test_exp4s_tracks_the_best_expert(diagonal_env):
    env = diagonal_env
    bundle = PolicyBundle(optimal_bundle(env))
    switcher = Exp4sSwitcher(*exp4s_hyperparams(env.horizon, 6, env.n_actions, env.n_states))
    exp4s = run_deployment(env, bundle, switcher, make_rng(3))
    uniform = run_deployment(env, PolicyBundle.uniform(env.feature_map, env.n_states), OracleSwitcher(), make_rng(3))
    assert exp4s.regret < uniform.regret


def test_deployment_is_reproducible(env):
    bundle = PolicyBundle.uniform(env.feature_map, env.n_states)
    first = run_deployment(env, bundle, Exp4sSwitcher(0.1, 0.1), make_rng(4))
    second = run_deployment(env, bundle, Exp4sSwitcher(0.1, 0.1), make_rng(4))
    np.testing.assert_array_equal(first.actions, second.actions)
    np.testing.assert_array_equal(first.rewards, second.rewards)


def test_horizon_cycles_the_schedule(env, caplog):
    labels = deployment_labels(env, 2 * env.horizon)
    assert len(labels) == 2 * env.horizon
    np.testing.assert_array_equal(labels.labels[env.horizon :], env.schedule.labels)
    assert "cycling" in caplog.text


def test_latent_shift_records_occupancy_gap(env):
    labels = deployment_labels(env, None, latent_shift=250)
    assert labels.labels[250] == env.schedule.labels[0]
    bundle = PolicyBundle(optimal_bundle(env))
    trace = run_deployment(env, bundle, OracleSwitcher(), make_rng(5), latent_override=labels)
    assert trace.regret == 0.0
    assert set(trace.metadata) == {"occupancy_gap", "occupancy_gap_l2"}


def test_snapshots_can_be_skipped(env, tmp_path):
    bundle = PolicyBundle.uniform(env.feature_map, env.n_states)
    trace = run_deployment(env, bundle, Exp4sSwitcher(0.1, 0.1), make_rng(6), horizon=100, record_snapshots=False)
    assert trace.mixtures is None
    assert trace.expert_weights is None
    assert len(trace) == 100
    path = tmp_path / "rounds.jsonl"
    trace.write(path)
    record = json.loads(path.read_text().splitlines()[0])
    assert "mixture" not in record and "experts" not in record


def test_trace_is_written_one_based(env, tmp_path):
    bundle = PolicyBundle.uniform(env.feature_map, env.n_states)
    trace = run_deployment(env, bundle, Exp4sSwitcher(0.1, 0.1), make_rng(7), horizon=20)
    path = tmp_path / "trace" / "rounds.jsonl"
    trace.write(path)
    records = [json.loads(line) for line in path.read_text().splitlines()]
    assert len(records) == 20
    assert records[0]["t"] == 1
    assert records[0]["action"] == int(trace.actions[0]) + 1
    assert records[0]["state"] == int(env.schedule.labels[0]) + 1
    assert len(records[0]["experts"]) == env.n_states
    np.testing.assert_allclose(records[5]["mixture"], trace.mixtures[5])
    assert sum(records[5]["mixture"]) == pytest.approx(1.0)
    assert trace.summary()["horizon"] == 20


def test_switchers_check_bundle_coverage(env):
    small = PolicyBundle.uniform(env.feature_map, 2)
    with pytest.raises(ConfigurationError):
        run_deployment(env, small, OracleSwitcher(), make_rng(0), horizon=10)
    with pytest.raises(ConfigurationError):
        run_deployment(env, small, PosteriorSwitcher(_true_hmm(env)), make_rng(0), horizon=10)


def test_deploy_config_validation():
    with pytest.raises(ValidationError):
        DeployConfig(beta=2.0)
    assert DeployConfig().record_snapshots
