import json

import numpy as np
import pytest

from driftopt.core.exceptions import ConfigurationError, DataError
from driftopt.core.features import FeatureMode
from driftopt.core.io import PolicyDocument, read_labels, read_logged_data, write_document, write_logged_data
from driftopt.core.policy import SoftmaxPolicy
from driftopt.core.rng import make_rng
from driftopt.deploy.runner import DeployConfig
from driftopt.deploy.switchers import SwitcherKind
from driftopt.envgen.environment import save_env, simulate_log
from driftopt.estimators.ope import EstimatorConfig, EstimatorKind
from driftopt.harness import stages
from driftopt.hmm.fitting import HmmFitConfig
from driftopt.learner.training import PolicyBundle, TrainConfig, load_bundle


@pytest.fixture
def generated(tmp_path, tiny_env_config):
    out = tmp_path / "log.txt"
    summary = stages.generate(tiny_env_config, seed=3, out=out)
    return out, summary


@pytest.fixture
def separated(tmp_path, helpers):
    env = helpers.make_env([[0.1, 0.9], [0.9, 0.1], [0.2, 0.8]], np.repeat([0, 1, 0], 200), noise_sigma=0.1)
    out = tmp_path / "separated.txt"
    write_logged_data(simulate_log(env, make_rng(0, "log")), out)
    save_env(env, stages.env_path_for(out))
    return out


def test_generate_writes_log_and_env(generated):
    out, summary = generated
    assert summary["rounds"] == 600
    assert summary["env"] == str(stages.env_path_for(out))
    assert stages.env_path_for(out).name == "log.env.json"
    assert len(read_logged_data(out)) == 600
    assert 0.0 < summary["optimal_mean_reward"] <= 1.0


def test_pipeline(tmp_path, separated):
    data_path = separated
    labels_path = tmp_path / "cd.labels.jsonl"
    detected = stages.detect(data_path, w=50, k=2, out=labels_path, c=0.15)
    assert detected["states"] <= 2
    assert all(1 <= t <= 600 for t in detected["change_points"])
    assert len(read_labels(labels_path)) == 600

    hmm_path = tmp_path / "hmm.json"
    hmm_labels = tmp_path / "hmm.labels.jsonl"
    fitted = stages.fit_hmm_stage(data_path, HmmFitConfig(n_states=2, restarts=1, max_iters=10), hmm_path, labels_out=hmm_labels)
    assert fitted["restart"] == 1
    assert np.isfinite(fitted["log_likelihood"])

    bundle_path = tmp_path / "bundle.json"
    learned = stages.learn(data_path, bundle_path, TrainConfig(steps=30), labels_path=hmm_labels)
    assert learned["states"] == 2
    assert load_bundle(bundle_path).n_states == 2

    estimate = stages.evaluate_stage(data_path, bundle_path, EstimatorConfig(M=10.0), labels_path=hmm_labels)
    assert estimate["mean_value"] == pytest.approx(estimate["value"] / 600)

    env_path = stages.env_path_for(data_path)
    for kind in (SwitcherKind.EXP4S, SwitcherKind.POSTERIOR, SwitcherKind.ORACLE):
        trace_path = tmp_path / f"{kind.value}.jsonl"
        deployed = stages.deploy(env_path, bundle_path, kind, seed=0, trace_path=trace_path, hmm_path=hmm_path)
        assert deployed["switcher"] == kind.value
        assert len(trace_path.read_text().splitlines()) == 600


def test_learn_without_labels_gives_stationary_bundle(tmp_path, generated):
    data_path, _ = generated
    bundle_path = tmp_path / "stationary.json"
    assert stages.learn(data_path, bundle_path, TrainConfig(steps=20))["states"] == 1
    estimate = stages.evaluate_stage(data_path, bundle_path, EstimatorConfig(kind=EstimatorKind.DR))
    assert estimate["kind"] == "dr"
    deployed = stages.deploy(
        stages.env_path_for(data_path),
        bundle_path,
        SwitcherKind.STATIONARY,
        seed=1,
        trace_path=tmp_path / "trace.jsonl",
        config=DeployConfig(horizon=100, latent_shift=10),
    )
    assert deployed["horizon"] == 100
    assert "occupancy_gap" in deployed


def test_evaluate_single_policy_document(tmp_path, generated):
    data_path, _ = generated
    policy_path = tmp_path / "policy.json"
    write_document(PolicyDocument.from_policy(SoftmaxPolicy(np.zeros(3), stages.infer_feature_map(read_logged_data(data_path)))), policy_path)
    estimate = stages.evaluate_stage(data_path, policy_path, EstimatorConfig())
    assert estimate["per_state"].keys() == {"1"}


def test_stage_errors(tmp_path, generated):
    data_path, _ = generated
    with pytest.raises(DataError):
        stages.evaluate_stage(data_path, tmp_path / "missing.json", EstimatorConfig())
    bad = tmp_path / "bad.json"
    bad.write_text("not json")
    with pytest.raises(DataError):
        stages.evaluate_stage(data_path, bad, EstimatorConfig())

    labels = tmp_path / "short.jsonl"
    labels.write_text(json.dumps({"t": 1, "label": 1}) + "\n")
    with pytest.raises(DataError):
        stages.learn(data_path, tmp_path / "b.json", TrainConfig(steps=5), labels_path=labels)

    bundle = PolicyBundle.uniform(stages.infer_feature_map(read_logged_data(data_path)), 2)
    with pytest.raises(ConfigurationError):
        stages.build_switcher(SwitcherKind.POSTERIOR, bundle, 100, 3)
    with pytest.raises(ConfigurationError):
        stages.build_switcher(SwitcherKind.STATIONARY, bundle, 100, 3)


def test_build_switcher_overrides(generated):
    data_path, _ = generated
    bundle = PolicyBundle.uniform(stages.infer_feature_map(read_logged_data(data_path)), 2)
    switcher = stages.build_switcher(SwitcherKind.EXP4S, bundle, 100, 3, config=DeployConfig(eta=0.3, beta=0.0))
    assert (switcher.eta, switcher.beta, switcher.gamma) == (0.3, 0.0, 0.0)


def test_infer_feature_map(helpers):
    data = helpers.make_dataset([0, 2], [1.0, 0.0], [0.5, 0.5], contexts=[0, 4])
    feature_map = stages.infer_feature_map(data)
    assert (feature_map.n_actions, feature_map.n_contexts) == (3, 5)
    assert stages.infer_feature_map(data, n_actions=6).n_actions == 6
    with pytest.raises(DataError):
        stages.infer_feature_map(data, n_actions=2)
    dense = helpers.make_dataset([0], [1.0], [0.5], contexts=[[0.1, 0.2, 0.3]])
    feature_map = stages.infer_feature_map(dense)
    assert feature_map.mode == FeatureMode.DENSE
    assert (feature_map.n_actions, feature_map.context_dim) == (2, 3)
