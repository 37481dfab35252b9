import pytest

from driftopt.deploy.runner import DeployConfig
from driftopt.envgen.environment import EnvConfig
from driftopt.harness.config import DetectorSettings, ExperimentConfig
from driftopt.hmm.fitting import HmmFitConfig
from driftopt.learner.training import TrainConfig


@pytest.fixture
def tiny_env_config():
    return EnvConfig(n_actions=3, n_states=2, horizon=600, period=200, noise_sigma=0.1)


@pytest.fixture
def tiny_config(tmp_path, tiny_env_config):
    return ExperimentConfig(
        env=tiny_env_config,
        k_values=[2],
        seeds=[1],
        train=TrainConfig(steps=50),
        detector=DetectorSettings(w=50),
        hmm=HmmFitConfig(n_states=2, restarts=1, max_iters=10),
        deploy=DeployConfig(horizon=300),
        output_dir=tmp_path / "out",
        max_workers=2,
    )
