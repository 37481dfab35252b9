import json

import pytest

from driftopt.envgen.environment import EnvConfig
from driftopt.tools import GenerateBanditLogTool


@pytest.fixture
def output_dir(tmp_path, monkeypatch):
    monkeypatch.setenv("DRIFTOPT_OUTPUT_DIR", str(tmp_path))
    return tmp_path


@pytest.fixture
def generated(output_dir):
    tool = GenerateBanditLogTool(env_config=EnvConfig(n_actions=3, n_states=2, horizon=400, period=100, noise_sigma=0.1))
    return json.loads(tool._run(seed=2, out="log.txt"))
