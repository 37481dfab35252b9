import json
from pathlib import Path

from driftopt.tools import GenerateBanditLogTool


def test_generate_under_output_dir(generated, output_dir):
    assert Path(generated["data"]) == output_dir / "log.txt"
    assert Path(generated["env"]).exists()
    assert generated["rounds"] == 400


def test_argument_overrides(output_dir):
    tool = GenerateBanditLogTool()
    result = json.loads(tool.run(seed=1, out="short.txt", horizon=50, period=10, n_actions=2, n_states=2))
    assert result["rounds"] == 50
    assert result["segments"] == 5


def test_explicit_output_dir(tmp_path):
    tool = GenerateBanditLogTool(output_dir=str(tmp_path / "explicit"))
    result = json.loads(tool._run(horizon=20, period=5))
    assert Path(result["data"]).parent == tmp_path / "explicit"


def test_invalid_settings_return_an_error(output_dir):
    result = GenerateBanditLogTool()._run(horizon=0)
    assert result.startswith("Error:")


def test_declares_output_dir_env_var():
    assert [var.name for var in GenerateBanditLogTool().env_vars] == ["DRIFTOPT_OUTPUT_DIR"]
