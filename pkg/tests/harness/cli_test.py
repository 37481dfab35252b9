import json

import pytest
from click.testing import CliRunner

from driftopt.cli import main


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def logged(runner, tmp_path):
    config = tmp_path / "config.json"
    config.write_text(json.dumps({"env": {"n_actions": 3, "n_states": 2, "horizon": 400, "period": 100, "noise_sigma": 0.1}}))
    out = tmp_path / "log.txt"
    result = runner.invoke(main, ["generate", "--config", str(config), "--seed", "5", "--out", str(out)])
    assert result.exit_code == 0, result.output
    return out


def test_generate_prints_summary(runner, tmp_path):
    out = tmp_path / "g.txt"
    result = runner.invoke(main, ["generate", "--out", str(out), "--horizon", "50", "--period", "10"])
    assert result.exit_code == 0
    assert "Generated synthetic log" in result.output
    assert "rounds" in result.output
    assert (tmp_path / "g.env.json").exists()


def test_detect_learn_evaluate_deploy(runner, logged, tmp_path):
    labels = tmp_path / "labels.jsonl"
    result = runner.invoke(main, ["detect", "--data", str(logged), "--w", "25", "--c", "0.3", "--k", "2", "--out", str(labels)])
    assert result.exit_code == 0, result.output

    bundle = tmp_path / "bundle.json"
    result = runner.invoke(
        main,
        ["learn", "--data", str(logged), "--labels", str(labels), "--M", "20", "--tau", "0.05", "--steps", "50", "--out", str(bundle)],
    )
    assert result.exit_code == 0, result.output

    result = runner.invoke(main, ["evaluate", "--data", str(logged), "--policy", str(bundle), "--labels", str(labels), "--kind", "dm"])
    assert result.exit_code == 0, result.output
    assert "Off-policy estimate" in result.output

    trace = tmp_path / "trace.jsonl"
    env = tmp_path / "log.env.json"
    result = runner.invoke(
        main,
        ["deploy", "--env", str(env), "--bundle", str(bundle), "--trace", str(trace), "--horizon", "80", "--eta", "0.2"],
    )
    assert result.exit_code == 0, result.output
    assert len(trace.read_text().splitlines()) == 80


def test_fit_hmm(runner, logged, tmp_path):
    hmm = tmp_path / "hmm.json"
    labels = tmp_path / "hmm.jsonl"
    result = runner.invoke(
        main,
        ["fit-hmm", "--data", str(logged), "--L", "2", "--iters", "5", "--restarts", "1", "--out", str(hmm), "--labels-out", str(labels)],
    )
    assert result.exit_code == 0, result.output
    assert hmm.exists() and labels.exists()


def test_library_errors_exit_with_one(runner, logged, tmp_path):
    bundle = tmp_path / "bundle.json"
    bundle.write_text("{}")
    result = runner.invoke(main, ["evaluate", "--data", str(logged), "--policy", str(bundle)])
    assert result.exit_code == 1
    assert "Error:" in result.output


def test_delta_options_go_together(runner, logged, tmp_path):
    result = runner.invoke(main, ["detect", "--data", str(logged), "--k", "2", "--delta", "0.1", "--out", str(tmp_path / "l")])
    assert result.exit_code == 2
    assert "go together" in result.output


def test_experiment_and_report(runner, tmp_path):
    config = tmp_path / "config.json"
    config.write_text(
        json.dumps(
            {
                "env": {"n_actions": 3, "n_states": 2, "horizon": 400, "period": 100},
                "train": {"steps": 20},
                "hmm": {"n_states": 2, "restarts": 1, "max_iters": 5},
                "deploy": {"horizon": 200},
            }
        )
    )
    out = tmp_path / "out"
    result = runner.invoke(
        main,
        ["experiment", "--config", str(config), "--seeds", "0", "--methods", "ips,k-cd", "--k", "2", "--w", "25", "--output-dir", str(out)],
    )
    assert result.exit_code == 0, result.output
    assert "mean reward" in result.output
    assert (out / "rows.csv").exists()

    rebuilt = tmp_path / "rebuilt"
    result = runner.invoke(main, ["report", "--rows", str(out / "rows.csv"), "--output-dir", str(rebuilt)])
    assert result.exit_code == 0, result.output
    assert (rebuilt / "aggregate.csv").read_text() == (out / "aggregate.csv").read_text()


def test_experiment_rejects_unknown_method(runner):
    result = runner.invoke(main, ["experiment", "--methods", "ucb"])
    assert result.exit_code == 2
