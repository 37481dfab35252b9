"""Pipeline stages shared by the command line and the agent tools.

Each stage reads its inputs from files, writes its outputs to files and
returns a JSON-compatible summary.
"""

import json
import logging
from pathlib import Path

from driftopt.changepoint.clustering import cluster_segments
from driftopt.changepoint.detector import DetectorConfig, detect_change_points, experiment_threshold
from driftopt.core.data import LoggedDataset
from driftopt.core.exceptions import ConfigurationError, DataError
from driftopt.core.features import FeatureMap, FeatureMode
from driftopt.core.io import (
    PolicyDocument,
    read_document,
    read_labels,
    read_logged_data,
    write_labels,
    write_logged_data,
)
from driftopt.core.policy import SoftmaxPolicy
from driftopt.core.rng import make_rng
from driftopt.deploy.exp4s import exp4s_hyperparams
from driftopt.deploy.runner import DeployConfig, deployment_labels, run_deployment
from driftopt.deploy.switchers import (
    Exp4sSwitcher,
    OracleSwitcher,
    PosteriorSwitcher,
    StationarySwitcher,
    Switcher,
    SwitcherKind,
)
from driftopt.envgen.environment import EnvConfig, generate_synthetic_env, load_env, optimal_value, save_env, simulate_log
from driftopt.estimators.ope import EstimatorConfig, evaluate
from driftopt.harness.config import ExperimentConfig
from driftopt.harness.experiment import run_experiment
from driftopt.harness.report import emit_report, read_rows
from driftopt.hmm.fitting import HmmFitConfig, fit_hmm
from driftopt.hmm.inference import smooth_labels
from driftopt.hmm.model import load_hmm, save_hmm
from driftopt.learner.training import (
    PolicyBundle,
    TrainConfig,
    load_bundle,
    save_bundle,
    train_stationary_baseline,
    train_sub_policies,
)

logger = logging.getLogger(__name__)


def env_path_for(data_path: str | Path) -> Path:
    """Where ``generate`` stores the environment next to a log file."""
    data_path = Path(data_path)
    return data_path.with_name(f"{data_path.stem}.env.json")


def infer_feature_map(data: LoggedDataset, n_actions: int | None = None) -> FeatureMap:
    """Feature map for a log file: one-hot over (context id, action) or action blocks over dense contexts."""
    observed = int(data.actions.max()) + 1 if len(data) else 2
    if n_actions is not None and n_actions < observed:
        raise DataError(f"Log uses {observed} actions but n_actions is {n_actions}")
    K = max(n_actions or observed, 2)
    if data.is_dense:
        return FeatureMap(mode=FeatureMode.DENSE, n_actions=K, context_dim=data.contexts.shape[1])
    n_contexts = int(data.contexts.max()) + 1 if len(data) else 1
    return FeatureMap(n_actions=K, n_contexts=n_contexts)


def generate(config: EnvConfig, seed: int, out: str | Path) -> dict:
    env = generate_synthetic_env(make_rng(seed, "env"), config)
    data = simulate_log(env, make_rng(seed, "log"))
    write_logged_data(data, out)
    env_path = env_path_for(out)
    save_env(env, env_path)
    return {
        "data": str(out),
        "env": str(env_path),
        "rounds": len(data),
        "segments": env.schedule.num_segments,
        "mean_logged_reward": float(data.rewards.mean()),
        "optimal_mean_reward": optimal_value(env) / env.horizon,
    }


def detect(
    data_path: str | Path,
    w: int,
    k: int,
    out: str | Path,
    c: float | None = None,
    delta_lower: float | None = None,
    delta: float | None = None,
    seed: int = 0,
) -> dict:
    """Change-point labels: detect segments, then cluster them into ``k`` states."""
    data = read_logged_data(data_path)
    T = len(data)
    if c is None:
        if delta_lower is not None and delta is not None:
            config = DetectorConfig.from_theorem(T, delta_lower, delta)
        else:
            config = DetectorConfig(w=w, c=experiment_threshold(T, w))
    else:
        config = DetectorConfig(w=w, c=c)
    detection = detect_change_points(data.rewards, config)
    labels = cluster_segments(data, detection.labels, k, seed=seed)
    write_labels(labels, out)
    return {
        "labels": str(out),
        "w": config.w,
        "c": config.c,
        "change_points": [int(t) + 1 for t in detection.change_points],
        "segments": detection.num_segments,
        "states": labels.n_states,
    }


def fit_hmm_stage(data_path: str | Path, config: HmmFitConfig, out: str | Path, seed: int = 0, labels_out: str | Path | None = None) -> dict:
    data = read_logged_data(data_path)
    feature_map = infer_feature_map(data)
    result = fit_hmm(data, feature_map, config, make_rng(seed, f"hmm-{config.n_states}"))
    save_hmm(result.params, out, result.log_likelihood)
    summary = {
        "hmm": str(out),
        "log_likelihood": result.log_likelihood,
        "iterations": result.n_iter,
        "converged": result.converged,
        "restart": result.restart + 1,
    }
    if labels_out is not None:
        labels, _ = smooth_labels(result.params, data)
        write_labels(labels, labels_out)
        summary["labels"] = str(labels_out)
    return summary


def learn(data_path: str | Path, out: str | Path, config: TrainConfig, labels_path: str | Path | None = None, n_actions: int | None = None) -> dict:
    """Train a sub-policy bundle; without labels the bundle holds one stationary policy."""
    data = read_logged_data(data_path)
    feature_map = infer_feature_map(data, n_actions)
    if labels_path is None:
        labels = None
    else:
        labels = read_labels(labels_path)
        if len(labels) != len(data):
            raise DataError(f"{labels_path} has {len(labels)} labels for {len(data)} rounds")
    if labels is None:
        policy, _ = train_stationary_baseline(data, feature_map, config)
        bundle = PolicyBundle.stationary(policy)
    else:
        bundle = train_sub_policies(data, labels, feature_map, config)
    save_bundle(bundle, out)
    return {
        "bundle": str(out),
        "states": bundle.n_states,
        "objective": config.objective.value,
        "final_objective": {
            str(z + 1): curve.values[-1] / max(curve.n_rounds, 1)
            for z, curve in bundle.diagnostics.items()
            if curve.values
        },
    }


def _load_target(policy_path: str | Path) -> PolicyBundle | SoftmaxPolicy:
    path = Path(policy_path)
    if not path.exists():
        raise DataError(f"Policy file not found: {path}")
    try:
        document = json.loads(path.read_text())
    except json.JSONDecodeError as e:
        raise DataError(f"Invalid policy file {path}: {e}") from e
    if "policies" in document:
        return load_bundle(path)
    return read_document(PolicyDocument, path).to_policy()


def evaluate_stage(data_path: str | Path, policy_path: str | Path, config: EstimatorConfig, labels_path: str | Path | None = None) -> dict:
    data = read_logged_data(data_path)
    target = _load_target(policy_path)
    labels = read_labels(labels_path) if labels_path is not None else None
    if isinstance(target, PolicyBundle) and labels is None:
        if target.n_states != 1:
            raise ConfigurationError("Evaluating a multi-state bundle requires --labels")
        target = target[0]
    estimate = evaluate(data, target, config, labels)
    return {
        "kind": config.kind.value,
        "M": config.M,
        "value": estimate.total,
        "mean_value": estimate.total / len(data),
        "per_state": {str(z + 1): v for z, v in estimate.per_state.items()},
    }


def build_switcher(
    kind: SwitcherKind,
    bundle: PolicyBundle,
    horizon: int,
    n_actions: int,
    hmm_path: str | Path | None = None,
    segments: int = 1,
    config: DeployConfig | None = None,
) -> Switcher:
    config = config or DeployConfig()
    if kind == SwitcherKind.EXP4S:
        eta, beta, gamma = exp4s_hyperparams(horizon, segments, n_actions, bundle.n_states)
        return Exp4sSwitcher(
            eta=config.eta or eta,
            beta=config.beta if config.beta is not None else beta,
            gamma=config.gamma if config.gamma is not None else gamma,
        )
    if kind == SwitcherKind.POSTERIOR:
        if hmm_path is None:
            raise ConfigurationError("The posterior switcher needs a fitted HMM (--hmm)")
        return PosteriorSwitcher(load_hmm(hmm_path))
    if kind == SwitcherKind.STATIONARY:
        if bundle.n_states != 1:
            raise ConfigurationError("The stationary switcher needs a single-policy bundle")
        return StationarySwitcher(bundle[0])
    return OracleSwitcher()


def deploy(
    env_path: str | Path,
    bundle_path: str | Path,
    kind: SwitcherKind,
    seed: int,
    trace_path: str | Path,
    config: DeployConfig | None = None,
    hmm_path: str | Path | None = None,
) -> dict:
    config = config or DeployConfig()
    env = load_env(env_path)
    bundle = load_bundle(bundle_path)
    labels = deployment_labels(env, config.horizon, config.latent_shift)
    switcher = build_switcher(
        kind,
        bundle,
        len(labels),
        env.n_actions,
        hmm_path=hmm_path,
        segments=labels.num_segments,
        config=config,
    )
    trace = run_deployment(
        env,
        bundle,
        switcher,
        make_rng(seed, f"deploy-{kind.value}"),
        horizon=len(labels),
        latent_override=labels if config.latent_shift else None,
        record_snapshots=config.record_snapshots,
    )
    trace.write(trace_path)
    return {"trace": str(trace_path), **trace.summary()}


def experiment(config: ExperimentConfig) -> dict:
    result = run_experiment(config)
    return {
        "output_dir": str(config.output_dir),
        "rows": len(result.rows),
        "failed": sum(not row.ok for row in result.rows),
        "report": str(result.files.text),
        "all_succeeded": result.all_succeeded,
    }


def report(rows_path: str | Path, output_dir: str | Path) -> dict:
    rows = read_rows(rows_path)
    files = emit_report(rows, output_dir)
    return {"rows": len(rows), "report": str(files.text), "aggregate": str(files.aggregate)}
