"""Synthetic benchmark: generate, estimate latent states, learn, deploy and report."""

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import cache

import numpy as np

from driftopt.changepoint.clustering import cluster_segments
from driftopt.changepoint.detector import DetectorConfig, detect_change_points, experiment_threshold
from driftopt.core.data import LoggedDataset
from driftopt.core.exceptions import DriftoptError
from driftopt.core.rng import make_rng
from driftopt.deploy.exp4s import exp4s_hyperparams
from driftopt.deploy.runner import DeploymentTrace, deployment_labels, run_deployment
from driftopt.deploy.switchers import Exp4sSwitcher, PosteriorSwitcher, StationarySwitcher
from driftopt.envgen.environment import EnvSpec, generate_synthetic_env, simulate_log
from driftopt.estimators.ope import evaluate
from driftopt.harness.config import ExperimentConfig, Method
from driftopt.harness.report import ReportFiles, ReportRow, emit_report
from driftopt.hmm.fitting import fit_hmm
from driftopt.hmm.inference import smooth_labels
from driftopt.learner.objective import ObjectiveKind
from driftopt.learner.training import PolicyBundle, train_stationary_baseline, train_sub_policies

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SeedSetup:
    seed: int
    env: EnvSpec
    data: LoggedDataset


@dataclass(frozen=True)
class ExperimentResult:
    rows: list[ReportRow]
    files: ReportFiles | None

    @property
    def all_succeeded(self) -> bool:
        return all(row.ok for row in self.rows)


def setup_seed(config: ExperimentConfig, seed: int) -> SeedSetup:
    env = generate_synthetic_env(make_rng(seed, "env"), config.env)
    data = simulate_log(env, make_rng(seed, "log"))
    return SeedSetup(seed=seed, env=env, data=data)


def _deploy(config: ExperimentConfig, setup: SeedSetup, bundle: PolicyBundle, switcher) -> DeploymentTrace:
    # Every method of a seed deploys on the same noise and uniform draws.
    labels = deployment_labels(setup.env, config.deploy.horizon, config.deploy.latent_shift)
    return run_deployment(
        setup.env,
        bundle,
        switcher,
        make_rng(setup.seed, "deploy"),
        latent_override=labels if config.deploy.latent_shift else None,
        horizon=len(labels),
        record_snapshots=False,
    )


def run_baseline(config: ExperimentConfig, setup: SeedSetup, method: Method) -> DeploymentTrace:
    train = config.train.model_copy(update={"objective": ObjectiveKind(method.value)})
    policy, _ = train_stationary_baseline(setup.data, setup.env.feature_map, train)
    estimate = evaluate(setup.data, policy, config.estimator).total / len(setup.data)
    logger.info(f"Seed {setup.seed} {method.value}: offline estimate {estimate:.4f}")
    return _deploy(config, setup, PolicyBundle.stationary(policy), StationarySwitcher(policy))


def run_change_point(config: ExperimentConfig, setup: SeedSetup, k: int) -> DeploymentTrace:
    T = len(setup.data)
    w = config.detector.w
    c = config.detector.c or experiment_threshold(T, w)
    detection = detect_change_points(setup.data.rewards, DetectorConfig(w=w, c=c))
    labels = cluster_segments(setup.data, detection.labels, k, seed=setup.seed)
    bundle = train_sub_policies(setup.data, labels, setup.env.feature_map, config.train)
    eta, beta, gamma = exp4s_hyperparams(T, detection.num_segments, setup.env.n_actions, labels.n_states)
    switcher = Exp4sSwitcher(
        eta=config.deploy.eta or eta,
        beta=config.deploy.beta if config.deploy.beta is not None else beta,
        gamma=config.deploy.gamma if config.deploy.gamma is not None else gamma,
    )
    return _deploy(config, setup, bundle, switcher)


def run_hmm(config: ExperimentConfig, setup: SeedSetup, k: int) -> DeploymentTrace:
    fit_config = config.hmm.model_copy(update={"n_states": k})
    fit = fit_hmm(setup.data, setup.env.feature_map, fit_config, make_rng(setup.seed, f"hmm-{k}"))
    labels, _ = smooth_labels(fit.params, setup.data)
    bundle = train_sub_policies(setup.data, labels, setup.env.feature_map, config.train)
    return _deploy(config, setup, bundle, PosteriorSwitcher(fit.params))


def _tasks(config: ExperimentConfig) -> list[tuple[int, Method, int]]:
    tasks = []
    for seed in config.seeds:
        for method in config.methods:
            for k in config.k_values if method.is_latent else [1]:
                tasks.append((seed, method, k))
    return tasks


def run_experiment(config: ExperimentConfig, write_report: bool = True) -> ExperimentResult:
    """Run every (seed, method, k) task; a failing task becomes a failed row.

    Rows report the mean of the analytic per-round expected reward of the deployed mixtures.
    """

    @cache
    def setup(seed: int) -> SeedSetup:
        return setup_seed(config, seed)

    def run(task: tuple[int, Method, int]) -> ReportRow:
        seed, method, k = task
        start = time.perf_counter()
        try:
            if method == Method.K_CD:
                trace = run_change_point(config, setup(seed), k)
            elif method == Method.K_HMM:
                trace = run_hmm(config, setup(seed), k)
            else:
                trace = run_baseline(config, setup(seed), method)
        except (DriftoptError, np.linalg.LinAlgError, ValueError) as e:
            logger.error(f"Seed {seed} {method.value} k={k} failed: {e}")
            return ReportRow(
                method=method.value, k=k, seed=seed, status="failed",
                wall_clock=time.perf_counter() - start, error=str(e),
            )
        return ReportRow(
            method=method.value,
            k=k,
            seed=seed,
            mean_reward=trace.mean_expected_reward,
            regret=trace.regret,
            wall_clock=time.perf_counter() - start,
        )

    for seed in config.seeds:
        setup(seed)
    with ThreadPoolExecutor(max_workers=config.max_workers) as executor:
        rows = list(executor.map(run, _tasks(config)))

    files = emit_report(rows, config.output_dir) if write_report else None
    result = ExperimentResult(rows=rows, files=files)
    failed = sum(not row.ok for row in rows)
    if failed:
        logger.warning(f"{failed} of {len(rows)} experiment tasks failed")
    return result
