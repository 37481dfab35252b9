import logging
import sys
from functools import wraps
from pathlib import Path

import click
from pydantic import ValidationError

from driftopt.core.exceptions import DriftoptError
from driftopt.deploy.runner import DeployConfig
from driftopt.deploy.switchers import SwitcherKind
from driftopt.envgen.environment import EnvConfig
from driftopt.estimators.ope import EstimatorConfig, EstimatorKind
from driftopt.harness import stages
from driftopt.harness.config import ExperimentConfig, Method, default_output_dir
from driftopt.hmm.fitting import HmmFitConfig
from driftopt.learner.objective import ObjectiveKind
from driftopt.learner.training import TrainConfig
from driftopt.printer import Printer

PathArg = click.Path(path_type=Path)
ExistingPath = click.Path(exists=True, dir_okay=False, path_type=Path)


def _csv_list(cast):
    def parse(ctx, param, value):
        if value is None:
            return None
        try:
            return [cast(v.strip()) for v in value.split(",") if v.strip()]
        except ValueError as e:
            raise click.BadParameter(str(e)) from e

    return parse


def _stage(title: str):
    """Run a stage command, print its summary and turn library errors into exit code 1."""

    def decorator(func):
        @wraps(func)
        def wrapper(*args, **kwargs):
            try:
                summary = func(*args, **kwargs)
            except (DriftoptError, ValidationError) as e:
                Printer.error(str(e))
                sys.exit(1)
            Printer.summary(title, summary)
            return summary

        return wrapper

    return decorator


@click.group()
@click.option("--verbose", "-v", count=True, help="-v for info, -vv for debug logging.")
def main(verbose: int) -> None:
    """Off-policy optimization for piecewise-stationary bandits."""
    level = {0: logging.WARNING, 1: logging.INFO}.get(verbose, logging.DEBUG)
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s")


@main.command()
@click.option("--config", "config_path", type=ExistingPath, help="Experiment config whose env section is used.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=PathArg, required=True, help="Logged data file; the env is written next to it.")
@click.option("--horizon", type=int, help="Override env.horizon.")
@click.option("--period", type=int, help="Override env.period.")
@_stage("Generated synthetic log")
def generate(config_path, seed, out, horizon, period):
    """Generate a synthetic environment and its logged data."""
    env = ExperimentConfig.from_file(config_path).env if config_path else EnvConfig()
    updates = {k: v for k, v in {"horizon": horizon, "period": period}.items() if v is not None}
    return stages.generate(EnvConfig.model_validate({**env.model_dump(), **updates}), seed, out)


@main.command()
@click.option("--data", type=ExistingPath, required=True)
@click.option("--w", type=int, default=4000, show_default=True, help="Window size.")
@click.option("--c", type=float, help="Detection threshold; defaults to sqrt(2 log(8T^2)/w).")
@click.option("--delta-lower", type=float, help="Lower bound on the change magnitude (with --delta).")
@click.option("--delta", type=float, help="Failure probability (with --delta-lower).")
@click.option("--k", type=int, required=True, help="Number of latent states after clustering.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=PathArg, required=True, help="Labels file (JSON lines).")
@_stage("Detected change points")
def detect(data, w, c, delta_lower, delta, k, seed, out):
    """Label rounds with the sliding-window change-point detector."""
    if (delta_lower is None) != (delta is None):
        raise click.UsageError("--delta-lower and --delta go together")
    return stages.detect(data, w, k, out, c=c, delta_lower=delta_lower, delta=delta, seed=seed)


@main.command("fit-hmm")
@click.option("--data", type=ExistingPath, required=True)
@click.option("--L", "n_states", type=int, required=True, help="Number of latent states.")
@click.option("--iters", type=int, default=100, show_default=True)
@click.option("--tol", type=float, default=1e-6, show_default=True)
@click.option("--restarts", type=int, default=10, show_default=True)
@click.option("--per-state-sigma", is_flag=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=PathArg, required=True, help="HMM parameter document.")
@click.option("--labels-out", type=PathArg, help="Also write smoothed labels here.")
@_stage("Fitted HMM")
def fit_hmm(data, n_states, iters, tol, restarts, per_state_sigma, seed, out, labels_out):
    """Fit the latent-state HMM with EM."""
    config = HmmFitConfig(
        n_states=n_states, max_iters=iters, tol=tol, restarts=restarts, per_state_sigma=per_state_sigma
    )
    return stages.fit_hmm_stage(data, config, out, seed=seed, labels_out=labels_out)


@main.command()
@click.option("--data", type=ExistingPath, required=True)
@click.option("--labels", type=ExistingPath, help="Latent labels; omit for a stationary policy.")
@click.option("--M", "clip", type=float, default=100.0, show_default=True)
@click.option("--tau", type=float, default=0.01, show_default=True)
@click.option("--kind", type=click.Choice([k.value for k in ObjectiveKind]), default="ips", show_default=True)
@click.option("--steps", type=int, default=2000, show_default=True)
@click.option("--var-penalty", type=float, default=1.0, show_default=True)
@click.option("--n-actions", type=int, help="Action count when the log does not show every action.")
@click.option("--out", type=PathArg, required=True, help="Bundle document.")
@_stage("Learned policies")
def learn(data, labels, clip, tau, kind, steps, var_penalty, n_actions, out):
    """Learn one sub-policy per latent state."""
    config = TrainConfig(M=clip, tau=tau, objective=kind, steps=steps, var_penalty=var_penalty)
    return stages.learn(data, out, config, labels_path=labels, n_actions=n_actions)


@main.command()
@click.option("--data", type=ExistingPath, required=True)
@click.option("--policy", type=ExistingPath, required=True, help="Policy or bundle document.")
@click.option("--labels", type=ExistingPath)
@click.option("--M", "clip", type=float, default=float("inf"), show_default=True)
@click.option("--kind", type=click.Choice([k.value for k in EstimatorKind]), default="ips", show_default=True)
@_stage("Off-policy estimate")
def evaluate(data, policy, labels, clip, kind):
    """Estimate a policy's value from logged data."""
    return stages.evaluate_stage(data, policy, EstimatorConfig(M=clip, kind=kind), labels_path=labels)


@main.command()
@click.option("--env", "env_path", type=ExistingPath, required=True)
@click.option("--bundle", type=ExistingPath, required=True)
@click.option("--switcher", type=click.Choice([k.value for k in SwitcherKind]), default="exp4s", show_default=True)
@click.option("--hmm", "hmm_path", type=ExistingPath, help="Fitted HMM for the posterior switcher.")
@click.option("--horizon", type=int)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--latent-shift", type=int, default=0, show_default=True)
@click.option("--eta", type=float)
@click.option("--beta", type=float)
@click.option("--gamma", type=float)
@click.option("--trace", type=PathArg, required=True, help="Per-round trace (JSON lines).")
@_stage("Deployment")
def deploy(env_path, bundle, switcher, hmm_path, horizon, seed, latent_shift, eta, beta, gamma, trace):
    """Deploy a bundle online against a saved environment."""
    config = DeployConfig(horizon=horizon, latent_shift=latent_shift, eta=eta, beta=beta, gamma=gamma)
    return stages.deploy(env_path, bundle, SwitcherKind(switcher), seed, trace, config=config, hmm_path=hmm_path)


@main.command()
@click.option("--config", "config_path", type=ExistingPath, help="Experiment config (JSON).")
@click.option("--desk-scale", is_flag=True, help="Start from the reduced T=20,000 configuration.")
@click.option("--seeds", callback=_csv_list(int), help="Comma-separated seeds.")
@click.option("--methods", callback=_csv_list(Method), help="Comma-separated methods.")
@click.option("--k", "k_values", callback=_csv_list(int), help="Comma-separated k values.")
@click.option("--horizon", type=int, help="Override env.horizon.")
@click.option("--period", type=int, help="Override env.period.")
@click.option("--w", type=int, help="Override detector.w.")
@click.option("--latent-shift", type=int, help="Override deploy.latent_shift.")
@click.option("--output-dir", type=PathArg, help=f"Defaults to $DRIFTOPT_OUTPUT_DIR or {default_output_dir()}.")
@click.option("--max-workers", type=int)
def experiment(config_path, desk_scale, seeds, methods, k_values, horizon, period, w, latent_shift, output_dir, max_workers):
    """Run the synthetic benchmark and write the report."""
    try:
        if config_path:
            config = ExperimentConfig.from_file(config_path)
        else:
            config = ExperimentConfig.desk_scale() if desk_scale else ExperimentConfig()
        config = config.with_overrides(
            seeds=seeds,
            methods=[m.value for m in methods] if methods else None,
            k_values=k_values,
            output_dir=str(output_dir) if output_dir else None,
            max_workers=max_workers,
            **{
                "env.horizon": horizon,
                "env.period": period,
                "detector.w": w,
                "deploy.latent_shift": latent_shift,
            },
        )
        summary = stages.experiment(config)
    except DriftoptError as e:
        Printer.error(str(e))
        sys.exit(1)
    Printer.print(Path(summary["report"]).read_text())
    if not summary["all_succeeded"]:
        Printer.print(f"{summary['failed']} of {summary['rows']} tasks failed", "red")
        sys.exit(1)
    Printer.summary("Experiment", summary)


@main.command()
@click.option("--rows", type=ExistingPath, required=True, help="rows.csv from an experiment.")
@click.option("--output-dir", type=PathArg, required=True)
@_stage("Report")
def report(rows, output_dir):
    """Rebuild the aggregate report from a rows file."""
    summary = stages.report(rows, output_dir)
    Printer.print(Path(summary["report"]).read_text())
    return summary


if __name__ == "__main__":
    main()
