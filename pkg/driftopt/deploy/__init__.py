from driftopt.deploy.exp4s import (
    ExpertDraw,
    Exp4sState,
    exp4s_costs,
    exp4s_hyperparams,
    exp4s_mixture,
    exp4s_step,
    exp4s_update,
)
from driftopt.deploy.posterior import (
    PosteriorSamplerState,
    filter_posteriors,
    posterior_sample_step,
    posterior_update,
    posterior_update_from_log_likelihood,
)
from driftopt.deploy.runner import DeployConfig, DeploymentTrace, deployment_labels, run_deployment
from driftopt.deploy.switchers import (
    Exp4sSwitcher,
    OracleSwitcher,
    PosteriorSwitcher,
    StationarySwitcher,
    Switcher,
    SwitcherKind,
)

__all__ = [
    "DeployConfig",
    "DeploymentTrace",
    "Exp4sState",
    "Exp4sSwitcher",
    "ExpertDraw",
    "OracleSwitcher",
    "PosteriorSamplerState",
    "PosteriorSwitcher",
    "StationarySwitcher",
    "Switcher",
    "SwitcherKind",
    "deployment_labels",
    "exp4s_costs",
    "exp4s_hyperparams",
    "exp4s_mixture",
    "exp4s_step",
    "exp4s_update",
    "filter_posteriors",
    "posterior_sample_step",
    "posterior_update",
    "posterior_update_from_log_likelihood",
    "run_deployment",
]
