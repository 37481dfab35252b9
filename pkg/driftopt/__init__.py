from .changepoint import DetectorConfig, cluster_segments, detect_change_points
from .core import (
    ConfigurationError,
    DataError,
    DriftoptError,
    FeatureMap,
    InputError,
    LatentSequence,
    LoggedDataset,
    LoggedInteraction,
    SoftmaxPolicy,
    make_rng,
)
from .deploy import (
    DeployConfig,
    Exp4sSwitcher,
    OracleSwitcher,
    PosteriorSwitcher,
    StationarySwitcher,
    run_deployment,
)
from .envgen import EnvConfig, EnvSpec, generate_synthetic_env, simulate_log, true_value
from .estimators import EstimatorConfig, evaluate, ips_estimate, partitioned_ips_estimate
from .harness import ExperimentConfig, emit_report, run_experiment
from .hmm import HmmFitConfig, HmmParams, fit_hmm, forward_backward, smooth_labels
from .learner import PolicyBundle, TrainConfig, train_stationary_baseline, train_sub_policies
from .tools import (
    DeployPoliciesTool,
    DetectChangePointsTool,
    EvaluatePolicyTool,
    FitHmmTool,
    GenerateBanditLogTool,
    LearnPoliciesTool,
    RunExperimentTool,
)
