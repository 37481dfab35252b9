from driftopt.hmm.fitting import HmmFitConfig, HmmFitResult, fit_hmm, restart_offsets
from driftopt.hmm.inference import PosteriorTable, forward_backward, smooth_labels
from driftopt.hmm.model import (
    HmmDocument,
    HmmParams,
    data_log_density,
    emission_density,
    emission_log_density,
    load_hmm,
    predict_reward,
    save_hmm,
)

__all__ = [
    "HmmDocument",
    "HmmFitConfig",
    "HmmFitResult",
    "HmmParams",
    "PosteriorTable",
    "data_log_density",
    "emission_density",
    "emission_log_density",
    "fit_hmm",
    "forward_backward",
    "load_hmm",
    "predict_reward",
    "restart_offsets",
    "save_hmm",
    "smooth_labels",
]
