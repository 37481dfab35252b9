import json
import logging
from typing import Any, List, Optional, Type

from crewai.tools import BaseTool, EnvVar
from pydantic import BaseModel, Field, ValidationError

from driftopt.core.exceptions import DriftoptError
from driftopt.harness import stages
from driftopt.harness.config import OUTPUT_DIR_ENV, output_path
from driftopt.hmm.fitting import HmmFitConfig

logger = logging.getLogger(__name__)


class FitHmmToolSchema(BaseModel):
    """Input for FitHmmTool."""

    data: str = Field(..., description="Logged data file")
    n_states: int = Field(..., ge=1, description="Number of latent states")
    out: str = Field("hmm.json", description="Fitted HMM document")
    labels_out: Optional[str] = Field("hmm_labels.jsonl", description="Smoothed labels file; null to skip")


class FitHmmTool(BaseTool):
    name: str = "Fit latent-state HMM to a bandit log"
    description: str = (
        "Fits a hidden Markov model with linear-Gaussian rewards to logged bandit "
        "data using EM with restarts, writes the parameters and the smoothed "
        "latent labels, and returns the fit summary as JSON."
    )
    args_schema: Type[BaseModel] = FitHmmToolSchema
    output_dir: Optional[str] = None
    seed: int = 0
    max_iters: int = 100
    restarts: int = 10
    env_vars: List[EnvVar] = [
        EnvVar(name=OUTPUT_DIR_ENV, description="Default directory for generated files", required=False),
    ]

    def _run(self, data: str, n_states: int, out: str = "hmm.json", labels_out: Optional[str] = "hmm_labels.jsonl", **kwargs: Any) -> str:
        try:
            config = HmmFitConfig(n_states=n_states, max_iters=self.max_iters, restarts=self.restarts)
            summary = stages.fit_hmm_stage(
                output_path(data, self.output_dir),
                config,
                output_path(out, self.output_dir),
                seed=self.seed,
                labels_out=output_path(labels_out, self.output_dir) if labels_out else None,
            )
        except (DriftoptError, ValidationError) as e:
            logger.error(f"HMM fit failed: {e}")
            return f"Error: {e}"
        return json.dumps(summary)
