import json
import logging
from typing import Any, List, Optional, Type

from crewai.tools import BaseTool, EnvVar
from pydantic import BaseModel, Field

from driftopt.core.exceptions import DriftoptError
from driftopt.harness import stages
from driftopt.harness.config import OUTPUT_DIR_ENV, ExperimentConfig

logger = logging.getLogger(__name__)


class RunExperimentToolSchema(BaseModel):
    """Input for RunExperimentTool."""

    seeds: Optional[List[int]] = Field(None, description="Experiment seeds")
    methods: Optional[List[str]] = Field(None, description="Subset of ips, dr, poem, k-cd, k-hmm")
    k_values: Optional[List[int]] = Field(None, description="Latent state counts for k-cd and k-hmm")
    desk_scale: bool = Field(True, description="Use the reduced 20,000-round benchmark")


class RunExperimentTool(BaseTool):
    name: str = "Run piecewise-stationary bandit benchmark"
    description: str = (
        "Runs the synthetic benchmark comparing stationary off-policy learners "
        "(IPS, DR, POEM) with latent-state methods (k-CD, k-HMM) over several "
        "seeds, writes the report files and returns the text table."
    )
    args_schema: Type[BaseModel] = RunExperimentToolSchema
    config: Optional[ExperimentConfig] = None
    env_vars: List[EnvVar] = [
        EnvVar(name=OUTPUT_DIR_ENV, description="Directory for report files", required=False),
    ]

    def _run(self, desk_scale: bool = True, **kwargs: Any) -> str:
        try:
            base = self.config or (ExperimentConfig.desk_scale() if desk_scale else ExperimentConfig())
            config = base.with_overrides(
                seeds=kwargs.get("seeds"),
                methods=kwargs.get("methods"),
                k_values=kwargs.get("k_values"),
            )
            summary = stages.experiment(config)
        except DriftoptError as e:
            logger.error(f"Experiment failed: {e}")
            return f"Error: {e}"
        with open(summary["report"]) as fh:
            summary["table"] = fh.read()
        return json.dumps(summary)
