import json
import logging
from typing import Any, List, Literal, Optional, Type

from crewai.tools import BaseTool, EnvVar
from pydantic import BaseModel, Field

from driftopt.core.exceptions import DriftoptError
from driftopt.estimators.ope import EstimatorConfig
from driftopt.harness import stages
from driftopt.harness.config import OUTPUT_DIR_ENV, output_path

logger = logging.getLogger(__name__)


class EvaluatePolicyToolSchema(BaseModel):
    """Input for EvaluatePolicyTool."""

    data: str = Field(..., description="Logged data file")
    policy: str = Field(..., description="Policy or policy bundle document")
    labels: Optional[str] = Field(None, description="Latent labels file, required for multi-state bundles")
    kind: Literal["ips", "dm", "dr"] = Field("ips", description="Estimator")
    M: Optional[float] = Field(None, gt=0.0, description="Clipping level; no clipping when omitted")


class EvaluatePolicyTool(BaseTool):
    name: str = "Estimate policy value from a bandit log"
    description: str = (
        "Estimates the value of a policy or a per-state policy bundle from logged "
        "bandit data with the clipped IPS, direct method or doubly robust "
        "estimator. Returns the total and per-round estimate as JSON."
    )
    args_schema: Type[BaseModel] = EvaluatePolicyToolSchema
    output_dir: Optional[str] = None
    env_vars: List[EnvVar] = [
        EnvVar(name=OUTPUT_DIR_ENV, description="Default directory for generated files", required=False),
    ]

    def _run(
        self,
        data: str,
        policy: str,
        labels: Optional[str] = None,
        kind: str = "ips",
        M: Optional[float] = None,
        **kwargs: Any,
    ) -> str:
        config = EstimatorConfig(kind=kind, M=M if M is not None else float("inf"))
        try:
            summary = stages.evaluate_stage(
                output_path(data, self.output_dir),
                output_path(policy, self.output_dir),
                config,
                labels_path=output_path(labels, self.output_dir) if labels else None,
            )
        except DriftoptError as e:
            logger.error(f"Policy evaluation failed: {e}")
            return f"Error: {e}"
        return json.dumps(summary)
