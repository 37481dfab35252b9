import json
import logging
from typing import Any, List, Optional, Type

from crewai.tools import BaseTool, EnvVar
from pydantic import BaseModel, Field

from driftopt.core.exceptions import DriftoptError
from driftopt.harness import stages
from driftopt.harness.config import OUTPUT_DIR_ENV, output_path

logger = logging.getLogger(__name__)


class DetectChangePointsToolSchema(BaseModel):
    """Input for DetectChangePointsTool."""

    data: str = Field(..., description="Logged data file")
    k: int = Field(..., ge=1, description="Number of latent states to cluster segments into")
    w: int = Field(4000, ge=1, description="Sliding window size in rounds")
    c: Optional[float] = Field(None, gt=0.0, description="Detection threshold; derived from T and w when omitted")
    out: str = Field("labels.jsonl", description="Labels file")


class DetectChangePointsTool(BaseTool):
    name: str = "Detect change points in a bandit log"
    description: str = (
        "Runs the sliding-window change-point detector over the logged rewards, "
        "clusters the detected segments into k latent states and writes one label "
        "per round. Returns the detected change points as JSON."
    )
    args_schema: Type[BaseModel] = DetectChangePointsToolSchema
    output_dir: Optional[str] = None
    seed: int = 0
    env_vars: List[EnvVar] = [
        EnvVar(name=OUTPUT_DIR_ENV, description="Default directory for generated files", required=False),
    ]

    def _run(self, data: str, k: int, w: int = 4000, c: Optional[float] = None, out: str = "labels.jsonl", **kwargs: Any) -> str:
        try:
            summary = stages.detect(
                output_path(data, self.output_dir), w, k, output_path(out, self.output_dir), c=c, seed=self.seed
            )
        except DriftoptError as e:
            logger.error(f"Change-point detection failed: {e}")
            return f"Error: {e}"
        return json.dumps(summary)
