import json
import logging
from typing import Any, List, Literal, Optional, Type

from crewai.tools import BaseTool, EnvVar
from pydantic import BaseModel, Field, ValidationError

from driftopt.core.exceptions import DriftoptError
from driftopt.harness import stages
from driftopt.harness.config import OUTPUT_DIR_ENV, output_path
from driftopt.learner.training import TrainConfig

logger = logging.getLogger(__name__)


class LearnPoliciesToolSchema(BaseModel):
    """Input for LearnPoliciesTool."""

    data: str = Field(..., description="Logged data file")
    labels: Optional[str] = Field(None, description="Latent labels file; omit to learn one stationary policy")
    kind: Literal["ips", "dr", "poem"] = Field("ips", description="Training objective")
    M: float = Field(100.0, gt=0.0, description="Importance weight clipping level")
    tau: float = Field(0.01, ge=0.0, description="Entropy regularization temperature")
    out: str = Field("bundle.json", description="Policy bundle document")


class LearnPoliciesTool(BaseTool):
    name: str = "Learn per-state bandit policies"
    description: str = (
        "Learns one softmax policy per latent state from logged bandit data by "
        "maximizing the clipped importance-weighted objective on the rounds of "
        "each state. Writes the policy bundle and returns the final objectives."
    )
    args_schema: Type[BaseModel] = LearnPoliciesToolSchema
    output_dir: Optional[str] = None
    train_config: TrainConfig = Field(default_factory=TrainConfig)
    env_vars: List[EnvVar] = [
        EnvVar(name=OUTPUT_DIR_ENV, description="Default directory for generated files", required=False),
    ]

    def _run(self, **kwargs: Any) -> str:
        try:
            config = self.train_config.model_copy(
                update={
                    "objective": kwargs.get("kind", "ips"),
                    "M": kwargs.get("M", 100.0),
                    "tau": kwargs.get("tau", 0.01),
                }
            )
            config = TrainConfig.model_validate(config.model_dump())
            labels = kwargs.get("labels")
            summary = stages.learn(
                output_path(kwargs["data"], self.output_dir),
                output_path(kwargs.get("out", "bundle.json"), self.output_dir),
                config,
                labels_path=output_path(labels, self.output_dir) if labels else None,
            )
        except KeyError as e:
            return f"Error: missing argument {e}"
        except (DriftoptError, ValidationError) as e:
            logger.error(f"Policy learning failed: {e}")
            return f"Error: {e}"
        return json.dumps(summary)
