import json
import logging
from typing import Any, List, Optional, Type

from crewai.tools import BaseTool, EnvVar
from pydantic import BaseModel, Field, ValidationError

from driftopt.core.exceptions import DriftoptError
from driftopt.envgen.environment import EnvConfig
from driftopt.harness import stages
from driftopt.harness.config import OUTPUT_DIR_ENV, output_path

logger = logging.getLogger(__name__)


class GenerateBanditLogToolSchema(BaseModel):
    """Input for GenerateBanditLogTool."""

    seed: int = Field(0, description="Seed of the environment and the logged data")
    out: str = Field("logged.txt", description="Logged data file; relative paths go under the output directory")
    horizon: Optional[int] = Field(None, ge=1, description="Number of logged rounds")
    period: Optional[int] = Field(None, ge=1, description="Rounds between latent state changes")
    n_actions: Optional[int] = Field(None, ge=2, description="Number of actions")
    n_states: Optional[int] = Field(None, ge=1, description="Number of latent states")


class GenerateBanditLogTool(BaseTool):
    name: str = "Generate piecewise-stationary bandit log"
    description: str = (
        "Generates a synthetic piecewise-stationary bandit environment and a log of "
        "rounds played by its logging policy. Writes the log and the environment and "
        "returns their paths with summary statistics as JSON."
    )
    args_schema: Type[BaseModel] = GenerateBanditLogToolSchema
    env_config: EnvConfig = Field(default_factory=EnvConfig)
    output_dir: Optional[str] = None
    env_vars: List[EnvVar] = [
        EnvVar(name=OUTPUT_DIR_ENV, description="Default directory for generated files", required=False),
    ]

    def _run(self, **kwargs: Any) -> str:
        try:
            overrides = {
                key: kwargs[key]
                for key in ("horizon", "period", "n_actions", "n_states")
                if kwargs.get(key) is not None
            }
            config = EnvConfig.model_validate({**self.env_config.model_dump(), **overrides})
            out = output_path(kwargs.get("out", "logged.txt"), self.output_dir)
            return json.dumps(stages.generate(config, kwargs.get("seed", 0), out))
        except (DriftoptError, ValidationError) as e:
            logger.error(f"Log generation failed: {e}")
            return f"Error: {e}"
