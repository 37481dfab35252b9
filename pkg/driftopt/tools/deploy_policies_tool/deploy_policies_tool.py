import json
import logging
from typing import Any, List, Literal, Optional, Type

from crewai.tools import BaseTool, EnvVar
from pydantic import BaseModel, Field

from driftopt.core.exceptions import DriftoptError
from driftopt.deploy.runner import DeployConfig
from driftopt.deploy.switchers import SwitcherKind
from driftopt.harness import stages
from driftopt.harness.config import OUTPUT_DIR_ENV, output_path

logger = logging.getLogger(__name__)


class DeployPoliciesToolSchema(BaseModel):
    """Input for DeployPoliciesTool."""

    env: str = Field(..., description="Environment document written by the log generator")
    bundle: str = Field(..., description="Policy bundle document")
    switcher: Literal["exp4s", "posterior", "stationary", "oracle"] = Field(
        "exp4s", description="How to pick a sub-policy each round"
    )
    hmm: Optional[str] = Field(None, description="Fitted HMM document, required by the posterior switcher")
    horizon: Optional[int] = Field(None, ge=1, description="Rounds to deploy")
    latent_shift: int = Field(0, description="Cyclic shift of the latent schedule at deployment")
    seed: int = Field(0, description="Deployment seed")
    trace: str = Field("trace.jsonl", description="Per-round trace file")


class DeployPoliciesTool(BaseTool):
    name: str = "Deploy bandit policies online"
    description: str = (
        "Plays a learned policy bundle online against a saved synthetic environment, "
        "switching between sub-policies with Exp4.S or HMM posterior sampling. "
        "Writes a per-round trace and returns mean reward and regret as JSON."
    )
    args_schema: Type[BaseModel] = DeployPoliciesToolSchema
    output_dir: Optional[str] = None
    env_vars: List[EnvVar] = [
        EnvVar(name=OUTPUT_DIR_ENV, description="Default directory for generated files", required=False),
    ]

    def _run(self, env: str, bundle: str, switcher: str = "exp4s", **kwargs: Any) -> str:
        hmm = kwargs.get("hmm")
        config = DeployConfig(
            horizon=kwargs.get("horizon"),
            latent_shift=kwargs.get("latent_shift", 0),
            record_snapshots=False,
        )
        try:
            summary = stages.deploy(
                output_path(env, self.output_dir),
                output_path(bundle, self.output_dir),
                SwitcherKind(switcher),
                kwargs.get("seed", 0),
                output_path(kwargs.get("trace", "trace.jsonl"), self.output_dir),
                config=config,
                hmm_path=output_path(hmm, self.output_dir) if hmm else None,
            )
        except DriftoptError as e:
            logger.error(f"Deployment failed: {e}")
            return f"Error: {e}"
        return json.dumps(summary)
