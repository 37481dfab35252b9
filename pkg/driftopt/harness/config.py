import json
import os
from enum import Enum
from pathlib import Path

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from driftopt.core.exceptions import ConfigurationError
from driftopt.deploy.runner import DeployConfig
from driftopt.envgen.environment import EnvConfig
from driftopt.estimators.ope import EstimatorConfig
from driftopt.hmm.fitting import HmmFitConfig
from driftopt.learner.training import TrainConfig

OUTPUT_DIR_ENV = "DRIFTOPT_OUTPUT_DIR"
DEFAULT_OUTPUT_DIR = "driftopt-output"

# Desk-scale change-point threshold and Exp4.S rates.
DESK_THRESHOLD = 0.1
DESK_ETA = 0.25
DESK_BETA = 0.01


def default_output_dir() -> Path:
    return Path(os.getenv(OUTPUT_DIR_ENV, DEFAULT_OUTPUT_DIR))


class Method(str, Enum):
    IPS = "ips"
    DR = "dr"
    POEM = "poem"
    K_CD = "k-cd"
    K_HMM = "k-hmm"

    @property
    def is_latent(self) -> bool:
        return self in (Method.K_CD, Method.K_HMM)


class DetectorSettings(BaseModel):
    w: int = Field(4000, ge=1, description="Change-point window size")
    c: float | None = Field(None, gt=0.0, description="Threshold; defaults to sqrt(2 log(8 T^2) / w)")


class ExperimentConfig(BaseModel):
    """Full experiment: environment, methods, k sweep, seeds and stage settings."""

    model_config = ConfigDict(ser_json_inf_nan="constants")

    env: EnvConfig = Field(default_factory=EnvConfig)
    methods: list[Method] = Field(default_factory=lambda: list(Method), description="Methods to compare")
    k_values: list[int] = Field(default_factory=lambda: [5], description="Latent state counts for k-CD and k-HMM")
    seeds: list[int] = Field(default_factory=lambda: list(range(10)), description="Experiment seeds")
    estimator: EstimatorConfig = Field(default_factory=lambda: EstimatorConfig(M=100.0))
    train: TrainConfig = Field(default_factory=TrainConfig)
    detector: DetectorSettings = Field(default_factory=DetectorSettings)
    hmm: HmmFitConfig = Field(default_factory=lambda: HmmFitConfig(n_states=5))
    deploy: DeployConfig = Field(default_factory=DeployConfig)
    output_dir: Path = Field(default_factory=default_output_dir)
    max_workers: int | None = Field(None, ge=1, description="Threads for the seed x method grid")

    @field_validator("seeds")
    @classmethod
    def _seeds_not_empty(cls, v: list[int]) -> list[int]:
        if not v:
            raise ValueError("seeds must not be empty")
        return v

    @field_validator("k_values")
    @classmethod
    def _k_positive(cls, v: list[int]) -> list[int]:
        if not v or min(v) < 1:
            raise ValueError("k values must be at least 1")
        return v

    @field_validator("methods")
    @classmethod
    def _methods_not_empty(cls, v: list[Method]) -> list[Method]:
        if not v:
            raise ValueError("methods must not be empty")
        return v

    @classmethod
    def from_file(cls, path: str | Path) -> "ExperimentConfig":
        path = Path(path)
        if not path.exists():
            raise ConfigurationError(f"Config file not found: {path}")
        try:
            return cls.model_validate(json.loads(path.read_text()))
        except (json.JSONDecodeError, ValidationError) as e:
            raise ConfigurationError(f"Invalid experiment config {path}: {e}") from e

    @classmethod
    def desk_scale(cls, **overrides) -> "ExperimentConfig":
        """Reduced benchmark: T = 20,000 with a state change every 2,000 rounds.

        The detector threshold and the Exp4.S rates are fixed here instead of derived from T.
        """
        base = cls(
            env=EnvConfig(horizon=20_000, period=2_000),
            detector=DetectorSettings(w=800, c=DESK_THRESHOLD),
            hmm=HmmFitConfig(n_states=5, restarts=2, max_iters=30, tol=1e-2),
            deploy=DeployConfig(eta=DESK_ETA, beta=DESK_BETA, gamma=0.0),
        )
        return base.model_copy(update=overrides)

    def with_overrides(self, **overrides) -> "ExperimentConfig":
        """Copy with dotted keys (``env.horizon``) or top-level keys replaced; ``None`` values are skipped."""
        data = self.model_dump()
        for key, value in overrides.items():
            if value is None:
                continue
            target = data
            *parents, leaf = key.split(".")
            for part in parents:
                target = target[part]
            target[leaf] = value
        try:
            return type(self).model_validate(data)
        except ValidationError as e:
            raise ConfigurationError(str(e)) from e


def output_path(name: str | Path, output_dir: str | Path | None = None) -> Path:
    """Relative names resolve under ``output_dir`` (default: ``$DRIFTOPT_OUTPUT_DIR``)."""
    path = Path(name)
    if path.is_absolute():
        return path
    return Path(output_dir or default_output_dir()) / path
