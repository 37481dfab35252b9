"""File formats.

Logged data is one record per line: ``t context action reward propensity``
with 1-based rounds and actions. A context is either an integer id or a
bracketed, space separated vector such as ``[0.5 -1.0 2.0]``. Lines starting
with ``#`` are comments.

Latent labels are JSON lines ``{"t": 1, "label": 1}`` with 1-based rounds and
states. Policies, bundles, HMM parameters and environments are JSON documents
serialized from pydantic models.
"""

import json
import logging
from pathlib import Path
from typing import TypeVar

import numpy as np
from pydantic import BaseModel, Field, ValidationError

from driftopt.core.data import LatentSequence, LoggedDataset
from driftopt.core.exceptions import DataError
from driftopt.core.features import FeatureMap
from driftopt.core.policy import SoftmaxPolicy

logger = logging.getLogger(__name__)

DocumentT = TypeVar("DocumentT", bound=BaseModel)


def _format_context(context) -> str:
    if np.ndim(context) == 0:
        return str(int(context))
    return "[" + " ".join(repr(float(v)) for v in context) + "]"


def _parse_line(line: str, lineno: int) -> tuple[int, int | list[float], int, float, float]:
    parts = line.strip().split(maxsplit=1)
    if len(parts) != 2:
        raise DataError(f"Line {lineno}: expected 5 fields")
    head, rest = parts
    rest = rest.strip()
    if rest.startswith("["):
        end = rest.find("]")
        if end < 0:
            raise DataError(f"Line {lineno}: unterminated context vector")
        context: int | list[float] = [float(v) for v in rest[1:end].split()]
        tail = rest[end + 1 :].split()
    else:
        fields = rest.split()
        context = int(fields[0])
        tail = fields[1:]
    if len(tail) != 3:
        raise DataError(f"Line {lineno}: expected 5 fields")
    return int(head), context, int(tail[0]), float(tail[1]), float(tail[2])


def write_logged_data(data: LoggedDataset, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w") as fh:
        fh.write("# t context action reward propensity\n")
        for t, x, a, r, p in zip(data.rounds, data.contexts, data.actions, data.rewards, data.propensities, strict=True):
            fh.write(f"{int(t) + 1} {_format_context(x)} {int(a) + 1} {float(r)!r} {float(p)!r}\n")
    logger.info(f"Wrote {len(data)} logged rounds to {path}")


def read_logged_data(path: str | Path) -> LoggedDataset:
    path = Path(path)
    if not path.exists():
        raise DataError(f"Logged data file not found: {path}")
    rows = []
    with path.open() as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            try:
                rows.append(_parse_line(line, lineno))
            except ValueError as e:
                if isinstance(e, DataError):
                    raise
                raise DataError(f"Line {lineno}: {e}") from e
    if not rows:
        raise DataError(f"No logged records in {path}")
    rounds, contexts, actions, rewards, propensities = zip(*rows, strict=True)
    dense = isinstance(contexts[0], list)
    if any(isinstance(c, list) != dense for c in contexts):
        raise DataError("Logged data mixes context ids and context vectors")
    return LoggedDataset(
        contexts=np.array(contexts, dtype=float if dense else np.int64),
        actions=np.array(actions, dtype=np.int64) - 1,
        rewards=np.array(rewards, dtype=float),
        propensities=np.array(propensities, dtype=float),
        rounds=np.array(rounds, dtype=np.int64) - 1,
    )


def write_labels(labels: LatentSequence, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w") as fh:
        for t, z in enumerate(labels.labels, start=1):
            fh.write(json.dumps({"t": t, "label": int(z) + 1}) + "\n")


def read_labels(path: str | Path, n_states: int | None = None) -> LatentSequence:
    path = Path(path)
    if not path.exists():
        raise DataError(f"Label file not found: {path}")
    entries = []
    with path.open() as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                item = json.loads(line)
                entries.append((int(item["t"]), int(item["label"])))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
                raise DataError(f"Line {lineno}: malformed label record") from e
    entries.sort()
    rounds = [t for t, _ in entries]
    if rounds != list(range(1, len(rounds) + 1)):
        raise DataError("Label records must cover rounds 1..T exactly once")
    labels = np.array([z for _, z in entries], dtype=np.int64) - 1
    if labels.size and labels.min() < 0:
        raise DataError("Latent labels are 1-based")
    inferred = int(labels.max()) + 1 if labels.size else 1
    return LatentSequence(labels, n_states or inferred)


class PolicyDocument(BaseModel):
    """Flat theta values plus the feature map descriptor."""

    theta: list[float] = Field(..., description="Policy weights")
    feature_map: FeatureMap = Field(..., description="Feature map descriptor")

    @classmethod
    def from_policy(cls, policy: SoftmaxPolicy) -> "PolicyDocument":
        return cls(theta=[float(v) for v in policy.theta], feature_map=policy.feature_map)

    def to_policy(self) -> SoftmaxPolicy:
        return SoftmaxPolicy(np.array(self.theta), self.feature_map)


def write_document(document: BaseModel, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(document.model_dump_json(indent=2))


def read_document(model: type[DocumentT], path: str | Path) -> DocumentT:
    path = Path(path)
    if not path.exists():
        raise DataError(f"Document not found: {path}")
    try:
        return model.model_validate_json(path.read_text())
    except ValidationError as e:
        raise DataError(f"Invalid {model.__name__} in {path}: {e}") from e
