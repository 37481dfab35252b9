from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from driftopt.core.exceptions import DataError, InputError


class LoggedInteraction(BaseModel):
    """One logged round (x_t, a_t, r_t, p_t); ``t`` and ``action`` are 0-based."""

    model_config = ConfigDict(frozen=True)

    t: int = Field(..., ge=0, description="Round index")
    context: int | tuple[float, ...] = Field(..., description="Context id or dense context vector")
    action: int = Field(..., ge=0, description="Logged action")
    reward: float = Field(..., description="Observed reward")
    propensity: float = Field(..., gt=0.0, le=1.0, description="Logging probability of the logged action")


@dataclass(frozen=True)
class LoggedDataset:
    """Columnar logged bandit data.

    ``contexts`` is an int array (n,) of context ids or a float array (n, m) of
    context vectors; the remaining columns have shape (n,).
    """

    contexts: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    propensities: np.ndarray
    rounds: np.ndarray | None = None

    def __post_init__(self) -> None:
        n = len(self.actions)
        if len(self.contexts) != n or len(self.rewards) != n or len(self.propensities) != n:
            raise DataError("Logged data columns must have equal length")
        propensities = np.asarray(self.propensities, dtype=float)
        if np.any(~(propensities > 0.0)):
            raise DataError("Propensities must be strictly positive")
        if np.any(propensities > 1.0 + 1e-12):
            raise DataError("Propensities must not exceed 1")
        actions = np.asarray(self.actions, dtype=np.int64)
        if n and actions.min() < 0:
            raise DataError("Actions must be non-negative")
        rounds = np.arange(n) if self.rounds is None else np.asarray(self.rounds, dtype=np.int64)
        object.__setattr__(self, "actions", actions)
        object.__setattr__(self, "rewards", np.asarray(self.rewards, dtype=float))
        object.__setattr__(self, "propensities", propensities)
        object.__setattr__(self, "rounds", rounds)

    def __len__(self) -> int:
        return len(self.actions)

    @property
    def is_dense(self) -> bool:
        return np.asarray(self.contexts).ndim == 2

    def check_actions(self, n_actions: int) -> None:
        if len(self) and self.actions.max() >= n_actions:
            raise DataError(f"Logged action {self.actions.max()} outside [0, {n_actions})")

    def subset(self, mask: np.ndarray) -> "LoggedDataset":
        return LoggedDataset(
            contexts=self.contexts[mask],
            actions=self.actions[mask],
            rewards=self.rewards[mask],
            propensities=self.propensities[mask],
            rounds=self.rounds[mask],
        )

    def records(self) -> list[LoggedInteraction]:
        dense = self.is_dense
        return [
            LoggedInteraction(
                t=int(self.rounds[i]),
                context=tuple(float(v) for v in self.contexts[i]) if dense else int(self.contexts[i]),
                action=int(self.actions[i]),
                reward=float(self.rewards[i]),
                propensity=float(self.propensities[i]),
            )
            for i in range(len(self))
        ]

    @classmethod
    def from_records(cls, records: Sequence[LoggedInteraction]) -> "LoggedDataset":
        if not records:
            raise DataError("No logged records")
        dense = not isinstance(records[0].context, int)
        if dense:
            contexts = np.array([r.context for r in records], dtype=float)
        else:
            contexts = np.array([r.context for r in records], dtype=np.int64)
        return cls(
            contexts=contexts,
            actions=np.array([r.action for r in records]),
            rewards=np.array([r.reward for r in records]),
            propensities=np.array([r.propensity for r in records]),
            rounds=np.array([r.t for r in records]),
        )


class Segment(NamedTuple):
    """Maximal run of a constant label; rounds ``start`` (inclusive) to ``stop`` (exclusive)."""

    start: int
    stop: int
    label: int


@dataclass(frozen=True)
class LatentSequence:
    """Per-round latent labels in ``[0, n_states)``."""

    labels: np.ndarray
    n_states: int

    def __post_init__(self) -> None:
        labels = np.array(self.labels, dtype=np.int64)
        if labels.ndim != 1:
            raise InputError("Latent labels must be a vector")
        if self.n_states < 1:
            raise InputError("A latent sequence needs at least one state")
        if labels.size and (labels.min() < 0 or labels.max() >= self.n_states):
            raise InputError(f"Latent labels outside [0, {self.n_states})")
        labels.setflags(write=False)
        object.__setattr__(self, "labels", labels)

    def __len__(self) -> int:
        return len(self.labels)

    @property
    def change_points(self) -> np.ndarray:
        """Rounds that open a new segment (0-based, strictly increasing)."""
        return np.flatnonzero(self.labels[1:] != self.labels[:-1]) + 1

    @property
    def num_segments(self) -> int:
        return int(len(self.change_points) + 1) if len(self) else 0

    def segments(self) -> list[Segment]:
        if not len(self):
            raise InputError("Cannot segment an empty latent sequence")
        starts = np.concatenate(([0], self.change_points))
        stops = np.concatenate((self.change_points, [len(self)]))
        return [Segment(int(s), int(e), int(self.labels[s])) for s, e in zip(starts, stops, strict=True)]

    @classmethod
    def from_segments(cls, segments: Iterable[Segment], n_states: int) -> "LatentSequence":
        parts = [np.full(seg.stop - seg.start, seg.label, dtype=np.int64) for seg in segments]
        return cls(np.concatenate(parts) if parts else np.zeros(0, dtype=np.int64), n_states)

    def counts(self) -> np.ndarray:
        """Occupancy T_z of every state."""
        return np.bincount(self.labels, minlength=self.n_states)

    def shifted(self, rounds: int) -> "LatentSequence":
        """Cyclic shift by ``rounds``: round t takes the label of round t - rounds."""
        return LatentSequence(np.roll(self.labels, rounds), self.n_states)

    def relabel(self, mapping: np.ndarray, n_states: int) -> "LatentSequence":
        return LatentSequence(np.asarray(mapping)[self.labels], n_states)

    def resized(self, horizon: int) -> "LatentSequence":
        """Truncate or cycle the sequence to ``horizon`` rounds."""
        return LatentSequence(np.resize(self.labels, horizon), self.n_states)


def segments_of(seq: LatentSequence) -> list[Segment]:
    return seq.segments()


def occupancy_gap(reference: LatentSequence, other: LatentSequence) -> tuple[int, float]:
    """Per-state occupancy difference between two latent sequences.

    Returns sum_z |T'_z - T_z| and its l2 relaxation sqrt(L * sum_z (T'_z - T_z)^2).
    """
    n_states = max(reference.n_states, other.n_states)
    diff = np.bincount(other.labels, minlength=n_states) - np.bincount(reference.labels, minlength=n_states)
    return int(np.abs(diff).sum()), float(np.sqrt(n_states * np.sum(diff.astype(float) ** 2)))
