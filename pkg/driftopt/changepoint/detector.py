"""Offline sliding-window change-point detection on logged rewards."""

import logging
import math
from dataclasses import dataclass

import numpy as np
from pydantic import BaseModel, Field

from driftopt.core.data import LatentSequence, LoggedDataset
from driftopt.core.exceptions import InputError

logger = logging.getLogger(__name__)


class DetectorConfig(BaseModel):
    """Window size ``w`` and threshold ``c`` of the detector."""

    w: int = Field(..., ge=1, description="Window size in rounds")
    c: float = Field(..., gt=0.0, description="Detection threshold in reward units")
    delta_lower: float | None = Field(None, gt=0.0, description="Lower bound on the change magnitude, if known")

    @classmethod
    def from_theorem(cls, horizon: int, delta_lower: float, delta: float) -> "DetectorConfig":
        w, c = theorem_params(horizon, delta_lower, delta)
        return cls(w=w, c=c, delta_lower=delta_lower)

    @classmethod
    def for_experiment(cls, horizon: int, w: int) -> "DetectorConfig":
        return cls(w=w, c=experiment_threshold(horizon, w))


def theorem_params(horizon: int, delta_lower: float, delta: float) -> tuple[int, float]:
    """w = ceil(8 log(16 T / delta) / delta_lower^2) and c = delta_lower / 2."""
    if delta_lower <= 0:
        raise InputError("delta_lower must be positive")
    if not 0 < delta <= 1:
        raise InputError("delta must lie in (0, 1]")
    w = math.ceil(8.0 * math.log(16.0 * horizon / delta) / delta_lower**2)
    return w, delta_lower / 2.0


def theorem_threshold(horizon: int, w: int, delta: float) -> float:
    """Smallest threshold sqrt(2 log(8 T / delta) / w) allowed for a window of ``w`` rounds."""
    return math.sqrt(2.0 * math.log(8.0 * horizon / delta) / w)


def experiment_threshold(horizon: int, w: int) -> float:
    """c = sqrt(2 log(8 T^2) / w), the threshold used for a hand-picked window."""
    return math.sqrt(2.0 * math.log(8.0 * horizon**2) / w)


@dataclass(frozen=True)
class DetectionResult:
    """Output of :func:`detect_change_points`.

    ``statistics[i]`` is |mu_minus - mu_plus| at 0-based round ``w + i``.
    ``change_points`` are 0-based rounds; each detected round is the last round
    of the segment it closes.
    """

    statistics: np.ndarray
    change_points: np.ndarray
    labels: LatentSequence
    config: DetectorConfig

    @property
    def num_segments(self) -> int:
        return len(self.change_points) + 1

    def statistic_rounds(self) -> np.ndarray:
        return np.arange(self.config.w, self.config.w + len(self.statistics))


def window_statistics(rewards: np.ndarray, w: int) -> np.ndarray:
    """|mean(r[s-w:s]) - mean(r[s:s+w])| for s = w, ..., T - w."""
    cumsum = np.concatenate(([0.0], np.cumsum(rewards, dtype=float)))
    s = np.arange(w, len(rewards) - w + 1)
    before = (cumsum[s] - cumsum[s - w]) / w
    after = (cumsum[s + w] - cumsum[s]) / w
    return np.abs(before - after)


def labels_from_change_points(change_points: np.ndarray, horizon: int) -> LatentSequence:
    """Sequential segment ids; a detected round stays with the segment before it."""
    change_points = np.sort(np.asarray(change_points, dtype=np.int64))
    labels = np.searchsorted(change_points, np.arange(horizon), side="left")
    return LatentSequence(labels, len(change_points) + 1)


def detect_change_points(rewards, config: DetectorConfig) -> DetectionResult:
    """Greedy argmax detection over the rounds whose window statistic reaches ``c``.

    After each detection every candidate within 2w rounds of it is discarded.
    Ties go to the earliest round.
    """
    if isinstance(rewards, LoggedDataset):
        rewards = rewards.rewards
    rewards = np.asarray(rewards, dtype=float)
    T, w = len(rewards), config.w
    if T <= 2 * w:
        raise InputError(f"Need more than 2w = {2 * w} rounds, got {T}")

    statistics = window_statistics(rewards, w)
    active = statistics >= config.c
    found = []
    while active.any():
        i = int(np.argmax(np.where(active, statistics, -np.inf)))
        found.append(i + w)
        active[max(0, i - 2 * w) : i + 2 * w + 1] = False

    change_points = np.array(sorted(found), dtype=np.int64)
    logger.info(f"Detected {len(change_points)} change points with w={w}, c={config.c:.4f}")
    return DetectionResult(
        statistics=statistics,
        change_points=change_points,
        labels=labels_from_change_points(change_points, T),
        config=config,
    )
