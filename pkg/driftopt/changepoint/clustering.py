import logging

import numpy as np
from sklearn.cluster import KMeans

from driftopt.core.data import LatentSequence, LoggedDataset
from driftopt.core.exceptions import InputError

logger = logging.getLogger(__name__)

MAX_KMEANS_RESTARTS = 100


def segment_values(rewards, labels: LatentSequence) -> np.ndarray:
    """Empirical mean reward of every segment, in segment order."""
    if isinstance(rewards, LoggedDataset):
        rewards = rewards.rewards
    rewards = np.asarray(rewards, dtype=float)
    if len(rewards) != len(labels):
        raise InputError(f"Got {len(labels)} labels for {len(rewards)} rewards")
    return np.array([rewards[seg.start : seg.stop].mean() for seg in labels.segments()])


def _first_appearance(assignment: np.ndarray) -> np.ndarray:
    _, first = np.unique(assignment, return_index=True)
    order = np.unique(assignment)[np.argsort(first)]
    mapping = np.empty(int(assignment.max()) + 1, dtype=np.int64)
    mapping[order] = np.arange(len(order))
    return mapping[assignment]


def cluster_segments(data, labels: LatentSequence, k: int, seed: int = 0) -> LatentSequence:
    """Merge stationary segments into at most ``k`` latent states.

    Segments are clustered by 1-D k-means on their mean logged reward; state ids
    follow the order in which clusters first appear. With no more segments than
    ``k`` every segment keeps its own state.
    """
    if k < 1:
        raise InputError("k must be at least 1")
    segments = labels.segments()
    values = segment_values(data, labels)
    if len(segments) <= k:
        segment_state = np.arange(len(segments))
    else:
        kmeans = KMeans(
            n_clusters=k,
            init="k-means++",
            n_init=MAX_KMEANS_RESTARTS,
            random_state=seed,
        ).fit(values.reshape(-1, 1))
        segment_state = _first_appearance(kmeans.labels_)

    lengths = np.array([seg.stop - seg.start for seg in segments])
    merged = np.repeat(segment_state, lengths)
    n_states = int(segment_state.max()) + 1
    logger.info(f"Clustered {len(segments)} segments into {n_states} latent states (k={k})")
    return LatentSequence(merged, n_states)
