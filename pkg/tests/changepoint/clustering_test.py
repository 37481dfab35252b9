import numpy as np
import pytest

from driftopt.core.data import LatentSequence
from driftopt.core.exceptions import InputError
from driftopt.changepoint.clustering import cluster_segments, segment_values


@pytest.fixture
def three_segments():
    rewards = np.repeat([0.1, 0.9, 0.11], 4)
    labels = LatentSequence(np.repeat([0, 1, 2], 4), 3)
    return rewards, labels


def test_segment_values(three_segments):
    rewards, labels = three_segments
    np.testing.assert_allclose(segment_values(rewards, labels), [0.1, 0.9, 0.11])


def test_similar_segments_are_merged(three_segments):
    rewards, labels = three_segments
    merged = cluster_segments(rewards, labels, k=2)
    assert merged.n_states == 2
    np.testing.assert_array_equal(merged.labels, np.repeat([0, 1, 0], 4))


def test_k_equal_to_segments_keeps_segments(three_segments):
    rewards, labels = three_segments
    np.testing.assert_array_equal(cluster_segments(rewards, labels, k=3).labels, labels.labels)
    np.testing.assert_array_equal(cluster_segments(rewards, labels, k=7).labels, labels.labels)


def test_k_one_gives_one_state(three_segments):
    rewards, labels = three_segments
    merged = cluster_segments(rewards, labels, k=1)
    assert merged.n_states == 1
    assert (merged.labels == 0).all()


def test_clustering_accepts_logged_data(helpers, three_segments):
    rewards, labels = three_segments
    data = helpers.make_dataset(np.zeros(12, dtype=int), rewards, np.ones(12))
    np.testing.assert_array_equal(cluster_segments(data, labels, k=2).labels, np.repeat([0, 1, 0], 4))


def test_invalid_inputs(three_segments):
    rewards, labels = three_segments
    with pytest.raises(InputError):
        cluster_segments(rewards, labels, k=0)
    with pytest.raises(InputError):
        segment_values(rewards[:5], labels)
