import math

import numpy as np
import pytest
from pydantic import ValidationError

from driftopt.core.exceptions import InputError
from driftopt.core.rng import make_rng
from driftopt.changepoint.detector import (
    DetectorConfig,
    detect_change_points,
    experiment_threshold,
    labels_from_change_points,
    theorem_params,
    theorem_threshold,
    window_statistics,
)


def test_step_example():
    rewards = np.array([0, 0, 0, 0, 1, 1, 1, 1], dtype=float)
    result = detect_change_points(rewards, DetectorConfig(w=2, c=0.5))
    np.testing.assert_allclose(result.statistics, [0, 0.5, 1, 0.5, 0])
    np.testing.assert_array_equal(result.statistic_rounds(), [2, 3, 4, 5, 6])
    np.testing.assert_array_equal(result.change_points, [4])
    np.testing.assert_array_equal(result.labels.labels + 1, [1, 1, 1, 1, 1, 2, 2, 2])
    assert result.num_segments == 2


def test_constant_rewards_have_no_change_points():
    result = detect_change_points(np.full(50, 0.3), DetectorConfig(w=5, c=0.01))
    assert len(result.change_points) == 0
    assert (result.labels.labels == 0).all()


def test_window_statistics_match_direct_means():
    rewards = make_rng(0).normal(size=40)
    stats = window_statistics(rewards, 6)
    direct = [abs(rewards[s - 6 : s].mean() - rewards[s : s + 6].mean()) for s in range(6, 35)]
    np.testing.assert_allclose(stats, direct)


def test_short_streams_are_rejected():
    with pytest.raises(InputError):
        detect_change_points(np.zeros(10), DetectorConfig(w=5, c=0.1))


def test_detection_is_deterministic():
    rewards = make_rng(1).normal(size=600) + np.repeat([0.0, 1.0, 0.0], 200)
    config = DetectorConfig(w=40, c=0.5)
    first = detect_change_points(rewards, config)
    second = detect_change_points(rewards, config)
    np.testing.assert_array_equal(first.change_points, second.change_points)


def test_detections_are_separated_by_more_than_two_windows():
    rewards = make_rng(2).normal(scale=0.5, size=3000) + np.repeat([0.0, 1.0, 0.0, 1.0, 0.0, 1.0], 500)
    result = detect_change_points(rewards, DetectorConfig(w=50, c=0.3))
    assert np.all(np.diff(result.change_points) > 100)


def test_single_shift_is_localized():
    hits = 0
    for seed in range(100):
        rng = make_rng(seed, "single-shift")
        rewards = np.where(np.arange(1000) < 500, 0.1, 0.9) + rng.normal(scale=0.5, size=1000)
        result = detect_change_points(rewards, DetectorConfig(w=100, c=0.4))
        cps = result.change_points + 1
        if len(cps) == 1 and abs(cps[0] - 500) <= 100:
            hits += 1
    assert hits >= 95


def test_labels_keep_detected_round_with_previous_segment():
    np.testing.assert_array_equal(labels_from_change_points(np.array([1, 3]), 5).labels, [0, 0, 1, 1, 2])


def test_theorem_params():
    w, c = theorem_params(1000, 0.5, 0.1)
    assert w == math.ceil(8 * math.log(16 * 1000 / 0.1) / 0.25)
    assert c == 0.25
    w_half, _ = theorem_params(1000, 1.0, 0.1)
    assert w / 5 <= w_half <= w / 4 + 1


def test_theorem_window_grows_with_confidence():
    assert theorem_params(1000, 0.5, 0.1)[0] > theorem_params(1000, 0.5, 1.0)[0]


def test_theorem_params_validate_inputs():
    with pytest.raises(InputError):
        theorem_params(100, 0.0, 0.1)
    with pytest.raises(InputError):
        theorem_params(100, 0.5, 1.5)


def test_experiment_threshold():
    assert experiment_threshold(100_000, 4000) == pytest.approx(math.sqrt(2 * math.log(8 * 100_000**2) / 4000))
    config = DetectorConfig.for_experiment(100_000, 4000)
    assert config.c == pytest.approx(experiment_threshold(100_000, 4000))


def test_theorem_threshold_is_below_half_the_gap_for_theorem_window():
    w, c = theorem_params(3000, 0.6, 0.05)
    assert theorem_threshold(3000, w, 0.05) <= c


def test_config_validation():
    with pytest.raises(ValidationError):
        DetectorConfig(w=0, c=0.1)
    with pytest.raises(ValidationError):
        DetectorConfig(w=5, c=0.0)
