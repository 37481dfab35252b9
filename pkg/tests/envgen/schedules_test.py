import numpy as np
import pytest

from driftopt.core.exceptions import ConfigurationError
from driftopt.envgen.schedules import RampDirection, cyclic_schedule, ramp_schedule


def test_ramp_goes_up_then_down():
    seq = ramp_schedule(horizon=10, n_states=3, period=1)
    np.testing.assert_array_equal(seq.labels, [0, 1, 2, 1, 0, 1, 2, 1, 0, 1])


def test_ramp_default_experiment_layout():
    seq = ramp_schedule(horizon=100_000, n_states=5, period=10_000)
    assert seq.num_segments == 10
    np.testing.assert_array_equal(seq.labels[::10_000], [0, 1, 2, 3, 4, 3, 2, 1, 0, 1])
    assert (seq.labels[:10_000] == 0).all()


def test_ramp_down_mirrors_up():
    up = ramp_schedule(12, 4, 2)
    down = ramp_schedule(12, 4, 2, RampDirection.DOWN)
    np.testing.assert_array_equal(down.labels, 3 - up.labels)


def test_single_state_ramp():
    seq = ramp_schedule(7, 1, 2)
    assert seq.num_segments == 1
    assert seq.n_states == 1


def test_ramp_rejects_bad_period():
    with pytest.raises(ConfigurationError):
        ramp_schedule(10, 2, 0)


def test_cyclic_schedule_repeats_states():
    seq = cyclic_schedule(horizon=8, states=[0, 2, 0], period=2, n_states=3)
    np.testing.assert_array_equal(seq.labels, [0, 0, 2, 2, 0, 0, 0, 0])
    assert seq.n_states == 3


def test_cyclic_schedule_infers_state_count():
    assert cyclic_schedule(4, [1, 0], 1).n_states == 2


def test_cyclic_schedule_needs_states():
    with pytest.raises(ConfigurationError):
        cyclic_schedule(4, [], 1)
