from collections.abc import Sequence
from enum import Enum

import numpy as np

from driftopt.core.data import LatentSequence
from driftopt.core.exceptions import ConfigurationError


class RampDirection(str, Enum):
    UP = "up"
    DOWN = "down"


def ramp_schedule(
    horizon: int,
    n_states: int,
    period: int,
    direction: RampDirection = RampDirection.UP,
) -> LatentSequence:
    """Triangle-wave schedule: the state moves by one every ``period`` rounds.

    With ``direction=up`` the states run 0, 1, ..., L-1, L-2, ..., 0, 1, ...;
    ``down`` mirrors it starting from L-1.
    """
    if horizon < 1 or period < 1:
        raise ConfigurationError("horizon and period must be positive")
    if n_states < 1:
        raise ConfigurationError("n_states must be positive")
    segment = np.arange(horizon) // period
    if n_states == 1:
        level = np.zeros(horizon, dtype=np.int64)
    else:
        top = n_states - 1
        level = top - np.abs(segment % (2 * top) - top)
    if RampDirection(direction) == RampDirection.DOWN:
        level = n_states - 1 - level
    return LatentSequence(level, n_states)


def cyclic_schedule(horizon: int, states: Sequence[int], period: int, n_states: int | None = None) -> LatentSequence:
    """Visit ``states`` in order, one segment of ``period`` rounds each, wrapping around.

    Repeating a state in ``states`` gives schedules with more segments than states.
    """
    if horizon < 1 or period < 1:
        raise ConfigurationError("horizon and period must be positive")
    if not states:
        raise ConfigurationError("cyclic schedule needs at least one state")
    order = np.asarray(states, dtype=np.int64)
    n_states = n_states or int(order.max()) + 1
    segment = np.arange(horizon) // period
    return LatentSequence(order[segment % len(order)], n_states)
