from driftopt.envgen.environment import (
    EnvConfig,
    EnvDocument,
    EnvSpec,
    ValueTable,
    generate_synthetic_env,
    load_env,
    optimal_bundle,
    optimal_value,
    save_env,
    simulate_log,
    state_values,
    true_value,
    value_table,
)
from driftopt.envgen.schedules import RampDirection, cyclic_schedule, ramp_schedule

__all__ = [
    "EnvConfig",
    "EnvDocument",
    "EnvSpec",
    "RampDirection",
    "ValueTable",
    "cyclic_schedule",
    "generate_synthetic_env",
    "load_env",
    "optimal_bundle",
    "optimal_value",
    "ramp_schedule",
    "save_env",
    "simulate_log",
    "state_values",
    "true_value",
    "value_table",
]
