from driftopt.harness.config import (
    OUTPUT_DIR_ENV,
    DetectorSettings,
    ExperimentConfig,
    Method,
    default_output_dir,
    output_path,
)
from driftopt.harness.experiment import ExperimentResult, SeedSetup, run_experiment, setup_seed
from driftopt.harness.report import AggregateRow, ReportFiles, ReportRow, aggregate_rows, emit_report, read_rows

__all__ = [
    "OUTPUT_DIR_ENV",
    "AggregateRow",
    "DetectorSettings",
    "ExperimentConfig",
    "ExperimentResult",
    "Method",
    "ReportFiles",
    "ReportRow",
    "SeedSetup",
    "aggregate_rows",
    "default_output_dir",
    "output_path",
    "emit_report",
    "read_rows",
    "run_experiment",
    "setup_seed",
]
