"""Experiment report files.

rows.csv       method,k,seed,status,mean_reward,regret
timings.csv    method,k,seed,wall_clock_seconds
aggregate.csv  method,k,n_seeds,mean_reward_mean,mean_reward_std,regret_mean,regret_std,excluded_seeds
k_sweep.csv    method,k,mean_reward_mean,mean_reward_std
report.txt     aggregate table as text

Standard deviations use the population convention (divide by the number of seeds).
Failed seeds are left out of the aggregates and listed in ``excluded_seeds``.
"""

import csv
import logging
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from pydantic import BaseModel, Field

from driftopt.core.exceptions import DataError

logger = logging.getLogger(__name__)

ROW_COLUMNS = ["method", "k", "seed", "status", "mean_reward", "regret"]
TIMING_COLUMNS = ["method", "k", "seed", "wall_clock_seconds"]
AGGREGATE_COLUMNS = [
    "method",
    "k",
    "n_seeds",
    "mean_reward_mean",
    "mean_reward_std",
    "regret_mean",
    "regret_std",
    "excluded_seeds",
]
K_SWEEP_COLUMNS = ["method", "k", "mean_reward_mean", "mean_reward_std"]


class ReportRow(BaseModel):
    method: str
    k: int = Field(..., ge=1)
    seed: int
    status: str = "ok"
    mean_reward: float | None = None
    regret: float | None = None
    wall_clock: float = 0.0
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.status == "ok"


class AggregateRow(BaseModel):
    method: str
    k: int
    n_seeds: int
    mean_reward_mean: float | None
    mean_reward_std: float | None
    regret_mean: float | None
    regret_std: float | None
    excluded_seeds: list[int] = Field(default_factory=list)


@dataclass(frozen=True)
class ReportFiles:
    rows: Path
    timings: Path
    aggregate: Path
    k_sweep: Path
    text: Path


def _fmt(value: float | None) -> str:
    return "" if value is None else f"{value:.6f}"


def aggregate_rows(rows: list[ReportRow]) -> list[AggregateRow]:
    """Mean and population std per (method, k), in first-appearance order."""
    groups: dict[tuple[str, int], list[ReportRow]] = defaultdict(list)
    for row in rows:
        groups[(row.method, row.k)].append(row)
    out = []
    for (method, k), members in groups.items():
        good = [r for r in members if r.ok]
        rewards = np.array([r.mean_reward for r in good], dtype=float)
        regrets = np.array([r.regret for r in good], dtype=float)
        out.append(
            AggregateRow(
                method=method,
                k=k,
                n_seeds=len(good),
                mean_reward_mean=float(rewards.mean()) if good else None,
                mean_reward_std=float(rewards.std()) if good else None,
                regret_mean=float(regrets.mean()) if good else None,
                regret_std=float(regrets.std()) if good else None,
                excluded_seeds=sorted(r.seed for r in members if not r.ok),
            )
        )
    return out


def format_table(aggregates: list[AggregateRow]) -> str:
    header = f"{'method':<8} {'k':>3} {'seeds':>5} {'mean reward':>20} {'regret':>24}"
    lines = [header, "-" * len(header)]
    for agg in aggregates:
        if agg.mean_reward_mean is None:
            reward, regret = "failed", "failed"
        else:
            reward = f"{agg.mean_reward_mean:.4f} +/- {agg.mean_reward_std:.4f}"
            regret = f"{agg.regret_mean:.2f} +/- {agg.regret_std:.2f}"
        line = f"{agg.method:<8} {agg.k:>3} {agg.n_seeds:>5} {reward:>20} {regret:>24}"
        if agg.excluded_seeds:
            line += f"  (excluded seeds: {', '.join(map(str, agg.excluded_seeds))})"
        lines.append(line)
    return "\n".join(lines) + "\n"


def _write_csv(path: Path, columns: list[str], records: list[list]) -> None:
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        writer.writerows(records)


def emit_report(rows: list[ReportRow], output_dir: str | Path) -> ReportFiles:
    if not rows:
        raise DataError("No report rows to write")
    output_dir = Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    ordered = sorted(rows, key=lambda r: (r.method, r.k, r.seed))
    aggregates = aggregate_rows(ordered)
    files = ReportFiles(
        rows=output_dir / "rows.csv",
        timings=output_dir / "timings.csv",
        aggregate=output_dir / "aggregate.csv",
        k_sweep=output_dir / "k_sweep.csv",
        text=output_dir / "report.txt",
    )
    _write_csv(
        files.rows,
        ROW_COLUMNS,
        [[r.method, r.k, r.seed, r.status, _fmt(r.mean_reward), _fmt(r.regret)] for r in ordered],
    )
    _write_csv(files.timings, TIMING_COLUMNS, [[r.method, r.k, r.seed, f"{r.wall_clock:.3f}"] for r in ordered])
    _write_csv(
        files.aggregate,
        AGGREGATE_COLUMNS,
        [
            [
                a.method,
                a.k,
                a.n_seeds,
                _fmt(a.mean_reward_mean),
                _fmt(a.mean_reward_std),
                _fmt(a.regret_mean),
                _fmt(a.regret_std),
                " ".join(map(str, a.excluded_seeds)),
            ]
            for a in aggregates
        ],
    )
    latent = {"k-cd", "k-hmm"}
    _write_csv(
        files.k_sweep,
        K_SWEEP_COLUMNS,
        [[a.method, a.k, _fmt(a.mean_reward_mean), _fmt(a.mean_reward_std)] for a in aggregates if a.method in latent],
    )
    files.text.write_text(format_table(aggregates))
    logger.info(f"Wrote report for {len(ordered)} rows to {output_dir}")
    return files


def read_rows(path: str | Path) -> list[ReportRow]:
    """Load ``rows.csv`` back into report rows (wall clock is not stored there)."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"Rows file not found: {path}")
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != ROW_COLUMNS:
            raise DataError(f"Unexpected columns in {path}: {reader.fieldnames}")
        return [
            ReportRow(
                method=rec["method"],
                k=int(rec["k"]),
                seed=int(rec["seed"]),
                status=rec["status"],
                mean_reward=float(rec["mean_reward"]) if rec["mean_reward"] else None,
                regret=float(rec["regret"]) if rec["regret"] else None,
            )
            for rec in reader
        ]
