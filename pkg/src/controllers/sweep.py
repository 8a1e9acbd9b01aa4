"""
Conveyor speed sweeps.

Runs a speed x repetition (x object) grid of single scenarios and reports:
- summary.csv: speed_mps, rep, outcome, time_to_execute_s
- runs.csv: the full per-run summary records
- success_rates.csv: per-speed success counts and rates
- rate_table.txt: per-speed rates, per-object rates and the failure breakdown

Per-run seeds are derived from the base seed, the speed value, the
repetition and the object, so results do not depend on the order speeds are
listed in. Repeated speeds are rejected. A run that raises is recorded with
outcome "error".
"""

from __future__ import annotations

import math
import os
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from ..config.logging_config import get_logger
from ..config.scenario_config import ScenarioConfig
from ..models.scene import OBJECT_PRESETS
from ..models.telemetry import (
    FAILURE_OUTCOMES,
    FLOAT_FORMAT,
    RUN_COLUMNS,
    SUMMARY_COLUMNS,
    RunOutcome,
    RunSummary,
)
from .simulation_controller import run_scenario

logger = get_logger(__name__)

REFERENCE_MEAN_SUCCESS = 0.717

RATE_COLUMNS = ["speed_mps", "runs", "successes", "success_rate"]


@dataclass(frozen=True)
class SweepSpec:
    speeds: Tuple[float, ...]
    reps: int
    base: ScenarioConfig
    objects: Tuple[str, ...] = ()

    def __post_init__(self):
        speeds = tuple(float(s) for s in self.speeds)
        if any(s < 0 or not math.isfinite(s) for s in speeds):
            raise ValueError(f"sweep speeds must be non-negative, got {speeds}")
        repeated = sorted({s for s in speeds if speeds.count(s) > 1})
        if repeated:
            raise ValueError(f"sweep speeds must be distinct, got repeats of {repeated}")
        if self.reps < 0:
            raise ValueError(f"reps must be non-negative, got {self.reps}")
        object.__setattr__(self, "speeds", speeds)
        unknown = [o for o in self.objects if o not in OBJECT_PRESETS]
        if unknown:
            raise ValueError(f"unknown object presets {unknown}; choose from {sorted(OBJECT_PRESETS)}")
        object.__setattr__(self, "objects", tuple(self.objects))


@dataclass(frozen=True)
class _Job:
    cfg: ScenarioConfig
    out_dir: str
    speed: float
    rep: int
    object_name: Optional[str]


def derive_seed(base_seed: int, speed: float, rep: int, object_name: str = "") -> int:
    key = [int(base_seed), int(round(speed * 1e6)), int(rep), zlib.crc32(object_name.encode("utf-8"))]
    return int(np.random.SeedSequence(key).generate_state(1)[0])


def _jobs(spec: SweepSpec, out_dir: str) -> List[_Job]:
    objects: Sequence[Optional[str]] = spec.objects or (None,)
    jobs = []
    for name in objects:
        for speed in sorted(spec.speeds):
            for rep in range(spec.reps):
                cfg = spec.base.with_speed(speed).with_seed(
                    derive_seed(spec.base.scenario.seed, speed, rep, name or "")
                )
                if name is not None:
                    cfg = cfg.with_object(name)
                run_dir = os.path.join(
                    out_dir, "runs", f"{name or 'base'}_{int(round(speed * 1000)):03d}mmps_rep{rep:02d}"
                )
                jobs.append(_Job(cfg, run_dir, speed, rep, name))
    return jobs


def _run_job(job: _Job) -> RunSummary:
    try:
        summary, _ = run_scenario(job.cfg, job.out_dir, object_name=job.object_name)
        return summary
    except Exception as exc:
        logger.exception(f"Run at {job.speed:.3f} m/s rep {job.rep} failed: {exc}")
        return RunSummary(
            outcome=RunOutcome.ERROR,
            time_to_execute_s=None,
            peak_lin_err_m=math.nan,
            final_lin_err_m=math.nan,
            peak_rot_err_rad=math.nan,
            final_rot_err_rad=math.nan,
            loss_duration_s=math.nan,
            ticks=0,
            seed=job.cfg.scenario.seed,
            speed_mps=job.speed,
            object_name=job.object_name or "",
        )


def success_rates(runs: pd.DataFrame) -> pd.DataFrame:
    if runs.empty:
        return pd.DataFrame(columns=RATE_COLUMNS)
    grouped = runs.groupby("speed_mps", sort=True)["outcome"]
    rates = pd.DataFrame({
        "runs": grouped.size(),
        "successes": grouped.apply(lambda s: int((s == RunOutcome.SUCCESS.value).sum())),
    }).reset_index()
    rates["success_rate"] = rates["successes"] / rates["runs"]
    return rates[RATE_COLUMNS]


def object_rates(runs: pd.DataFrame) -> pd.DataFrame:
    if runs.empty:
        return pd.DataFrame(columns=["object_name", "runs", "successes", "success_rate"])
    grouped = runs.groupby("object_name", sort=True)["outcome"]
    rates = pd.DataFrame({
        "runs": grouped.size(),
        "successes": grouped.apply(lambda s: int((s == RunOutcome.SUCCESS.value).sum())),
    }).reset_index()
    rates["success_rate"] = rates["successes"] / rates["runs"]
    return rates


def failure_breakdown(runs: pd.DataFrame) -> pd.DataFrame:
    failed = runs[runs["outcome"] != RunOutcome.SUCCESS.value] if not runs.empty else runs
    total = len(failed)
    rows = []
    for outcome in FAILURE_OUTCOMES + (RunOutcome.UNREACHABLE, RunOutcome.ERROR):
        count = int((failed["outcome"] == outcome.value).sum()) if total else 0
        rows.append({"outcome": outcome.value, "count": count,
                     "share": count / total if total else 0.0})
    return pd.DataFrame(rows)


def format_rate_table(runs: pd.DataFrame) -> str:
    if runs.empty:
        return "Conveyor sweep: no runs\n"
    rates = success_rates(runs)
    header = ["Speed [mm/s]"] + [f"{int(round(s * 1000))}" for s in rates["speed_mps"]]
    counts = ["Success"] + [f"{s}/{n}" for s, n in zip(rates["successes"], rates["runs"])]
    percent = ["Rate [%]"] + [f"{100.0 * r:.0f}" for r in rates["success_rate"]]
    width = max(len(cell) for cell in header + counts + percent)
    lines = ["Conveyor sweep: success rate per speed"]
    for row in (header, counts, percent):
        lines.append(" | ".join(cell.rjust(width) for cell in row))

    lines.append("")
    lines.append("Per object")
    for _, row in object_rates(runs).iterrows():
        lines.append(
            f"  {row['object_name']:<10} {int(row['successes'])}/{int(row['runs'])}"
            f"  {100.0 * row['success_rate']:.1f}%"
        )

    lines.append("")
    lines.append("Failures (share of failed runs)")
    for _, row in failure_breakdown(runs).iterrows():
        lines.append(f"  {row['outcome']:<12} {int(row['count'])}  {100.0 * row['share']:.1f}%")

    mean = float((runs["outcome"] == RunOutcome.SUCCESS.value).mean())
    lines.append("")
    lines.append(
        f"Mean success: {100.0 * mean:.1f}% (hardware conveyor result for context: "
        f"{100.0 * REFERENCE_MEAN_SUCCESS:.1f}%)"
    )
    return "\n".join(lines) + "\n"


def run_sweep(spec: SweepSpec, out_dir: str, workers: int = 1) -> pd.DataFrame:
    """Run the grid, write the sweep files and return the summary table."""
    os.makedirs(out_dir, exist_ok=True)
    jobs = _jobs(spec, out_dir)
    logger.info(f"Sweep: {len(jobs)} runs over {len(set(spec.speeds))} speeds, {workers} worker(s)")

    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            summaries = list(pool.map(_run_job, jobs))
    else:
        summaries = [_run_job(job) for job in jobs]

    rows = []
    for job, summary in zip(jobs, summaries):
        row = summary.as_row()
        row["speed_mps"] = job.speed
        row["rep"] = job.rep
        rows.append(row)
    runs = pd.DataFrame(rows, columns=["rep"] + RUN_COLUMNS)
    runs = runs.sort_values(["object_name", "speed_mps", "rep"], kind="mergesort").reset_index(drop=True)

    summary = runs[SUMMARY_COLUMNS].copy()
    summary.to_csv(os.path.join(out_dir, "summary.csv"), index=False, float_format=FLOAT_FORMAT)
    runs.to_csv(os.path.join(out_dir, "runs.csv"), index=False, float_format=FLOAT_FORMAT)
    success_rates(runs).to_csv(os.path.join(out_dir, "success_rates.csv"), index=False,
                               float_format=FLOAT_FORMAT)
    table = format_rate_table(runs)
    with open(os.path.join(out_dir, "rate_table.txt"), "w", encoding="utf-8") as f:
        f.write(table)

    if not runs.empty:
        mean = float((runs["outcome"] == RunOutcome.SUCCESS.value).mean())
        logger.info(f"Sweep finished: mean success {100.0 * mean:.1f}% over {len(runs)} runs")
    return summary
