"""
Per-tick telemetry and per-run summary records, and their CSV layout.

Files are written with pandas using a fixed float format so that identical
runs produce byte-identical files.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields
from enum import Enum
from typing import Iterable, List, Optional

import pandas as pd

TELEMETRY_COLUMNS = [
    "t_s",
    "lin_err_m",
    "rot_err_rad",
    "est_speed_mps",
    "success_pred",
    "feedback_ok",
    "executed",
]

SUMMARY_COLUMNS = ["speed_mps", "rep", "outcome", "time_to_execute_s"]

FLOAT_FORMAT = "%.9g"


class RunOutcome(Enum):
    SUCCESS = "success"
    MISS = "miss"
    COLLISION = "collision"
    TIMEOUT = "timeout"
    UNREACHABLE = "unreachable"
    ERROR = "error"


# failure taxonomy: imprecise pose, hand-target collision, bad timing
FAILURE_OUTCOMES = (RunOutcome.MISS, RunOutcome.COLLISION, RunOutcome.TIMEOUT)


@dataclass(frozen=True)
class LoopTelemetry:
    t_s: float
    lin_err_m: float
    rot_err_rad: float
    est_speed_mps: float
    success_pred: float
    feedback_ok: bool
    executed: bool


@dataclass(frozen=True)
class RunSummary:
    outcome: RunOutcome
    time_to_execute_s: Optional[float]
    peak_lin_err_m: float
    final_lin_err_m: float
    peak_rot_err_rad: float
    final_rot_err_rad: float
    loss_duration_s: float
    ticks: int
    seed: int
    speed_mps: float = 0.0
    object_name: str = ""
    dropped_frames: int = 0

    def as_row(self) -> dict:
        row = asdict(self)
        row["outcome"] = self.outcome.value
        if row["time_to_execute_s"] is None:
            row["time_to_execute_s"] = math.nan
        return row


RUN_COLUMNS = [f.name for f in fields(RunSummary)]


def telemetry_frame(records: Iterable[LoopTelemetry]) -> pd.DataFrame:
    frame = pd.DataFrame([asdict(r) for r in records], columns=TELEMETRY_COLUMNS)
    for col in ("feedback_ok", "executed"):
        frame[col] = frame[col].astype(int)
    return frame


def write_telemetry(path: str, records: List[LoopTelemetry]) -> None:
    telemetry_frame(records).to_csv(path, index=False, float_format=FLOAT_FORMAT)


def summary_frame(summaries: Iterable[RunSummary]) -> pd.DataFrame:
    return pd.DataFrame([s.as_row() for s in summaries], columns=RUN_COLUMNS)


def write_summary(path: str, summaries: List[RunSummary]) -> None:
    summary_frame(summaries).to_csv(path, index=False, float_format=FLOAT_FORMAT)
