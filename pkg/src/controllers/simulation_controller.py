"""
Single-run orchestration.

Builds the scene from a ScenarioConfig, drives the target-model and
grasp-control processes on the simulated clock, decides the run outcome and
writes the telemetry and summary files.

Lockstep mode captures, fuses and controls in strict alternation and is
fully reproducible. Otherwise the target-model process runs on a background
worker and the control loop reads whatever snapshot is newest; captures due
while the worker is busy are dropped.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import Future, ThreadPoolExecutor
from typing import Optional, Tuple, Union

import numpy as np
import pandas as pd

from ..config.logging_config import get_logger
from ..config.scenario_config import ScenarioConfig, write_config
from ..models.geometry import Pose, PointCloud
from ..models.scene import (
    FailureInterval,
    FailureKind,
    FailureSchedule,
    ObjectModel,
    ShapeKind,
    TrackingLoss,
    Trajectory,
    object_preset,
)
from ..models.telemetry import RunOutcome, RunSummary, telemetry_frame, write_summary, write_telemetry
from .control import GraspControlProcess, RobotState, adjudicate_grasp, palm_contact
from .scene_sim import camera_pose, handover_waypoints, object_pose_at, observe
from .target_model import LatestValueSlot, TargetModelProcess

logger = get_logger(__name__)

TELEMETRY_FILE = "telemetry.csv"
SUMMARY_FILE = "summary.csv"
SCENARIO_FILE = "scenario.yaml"


def frame_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence([int(seed), int(index)]).generate_state(1)[0])


def build_object(cfg: ScenarioConfig) -> ObjectModel:
    section = cfg.object
    if section.preset:
        return object_preset(section.preset, section.surface_samples, cfg.scenario.seed)
    return ObjectModel(ShapeKind(section.shape), section.dimensions, section.surface_samples,
                       cfg.scenario.seed, section.shape)


def build_trajectory(cfg: ScenarioConfig) -> Trajectory:
    section = cfg.trajectory
    start = Pose(section.start, section.start_rotvec)
    if section.kind == "waypoint":
        return Trajectory.from_waypoints(
            (row[0], Pose(row[1:4], row[4:7])) for row in section.waypoints
        )
    if section.kind == "handover":
        return handover_waypoints(start, section.handover_goal, section.handover_duration_s,
                                  cfg.scenario.seed)
    return Trajectory.linear(start, section.velocity, section.start_delay_s)


def build_schedule(cfg: ScenarioConfig) -> FailureSchedule:
    return FailureSchedule(
        tuple(FailureInterval(f.start, f.end, FailureKind(f.kind)) for f in cfg.failures)
    )


def initial_robot(cfg: ScenarioConfig) -> RobotState:
    return RobotState(Pose(cfg.robot.start, cfg.robot.start_rotvec))


class _LockstepPerception:
    def __init__(self, process: TargetModelProcess):
        self.process = process
        self.dropped = 0

    def submit(self, observation: Union[PointCloud, TrackingLoss], t: float, cam_pose: Pose) -> None:
        self.process.process(observation, t, cam_pose)

    def close(self) -> None:
        pass


class _AsyncPerception:
    def __init__(self, process: TargetModelProcess):
        self.process = process
        self.dropped = 0
        self._executor = ThreadPoolExecutor(max_workers=1, thread_name_prefix="target-model")
        self._future: Optional[Future] = None

    def submit(self, observation: Union[PointCloud, TrackingLoss], t: float, cam_pose: Pose) -> None:
        if self._future is not None:
            if not self._future.done():
                self.dropped += 1
                logger.debug(f"t={t:.3f}s: target model busy, frame dropped")
                return
            self._future.result()
        self._future = self._executor.submit(self.process.process, observation, t, cam_pose)

    def close(self) -> None:
        try:
            if self._future is not None:
                self._future.result()
        finally:
            self._executor.shutdown(wait=True)


def _final(series: pd.Series) -> float:
    values = series.dropna()
    return float(values.iloc[-1]) if len(values) else math.nan


def run_scenario(
    cfg: ScenarioConfig,
    out_dir: str,
    dump_clouds: bool = False,
    object_name: Optional[str] = None,
) -> Tuple[RunSummary, str]:
    """Run one grasp attempt to its outcome and write its files into out_dir."""
    os.makedirs(out_dir, exist_ok=True)
    section = cfg.scenario
    params = cfg.params
    seed = section.seed
    dt = 1.0 / section.tick_rate_hz
    n_ticks = max(1, int(math.ceil(section.duration_s / dt - 1e-9)))
    capture_period = 1.0 / cfg.camera.rate_hz

    obj = build_object(cfg)
    traj = build_trajectory(cfg)
    sched = build_schedule(cfg)
    speed = float(np.linalg.norm(cfg.trajectory.velocity)) if cfg.trajectory.kind == "linear" else 0.0

    slot = LatestValueSlot()
    dump_dir = os.path.join(out_dir, "clouds") if dump_clouds else None
    perception = TargetModelProcess(params, seed, slot, dump_dir)
    control = GraspControlProcess(
        params, initial_robot(cfg), cfg.camera,
        handover=section.mode == "handover", seed=seed, lag_s=cfg.robot.lag_s,
    )
    runner = _LockstepPerception(perception) if section.lockstep else _AsyncPerception(perception)

    logger.info(
        f"Running '{section.name}' ({section.mode}, {'lockstep' if section.lockstep else 'async'}), "
        f"object {obj.name or obj.kind.value}, speed {speed:.3f} m/s, seed {seed}"
    )

    outcome: Optional[RunOutcome] = None
    time_to_execute: Optional[float] = None
    captures = 0
    try:
        for k in range(n_ticks):
            t = k * dt
            if t + 1e-9 >= captures * capture_period:
                cam = camera_pose(control.robot.pose, cfg.camera)
                observation = observe(
                    cfg.camera, cam, obj, object_pose_at(traj, t), t, sched,
                    frame_seed(seed, captures), params.min_visible_points,
                )
                runner.submit(observation, t, cam)
                captures += 1

            _, snapshot = slot.read()
            record = control.grasp_control_step(snapshot, t, dt)

            t_next = t + dt
            obj_pose = object_pose_at(traj, t_next)
            hand = control.robot.pose
            if palm_contact(hand, obj, obj_pose):
                outcome = RunOutcome.COLLISION
                logger.info(f"t={t_next:.3f}s: palm hit the object")
                break
            if record.executed:
                time_to_execute = t_next
                outcome = adjudicate_grasp(hand, control.robot.fingers, obj, obj_pose)
                break
            if control.robot.out_of_workspace:
                outcome = RunOutcome.UNREACHABLE
                break
            if np.linalg.norm(obj_pose.translation) > params.workspace_radius:
                logger.info(f"t={t_next:.3f}s: object left the workspace before execution")
                outcome = RunOutcome.TIMEOUT
                break
    finally:
        runner.close()

    if outcome is None:
        if control.ever_proposed and not control.ever_reachable:
            outcome = RunOutcome.UNREACHABLE
        else:
            outcome = RunOutcome.TIMEOUT

    frame = telemetry_frame(control.telemetry)
    summary = RunSummary(
        outcome=outcome,
        time_to_execute_s=time_to_execute,
        peak_lin_err_m=float(frame["lin_err_m"].max()) if frame["lin_err_m"].notna().any() else math.nan,
        final_lin_err_m=_final(frame["lin_err_m"]),
        peak_rot_err_rad=float(frame["rot_err_rad"].max()) if frame["rot_err_rad"].notna().any() else math.nan,
        final_rot_err_rad=_final(frame["rot_err_rad"]),
        loss_duration_s=float((frame["feedback_ok"] == 0).sum()) * dt,
        ticks=len(frame),
        seed=seed,
        speed_mps=speed,
        object_name=object_name or obj.name or obj.kind.value,
        dropped_frames=runner.dropped,
    )

    telemetry_path = os.path.join(out_dir, TELEMETRY_FILE)
    write_telemetry(telemetry_path, control.telemetry)
    write_summary(os.path.join(out_dir, SUMMARY_FILE), [summary])
    write_config(cfg, os.path.join(out_dir, SCENARIO_FILE))

    logger.info(
        f"Outcome {outcome.value}"
        + (f" at {time_to_execute:.3f}s" if time_to_execute is not None else "")
        + f" after {len(frame)} ticks"
    )
    return summary, telemetry_path
