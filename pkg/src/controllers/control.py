"""
Grasp control.

This module closes the loop from the latest target-model snapshot to the
end-effector. It provides methods for:
- Blending the camera-towards-object and grasp orientation errors by distance
- PD Cartesian velocity commands with velocity feed-forward and caps
- Integrating the simulated end-effector
- The execution trigger and ground-truth grasp adjudication
- GraspControlProcess, which runs one control tick: estimation, grasp
  (re)selection, command, dead-reckoning, trigger, telemetry
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import List, Optional, Tuple

import numpy as np

from ..config.logging_config import get_logger
from ..config.system_params import SystemParams
from ..models.geometry import Pose, matrix_to_rotvec, rotation_between, rotation_error, rotvec_to_matrix
from ..models.grasp import Grasp, MetricWeights
from ..models.scene import CameraModel, ObjectModel
from ..models.telemetry import LoopTelemetry, RunOutcome
from .estimation import KalmanNoise, KalmanState, dead_reckon, kf_predict, kf_update
from .grasp_module import (
    GraspProposer,
    WorkspaceReach,
    closing_encloses,
    make_backend,
    palm_collides,
    palm_local,
    select_with_hysteresis,
    surface_standoff,
)
from .scene_sim import camera_pose
from .target_model import ModelPointCloud, ModelStatus, TargetModelSnapshot

logger = get_logger(__name__)

ADJUDICATION_STANDOFF_M = (0.01, 0.12)
OPTICAL_AXIS = np.array([0.0, 0.0, 1.0])


@dataclass(frozen=True)
class ControlGains:
    c_p_v: float = 1.0
    c_d_v: float = 2.0
    c_p_w: float = 2.5
    c_d_w: float = 5.0
    c_o: float = 0.2
    c_g: float = 0.05
    c_e: float = 0.7

    def __post_init__(self):
        if not self.c_o > self.c_g > 0:
            raise ValueError(f"gains need c_o > c_g > 0, got c_o={self.c_o}, c_g={self.c_g}")
        if not 0.0 < self.c_e < 1.0:
            raise ValueError(f"c_e must lie in (0, 1), got {self.c_e}")

    @classmethod
    def from_params(cls, params: SystemParams) -> "ControlGains":
        return cls(params.c_p_v, params.c_d_v, params.c_p_w, params.c_d_w,
                   params.c_o, params.c_g, params.c_e)


@dataclass(frozen=True, eq=False)
class RobotState:
    pose: Pose
    linear_velocity: np.ndarray = field(default_factory=lambda: np.zeros(3))
    angular_velocity: np.ndarray = field(default_factory=lambda: np.zeros(3))
    fingers: Optional[np.ndarray] = None  # None while open
    out_of_workspace: bool = False

    @property
    def fingers_closed(self) -> bool:
        return self.fingers is not None


class TriggerDecision(Enum):
    CONTINUE = "continue"
    EXECUTE = "execute"


def blend_weight(distance: float, gains: ControlGains) -> float:
    if distance >= gains.c_o:
        return 1.0
    if distance <= gains.c_g:
        return 0.0
    return (distance - gains.c_g) / (gains.c_o - gains.c_g)


def blend_orientation(t_err, r_grasp, r_object, gains: ControlGains) -> np.ndarray:
    distance = float(np.linalg.norm(t_err))
    r_grasp = np.asarray(r_grasp, dtype=float)
    r_object = np.asarray(r_object, dtype=float)
    if distance >= gains.c_o:
        return r_object.copy()
    if distance <= gains.c_g:
        return r_grasp.copy()
    dg = blend_weight(distance, gains)
    return dg * r_object + (1.0 - dg) * r_grasp


def _clamp(vec: np.ndarray, cap: float) -> np.ndarray:
    norm = float(np.linalg.norm(vec))
    if norm > cap:
        return vec * (cap / norm)
    return vec


def velocity_command(
    t_err,
    t_rate,
    r_blend,
    r_rate,
    v_bar,
    gains: ControlGains,
    max_linear: float = 0.5,
    max_angular: float = 1.5,
) -> Tuple[np.ndarray, np.ndarray]:
    v = gains.c_p_v * np.asarray(t_err, float) + gains.c_d_v * np.asarray(t_rate, float) + np.asarray(v_bar, float)
    w = gains.c_p_w * np.asarray(r_blend, float) + gains.c_d_w * np.asarray(r_rate, float)
    return _clamp(v, max_linear), _clamp(w, max_angular)


def integrate_robot(
    state: RobotState,
    v_d,
    w_d,
    dt: float,
    lag_s: float = 0.0,
    workspace_radius: float = 0.9,
) -> RobotState:
    """Euler step in translation, right-composed exponential step in rotation.

    Angular velocity is expressed in the end-effector frame.
    """
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    v_d = np.asarray(v_d, dtype=float)
    w_d = np.asarray(w_d, dtype=float)
    if lag_s > 0:
        alpha = dt / (lag_s + dt)
        v = state.linear_velocity + alpha * (v_d - state.linear_velocity)
        w = state.angular_velocity + alpha * (w_d - state.angular_velocity)
    else:
        v, w = v_d, w_d
    translation = state.pose.translation + v * dt
    rotation = state.pose.rotation @ rotvec_to_matrix(w * dt)
    pose = Pose(translation, matrix_to_rotvec(rotation))
    outside = state.out_of_workspace or float(np.linalg.norm(translation)) > workspace_radius
    if outside and not state.out_of_workspace:
        logger.warning(f"End-effector left the workspace at {np.round(translation, 3)}")
    return replace(state, pose=pose, linear_velocity=v, angular_velocity=w, out_of_workspace=outside)


def trigger_decision(score: float, c_e: float) -> TriggerDecision:
    return TriggerDecision.EXECUTE if score > c_e else TriggerDecision.CONTINUE


def execution_trigger(
    hand: Pose, grasp: Grasp, model: ModelPointCloud, evaluator: GraspProposer, c_e: float
) -> TriggerDecision:
    return trigger_decision(evaluator.evaluate(hand, grasp.fingers, model), c_e)


def _true_surface(obj: ObjectModel, obj_pose: Pose) -> np.ndarray:
    points, _ = obj.surface_samples()
    return points @ obj_pose.rotation.T + obj_pose.translation


def palm_contact(hand: Pose, obj: ObjectModel, obj_pose: Pose) -> bool:
    """Palm box touching the true surface, or palm center inside the object."""
    local = palm_local(_true_surface(obj, obj_pose), hand.translation, hand.rotation)
    if palm_collides(local):
        return True
    center = obj_pose.rotation.T @ (hand.translation - obj_pose.translation)
    return bool(obj.contains(center)[0])


def adjudicate_grasp(hand: Pose, fingers, obj: ObjectModel, obj_pose: Pose) -> RunOutcome:
    """Ground-truth outcome of closing the hand at its current pose."""
    if palm_contact(hand, obj, obj_pose):
        return RunOutcome.COLLISION
    local = palm_local(_true_surface(obj, obj_pose), hand.translation, hand.rotation)
    lo, hi = ADJUDICATION_STANDOFF_M
    standoff = surface_standoff(local)
    if lo <= standoff <= hi and closing_encloses(local, 0.0, reach=hi):
        return RunOutcome.SUCCESS
    return RunOutcome.MISS


class GraspControlProcess:
    """Single owner of robot, estimator and grasp state; one call per control tick."""

    def __init__(
        self,
        params: SystemParams,
        robot: RobotState,
        camera: CameraModel,
        handover: bool = False,
        seed: int = 0,
        lag_s: float = 0.0,
        backend: Optional[GraspProposer] = None,
    ):
        self.params = params
        self.gains = ControlGains.from_params(params)
        self.weights = MetricWeights.from_table(params.c_m_s, params.c_m_t, params.c_m_r)
        self.noise = KalmanNoise.from_params(params)
        self.reach = WorkspaceReach(params.workspace_radius)
        self.backend = backend or make_backend(params)
        self.camera = camera
        self.handover = handover
        self.seed = seed
        self.lag_s = lag_s

        self.robot = robot
        self.kalman: Optional[KalmanState] = None
        self.grasp: Optional[Grasp] = None
        self.model: Optional[ModelPointCloud] = None
        self.feedback_ok = False
        self.ever_proposed = False
        self.ever_reachable = False
        self.telemetry: List[LoopTelemetry] = []
        self._last_snapshot_tick: Optional[int] = None
        self._previous: Optional[Tuple[np.ndarray, np.ndarray, np.ndarray]] = None

    @property
    def velocity(self) -> np.ndarray:
        if self.kalman is None:
            return np.zeros(3)
        return np.array(self.kalman.velocity)

    def feedforward(self) -> np.ndarray:
        if self.handover and not self.feedback_ok:
            return np.zeros(3)
        return self.velocity

    def _ingest(self, snapshot: TargetModelSnapshot, t: float) -> None:
        model = snapshot.model.transformed(snapshot.camera_pose.as_transform(), "world")
        lag = t - snapshot.time_s
        if lag > 0:
            model = model.shifted(self.velocity * lag)

        if self.kalman is None:
            self.kalman = KalmanState.initial(model.anchor, self.noise)
        elif snapshot.restarted:
            # new anchor, same motion
            self.kalman = KalmanState(np.concatenate([model.anchor, self.kalman.velocity]), self.kalman.covariance)
        else:
            self.kalman = kf_update(self.kalman, model.anchor, self.noise)
        self.model = model

        if len(model) < 10:
            return
        grasps = self.backend.propose(snapshot.encoding, model, self.params.proposal_count, self.seed)
        if not grasps:
            return
        self.ever_proposed = True
        previous_slot = self.grasp.slot if self.grasp is not None else None
        chosen = select_with_hysteresis(
            grasps, self.robot.pose, self.weights, self.reach, previous_slot,
            self.params.reselection_margin,
        )
        if chosen is None:
            logger.debug(f"t={t:.3f}s: no reachable grasp, holding position")
        else:
            self.ever_reachable = True
        if chosen is None or previous_slot is None or chosen.slot != previous_slot:
            self._previous = None
        self.grasp = chosen

    def _camera_alignment(self) -> np.ndarray:
        if self.model is None:
            return np.zeros(3)
        cam = camera_pose(self.robot.pose, self.camera)
        direction = cam.rotation.T @ (self.model.points.centroid() - cam.translation)
        if np.linalg.norm(direction) < 1e-9:
            return np.zeros(3)
        return rotation_between(OPTICAL_AXIS, direction)

    def grasp_control_step(self, snapshot: Optional[TargetModelSnapshot], t: float, dt: float) -> LoopTelemetry:
        if dt <= 0:
            raise ValueError(f"dt must be positive, got {dt}")
        if self.kalman is not None:
            self.kalman = kf_predict(self.kalman, dt, self.noise)

        if snapshot is not None and snapshot.tick != self._last_snapshot_tick:
            self._last_snapshot_tick = snapshot.tick
            self.feedback_ok = snapshot.status is ModelStatus.UPDATED
            if self.feedback_ok:
                self._ingest(snapshot, t)

        ff = self.feedforward()
        lin_err = rot_err = math.nan
        if self.grasp is None:
            v_d = w_d = np.zeros(3)
        else:
            g = self.grasp
            t_err = g.translation - self.robot.pose.translation
            r_err = rotation_error(g.orientation, self.robot.pose.orientation)
            dg = blend_weight(float(np.linalg.norm(t_err)), self.gains)
            r_blend = blend_orientation(t_err, r_err, self._camera_alignment(), self.gains)
            if self._previous is None:
                t_rate = r_rate = np.zeros(3)
            else:
                prev_t, prev_r, prev_w = self._previous
                t_rate = (g.translation - prev_t) / dt - ff
                r_rate = ((r_err - prev_r) / dt + prev_w) * (1.0 - dg)
            v_d, w_d = velocity_command(
                t_err, t_rate, r_blend, r_rate, ff, self.gains,
                self.params.max_linear_speed, self.params.max_angular_speed,
            )
            lin_err = float(np.linalg.norm(t_err))
            rot_err = float(np.linalg.norm(r_err))

        self.robot = integrate_robot(self.robot, v_d, w_d, dt, self.lag_s, self.params.workspace_radius)
        if self.grasp is not None:
            self._previous = (np.array(self.grasp.translation), r_err, np.array(self.robot.angular_velocity))

        if self.model is not None:
            if self.grasp is not None:
                self.grasp, self.model = dead_reckon(self.grasp, self.model, ff, dt)
            else:
                self.model = self.model.shifted(ff * dt)

        score = 0.0
        executed = False
        if self.grasp is not None and self.model is not None and not self.robot.fingers_closed:
            score = self.backend.evaluate(self.robot.pose, self.grasp.fingers, self.model)
            if trigger_decision(score, self.gains.c_e) is TriggerDecision.EXECUTE:
                executed = True
                self.robot = replace(self.robot, fingers=np.array(self.grasp.fingers))
                logger.info(f"t={t:.3f}s: executing grasp (predicted success {score:.3f})")

        record = LoopTelemetry(
            t_s=t,
            lin_err_m=lin_err,
            rot_err_rad=rot_err,
            est_speed_mps=float(np.linalg.norm(self.velocity)),
            success_pred=float(score),
            feedback_ok=self.feedback_ok,
            executed=executed,
        )
        self.telemetry.append(record)
        return record
