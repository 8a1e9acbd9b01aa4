"""
Scene simulation: ground-truth object motion and the wrist-camera oracle.

This module stands in for the real camera and the object tracker. It provides
methods for:
- Evaluating object trajectories at any simulated time
- Producing partial-view observation clouds (frustum, depth range and
  facing tests, Gaussian noise, background clutter)
- Injecting scripted tracking loss and corrupted registrations
- Building decelerating handover trajectories and the eye-in-hand camera pose
"""

from __future__ import annotations

import math
from typing import Sequence, Union

import numpy as np

from ..config.logging_config import get_logger
from ..models.geometry import Pose, PointCloud, RigidTransform, rotvec_to_matrix
from ..models.scene import (
    CameraModel,
    FailureKind,
    FailureSchedule,
    ObjectModel,
    TrackingLoss,
    Trajectory,
    TrajectoryKind,
)

logger = get_logger(__name__)

CORRUPTION_SHIFT_M = 0.15
CORRUPTION_ANGLE_RAD = math.radians(25.0)
CLUTTER_DEPTH_RANGE = (0.25, 0.6)


def object_pose_at(traj: Trajectory, t: float) -> Pose:
    if t < 0:
        raise ValueError(f"time must be non-negative, got {t}")
    if traj.kind is TrajectoryKind.LINEAR:
        moving = max(0.0, t - traj.start_delay_s)
        return traj.start.shifted(np.asarray(traj.velocity) * moving)

    times = [wt for wt, _ in traj.waypoints]
    if t <= times[0]:
        return traj.waypoints[0][1]
    if t >= times[-1]:
        return traj.waypoints[-1][1]
    k = int(np.searchsorted(times, t, side="right")) - 1
    (t0, p0), (t1, p1) = traj.waypoints[k], traj.waypoints[k + 1]
    alpha = (t - t0) / (t1 - t0)
    translation = (1.0 - alpha) * p0.translation + alpha * p1.translation
    # constant-axis interpolation: scale the relative rotation p0 -> p1
    rel = rotvec_to_matrix(p0.orientation).T @ rotvec_to_matrix(p1.orientation)
    rel_vec = RigidTransform(rel).rotvec
    rot = rotvec_to_matrix(p0.orientation) @ rotvec_to_matrix(alpha * rel_vec)
    return Pose(translation, RigidTransform(rot).rotvec)


def camera_pose(hand: Pose, camera: CameraModel) -> Pose:
    """Camera pose for an end-effector pose under the fixed mount offset."""
    mount = RigidTransform(np.eye(3), camera.mount_offset)
    return Pose.from_transform(hand.as_transform().compose(mount))


def visible_mask(camera: CameraModel, points_cam: np.ndarray, normals_cam: np.ndarray) -> np.ndarray:
    z = points_cam[:, 2]
    in_depth = (z >= camera.min_depth) & (z <= camera.max_depth)
    safe_z = np.where(z > 0, z, np.inf)
    in_frustum = (np.abs(points_cam[:, 0] / safe_z) <= math.tan(camera.half_fov_x)) & (
        np.abs(points_cam[:, 1] / safe_z) <= math.tan(camera.half_fov_y)
    )
    facing = np.einsum("ij,ij->i", normals_cam, points_cam) < 0.0
    return in_depth & in_frustum & facing


def observe(
    camera: CameraModel,
    cam_pose: Pose,
    obj: ObjectModel,
    obj_pose: Pose,
    t: float,
    sched: FailureSchedule,
    seed: int,
    min_points: int = 20,
) -> Union[PointCloud, TrackingLoss]:
    """Segmented, noisy observation of the object in the camera frame."""
    if sched.active(t, FailureKind.TRACKING_LOSS):
        return TrackingLoss(t, "scheduled")

    pts_obj, normals_obj = obj.surface_samples()
    r_obj = obj_pose.rotation
    r_cam = cam_pose.rotation
    pts_world = pts_obj @ r_obj.T + obj_pose.translation
    normals_world = normals_obj @ r_obj.T
    pts_cam = (pts_world - cam_pose.translation) @ r_cam
    normals_cam = normals_world @ r_cam

    mask = visible_mask(camera, pts_cam, normals_cam)
    count = int(mask.sum())
    if count < min_points:
        logger.debug(f"t={t:.3f}s: {count} visible points, below {min_points}")
        return TrackingLoss(t, "insufficient-points")

    rng = np.random.default_rng(seed)
    visible = pts_cam[mask]
    if camera.noise_sigma > 0:
        visible = visible + rng.normal(0.0, camera.noise_sigma, size=visible.shape)

    if sched.active(t, FailureKind.ICP_CORRUPTION):
        visible = _corrupt(visible, rng)

    if camera.clutter_points > 0:
        visible = np.vstack([visible, _clutter(visible, camera.clutter_points, rng)])

    return PointCloud(visible, "camera")


def _corrupt(points: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Rigidly displace a cloud about its centroid, as a wrong segmentation would."""
    axis = rng.normal(size=3)
    axis /= np.linalg.norm(axis)
    direction = rng.normal(size=3)
    direction /= np.linalg.norm(direction)
    center = points.mean(axis=0)
    rot = rotvec_to_matrix(axis * CORRUPTION_ANGLE_RAD)
    return (points - center) @ rot.T + center + direction * CORRUPTION_SHIFT_M


def _clutter(points: np.ndarray, count: int, rng: np.random.Generator) -> np.ndarray:
    """Background points well behind the object, spread over its image footprint."""
    median = float(np.median(points[:, 2]))
    lo = points.min(axis=0)
    hi = points.max(axis=0)
    depth = median + rng.uniform(*CLUTTER_DEPTH_RANGE, size=count)
    xy = rng.uniform(lo[:2] - 0.05, hi[:2] + 0.05, size=(count, 2))
    return np.column_stack([xy, depth])


def handover_waypoints(
    start: Pose,
    goal: Sequence[float],
    duration: float,
    seed: int,
    steps: int = 20,
    jitter: float = 0.002,
) -> Trajectory:
    """Hand-carried approach that decelerates as it nears the robot."""
    if duration <= 0:
        raise ValueError(f"handover duration must be positive, got {duration}")
    rng = np.random.default_rng(seed)
    goal = np.asarray(goal, dtype=float)
    waypoints = []
    for k in range(steps + 1):
        s = k / steps
        eased = 1.0 - (1.0 - s) ** 2
        position = start.translation + eased * (goal - start.translation)
        if 0 < k < steps:
            position = position + rng.normal(0.0, jitter, size=3)
        waypoints.append((s * duration, Pose(position, start.orientation)))
    return Trajectory.from_waypoints(waypoints)
