"""
Target model generation.

This module fuses successive partial observations of the moving target into
one model point cloud expressed in the current camera frame. It provides:
- Median-depth outlier removal
- Registration of each observation against the previous one (see registration)
- The epsilon-ball temporal filter over the last n_s observations
- Merging with seeded random downsampling to a point cap
- Basis-point-set encoding of the model
- TargetModelProcess, the per-frame worker publishing immutable snapshots into
  a latest-value slot read by the grasp-control loop
"""

from __future__ import annotations

import os
import threading
from dataclasses import dataclass, replace
from enum import Enum
from typing import Optional, Sequence, Tuple, Union

import numpy as np
from scipy.spatial import cKDTree

from ..config.logging_config import get_logger
from ..config.system_params import SystemParams
from ..models.geometry import Pose, PointCloud, RigidTransform, apply_transform
from ..models.scene import TrackingLoss
from .registration import RegistrationResult, register_icp

logger = get_logger(__name__)


class ModelStatus(Enum):
    UPDATED = "updated"
    DISCARDED = "discarded"
    LOSS = "loss"


@dataclass(frozen=True, eq=False)
class ModelPointCloud:
    """Fused target cloud plus the anchor feature used for velocity estimation."""

    points: PointCloud
    anchor: np.ndarray
    tick: int = 0

    def __post_init__(self):
        anchor = np.array(self.anchor, dtype=float).reshape(3)
        anchor.setflags(write=False)
        object.__setattr__(self, "anchor", anchor)

    def __len__(self) -> int:
        return len(self.points)

    def transformed(self, transform: RigidTransform, frame: Optional[str] = None) -> "ModelPointCloud":
        return ModelPointCloud(
            apply_transform(transform, self.points, frame), transform.apply(self.anchor), self.tick
        )

    def shifted(self, delta: np.ndarray) -> "ModelPointCloud":
        return ModelPointCloud(self.points.shifted(delta), self.anchor + delta, self.tick)


@dataclass(frozen=True, eq=False)
class BpsEncoding:
    distances: np.ndarray

    def __len__(self) -> int:
        return int(self.distances.shape[0])


@dataclass(frozen=True, eq=False)
class TargetModelState:
    """Everything the pipeline carries between frames; replaced, never mutated."""

    model: Optional[ModelPointCloud] = None
    buffer: Tuple[PointCloud, ...] = ()  # newest first, frame of prev_observation
    prev_observation: Optional[PointCloud] = None
    prev_transform: Optional[RigidTransform] = None
    last_time: Optional[float] = None
    tick: int = 0
    rejections: int = 0  # consecutive rejected registrations
    restarts: int = 0


@dataclass(frozen=True, eq=False)
class TargetModelSnapshot:
    tick: int
    time_s: float
    status: ModelStatus
    model: Optional[ModelPointCloud]
    encoding: Optional[BpsEncoding]
    camera_pose: Optional[Pose]
    registration: Optional[RegistrationResult] = None
    restarted: bool = False  # model re-seeded, anchor not continuous with the previous one


def median_depth_filter(cloud: PointCloud, c_z: float) -> PointCloud:
    if cloud.is_empty:
        raise ValueError("median_depth_filter requires a non-empty cloud")
    z = cloud.points[:, 2]
    keep = np.abs(z - np.median(z)) <= c_z
    return cloud.with_points(cloud.points[keep])


def epsilon_ball_filter(
    cloud: PointCloud, buffer: Sequence[PointCloud], epsilon: float, n_s: int
) -> PointCloud:
    """Keep points with a neighbor closer than epsilon in each of the last n_s clouds."""
    if len(buffer) < n_s or cloud.is_empty:
        return cloud
    keep = np.ones(len(cloud), dtype=bool)
    for past in buffer[:n_s]:
        if past.is_empty:
            return cloud.with_points(np.zeros((0, 3)))
        dist, _ = cKDTree(past.points).query(cloud.points[keep], distance_upper_bound=2.0 * epsilon)
        survivors = np.flatnonzero(keep)
        keep[survivors[~(dist < epsilon)]] = False
        if not keep.any():
            break
    return cloud.with_points(cloud.points[keep])


def merge_and_downsample(
    model: Optional[ModelPointCloud],
    cloud: PointCloud,
    max_points: int,
    seed: int,
    anchor: Optional[np.ndarray] = None,
) -> ModelPointCloud:
    if model is None or model.points.is_empty:
        merged = cloud.points
        frame = cloud.frame
    else:
        merged = np.vstack([model.points.points, cloud.points])
        frame = model.points.frame
    if merged.shape[0] > max_points:
        rng = np.random.default_rng(seed)
        keep = np.sort(rng.choice(merged.shape[0], size=max_points, replace=False))
        merged = merged[keep]
    if anchor is None:
        anchor = model.anchor if model is not None else cloud.centroid()
    tick = model.tick if model is not None else 0
    return ModelPointCloud(PointCloud(merged, frame), anchor, tick)


def make_bps_basis(count: int, radius: float, center: Sequence[float], seed: int) -> np.ndarray:
    """Seeded uniform draw in a ball of the given radius and center."""
    rng = np.random.default_rng(seed)
    direction = rng.normal(size=(count, 3))
    direction /= np.linalg.norm(direction, axis=1, keepdims=True)
    scale = radius * rng.uniform(0.0, 1.0, size=(count, 1)) ** (1.0 / 3.0)
    return direction * scale + np.asarray(center, dtype=float)


def bps_encode(model: ModelPointCloud, basis: np.ndarray) -> BpsEncoding:
    if model.points.is_empty:
        raise ValueError("bps_encode requires a non-empty model cloud")
    dist, _ = cKDTree(model.points.points).query(basis)
    dist = np.asarray(dist, dtype=float)
    dist.setflags(write=False)
    return BpsEncoding(dist)


def _seed_state(filtered: PointCloud, t: float, tick: int, restarts: int = 0) -> TargetModelState:
    model = ModelPointCloud(filtered, filtered.centroid(), tick)
    return TargetModelState(model, (filtered,), filtered, None, t, tick, 0, restarts)


def step_target_model(
    observation: Union[PointCloud, TrackingLoss],
    t: float,
    state: TargetModelState,
    params: SystemParams,
    seed: int = 0,
) -> Tuple[TargetModelState, ModelStatus, Optional[RegistrationResult]]:
    """One frame of the fusion pipeline.

    The current observation is registered onto the previous one, starting
    from the inverse of the last accepted motion (identity when there is
    none); the returned registration maps current onto previous. On loss or
    rejection the state is kept, apart from the rejection count. After
    `max_rejections` consecutive rejections the model restarts from the
    current observation, so a stale view is not matched against forever.
    """
    if isinstance(observation, TrackingLoss):
        return state, ModelStatus.LOSS, None

    filtered = median_depth_filter(observation, params.c_z) if len(observation) else observation
    if len(filtered) < 3:
        logger.debug(f"t={t:.3f}s: degenerate observation ({len(filtered)} points)")
        return state, ModelStatus.LOSS, None

    tick = state.tick + 1
    if state.model is None:
        return _seed_state(filtered, t, tick), ModelStatus.UPDATED, None

    dt = t - state.last_time
    if dt <= 0:
        raise ValueError(f"observation time {t} does not advance past {state.last_time}")

    guess = state.prev_transform.inverse() if state.prev_transform is not None else RigidTransform.identity()
    reg = register_icp(filtered, state.prev_observation, dt, params, guess)
    if not reg.accepted:
        rejections = state.rejections + 1
        if rejections >= params.max_rejections:
            logger.info(f"t={t:.3f}s: {rejections} registrations rejected in a row, restarting the model")
            return _seed_state(filtered, t, tick, state.restarts + 1), ModelStatus.UPDATED, reg
        return replace(state, rejections=rejections), ModelStatus.DISCARDED, reg

    # previous camera frame -> current camera frame
    transform = reg.transform.inverse()
    buffer = tuple(apply_transform(transform, c) for c in state.buffer if not c.is_empty)
    moved = state.model.transformed(transform)
    fresh = epsilon_ball_filter(filtered, buffer, params.epsilon, params.n_s)

    if tick % params.downsample_every == 0:
        model = merge_and_downsample(moved, fresh, params.max_model_points, seed + tick)
    else:
        model = merge_and_downsample(moved, fresh, np.iinfo(np.int64).max, seed + tick)
    model = replace(model, tick=tick)

    new_state = TargetModelState(
        model,
        ((filtered,) + buffer)[: params.n_s],
        filtered,
        transform,
        t,
        tick,
        0,
        state.restarts,
    )
    return new_state, ModelStatus.UPDATED, reg


class LatestValueSlot:
    """Single-writer latest-value slot; readers get the newest snapshot."""

    def __init__(self):
        self._lock = threading.Lock()
        self._value: Optional[TargetModelSnapshot] = None
        self._version = 0

    def publish(self, snapshot: TargetModelSnapshot) -> None:
        with self._lock:
            self._value = snapshot
            self._version += 1

    def read(self) -> Tuple[int, Optional[TargetModelSnapshot]]:
        with self._lock:
            return self._version, self._value


class TargetModelProcess:
    """Per-frame driver of the fusion pipeline.

    Owns the pipeline state and the fixed BPS basis and publishes one snapshot
    per processed frame.
    """

    def __init__(
        self,
        params: SystemParams,
        seed: int = 0,
        slot: Optional[LatestValueSlot] = None,
        dump_dir: Optional[str] = None,
    ):
        self.params = params
        self.seed = seed
        self.slot = slot or LatestValueSlot()
        self.state = TargetModelState()
        self.basis = make_bps_basis(params.bps_points, params.bps_radius, params.bps_center, seed)
        self.dump_dir = dump_dir
        self.frames = 0
        self.counts = {status: 0 for status in ModelStatus}
        if dump_dir:
            os.makedirs(dump_dir, exist_ok=True)

    def process(
        self, observation: Union[PointCloud, TrackingLoss], t: float, camera_pose: Pose
    ) -> TargetModelSnapshot:
        restarts = self.state.restarts
        self.state, status, reg = step_target_model(observation, t, self.state, self.params, self.seed)
        self.frames += 1
        self.counts[status] += 1

        model = self.state.model if status is ModelStatus.UPDATED else None
        encoding = bps_encode(model, self.basis) if model is not None else None
        snapshot = TargetModelSnapshot(
            self.frames, t, status, model, encoding, camera_pose, reg, self.state.restarts != restarts
        )
        if model is not None and self.dump_dir:
            dump_cloud(os.path.join(self.dump_dir, f"model_{self.frames:05d}.xyz"), model.points, self.frames)
        self.slot.publish(snapshot)
        return snapshot


def dump_cloud(path: str, cloud: PointCloud, tick: int) -> None:
    """Plain-text dump: one header line, then 'x y z' per point."""
    with open(path, "w", encoding="utf-8") as f:
        f.write(f"# tick {tick} frame {cloud.frame}\n")
        np.savetxt(f, cloud.points, fmt="%.6f")
