"""
Ground-truth scene description.

This module defines the simulated world the perception and control loop run
against. It provides:
- ObjectModel: box, cylinder and sphere primitives with seeded surface samples,
  outward normals and an interior test
- Object presets standing in for household items (boxes, cups, balls, ...)
- Trajectory: constant-velocity conveyor motion or piecewise waypoints
- CameraModel: frustum, depth range, noise and rate of the wrist camera
- FailureSchedule: scripted tracking-loss and registration-corruption intervals
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Dict, Optional, Tuple

import numpy as np

from .geometry import Points, Pose


class ShapeKind(Enum):
    BOX = "box"
    CYLINDER = "cylinder"
    SPHERE = "sphere"


_DIMENSION_COUNT = {ShapeKind.BOX: 3, ShapeKind.CYLINDER: 2, ShapeKind.SPHERE: 1}


@dataclass(frozen=True)
class ObjectModel:
    """Parametric rigid object centered on its own frame origin, z up.

    dimensions: box (w, d, h), cylinder (r, h), sphere (r), all meters.
    """

    kind: ShapeKind
    dimensions: Tuple[float, ...]
    sample_count: int = 2000
    seed: int = 0
    name: str = ""

    def __post_init__(self):
        kind = ShapeKind(self.kind)
        object.__setattr__(self, "kind", kind)
        dims = tuple(float(d) for d in self.dimensions)
        if len(dims) != _DIMENSION_COUNT[kind]:
            raise ValueError(
                f"{kind.value} needs {_DIMENSION_COUNT[kind]} dimensions, got {len(dims)}"
            )
        if any(not (d > 0 and math.isfinite(d)) for d in dims):
            raise ValueError(f"object dimensions must be positive, got {dims}")
        if self.sample_count < 1:
            raise ValueError("sample_count must be positive")
        object.__setattr__(self, "dimensions", dims)

    @property
    def half_height(self) -> float:
        if self.kind is ShapeKind.BOX:
            return self.dimensions[2] / 2.0
        if self.kind is ShapeKind.CYLINDER:
            return self.dimensions[1] / 2.0
        return self.dimensions[0]

    @property
    def bounding_radius(self) -> float:
        if self.kind is ShapeKind.BOX:
            return float(np.linalg.norm(self.dimensions)) / 2.0
        if self.kind is ShapeKind.CYLINDER:
            r, h = self.dimensions
            return math.hypot(r, h / 2.0)
        return self.dimensions[0]

    @cached_property
    def _surface(self) -> Tuple[Points, Points]:
        rng = np.random.default_rng(self.seed)
        n = self.sample_count
        if self.kind is ShapeKind.SPHERE:
            return _sample_sphere(self.dimensions[0], n, rng)
        if self.kind is ShapeKind.CYLINDER:
            return _sample_cylinder(*self.dimensions, n, rng)
        return _sample_box(*self.dimensions, n, rng)

    def surface_samples(self) -> Tuple[Points, Points]:
        """(points, outward unit normals) in the object frame; read-only."""
        return self._surface

    def contains(self, points: Points) -> np.ndarray:
        """Strict interior test for object-frame points."""
        q = np.atleast_2d(np.asarray(points, dtype=float))
        if self.kind is ShapeKind.SPHERE:
            return np.linalg.norm(q, axis=1) < self.dimensions[0]
        if self.kind is ShapeKind.CYLINDER:
            r, h = self.dimensions
            return (np.hypot(q[:, 0], q[:, 1]) < r) & (np.abs(q[:, 2]) < h / 2.0)
        half = np.asarray(self.dimensions) / 2.0
        return np.all(np.abs(q) < half, axis=1)


def _readonly(*arrays: np.ndarray) -> Tuple[np.ndarray, ...]:
    for a in arrays:
        a.setflags(write=False)
    return arrays


def _sample_sphere(r: float, n: int, rng: np.random.Generator):
    d = rng.normal(size=(n, 3))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    return _readonly(d * r, d.copy())


def _sample_cylinder(r: float, h: float, n: int, rng: np.random.Generator):
    side_area = 2.0 * math.pi * r * h
    cap_area = math.pi * r * r
    probs = np.array([side_area, cap_area, cap_area]) / (side_area + 2.0 * cap_area)
    which = rng.choice(3, size=n, p=probs)
    phi = rng.uniform(0.0, 2.0 * math.pi, size=n)
    pts = np.zeros((n, 3))
    normals = np.zeros((n, 3))

    side = which == 0
    pts[side, 0] = r * np.cos(phi[side])
    pts[side, 1] = r * np.sin(phi[side])
    pts[side, 2] = rng.uniform(-h / 2.0, h / 2.0, size=int(side.sum()))
    normals[side, 0] = np.cos(phi[side])
    normals[side, 1] = np.sin(phi[side])

    for idx, sign in ((1, 1.0), (2, -1.0)):
        cap = which == idx
        rad = r * np.sqrt(rng.uniform(0.0, 1.0, size=int(cap.sum())))
        pts[cap, 0] = rad * np.cos(phi[cap])
        pts[cap, 1] = rad * np.sin(phi[cap])
        pts[cap, 2] = sign * h / 2.0
        normals[cap, 2] = sign
    return _readonly(pts, normals)


def _sample_box(w: float, d: float, h: float, n: int, rng: np.random.Generator):
    half = np.array([w, d, h]) / 2.0
    # faces ordered +x, -x, +y, -y, +z, -z
    areas = np.array([d * h, d * h, w * h, w * h, w * d, w * d])
    face = rng.choice(6, size=n, p=areas / areas.sum())
    pts = rng.uniform(-half, half, size=(n, 3))
    normals = np.zeros((n, 3))
    axis = face // 2
    sign = np.where(face % 2 == 0, 1.0, -1.0)
    rows = np.arange(n)
    pts[rows, axis] = sign * half[axis]
    normals[rows, axis] = sign
    return _readonly(pts, normals)


OBJECT_PRESETS: Dict[str, Tuple[str, Tuple[float, ...]]] = {
    "box": ("box", (0.06, 0.10, 0.08)),
    "brick": ("box", (0.05, 0.075, 0.05)),
    "cube": ("box", (0.057, 0.057, 0.057)),
    "cup": ("cylinder", (0.035, 0.08)),
    "mug": ("cylinder", (0.04, 0.09)),
    "ball": ("sphere", (0.037,)),
    "apple": ("sphere", (0.04,)),
}


def object_preset(name: str, sample_count: int = 2000, seed: int = 0) -> ObjectModel:
    try:
        kind, dims = OBJECT_PRESETS[name]
    except KeyError:
        raise ValueError(
            f"Unknown object preset '{name}'; choose one of {sorted(OBJECT_PRESETS)}"
        ) from None
    return ObjectModel(ShapeKind(kind), dims, sample_count, seed, name)


class TrajectoryKind(Enum):
    LINEAR = "linear"
    WAYPOINT = "waypoint"


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Object motion over time.

    Linear: start pose held for start_delay_s, then constant velocity.
    Waypoint: (time, Pose) pairs with strictly increasing times.
    """

    kind: TrajectoryKind
    start: Pose
    velocity: Tuple[float, float, float] = (0.0, 0.0, 0.0)
    waypoints: Tuple[Tuple[float, Pose], ...] = ()
    start_delay_s: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kind", TrajectoryKind(self.kind))
        if self.start_delay_s < 0:
            raise ValueError("start_delay_s must be non-negative")
        if self.kind is TrajectoryKind.WAYPOINT:
            if not self.waypoints:
                raise ValueError("waypoint trajectory needs at least one waypoint")
            times = [t for t, _ in self.waypoints]
            if any(b <= a for a, b in zip(times, times[1:])):
                raise ValueError(f"waypoint times must be strictly increasing, got {times}")

    @classmethod
    def linear(cls, start: Pose, velocity, start_delay_s: float = 0.0) -> "Trajectory":
        return cls(TrajectoryKind.LINEAR, start, tuple(float(v) for v in velocity), (), start_delay_s)

    @classmethod
    def from_waypoints(cls, waypoints) -> "Trajectory":
        wps = tuple((float(t), pose) for t, pose in waypoints)
        return cls(TrajectoryKind.WAYPOINT, wps[0][1], (0.0, 0.0, 0.0), wps)


@dataclass(frozen=True)
class CameraModel:
    """Wrist camera: optical axis +z, x right, y down, mounted on the palm."""

    half_fov_x: float = 0.759
    half_fov_y: float = 0.506
    min_depth: float = 0.1
    max_depth: float = 2.0
    noise_sigma: float = 0.001
    rate_hz: float = 30.0
    clutter_points: int = 30
    mount_offset: Tuple[float, float, float] = (0.0, 0.0, -0.08)

    def validate(self) -> list:
        bad = []
        if not 0 < self.half_fov_x < math.pi / 2:
            bad.append("half_fov_x")
        if not 0 < self.half_fov_y < math.pi / 2:
            bad.append("half_fov_y")
        if not 0 < self.min_depth:
            bad.append("min_depth")
        if not self.max_depth > self.min_depth:
            bad.append("max_depth")
        if self.noise_sigma < 0:
            bad.append("noise_sigma")
        if not self.rate_hz > 0:
            bad.append("rate_hz")
        if self.clutter_points < 0:
            bad.append("clutter_points")
        return bad


class FailureKind(Enum):
    TRACKING_LOSS = "tracking-loss"
    ICP_CORRUPTION = "icp-corruption"


@dataclass(frozen=True)
class FailureInterval:
    start: float
    end: float
    kind: FailureKind

    def __post_init__(self):
        object.__setattr__(self, "kind", FailureKind(self.kind))
        if not self.end > self.start >= 0:
            raise ValueError(f"failure interval needs 0 <= start < end, got [{self.start}, {self.end}]")

    def covers(self, t: float) -> bool:
        return self.start <= t < self.end


@dataclass(frozen=True)
class FailureSchedule:
    intervals: Tuple[FailureInterval, ...] = ()

    def __post_init__(self):
        for kind in FailureKind:
            spans = sorted((i.start, i.end) for i in self.intervals if i.kind is kind)
            for (_, end), (start, _) in zip(spans, spans[1:]):
                if start < end:
                    raise ValueError(f"overlapping {kind.value} intervals in failure schedule")

    def active(self, t: float, kind: FailureKind) -> bool:
        return any(i.kind is kind and i.covers(t) for i in self.intervals)

    def total(self, kind: FailureKind, until: Optional[float] = None) -> float:
        total = 0.0
        for i in self.intervals:
            if i.kind is kind:
                end = i.end if until is None else min(i.end, until)
                total += max(0.0, end - i.start)
        return total


@dataclass(frozen=True)
class TrackingLoss:
    """Signal returned instead of a cloud when the target cannot be segmented."""

    t: float
    reason: str = field(default="tracking-loss")
