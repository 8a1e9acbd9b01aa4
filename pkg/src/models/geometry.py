"""
Frames, rigid transforms and rotation arithmetic.

This module provides:
- PointCloud, an immutable (N, 3) point set tagged with its frame
- RigidTransform and Pose with composition, inversion and conversion helpers
- Axis-angle canonicalization and relative-rotation errors
- Least-squares rigid alignment of paired point sets (Kabsch)

Rotations are axis-angle vectors (direction = axis, norm = angle) at every
public boundary; matrices are used internally for composition.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, TypeAlias

import numpy as np
from scipy.spatial.transform import Rotation

Vector3: TypeAlias = np.ndarray
Points: TypeAlias = np.ndarray

ORTHONORMAL_TOL = 1e-6
_PI_TOL = 1e-12


def _frozen(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


def as_vector3(value, name: str = "vector") -> Vector3:
    vec = np.array(value, dtype=float).reshape(-1)
    if vec.shape != (3,):
        raise ValueError(f"{name} must have 3 components, got shape {vec.shape}")
    if not np.all(np.isfinite(vec)):
        raise ValueError(f"{name} must be finite, got {vec}")
    return vec


@dataclass(frozen=True, eq=False)
class PointCloud:
    """Ordered set of 3D points expressed in a named frame."""

    points: Points
    frame: str = "camera"

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        if pts.size == 0:
            pts = pts.reshape(0, 3)
        if pts.ndim != 2 or pts.shape[1] != 3:
            raise ValueError(f"PointCloud expects an (N, 3) array, got shape {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise ValueError("PointCloud points must be finite")
        object.__setattr__(self, "points", _frozen(pts))

    def __len__(self) -> int:
        return int(self.points.shape[0])

    @classmethod
    def empty(cls, frame: str = "camera") -> "PointCloud":
        return cls(np.zeros((0, 3)), frame)

    @property
    def is_empty(self) -> bool:
        return len(self) == 0

    def centroid(self) -> Vector3:
        if self.is_empty:
            raise ValueError("centroid of an empty cloud is undefined")
        return self.points.mean(axis=0)

    def with_points(self, points: Points) -> "PointCloud":
        return PointCloud(points, self.frame)

    def shifted(self, delta: Vector3) -> "PointCloud":
        return PointCloud(self.points + np.asarray(delta, dtype=float), self.frame)


@dataclass(frozen=True, eq=False)
class RigidTransform:
    """Rotation plus translation, mapping p to R p + t."""

    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))
    translation: Vector3 = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        rot = np.array(self.rotation, dtype=float)
        if rot.shape != (3, 3):
            raise ValueError(f"rotation must be 3x3, got {rot.shape}")
        if not np.allclose(rot @ rot.T, np.eye(3), atol=ORTHONORMAL_TOL) or np.linalg.det(rot) < 0:
            raise ValueError("rotation must be orthonormal with determinant +1")
        object.__setattr__(self, "rotation", _frozen(rot))
        object.__setattr__(self, "translation", _frozen(as_vector3(self.translation, "translation")))

    @classmethod
    def identity(cls) -> "RigidTransform":
        return cls()

    @classmethod
    def from_rotvec(cls, rotvec, translation=(0.0, 0.0, 0.0)) -> "RigidTransform":
        return cls(rotvec_to_matrix(rotvec), translation)

    @classmethod
    def from_matrix(cls, matrix: np.ndarray) -> "RigidTransform":
        m = np.asarray(matrix, dtype=float)
        if m.shape != (4, 4):
            raise ValueError(f"homogeneous matrix must be 4x4, got {m.shape}")
        return cls(m[:3, :3], m[:3, 3])

    def as_matrix(self) -> np.ndarray:
        m = np.eye(4)
        m[:3, :3] = self.rotation
        m[:3, 3] = self.translation
        return m

    @property
    def rotvec(self) -> Vector3:
        return matrix_to_rotvec(self.rotation)

    @property
    def angle(self) -> float:
        return float(np.linalg.norm(self.rotvec))

    def compose(self, other: "RigidTransform") -> "RigidTransform":
        """self after other: p -> self(other(p))."""
        return RigidTransform(
            self.rotation @ other.rotation,
            self.rotation @ other.translation + self.translation,
        )

    def inverse(self) -> "RigidTransform":
        rt = self.rotation.T
        return RigidTransform(rt, -rt @ self.translation)

    def apply(self, points: Points) -> Points:
        pts = np.asarray(points, dtype=float)
        return pts @ self.rotation.T + self.translation


@dataclass(frozen=True, eq=False)
class Pose:
    """Translation plus canonical axis-angle orientation."""

    translation: Vector3 = field(default_factory=lambda: np.zeros(3))
    orientation: Vector3 = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        object.__setattr__(self, "translation", _frozen(as_vector3(self.translation, "translation")))
        object.__setattr__(
            self, "orientation", _frozen(canonicalize(as_vector3(self.orientation, "orientation")))
        )

    @classmethod
    def from_transform(cls, transform: RigidTransform) -> "Pose":
        return cls(transform.translation, transform.rotvec)

    @property
    def rotation(self) -> np.ndarray:
        return rotvec_to_matrix(self.orientation)

    def as_transform(self) -> RigidTransform:
        return RigidTransform(self.rotation, self.translation)

    def shifted(self, delta: Vector3) -> "Pose":
        return Pose(self.translation + np.asarray(delta, dtype=float), self.orientation)


def rotvec_to_matrix(rotvec) -> np.ndarray:
    return Rotation.from_rotvec(as_vector3(rotvec, "rotvec")).as_matrix()


def matrix_to_rotvec(matrix: np.ndarray) -> Vector3:
    return canonicalize(Rotation.from_matrix(np.asarray(matrix, dtype=float)).as_rotvec())


def canonicalize(a) -> Vector3:
    """Map an axis-angle vector onto norm [0, pi] without changing the rotation.

    At exactly pi the axis is flipped, if needed, so its first nonzero
    component is positive.
    """
    vec = np.array(a, dtype=float).reshape(3)
    if not np.all(np.isfinite(vec)):
        raise ValueError(f"axis-angle must be finite, got {vec}")
    theta = float(np.linalg.norm(vec))
    if theta == 0.0:
        return np.zeros(3)
    if theta < math.pi - _PI_TOL:
        return vec
    axis = vec / theta
    wrapped = math.fmod(theta, 2.0 * math.pi)
    if wrapped > math.pi:
        axis = -axis
        wrapped = 2.0 * math.pi - wrapped
    if wrapped == 0.0:
        return np.zeros(3)
    if abs(wrapped - math.pi) <= _PI_TOL:
        nonzero = axis[np.abs(axis) > _PI_TOL]
        if nonzero.size and nonzero[0] < 0:
            axis = -axis
        wrapped = math.pi
    return axis * wrapped


def rotation_error(a, b) -> Vector3:
    """Axis-angle of Rb^-1 Ra, i.e. the rotation from b to a in b's frame."""
    ra = rotvec_to_matrix(a)
    rb = rotvec_to_matrix(b)
    return matrix_to_rotvec(rb.T @ ra)


def apply_transform(transform: RigidTransform, cloud: PointCloud, frame: Optional[str] = None) -> PointCloud:
    if cloud.is_empty:
        raise ValueError("apply_transform requires a non-empty cloud")
    return PointCloud(transform.apply(cloud.points), frame or cloud.frame)


def rotation_between(src: Vector3, dst: Vector3) -> Vector3:
    """Shortest axis-angle taking direction src onto direction dst."""
    u = np.asarray(src, dtype=float)
    v = np.asarray(dst, dtype=float)
    u = u / np.linalg.norm(u)
    v = v / np.linalg.norm(v)
    cross = np.cross(u, v)
    sin = float(np.linalg.norm(cross))
    cos = float(np.clip(np.dot(u, v), -1.0, 1.0))
    if sin < 1e-12:
        if cos > 0:
            return np.zeros(3)
        # antiparallel: any axis perpendicular to u
        helper = np.array([1.0, 0.0, 0.0]) if abs(u[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
        axis = np.cross(u, helper)
        return canonicalize(axis / np.linalg.norm(axis) * math.pi)
    return cross / sin * math.atan2(sin, cos)


def frame_from_axes(z_axis: Vector3, x_hint: Vector3) -> np.ndarray:
    """Right-handed rotation whose z column is z_axis and x column is x_hint
    projected onto the plane normal to z."""
    z = np.asarray(z_axis, dtype=float)
    z = z / np.linalg.norm(z)
    x = np.asarray(x_hint, dtype=float)
    x = x - np.dot(x, z) * z
    norm = np.linalg.norm(x)
    if norm < 1e-9:
        helper = np.array([1.0, 0.0, 0.0]) if abs(z[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
        x = helper - np.dot(helper, z) * z
        norm = np.linalg.norm(x)
    x = x / norm
    y = np.cross(z, x)
    return np.column_stack([x, y, z])


def kabsch(source: Points, target: Points) -> RigidTransform:
    """Least-squares rigid transform mapping paired source rows onto target rows."""
    a = np.asarray(source, dtype=float)
    b = np.asarray(target, dtype=float)
    if a.shape != b.shape or a.ndim != 2 or a.shape[1] != 3:
        raise ValueError(f"kabsch expects two (N, 3) arrays of equal shape, got {a.shape} and {b.shape}")
    if a.shape[0] < 3:
        raise ValueError("kabsch needs at least 3 correspondences")
    ca = a.mean(axis=0)
    cb = b.mean(axis=0)
    h = (a - ca).T @ (b - cb)
    u, _, vt = np.linalg.svd(h)
    rot = vt.T @ u.T
    if np.linalg.det(rot) < 0:
        vt[-1, :] *= -1
        rot = vt.T @ u.T
    return RigidTransform(rot, cb - rot @ ca)
