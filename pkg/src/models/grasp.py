"""
Grasp candidates and the weights of the grasp selection metric.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..config.logging_config import get_logger
from .geometry import ORTHONORMAL_TOL, Pose, RigidTransform, as_vector3, matrix_to_rotvec

logger = get_logger(__name__)

FINGER_COUNT = 5
JOINTS_PER_FINGER = 3
FINGER_DOF = FINGER_COUNT * JOINTS_PER_FINGER

# per finger: abduction, proximal flexion, distal flexion [rad]
_FINGER_LOWER = np.array([-0.26, 0.0, 0.0])
_FINGER_UPPER = np.array([0.26, 1.57, 1.57])
JOINT_LOWER = np.tile(_FINGER_LOWER, FINGER_COUNT)
JOINT_UPPER = np.tile(_FINGER_UPPER, FINGER_COUNT)

FINGER_SPAN_M = 0.10


def finger_configuration(width: float) -> np.ndarray:
    """Nominal pre-grasp shape opened according to the object width."""
    closure = 1.0 - float(np.clip(width / FINGER_SPAN_M, 0.0, 1.0))
    proximal = 0.2 + 0.9 * closure
    distal = 0.1 + 0.6 * closure
    abduction = np.array([0.15, 0.05, 0.0, -0.05, -0.15]) * (1.0 - closure)
    joints = np.column_stack([abduction, np.full(5, proximal), np.full(5, distal)]).reshape(-1)
    return np.clip(joints, JOINT_LOWER, JOINT_UPPER)


@dataclass(frozen=True, eq=False)
class Grasp:
    """Palm pose, finger joints and predicted success of one grasp candidate."""

    translation: np.ndarray
    rotation: np.ndarray
    fingers: np.ndarray
    score: float
    slot: int = -1

    def __post_init__(self):
        t = as_vector3(self.translation, "grasp translation")
        r = np.array(self.rotation, dtype=float)
        if r.shape != (3, 3) or not np.allclose(r @ r.T, np.eye(3), atol=ORTHONORMAL_TOL) or np.linalg.det(r) < 0:
            raise ValueError("grasp rotation must be orthonormal with determinant +1")
        theta = np.array(self.fingers, dtype=float).reshape(-1)
        if theta.shape != (FINGER_DOF,):
            raise ValueError(f"finger configuration needs {FINGER_DOF} joints, got {theta.shape[0]}")
        if np.any(theta < JOINT_LOWER - 1e-12) or np.any(theta > JOINT_UPPER + 1e-12):
            raise ValueError("finger configuration outside joint limits")
        score = float(self.score)
        if not 0.0 <= score <= 1.0:
            raise ValueError(f"grasp score must lie in [0, 1], got {score}")
        for name, value in (("translation", t), ("rotation", r), ("fingers", theta)):
            value.setflags(write=False)
            object.__setattr__(self, name, value)
        object.__setattr__(self, "score", score)

    @property
    def orientation(self) -> np.ndarray:
        return matrix_to_rotvec(self.rotation)

    @property
    def pose(self) -> Pose:
        return Pose(self.translation, self.orientation)

    def as_transform(self) -> RigidTransform:
        return RigidTransform(self.rotation, self.translation)

    def shifted(self, delta: np.ndarray) -> "Grasp":
        return Grasp(self.translation + np.asarray(delta, dtype=float), self.rotation,
                     self.fingers, self.score, self.slot)


@dataclass(frozen=True)
class MetricWeights:
    """Positive weights: success reward, translation and rotation penalties."""

    success: float = 1.0
    translation: float = 0.1
    rotation: float = 0.2

    def __post_init__(self):
        for name in ("success", "translation", "rotation"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"metric weight '{name}' must be finite")

    @classmethod
    def from_table(cls, c_m_s: float, c_m_t: float, c_m_r: float) -> "MetricWeights":
        """Distance weights are used as penalty magnitudes whatever their sign."""
        if c_m_t < 0 or c_m_r < 0:
            logger.info(
                f"Distance weights c_m_t={c_m_t}, c_m_r={c_m_r} applied as penalties "
                f"{abs(c_m_t)}, {abs(c_m_r)}"
            )
        return cls(c_m_s, abs(c_m_t), abs(c_m_r))
