"""
Translational velocity estimation of the target and dead-reckoning.

A constant-velocity Kalman filter tracks the anchor feature point of the
model cloud. While visual feedback is missing, the grasp and the model are
moved with the last velocity estimate; rotations are held.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from ..config.system_params import SystemParams
from ..models.grasp import Grasp
from .target_model import ModelPointCloud

_H = np.hstack([np.eye(3), np.zeros((3, 3))])


@dataclass(frozen=True, eq=False)
class KalmanNoise:
    process_position: float = 1e-8
    process_velocity: float = 1e-6
    measurement_sigma: float = 0.002
    initial_covariance: float = 1e-2

    @classmethod
    def from_params(cls, params: SystemParams) -> "KalmanNoise":
        return cls(
            params.kf_process_noise_position,
            params.kf_process_noise_velocity,
            params.kf_measurement_sigma,
            params.kf_initial_covariance,
        )

    @property
    def process(self) -> np.ndarray:
        return np.diag([self.process_position] * 3 + [self.process_velocity] * 3)

    @property
    def measurement(self) -> np.ndarray:
        return np.eye(3) * self.measurement_sigma**2


@dataclass(frozen=True, eq=False)
class KalmanState:
    """[position(3), velocity(3)] and its 6x6 covariance."""

    mean: np.ndarray
    covariance: np.ndarray

    def __post_init__(self):
        mean = np.array(self.mean, dtype=float).reshape(6)
        cov = np.array(self.covariance, dtype=float)
        if cov.shape != (6, 6):
            raise ValueError(f"covariance must be 6x6, got {cov.shape}")
        for name, value in (("mean", mean), ("covariance", cov)):
            value.setflags(write=False)
            object.__setattr__(self, name, value)

    @classmethod
    def initial(cls, position, noise: KalmanNoise) -> "KalmanState":
        mean = np.concatenate([np.asarray(position, dtype=float).reshape(3), np.zeros(3)])
        return cls(mean, np.eye(6) * noise.initial_covariance)

    @property
    def position(self) -> np.ndarray:
        return self.mean[:3]

    @property
    def velocity(self) -> np.ndarray:
        return self.mean[3:]


def _symmetrize(p: np.ndarray) -> np.ndarray:
    return 0.5 * (p + p.T)


def kf_predict(state: KalmanState, dt: float, noise: KalmanNoise) -> KalmanState:
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    f = np.eye(6)
    f[:3, 3:] = np.eye(3) * dt
    mean = f @ state.mean
    cov = f @ state.covariance @ f.T + noise.process
    return KalmanState(mean, _symmetrize(cov))


def kf_update(state: KalmanState, measured_position, noise: KalmanNoise) -> KalmanState:
    z = np.asarray(measured_position, dtype=float).reshape(3)
    if not np.all(np.isfinite(z)):
        raise ValueError(f"measurement must be finite, got {z}")
    innovation = z - _H @ state.mean
    s = _H @ state.covariance @ _H.T + noise.measurement
    gain = np.linalg.solve(s, _H @ state.covariance).T
    mean = state.mean + gain @ innovation
    # Joseph form keeps the covariance PSD
    i_kh = np.eye(6) - gain @ _H
    cov = i_kh @ state.covariance @ i_kh.T + gain @ noise.measurement @ gain.T
    return KalmanState(mean, _symmetrize(cov))


def dead_reckon(
    grasp: Grasp, model: ModelPointCloud, velocity, dt: float
) -> Tuple[Grasp, ModelPointCloud]:
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    delta = np.asarray(velocity, dtype=float).reshape(3) * dt
    return grasp.shifted(delta), model.shifted(delta)
