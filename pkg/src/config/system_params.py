"""
System parameters for target-model generation, grasp selection and control.

This module holds every tunable constant of the grasping pipeline in one frozen
record. It provides:
- The pipeline defaults (median-depth deviation, registration gates,
  temporal filter, metric weights, blending thresholds, PD gains, trigger)
- The registration, model, encoding, estimation and actuation settings the
  pipeline needs on top of those
- Validation returning the offending keys
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields
from typing import List, Tuple

from .logging_config import get_logger

logger = get_logger(__name__)


@dataclass(frozen=True)
class SystemParams:
    # Target model generation
    c_z: float = 0.1  # max deviation from median depth [m]
    c_a_f: float = 0.8  # min registration fitness
    c_a_v: float = 4.0  # linear velocity limit between camera and target [m/s]
    c_a_w: float = 4.0  # angular velocity limit between camera and target [rad/s]
    n_s: int = 5  # observations used by the temporal filter
    epsilon: float = 0.01  # correspondence radius for two points [m]

    # Grasp selection metric
    c_m_s: float = 1.0
    c_m_t: float = -0.1  # per meter
    c_m_r: float = -0.2  # per radian

    # Orientation blending
    c_o: float = 0.2  # camera-towards-object distance threshold [m]
    c_g: float = 0.05  # grasp-orientation distance threshold [m]

    # PD gains
    c_p_v: float = 1.0
    c_d_v: float = 2.0
    c_p_w: float = 2.5
    c_d_w: float = 5.0

    # Execution
    c_e: float = 0.7

    # Registration
    icp_correspondence_radius: float = 0.02
    icp_max_iterations: int = 30
    icp_tolerance: float = 1e-6
    icp_sample_points: int = 512  # source points used per iteration
    max_rejections: int = 5  # consecutive rejected registrations before the model restarts

    # Model cloud and encoding
    max_model_points: int = 2048
    downsample_every: int = 1
    bps_points: int = 4096
    bps_radius: float = 0.5
    bps_center: Tuple[float, float, float] = (0.0, 0.0, 0.5)

    # Velocity estimation
    kf_process_noise_position: float = 1e-8
    kf_process_noise_velocity: float = 1e-6
    kf_measurement_sigma: float = 0.002
    kf_initial_covariance: float = 1e-2

    # Grasp proposals
    grasp_backend: str = "heuristic"
    proposal_count: int = 100
    approach_max_tilt: float = math.radians(60.0)
    reselection_margin: float = 0.02

    # Actuation and sensing limits
    max_linear_speed: float = 0.5
    max_angular_speed: float = 1.5
    min_visible_points: int = 20
    workspace_radius: float = 0.9

    def validate(self) -> List[str]:
        """Return the names of parameters violating their constraints."""
        bad: List[str] = []
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, float) and not math.isfinite(value):
                bad.append(f.name)
        if not self.c_g > 0:
            bad.append("c_g")
        if not self.c_o > self.c_g:
            bad.append("c_o")
        if not 0.0 < self.c_e < 1.0:
            bad.append("c_e")
        if not 0.0 <= self.c_a_f <= 1.0:
            bad.append("c_a_f")
        for name in ("c_z", "c_a_v", "c_a_w", "epsilon", "icp_correspondence_radius",
                     "icp_tolerance", "bps_radius", "kf_measurement_sigma",
                     "kf_initial_covariance", "max_linear_speed", "max_angular_speed",
                     "workspace_radius"):
            if not getattr(self, name) > 0:
                bad.append(name)
        for name in ("n_s", "icp_max_iterations", "icp_sample_points", "max_rejections",
                     "max_model_points", "downsample_every",
                     "bps_points", "proposal_count", "min_visible_points"):
            if getattr(self, name) < 1:
                bad.append(name)
        for name in ("kf_process_noise_position", "kf_process_noise_velocity",
                     "reselection_margin"):
            if getattr(self, name) < 0:
                bad.append(name)
        if not 0.0 <= self.approach_max_tilt <= math.pi / 2:
            bad.append("approach_max_tilt")
        if self.grasp_backend not in ("heuristic",):
            bad.append("grasp_backend")
        # dedupe, keep declaration order
        return list(dict.fromkeys(bad))
