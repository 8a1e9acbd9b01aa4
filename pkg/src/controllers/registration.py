"""
Point-to-point ICP between consecutive observations, with validity gating.

A registration is accepted only when enough source points find a partner
(fitness) and the implied camera-to-target motion stays within the linear
and angular velocity limits.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.spatial import cKDTree

from ..config.logging_config import get_logger
from ..config.system_params import SystemParams
from ..models.geometry import PointCloud, RigidTransform, kabsch

logger = get_logger(__name__)


@dataclass(frozen=True)
class RegistrationResult:
    transform: RigidTransform
    fitness: float
    inlier_rmse: float
    accepted: bool
    converged: bool = True
    iterations: int = 0
    reason: str = ""


def motion_within_limits(
    transform: RigidTransform, pivot: np.ndarray, dt: float, params: SystemParams
) -> bool:
    """Velocity gate on the displacement of `pivot` and the rotation angle.

    For the inverse transform evaluated at the mapped pivot the displacement
    has the same norm, so the gate is sign-symmetric.
    """
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    pivot = np.asarray(pivot, dtype=float)
    shift = np.linalg.norm(transform.apply(pivot) - pivot)
    return bool(shift / dt <= params.c_a_v and transform.angle / dt <= params.c_a_w)


def _centered_guess(source: np.ndarray, target: np.ndarray) -> RigidTransform:
    """Identity rotation, translated so the centroids coincide."""
    return RigidTransform(np.eye(3), target.mean(axis=0) - source.mean(axis=0))


def _iteration_subset(count: int, limit: int) -> np.ndarray:
    if count <= limit:
        return np.arange(count)
    return np.linspace(0, count - 1, limit).astype(int)


def register_icp(
    source: PointCloud,
    target: PointCloud,
    dt: float,
    params: SystemParams,
    initial: Optional[RigidTransform] = None,
) -> RegistrationResult:
    """Transform mapping `source` onto `target`, with its validity verdict.

    Without `initial` the search starts from centroid alignment. The fusion
    pipeline always passes its constant-motion prior (identity on the first
    registration). Iterations run on at most `icp_sample_points` evenly
    strided source points; fitness and the gates use the whole source.
    """
    if len(source) < 3 or len(target) < 3:
        raise ValueError(
            f"register_icp needs at least 3 points per cloud, got {len(source)} and {len(target)}"
        )
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")

    src = source.points
    tgt = target.points
    tree = cKDTree(tgt)
    radius = params.icp_correspondence_radius
    transform = initial if initial is not None else _centered_guess(src, tgt)
    sample = src[_iteration_subset(len(src), params.icp_sample_points)]

    converged = False
    iterations = 0
    for iterations in range(1, params.icp_max_iterations + 1):
        moved = transform.apply(sample)
        dist, idx = tree.query(moved, distance_upper_bound=radius)
        inliers = np.isfinite(dist)
        if inliers.sum() < 3:
            break
        delta = kabsch(moved[inliers], tgt[idx[inliers]])
        transform = delta.compose(transform)
        if (
            np.linalg.norm(delta.translation) < params.icp_tolerance
            and delta.angle < params.icp_tolerance
        ):
            converged = True
            break

    dist, _ = tree.query(transform.apply(src), distance_upper_bound=radius)
    inliers = np.isfinite(dist)
    fitness = float(inliers.mean())
    rmse = float(np.sqrt(np.mean(dist[inliers] ** 2))) if inliers.any() else float("inf")

    reason = ""
    if not converged:
        reason = "not converged"
    elif fitness < params.c_a_f:
        reason = f"fitness {fitness:.3f} below {params.c_a_f}"
    elif not motion_within_limits(transform, src.mean(axis=0), dt, params):
        reason = "implied motion exceeds velocity limits"

    accepted = reason == ""
    if not accepted:
        logger.debug(f"Registration rejected after {iterations} iterations: {reason}")
    return RegistrationResult(transform, fitness, rmse, accepted, converged, iterations, reason)
