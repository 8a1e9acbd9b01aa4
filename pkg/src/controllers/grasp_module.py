"""
Grasp proposal, evaluation and selection.

This module provides:
- The GraspProposer interface a learned generator/evaluator can implement
- HeuristicGraspBackend, a geometric proposer and evaluator working directly
  on the model cloud
- The dynamic grasping metric (weighted success score minus pose distance
  from the robot) and selection with kinematic reachability filtering
- Reselection hysteresis between control ticks
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, List, Optional, Protocol, Sequence, Union

import numpy as np

from ..config.logging_config import get_logger
from ..config.system_params import SystemParams
from ..models.geometry import PointCloud, Pose, canonicalize, frame_from_axes
from ..models.grasp import FINGER_SPAN_M, Grasp, MetricWeights, finger_configuration
from .target_model import BpsEncoding, ModelPointCloud

logger = get_logger(__name__)

CloudLike = Union[ModelPointCloud, PointCloud, np.ndarray]
Reachability = Callable[[Grasp], bool]

UP = np.array([0.0, 0.0, 1.0])

NOMINAL_STANDOFF_M = 0.05
STANDOFF_MIN_M = 0.02
STANDOFF_MAX_M = 0.10
PALM_OFFSET_M = 0.08
PALM_HALF_EXTENTS = np.array([0.045, 0.045, 0.015])
FINGER_REACH_M = 0.12
CLOSING_SLAB_M = 0.02
CLOSING_CONE_RAD = math.radians(30.0)
CLOSING_DIRECTIONS = 7


def cloud_points(cloud: CloudLike) -> np.ndarray:
    if isinstance(cloud, ModelPointCloud):
        return cloud.points.points
    if isinstance(cloud, PointCloud):
        return cloud.points
    return np.asarray(cloud, dtype=float).reshape(-1, 3)


def palm_local(points: np.ndarray, translation: np.ndarray, rotation: np.ndarray) -> np.ndarray:
    return (points - translation) @ rotation


def palm_collides(local: np.ndarray) -> bool:
    return bool(np.any(np.all(np.abs(local) <= PALM_HALF_EXTENTS, axis=1)))


def _corridor(local: np.ndarray) -> np.ndarray:
    return (np.abs(local[:, 0]) <= FINGER_SPAN_M / 2.0) & (np.abs(local[:, 1]) <= PALM_HALF_EXTENTS[1])


def surface_standoff(local: np.ndarray) -> float:
    """Distance along the approach axis to the nearest point in front of the palm.

    Only points inside the finger corridor count, so a surface beside the
    fingers does not shorten the standoff even when it is closer in 3D.
    """
    front = _corridor(local) & (local[:, 2] > 0)
    if not front.any():
        return math.inf
    return float(local[front, 2].min())


def standoff_factor(distance: float) -> float:
    if not STANDOFF_MIN_M <= distance <= STANDOFF_MAX_M:
        return 0.0
    if distance <= NOMINAL_STANDOFF_M:
        return (distance - STANDOFF_MIN_M) / (NOMINAL_STANDOFF_M - STANDOFF_MIN_M)
    return (STANDOFF_MAX_M - distance) / (STANDOFF_MAX_M - NOMINAL_STANDOFF_M)


def closing_encloses(local: np.ndarray, angle: float = 0.0, reach: float = FINGER_REACH_M) -> bool:
    """Points on both sides of the closing axis, all within the finger span."""
    region = (local[:, 2] > 0) & (local[:, 2] <= reach)
    c, s = math.cos(angle), math.sin(angle)
    a = local[:, 0] * c + local[:, 1] * s
    b = -local[:, 0] * s + local[:, 1] * c
    sel = a[region & (np.abs(b) <= CLOSING_SLAB_M)]
    if sel.size == 0:
        return False
    return bool((sel < 0).any() and (sel > 0).any() and np.abs(sel).max() <= FINGER_SPAN_M / 2.0)


def enclosure_factor(local: np.ndarray) -> float:
    """Share of closing directions in the cone for which closing_encloses holds."""
    region = (local[:, 2] > 0) & (local[:, 2] <= FINGER_REACH_M)
    x = local[region, 0:1]
    y = local[region, 1:2]
    if x.size == 0:
        return 0.0
    angles = np.linspace(-CLOSING_CONE_RAD, CLOSING_CONE_RAD, CLOSING_DIRECTIONS)
    c = np.array([math.cos(a) for a in angles])
    s = np.array([math.sin(a) for a in angles])
    a = x * c + y * s
    slab = np.abs(-x * s + y * c) <= CLOSING_SLAB_M
    both_sides = (slab & (a < 0)).any(axis=0) & (slab & (a > 0)).any(axis=0)
    within = np.where(slab, np.abs(a), 0.0).max(axis=0) <= FINGER_SPAN_M / 2.0
    return float(np.count_nonzero(both_sides & within)) / CLOSING_DIRECTIONS


def _score(points: np.ndarray, translation: np.ndarray, rotation: np.ndarray) -> float:
    return _score_local(palm_local(points, translation, rotation))


def _score_local(local: np.ndarray) -> float:
    if palm_collides(local):
        return 0.0
    standoff = standoff_factor(surface_standoff(local))
    if standoff == 0.0:
        return 0.0
    return standoff * enclosure_factor(local)


def heuristic_evaluate(pose: Pose, fingers: np.ndarray, cloud: CloudLike) -> float:
    """Standoff x enclosure x collision score of a palm pose against a cloud.

    Standoff is the corridor distance of surface_standoff, not the distance
    to the nearest cloud point.

    The finger configuration is carried for interface compatibility; closure
    is judged geometrically.
    """
    points = cloud_points(cloud)
    if points.shape[0] == 0:
        raise ValueError("heuristic_evaluate requires a non-empty cloud")
    return _score(points, pose.translation, pose.rotation)


def closing_axis(
    points: np.ndarray, approach: np.ndarray, cov: Optional[np.ndarray] = None
) -> Optional[np.ndarray]:
    """Minor principal axis of the cloud projected onto the palm plane.

    `cov` is the 3x3 covariance of `points` when the caller already has it.
    """
    basis = frame_from_axes(approach, np.array([1.0, 0.0, 0.0]))[:, :2]
    if cov is None:
        cov = np.cov(points.T)
    eigvals, eigvecs = np.linalg.eigh(basis.T @ cov @ basis)
    if eigvals[-1] <= 1e-12:
        return None
    axis = basis @ eigvecs[:, 0]
    if axis[np.argmax(np.abs(axis))] < 0:
        axis = -axis
    return axis / np.linalg.norm(axis)


def _cap_directions(count: int, max_tilt: float, rng: np.random.Generator) -> np.ndarray:
    cos_t = rng.uniform(math.cos(max_tilt), 1.0, size=count)
    phi = rng.uniform(0.0, 2.0 * math.pi, size=count)
    sin_t = np.sqrt(1.0 - cos_t**2)
    return np.column_stack([sin_t * np.cos(phi), sin_t * np.sin(phi), cos_t])


def heuristic_propose(
    cloud: CloudLike,
    count: int,
    seed: int,
    max_tilt: float = math.radians(60.0),
) -> List[Grasp]:
    """Palm poses looking at the centroid from a cap above the object.

    The first proposal is always top-down. Every palm is slid along its
    approach axis so the nearest surface sits at the nominal standoff.
    """
    points = cloud_points(cloud)
    if points.shape[0] < 10:
        raise ValueError(f"heuristic_propose needs at least 10 points, got {points.shape[0]}")
    if count < 1:
        return []

    rng = np.random.default_rng(seed)
    centroid = points.mean(axis=0)
    cov = np.cov(points.T)
    eigvals = np.linalg.eigvalsh(cov)
    degenerate = int(np.sum(eigvals > 1e-10 * max(eigvals[-1], 1e-30))) < 2
    radius = float(np.linalg.norm(points - centroid, axis=1).max()) + PALM_OFFSET_M

    if degenerate:
        directions = np.tile(UP, (count, 1))
    else:
        directions = np.vstack([UP, _cap_directions(count - 1, max_tilt, rng)])

    grasps: List[Grasp] = []
    for slot, direction in enumerate(directions):
        approach = -direction
        if degenerate:
            yaw = math.pi * slot / count
            hint = np.array([math.cos(yaw), math.sin(yaw), 0.0])
        else:
            hint = closing_axis(points, approach, cov)
            if hint is None:
                hint = np.array([1.0, 0.0, 0.0])
        rotation = frame_from_axes(approach, hint)
        translation = centroid + direction * radius

        local = palm_local(points, translation, rotation)
        corridor = _corridor(local)
        if corridor.any():
            slide = float(local[corridor, 2].min()) - NOMINAL_STANDOFF_M
            translation = translation + rotation[:, 2] * slide
            local[:, 2] -= slide

        width = float(np.ptp(local[:, 0]))
        fingers = finger_configuration(width)
        score = _score_local(local)
        grasps.append(Grasp(translation, rotation, fingers, score, slot))
    return grasps


class GraspProposer(Protocol):
    def propose(self, encoding: Optional[BpsEncoding], cloud: CloudLike, count: int, seed: int) -> List[Grasp]:
        ...

    def evaluate(self, pose: Pose, fingers: np.ndarray, cloud: CloudLike) -> float:
        ...


@dataclass(frozen=True)
class HeuristicGraspBackend:
    """Geometric stand-in for a learned grasp generator and evaluator."""

    max_tilt: float = math.radians(60.0)

    def propose(self, encoding: Optional[BpsEncoding], cloud: CloudLike, count: int, seed: int) -> List[Grasp]:
        return heuristic_propose(cloud, count, seed, self.max_tilt)

    def evaluate(self, pose: Pose, fingers: np.ndarray, cloud: CloudLike) -> float:
        return heuristic_evaluate(pose, fingers, cloud)


def make_backend(params: SystemParams) -> GraspProposer:
    if params.grasp_backend == "heuristic":
        return HeuristicGraspBackend(params.approach_max_tilt)
    raise ValueError(f"Unknown grasp backend '{params.grasp_backend}'")


@dataclass(frozen=True)
class WorkspaceReach:
    """Geometric reachability: inside the workspace ball and above the table."""

    radius: float = 0.9
    min_height: float = 0.0

    def __call__(self, grasp: Grasp) -> bool:
        t = grasp.translation
        return bool(np.linalg.norm(t) <= self.radius and t[2] >= self.min_height)


def grasp_metric(grasp: Grasp, robot: Pose, weights: MetricWeights) -> float:
    """Weighted success score minus weighted distance to the robot pose.

    The rotational distance is the Euclidean norm between the canonical
    axis-angle vectors, not the geodesic angle between the rotations.
    """
    semantic = weights.success * grasp.score
    rotation_gap = canonicalize(grasp.orientation) - canonicalize(robot.orientation)
    geometric = -(
        weights.translation * np.linalg.norm(grasp.translation - robot.translation)
        + weights.rotation * np.linalg.norm(rotation_gap)
    )
    return float(semantic + geometric)


def rank_grasps(grasps: Sequence[Grasp], robot: Pose, weights: MetricWeights) -> List[Grasp]:
    """Descending metric; ties by higher score, then nearer translation."""
    def key(g: Grasp):
        return (
            -grasp_metric(g, robot, weights),
            -g.score,
            float(np.linalg.norm(g.translation - robot.translation)),
        )

    return sorted(grasps, key=key)


def select_grasp(
    grasps: Sequence[Grasp],
    robot: Pose,
    weights: MetricWeights,
    reach: Reachability,
) -> Optional[Grasp]:
    if not grasps:
        raise ValueError("select_grasp requires at least one grasp")
    for grasp in rank_grasps(grasps, robot, weights):
        if reach(grasp):
            return grasp
    logger.warning(f"None of {len(grasps)} grasps is reachable")
    return None


def select_with_hysteresis(
    grasps: Sequence[Grasp],
    robot: Pose,
    weights: MetricWeights,
    reach: Reachability,
    previous_slot: Optional[int],
    margin: float,
) -> Optional[Grasp]:
    """Keep the previous proposal slot unless the best candidate beats it by margin."""
    best = select_grasp(grasps, robot, weights, reach)
    if best is None or previous_slot is None or best.slot == previous_slot:
        return best
    previous = next((g for g in grasps if g.slot == previous_slot), None)
    if previous is None or not reach(previous):
        return best
    if grasp_metric(best, robot, weights) > grasp_metric(previous, robot, weights) + margin:
        return best
    return previous
