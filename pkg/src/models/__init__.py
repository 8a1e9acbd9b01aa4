"""
Models package - Geometry, scene, grasp and run-record types.
"""

from .geometry import PointCloud, Pose, RigidTransform
from .grasp import Grasp, MetricWeights
from .scene import CameraModel, FailureSchedule, ObjectModel, Trajectory
from .telemetry import LoopTelemetry, RunOutcome, RunSummary

__all__ = [
    "PointCloud",
    "Pose",
    "RigidTransform",
    "Grasp",
    "MetricWeights",
    "CameraModel",
    "FailureSchedule",
    "ObjectModel",
    "Trajectory",
    "LoopTelemetry",
    "RunOutcome",
    "RunSummary",
]
