"""
Controllers package - Perception, grasping, control and run orchestration.
"""

from .simulation_controller import run_scenario
from .sweep import SweepSpec, run_sweep
from .data_service import RunDataService

__all__ = ["run_scenario", "SweepSpec", "run_sweep", "RunDataService"]
