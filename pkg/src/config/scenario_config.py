"""
Scenario configuration files.

A scenario is a YAML document with the sections `scenario`, `object`,
`trajectory`, `camera`, `robot`, `failures` and `params`. Every key has a
default, so an empty file describes the static default scene with the
default parameter values. Unknown sections or keys are rejected.
"""

from __future__ import annotations

import math
import os
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Any, Dict, List, Optional, Tuple

import yaml

from ..models.scene import CameraModel, FailureKind
from .logging_config import get_logger
from .system_params import SystemParams

logger = get_logger(__name__)


class ConfigError(ValueError):
    """Base class for scenario configuration problems."""


class ConfigParseError(ConfigError):
    pass


class ConfigValidationError(ConfigError):
    def __init__(self, keys: List[str], details: Optional[List[str]] = None):
        self.keys = list(keys)
        self.details = list(details or [])
        message = "Invalid configuration keys: " + ", ".join(self.keys)
        if self.details:
            message += " (" + "; ".join(self.details) + ")"
        super().__init__(message)


MODES = ("conveyor", "handover")
TRAJECTORY_KINDS = ("linear", "waypoint", "handover")
SHAPES = ("box", "cylinder", "sphere")


@dataclass(frozen=True)
class ScenarioSection:
    name: str = "default"
    mode: str = "conveyor"
    seed: int = 7
    duration_s: float = 30.0
    tick_rate_hz: float = 30.0
    lockstep: bool = False


@dataclass(frozen=True)
class ObjectSection:
    preset: Optional[str] = None
    shape: str = "box"
    dimensions: Tuple[float, ...] = (0.06, 0.10, 0.08)
    surface_samples: int = 2000


@dataclass(frozen=True)
class TrajectorySection:
    kind: str = "linear"
    start: Tuple[float, float, float] = (0.45, -0.40, 0.04)
    start_rotvec: Tuple[float, float, float] = (0.0, 0.0, 0.0)
    velocity: Tuple[float, float, float] = (0.0, 0.0, 0.0)
    start_delay_s: float = 0.0
    # rows of (t, x, y, z, rx, ry, rz)
    waypoints: Tuple[Tuple[float, ...], ...] = ()
    handover_goal: Tuple[float, float, float] = (0.47, -0.38, 0.12)
    handover_duration_s: float = 3.0


@dataclass(frozen=True)
class RobotSection:
    start: Tuple[float, float, float] = (0.45, -0.35, 0.40)
    start_rotvec: Tuple[float, float, float] = (math.pi, 0.0, 0.0)
    lag_s: float = 0.0


@dataclass(frozen=True)
class FailureSection:
    start: float
    end: float
    kind: str


@dataclass(frozen=True)
class ScenarioConfig:
    scenario: ScenarioSection = field(default_factory=ScenarioSection)
    object: ObjectSection = field(default_factory=ObjectSection)
    trajectory: TrajectorySection = field(default_factory=TrajectorySection)
    camera: CameraModel = field(default_factory=CameraModel)
    robot: RobotSection = field(default_factory=RobotSection)
    failures: Tuple[FailureSection, ...] = ()
    params: SystemParams = field(default_factory=SystemParams)

    def with_speed(self, speed: float) -> "ScenarioConfig":
        """Same scene with the conveyor running at `speed` along its direction."""
        velocity = self.trajectory.velocity
        norm = math.sqrt(sum(v * v for v in velocity))
        direction = tuple(v / norm for v in velocity) if norm > 0 else (0.0, 1.0, 0.0)
        moved = replace(self.trajectory, velocity=tuple(speed * d for d in direction))
        return replace(self, trajectory=moved)

    def with_seed(self, seed: int) -> "ScenarioConfig":
        return replace(self, scenario=replace(self.scenario, seed=int(seed)))

    def with_object(self, preset: str) -> "ScenarioConfig":
        return replace(self, object=replace(self.object, preset=preset))


_SECTIONS = {
    "scenario": ScenarioSection,
    "object": ObjectSection,
    "trajectory": TrajectorySection,
    "camera": CameraModel,
    "robot": RobotSection,
    "params": SystemParams,
}


def _coerce(value: Any, default: Any, key: str) -> Any:
    if default is None:
        return None if value is None else str(value)
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise TypeError(f"{key} must be true or false")
        return value
    if isinstance(default, int):
        if isinstance(value, bool) or float(value) != int(float(value)):
            raise TypeError(f"{key} must be an integer")
        return int(value)
    if isinstance(default, float):
        if isinstance(value, bool):
            raise TypeError(f"{key} must be a number")
        return float(value)
    if isinstance(default, str):
        return str(value)
    if isinstance(default, tuple):
        if not isinstance(value, (list, tuple)):
            raise TypeError(f"{key} must be a list")
        if default and not isinstance(default[0], tuple):
            if key.endswith("dimensions"):
                return tuple(float(v) for v in value)
            if len(value) != len(default):
                raise TypeError(f"{key} must have {len(default)} entries")
            return tuple(float(v) for v in value)
        return tuple(tuple(float(v) for v in row) for row in value)
    raise TypeError(f"{key}: unsupported value type")


def _build_section(cls, raw: Any, prefix: str, bad: List[str], details: List[str]):
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        bad.append(prefix)
        details.append(f"section '{prefix}' must be a mapping")
        return cls()
    defaults = cls()
    known = {f.name for f in fields(cls)}
    values: Dict[str, Any] = {}
    for key, value in raw.items():
        dotted = f"{prefix}.{key}"
        if key not in known:
            bad.append(dotted)
            details.append(f"unknown key '{dotted}'")
            continue
        try:
            values[key] = _coerce(value, getattr(defaults, key), dotted)
        except (TypeError, ValueError, OverflowError) as exc:
            bad.append(dotted)
            details.append(str(exc))
    return replace(defaults, **values)


def _build_failures(raw: Any, bad: List[str], details: List[str]) -> Tuple[FailureSection, ...]:
    if raw is None:
        return ()
    if not isinstance(raw, list):
        bad.append("failures")
        details.append("failures must be a list of {start, end, kind}")
        return ()
    out = []
    for i, item in enumerate(raw):
        key = f"failures[{i}]"
        try:
            if set(item) != {"start", "end", "kind"}:
                raise ValueError(f"{key} needs exactly start, end and kind")
            entry = FailureSection(float(item["start"]), float(item["end"]), str(item["kind"]))
            FailureKind(entry.kind)
            if not entry.end > entry.start >= 0:
                raise ValueError(f"{key} needs 0 <= start < end")
            out.append(entry)
        except (TypeError, ValueError) as exc:
            bad.append(key)
            details.append(str(exc))
    return tuple(out)


def config_from_dict(raw: Dict[str, Any]) -> ScenarioConfig:
    bad: List[str] = []
    details: List[str] = []
    for section in raw:
        if section not in _SECTIONS and section != "failures":
            bad.append(section)
            details.append(f"unknown section '{section}'")

    built = {
        name: _build_section(cls, raw.get(name), name, bad, details)
        for name, cls in _SECTIONS.items()
    }
    cfg = ScenarioConfig(failures=_build_failures(raw.get("failures"), bad, details), **built)

    bad.extend(f"params.{key}" for key in cfg.params.validate())
    bad.extend(f"camera.{key}" for key in cfg.camera.validate())
    if cfg.scenario.mode not in MODES:
        bad.append("scenario.mode")
    if not cfg.scenario.duration_s > 0:
        bad.append("scenario.duration_s")
    if not cfg.scenario.tick_rate_hz > 0:
        bad.append("scenario.tick_rate_hz")
    if cfg.trajectory.kind not in TRAJECTORY_KINDS:
        bad.append("trajectory.kind")
    if cfg.trajectory.kind == "waypoint" and not cfg.trajectory.waypoints:
        bad.append("trajectory.waypoints")
    if any(len(row) != 7 for row in cfg.trajectory.waypoints):
        bad.append("trajectory.waypoints")
    if cfg.trajectory.start_delay_s < 0:
        bad.append("trajectory.start_delay_s")
    if cfg.object.preset is None and cfg.object.shape not in SHAPES:
        bad.append("object.shape")
    if cfg.robot.lag_s < 0:
        bad.append("robot.lag_s")

    if bad:
        raise ConfigValidationError(list(dict.fromkeys(bad)), details)
    return cfg


def parse_config(path: str) -> ScenarioConfig:
    if not os.path.exists(path):
        raise FileNotFoundError(f"Scenario config not found: {path}")
    with open(path, "r", encoding="utf-8") as f:
        text = f.read()
    try:
        raw = yaml.safe_load(text) or {}
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"{path}:{mark.line + 1}:{mark.column + 1}" if mark is not None else path
        problem = getattr(exc, "problem", None) or str(exc)
        raise ConfigParseError(f"Malformed scenario file {where}: {problem}") from exc
    if not isinstance(raw, dict):
        raise ConfigParseError(f"Scenario file {path} must contain a mapping of sections")
    cfg = config_from_dict(raw)
    logger.debug(f"Loaded scenario '{cfg.scenario.name}' from {path}")
    return cfg


def _plain(value: Any) -> Any:
    if isinstance(value, tuple):
        return [_plain(v) for v in value]
    if isinstance(value, dict):
        return {k: _plain(v) for k, v in value.items()}
    return value


def config_to_dict(cfg: ScenarioConfig) -> Dict[str, Any]:
    out: Dict[str, Any] = {}
    for name in ("scenario", "object", "trajectory", "camera", "robot"):
        out[name] = _plain(asdict(getattr(cfg, name)))
    out["failures"] = [_plain(asdict(f)) for f in cfg.failures]
    out["params"] = _plain(asdict(cfg.params))
    return out


def serialize_config(cfg: ScenarioConfig) -> str:
    return yaml.safe_dump(config_to_dict(cfg), sort_keys=False)


def write_config(cfg: ScenarioConfig, path: str) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write(serialize_config(cfg))
