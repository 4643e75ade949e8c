"""Scenario documents (JSON) and the planner configuration they carry."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from functools import cached_property
from typing import Any

import numpy as np

from .corridor import Corridor, ObstaclePolygon, apply_polygon_obstacle, corridor_from_profiles
from .errors import GeometryError, ScenarioError
from .geometry import ReferencePath, build_reference_path
from .vehicle import ActuatorLimits, VehicleGeometry, VehicleStateZ


@dataclass(frozen=True)
class Weights:
    center: float = 1.0
    smooth: float = 10.0
    overhang: float = 10.0


@dataclass(frozen=True)
class SqpSettings:
    max_iter: int = 20
    tol: float = 1e-3
    trust_y: float = 0.3
    trust_psi: float = 0.1
    trust_u: float = 0.02

    def __post_init__(self):
        if self.max_iter < 1:
            raise ScenarioError("max_iter must be at least 1", "sqp.max_iter")
        for name in ("tol", "trust_y", "trust_psi", "trust_u"):
            if not getattr(self, name) > 0:
                raise ScenarioError("must be positive", f"sqp.{name}")


@dataclass(frozen=True)
class StartState:
    s: float = 0.0
    e_y: float = 0.0
    e_psi: float = 0.0
    u: float | None = None

    @property
    def z(self) -> VehicleStateZ:
        return VehicleStateZ(self.e_y, self.e_psi)


@dataclass(frozen=True, eq=False)
class Scenario:
    waypoints: tuple
    delta_s: float
    corridor_left: tuple
    corridor_right: tuple
    vehicle: VehicleGeometry = field(default_factory=VehicleGeometry)
    start: StartState = field(default_factory=StartState)
    limits: ActuatorLimits = field(default_factory=ActuatorLimits)
    obstacles: tuple = ()
    weights: Weights = field(default_factory=Weights)
    sqp: SqpSettings = field(default_factory=SqpSettings)
    edge_points: int = 8
    wheelbase_points: int = 4
    name: str = ""

    @cached_property
    def path(self) -> ReferencePath:
        return build_reference_path(self.waypoints, self.delta_s)

    @cached_property
    def corridor(self) -> Corridor:
        corridor = corridor_from_profiles(self.path.stations, self.corridor_left, self.corridor_right)
        for poly in self.obstacles:
            corridor = apply_polygon_obstacle(corridor, self.path, poly)
        corridor.validate()
        return corridor

    @property
    def start_index(self) -> int:
        return int(round(self.start.s / self.delta_s))

    def with_overrides(self, **changes) -> "Scenario":
        data = {f: getattr(self, f) for f in self.__dataclass_fields__}
        data.update(changes)
        return Scenario(**data)

    def to_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "path": {"waypoints": [list(p) for p in self.waypoints], "delta_s": self.delta_s},
            "vehicle": asdict(self.vehicle),
            "start": asdict(self.start),
            "limits": asdict(self.limits),
            "corridor": {
                "left": [list(r) for r in self.corridor_left],
                "right": [list(r) for r in self.corridor_right],
            },
            "obstacles": [{"vertices": [list(v) for v in o.vertices], "label": o.label} for o in self.obstacles],
            "weights": asdict(self.weights),
            "sqp": asdict(self.sqp),
            "sampling": {"K": self.edge_points, "M": self.wheelbase_points},
        }


def _section(doc, key, required=False):
    value = doc.get(key)
    if value is None:
        if required:
            raise ScenarioError("missing required section", key)
        return {}
    if not isinstance(value, dict):
        raise ScenarioError("must be an object", key)
    return value


def _build(cls, data, section, allowed):
    unknown = set(data) - set(allowed)
    if unknown:
        raise ScenarioError(f"unknown keys {sorted(unknown)}", section)
    kwargs = {}
    for key, value in data.items():
        if value is not None and not isinstance(value, (int, float)) or isinstance(value, bool):
            raise ScenarioError("must be a number", f"{section}.{key}")
        if value is not None and not math.isfinite(value):
            raise ScenarioError("must be finite", f"{section}.{key}")
        kwargs[key] = value
    try:
        return cls(**kwargs)
    except ScenarioError:
        raise
    except (TypeError, ValueError) as exc:
        raise ScenarioError(str(exc), section) from None


def scenario_from_dict(doc: dict[str, Any]) -> Scenario:
    if not isinstance(doc, dict):
        raise ScenarioError("scenario document must be a JSON object")
    path = _section(doc, "path", required=True)
    if "waypoints" not in path:
        raise ScenarioError("missing", "path.waypoints")
    waypoints = path["waypoints"]
    try:
        wp = np.asarray(waypoints, dtype=float)
    except (TypeError, ValueError):
        raise ScenarioError("must be a list of [x, y] pairs", "path.waypoints") from None
    if wp.ndim != 2 or wp.shape[1] != 2:
        raise ScenarioError("must be a list of [x, y] pairs", "path.waypoints")
    delta_s = path.get("delta_s", 0.5)
    if not isinstance(delta_s, (int, float)) or not delta_s > 0:
        raise ScenarioError("must be a positive number", "path.delta_s")

    corridor = _section(doc, "corridor", required=True)
    for side in ("left", "right"):
        if side not in corridor:
            raise ScenarioError("missing", f"corridor.{side}")

    obstacles = []
    raw_obstacles = doc.get("obstacles") or []
    if not isinstance(raw_obstacles, list):
        raise ScenarioError("must be a list", "obstacles")
    for k, item in enumerate(raw_obstacles):
        if not isinstance(item, dict) or "vertices" not in item:
            raise ScenarioError("each obstacle needs 'vertices'", f"obstacles[{k}]")
        try:
            obstacles.append(ObstaclePolygon(tuple(map(tuple, item["vertices"])), item.get("label", "obstacle")))
        except ScenarioError as exc:
            raise ScenarioError(str(exc), f"obstacles[{k}]") from None
        except (TypeError, ValueError):
            raise ScenarioError("vertices must be [x, y] pairs", f"obstacles[{k}]") from None

    sampling = _section(doc, "sampling")
    weights = _section(doc, "weights")
    sqp = _section(doc, "sqp")
    if "max_iter" in sqp and not (isinstance(sqp["max_iter"], int) and not isinstance(sqp["max_iter"], bool)):
        raise ScenarioError("must be an integer", "sqp.max_iter")

    try:
        scenario = Scenario(
            waypoints=tuple(map(tuple, wp.tolist())),
            delta_s=float(delta_s),
            corridor_left=tuple(map(tuple, np.asarray(corridor["left"], dtype=float).tolist())),
            corridor_right=tuple(map(tuple, np.asarray(corridor["right"], dtype=float).tolist())),
            vehicle=_build(VehicleGeometry, _section(doc, "vehicle"), "vehicle",
                           ("wheelbase", "width", "front_overhang", "rear_overhang")),
            start=_build(StartState, _section(doc, "start"), "start", ("s", "e_y", "e_psi", "u")),
            limits=_build(ActuatorLimits, _section(doc, "limits"), "limits", ("u_max", "u_rate_max")),
            obstacles=tuple(obstacles),
            weights=_build(Weights, weights, "weights", ("center", "smooth", "overhang")),
            sqp=_build(SqpSettings, sqp, "sqp", ("max_iter", "tol", "trust_y", "trust_psi", "trust_u")),
            edge_points=int(sampling.get("K", 8)),
            wheelbase_points=int(sampling.get("M", 4)),
            name=str(doc.get("name", "")),
        )
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ScenarioError):
            raise
        raise ScenarioError(str(exc), "corridor") from None
    validate_scenario(scenario)
    return scenario


def validate_scenario(scenario: Scenario) -> None:
    """Build path and corridor and check every cross-field invariant."""
    try:
        path = scenario.path
    except GeometryError as exc:
        raise ScenarioError(str(exc), "path") from None
    if scenario.edge_points < 2 or scenario.wheelbase_points < 2:
        raise ScenarioError("K and M must be at least 2", "sampling")
    corridor = scenario.corridor
    start = scenario.start
    if not 0.0 <= start.s <= path.length:
        raise ScenarioError(f"start station {start.s} outside [0, {path.length:.6g}]", "start.s")
    if not abs(start.e_psi) < 0.5 * math.pi:
        raise ScenarioError("|e_psi| must be below pi/2", "start.e_psi")
    i0 = scenario.start_index
    b = corridor[i0]
    if not b.drivable_right <= start.e_y <= b.drivable_left:
        raise ScenarioError(
            f"start e_y {start.e_y} outside drivable band [{b.drivable_right:.6g}, {b.drivable_left:.6g}]",
            "start.e_y",
        )
    if start.u is not None and abs(start.u) > scenario.limits.u_max:
        raise ScenarioError("start curvature exceeds u_max", "start.u")


def load_scenario(text: str) -> Scenario:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"parse error at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return scenario_from_dict(doc)


def load_scenario_file(path) -> Scenario:
    with open(path, encoding="utf-8") as fh:
        return load_scenario(fh.read())
