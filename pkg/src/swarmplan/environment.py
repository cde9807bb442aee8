"""World model: bounds, spherical obstacles, UAV starts, task points.

Scenario documents are JSON with the layout::

    {
      "bounds": {"min": [x, y, z], "max": [x, y, z]},
      "obstacles": [{"center": [x, y, z], "radius": r}, ...],
      "uavs": [{"start": [x, y, z], "energy_budget": E or null}, ...],
      "tasks": [[x, y, z], ...],
      "r_safe": 1.0,
      "cruise_speed": 5.0,
      "weights": {"trajectory": [w1..w5], "allocation": [w1..w3]},
      "energy_coeffs": {"alpha": 1.0, "beta": 0.1}
    }

Lengths are meters and speeds m/s.  ``obstacles``, ``r_safe``,
``cruise_speed``, ``weights``, ``energy_coeffs`` and ``energy_budget`` are
optional (a null budget means unlimited).  Unknown keys are rejected.
"""
from __future__ import annotations

import json
import math
from dataclasses import InitVar, dataclass
from functools import cached_property
from typing import List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, ValidationError

from .errors import ScenarioParseError, ScenarioValidationError

Point = Tuple[float, float, float]

DEFAULT_R_SAFE = 1.0
DEFAULT_CRUISE_SPEED = 5.0
DEFAULT_TRAJECTORY_WEIGHTS = (1.0, 10.0, 1.0, 0.1, 1.0)
DEFAULT_ALLOCATION_WEIGHTS = (1.0, 1.0, 1.0)
DEFAULT_ENERGY_COEFFS = (1.0, 0.1)


def _point(value, name) -> Point:
    arr = np.asarray(value, dtype=float)
    if arr.shape != (3,):
        raise ScenarioValidationError("expected a 3D point", name)
    if not np.all(np.isfinite(arr)):
        raise ScenarioValidationError("coordinates must be finite", name)
    return tuple(float(v) for v in arr)


@dataclass(frozen=True)
class Obstacle:
    center: Point
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", _point(self.center, "center"))
        object.__setattr__(self, "radius", float(self.radius))
        if not (self.radius > 0 and math.isfinite(self.radius)):
            raise ScenarioValidationError(f"radius must be > 0, got {self.radius}", "radius")


@dataclass(frozen=True)
class WorldBounds:
    min_corner: Point
    max_corner: Point

    def __post_init__(self):
        object.__setattr__(self, "min_corner", _point(self.min_corner, "bounds.min"))
        object.__setattr__(self, "max_corner", _point(self.max_corner, "bounds.max"))
        if not all(a < b for a, b in zip(self.min_corner, self.max_corner)):
            raise ScenarioValidationError("min must be < max componentwise", "bounds")

    @property
    def lower(self) -> np.ndarray:
        return np.array(self.min_corner)

    @property
    def upper(self) -> np.ndarray:
        return np.array(self.max_corner)


def inside_bounds(point, bounds: WorldBounds) -> bool:
    p = np.asarray(point, dtype=float)
    return bool(np.all(p >= bounds.lower) and np.all(p <= bounds.upper))


@dataclass(frozen=True)
class Scenario:
    bounds: WorldBounds
    uav_starts: Tuple[Point, ...]
    tasks: Tuple[Point, ...]
    obstacles: Tuple[Obstacle, ...] = ()
    r_safe: float = DEFAULT_R_SAFE
    cruise_speed: float = DEFAULT_CRUISE_SPEED
    energy_budgets: Optional[Tuple[float, ...]] = None
    trajectory_weights: Tuple[float, ...] = DEFAULT_TRAJECTORY_WEIGHTS
    allocation_weights: Tuple[float, ...] = DEFAULT_ALLOCATION_WEIGHTS
    energy_coeffs: Tuple[float, float] = DEFAULT_ENERGY_COEFFS
    # scripted mid-mission edits skip the placement checks on starts/tasks
    validate: InitVar[bool] = True

    def __post_init__(self, validate):
        set_ = lambda k, v: object.__setattr__(self, k, v)  # noqa: E731
        set_("obstacles", tuple(self.obstacles))
        set_("uav_starts", tuple(_point(p, f"uavs[{k}].start") for k, p in enumerate(self.uav_starts)))
        set_("tasks", tuple(_point(p, f"tasks[{j}]") for j, p in enumerate(self.tasks)))
        if self.energy_budgets is None:
            set_("energy_budgets", (math.inf,) * len(self.uav_starts))
        set_("energy_budgets", tuple(float(e) for e in self.energy_budgets))
        set_("trajectory_weights", tuple(float(w) for w in self.trajectory_weights))
        set_("allocation_weights", tuple(float(w) for w in self.allocation_weights))
        set_("energy_coeffs", tuple(float(c) for c in self.energy_coeffs))
        set_("r_safe", float(self.r_safe))
        set_("cruise_speed", float(self.cruise_speed))
        if validate:
            self._validate()

    def _validate(self):
        if len(self.uav_starts) < 1:
            raise ScenarioValidationError("at least one UAV is required", "uavs")
        if len(self.tasks) < 1:
            raise ScenarioValidationError("at least one task is required", "tasks")
        if not (self.r_safe > 0 and math.isfinite(self.r_safe)):
            raise ScenarioValidationError("must be > 0", "r_safe")
        if not (self.cruise_speed > 0 and math.isfinite(self.cruise_speed)):
            raise ScenarioValidationError("must be > 0", "cruise_speed")
        if len(self.energy_budgets) != len(self.uav_starts):
            raise ScenarioValidationError("one budget per UAV", "energy_budgets")
        for k, e in enumerate(self.energy_budgets):
            if not e >= 0:
                raise ScenarioValidationError("must be >= 0", f"uavs[{k}].energy_budget")
        for name, ws, size in (
            ("weights.trajectory", self.trajectory_weights, 5),
            ("weights.allocation", self.allocation_weights, 3),
        ):
            if len(ws) != size:
                raise ScenarioValidationError(f"expected {size} weights", name)
            for i, w in enumerate(ws):
                if not (w >= 0 and math.isfinite(w)):
                    raise ScenarioValidationError("weights must be finite and >= 0", f"{name}[{i}]")
        if not any(w > 0 for w in self.trajectory_weights):
            raise ScenarioValidationError("at least one weight must be > 0", "weights.trajectory")
        if len(self.energy_coeffs) != 2 or not all(c >= 0 and math.isfinite(c) for c in self.energy_coeffs):
            raise ScenarioValidationError("alpha and beta must be finite and >= 0", "energy_coeffs")
        for label, pts in (("uavs[{}].start", self.uav_starts), ("tasks[{}]", self.tasks)):
            for idx, p in enumerate(pts):
                name = label.format(idx)
                if not inside_bounds(p, self.bounds):
                    raise ScenarioValidationError("outside world bounds", name)
                for m, obs in enumerate(self.obstacles):
                    gap = math.dist(p, obs.center) - obs.radius
                    if gap < self.r_safe:
                        raise ScenarioValidationError(
                            f"inside obstacle {m} inflated by r_safe", name
                        )

    @property
    def n_uavs(self) -> int:
        return len(self.uav_starts)

    @property
    def n_tasks(self) -> int:
        return len(self.tasks)

    @cached_property
    def obstacle_centers(self) -> np.ndarray:
        return np.array([o.center for o in self.obstacles], dtype=float).reshape(-1, 3)

    @cached_property
    def obstacle_radii(self) -> np.ndarray:
        return np.array([o.radius for o in self.obstacles], dtype=float)

    @property
    def alpha_e(self) -> float:
        return self.energy_coeffs[0]

    @property
    def beta_e(self) -> float:
        return self.energy_coeffs[1]


def clearance(point, scenario: Scenario):
    """Signed distance to the nearest obstacle surface (positive in free space).

    Accepts a single point or any ``(..., 3)`` array; with no obstacles the
    result is the largest representable float.
    """
    p = np.asarray(point, dtype=float)
    if not scenario.obstacles:
        out = np.full(p.shape[:-1], np.finfo(float).max)
        return float(out) if out.ndim == 0 else out
    c = scenario.obstacle_centers
    d2 = (p[..., 0, None] - c[:, 0]) ** 2
    d2 += (p[..., 1, None] - c[:, 1]) ** 2
    d2 += (p[..., 2, None] - c[:, 2]) ** 2
    out = (np.sqrt(d2) - scenario.obstacle_radii).min(axis=-1)
    return float(out) if out.ndim == 0 else out


# --- document schema ---------------------------------------------------------

class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class _Bounds(_Strict):
    min: List[float]
    max: List[float]


class _Obstacle(_Strict):
    center: List[float]
    radius: float


class _Uav(_Strict):
    start: List[float]
    energy_budget: Optional[float] = None


class _Weights(_Strict):
    trajectory: List[float] = list(DEFAULT_TRAJECTORY_WEIGHTS)
    allocation: List[float] = list(DEFAULT_ALLOCATION_WEIGHTS)


class _EnergyCoeffs(_Strict):
    alpha: float = DEFAULT_ENERGY_COEFFS[0]
    beta: float = DEFAULT_ENERGY_COEFFS[1]


class ScenarioDocument(_Strict):
    bounds: _Bounds
    obstacles: List[_Obstacle] = []
    uavs: List[_Uav]
    tasks: List[List[float]]
    r_safe: float = DEFAULT_R_SAFE
    cruise_speed: float = DEFAULT_CRUISE_SPEED
    weights: _Weights = _Weights()
    energy_coeffs: _EnergyCoeffs = _EnergyCoeffs()


def _loc(err) -> str:
    out = ""
    for part in err["loc"]:
        out += f"[{part}]" if isinstance(part, int) else (f".{part}" if out else str(part))
    return out


def scenario_from_dict(data) -> Scenario:
    try:
        doc = ScenarioDocument.model_validate(data)
    except ValidationError as exc:
        first = exc.errors()[0]
        raise ScenarioValidationError(first["msg"], _loc(first)) from exc
    obstacles = []
    for m, o in enumerate(doc.obstacles):
        try:
            obstacles.append(Obstacle(o.center, o.radius))
        except ScenarioValidationError as exc:
            raise ScenarioValidationError(str(exc), f"obstacles[{m}]") from exc
    budgets = tuple(math.inf if u.energy_budget is None else u.energy_budget for u in doc.uavs)
    return Scenario(
        bounds=WorldBounds(doc.bounds.min, doc.bounds.max),
        uav_starts=tuple(u.start for u in doc.uavs),
        tasks=tuple(doc.tasks),
        obstacles=tuple(obstacles),
        r_safe=doc.r_safe,
        cruise_speed=doc.cruise_speed,
        energy_budgets=budgets,
        trajectory_weights=tuple(doc.weights.trajectory),
        allocation_weights=tuple(doc.weights.allocation),
        energy_coeffs=(doc.energy_coeffs.alpha, doc.energy_coeffs.beta),
    )


def load_scenario(text: str) -> Scenario:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioParseError(f"malformed JSON: {exc}") from exc
    return scenario_from_dict(data)


def load_scenario_file(path) -> Scenario:
    with open(path, encoding="utf-8") as fh:
        return load_scenario(fh.read())


def scenario_to_dict(scenario: Scenario) -> dict:
    return {
        "bounds": {"min": list(scenario.bounds.min_corner), "max": list(scenario.bounds.max_corner)},
        "obstacles": [{"center": list(o.center), "radius": o.radius} for o in scenario.obstacles],
        "uavs": [
            {"start": list(s), "energy_budget": None if math.isinf(e) else e}
            for s, e in zip(scenario.uav_starts, scenario.energy_budgets)
        ],
        "tasks": [list(t) for t in scenario.tasks],
        "r_safe": scenario.r_safe,
        "cruise_speed": scenario.cruise_speed,
        "weights": {
            "trajectory": list(scenario.trajectory_weights),
            "allocation": list(scenario.allocation_weights),
        },
        "energy_coeffs": {"alpha": scenario.alpha_e, "beta": scenario.beta_e},
    }


def dump_scenario(scenario: Scenario) -> str:
    return json.dumps(scenario_to_dict(scenario), indent=2)
