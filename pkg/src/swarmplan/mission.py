"""Multi-UAV mission orchestration.

Tasks are allocated by the GA, then every UAV plans its legs with its own
PE-PSO planner against the trajectories its peers have most recently
published.  A simulated clock moves UAVs along accepted trajectories at
cruise speed; scripted events (obstacles appearing or vanishing, tasks
moving) invalidate trajectories and trigger replanning.

Replanning runs under either an iteration budget (deterministic) or a
wall-clock budget ``t_max`` in seconds.
"""
from __future__ import annotations

import csv
import json
import os
import time
from dataclasses import asdict, dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .allocation import GaConfig, solve_allocation
from .environment import Obstacle, Scenario, scenario_to_dict
from .errors import ConfigurationError, MissionError, SwarmPlanError
from .geometry import DEFAULT_ORDER, DEFAULT_SAMPLES, SampledPath
from .objectives import DEFAULT_FREE_POINTS, EPS_END, CostBreakdown, TrajectoryProblem, is_legal
from .pe_pso import SwarmConfig, init_swarm, pool_best, record, rescore, step

BUDGET_MODES = ("iterations", "wallclock")
EVENT_KINDS = ("obstacle-add", "obstacle-remove", "task-move")
STALL_FACTOR = 10


@dataclass(frozen=True)
class PlannerSettings:
    """Per-leg planner parameters; bounds and seed are filled in per leg."""

    n_particles: int = 100
    reset_rate: float = 0.5
    entropy_bins: int = 10
    w_range: tuple = (0.4, 0.9)
    c1_range: tuple = (1.0, 2.0)
    c2_range: tuple = (1.0, 2.0)
    pool_capacity: int = 50
    n_free: int = DEFAULT_FREE_POINTS
    order: int = DEFAULT_ORDER
    n_samples: int = DEFAULT_SAMPLES
    seed_straight_line: bool = True

    def swarm_config(self, lower, upper, seed: int) -> SwarmConfig:
        return SwarmConfig(
            lower, upper, n_particles=self.n_particles, reset_rate=self.reset_rate,
            entropy_bins=self.entropy_bins, w_range=tuple(self.w_range),
            c1_range=tuple(self.c1_range), c2_range=tuple(self.c2_range),
            pool_capacity=self.pool_capacity, seed=seed,
        )


@dataclass(frozen=True)
class Event:
    time: float
    kind: str
    center: Optional[tuple] = None
    radius: Optional[float] = None
    index: Optional[int] = None
    task: Optional[int] = None
    position: Optional[tuple] = None

    def __post_init__(self):
        if self.kind not in EVENT_KINDS:
            raise ConfigurationError(f"unknown event kind {self.kind!r}")
        if self.kind == "obstacle-add" and (self.center is None or self.radius is None):
            raise ConfigurationError("obstacle-add needs center and radius")
        if self.kind == "obstacle-remove" and self.index is None:
            raise ConfigurationError("obstacle-remove needs index")
        if self.kind == "task-move" and (self.task is None or self.position is None):
            raise ConfigurationError("task-move needs task and position")

    def to_dict(self) -> dict:
        d = {k: (list(v) if isinstance(v, tuple) else v) for k, v in asdict(self).items() if v is not None}
        d["type"] = d.pop("kind")
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Event":
        d = dict(d)
        kind = d.pop("type", None) or d.pop("kind", None)
        for key in ("center", "position"):
            if key in d and d[key] is not None:
                d[key] = tuple(float(v) for v in d[key])
        try:
            return cls(kind=kind, **d)
        except TypeError as exc:
            raise ConfigurationError(f"bad event {d}: {exc}") from exc


@dataclass(frozen=True, eq=False)
class MissionConfig:
    scenario: Scenario
    planner: PlannerSettings = PlannerSettings()
    ga: GaConfig = GaConfig()
    t_max: float = 0.3
    replan_iterations: int = 20
    budget_mode: str = "iterations"
    events: tuple = ()
    sim_step: float = 0.5
    max_sim_time: float = 600.0
    seed: int = 0

    def __post_init__(self):
        if not self.t_max > 0:
            raise ConfigurationError("t_max must be > 0")
        if not self.sim_step > 0:
            raise ConfigurationError("sim_step must be > 0")
        if self.replan_iterations < 1:
            raise ConfigurationError("replan_iterations must be >= 1")
        if self.budget_mode not in BUDGET_MODES:
            raise ConfigurationError(f"budget_mode must be one of {BUDGET_MODES}")
        times = [e.time for e in self.events]
        if times != sorted(times):
            raise ConfigurationError("events must be ordered by time")

    def echo(self) -> dict:
        return {
            "scenario": scenario_to_dict(self.scenario),
            "planner": asdict(self.planner),
            "ga": asdict(self.ga),
            "t_max": self.t_max,
            "replan_iterations": self.replan_iterations,
            "budget_mode": self.budget_mode,
            "events": [e.to_dict() for e in self.events],
            "sim_step": self.sim_step,
            "max_sim_time": self.max_sim_time,
            "seed": self.seed,
        }


# --- planner ------------------------------------------------------------------

class LegPlanner:
    """PE-PSO planner for one (UAV, task) leg; its swarm survives replans of that leg."""

    def __init__(self, uav: int, leg: int, task: int, scenario: Scenario, start, goal,
                 peers: dict, settings: PlannerSettings, seed: int):
        self.uav, self.leg, self.task = uav, leg, task
        self.settings = settings
        self._build(scenario, start, goal, peers)
        self.config = settings.swarm_config(self.problem.lower, self.problem.upper, seed)
        initial = self.problem.straight_line() if settings.seed_straight_line else None
        self.state = init_swarm(self.config, self.problem.fitness, initial)

    def _build(self, scenario, start, goal, peers: dict):
        self.peer_versions = {k: v for k, (v, _) in sorted(peers.items())}
        self.problem = TrajectoryProblem(
            scenario, start, goal, [p for _, (_, p) in sorted(peers.items())],
            n_free=self.settings.n_free, order=self.settings.order, n_samples=self.settings.n_samples,
        )

    @property
    def degenerate(self) -> bool:
        return bool(np.linalg.norm(self.problem.goal - self.problem.start) <= EPS_END)

    def refresh(self, scenario: Scenario, start, goal, peers: dict) -> bool:
        """Adopt a new world, endpoints or peer set; rescore the swarm if anything changed."""
        same = (
            scenario is self.problem.scenario
            and np.array_equal(start, self.problem.start)
            and np.array_equal(goal, self.problem.goal)
            and {k: v for k, (v, _) in peers.items()} == self.peer_versions
        )
        if same:
            return False
        self._build(scenario, start, goal, peers)
        self.state = rescore(self.state, self.problem.fitness, self.problem.legality)
        return True

    def advance(self):
        self.state = step(self.state, self.problem.fitness, self.config, self.problem.legality)
        return record(self.state)

    def best(self):
        if self.degenerate:
            x = self.problem.straight_line()
            return x if self.problem.is_legal(x) else None
        return pool_best(self.state.pool)


@dataclass
class ReplanResult:
    vector: Optional[np.ndarray]
    iterations: int
    first_legal: Optional[int]
    wall_ms: float
    records: list = field(default_factory=list)


def replan(planner: LegPlanner, scenario: Scenario, peers: dict, budget, mode: str = "iterations",
           start=None, goal=None) -> ReplanResult:
    """Step the planner within ``budget`` and return its pool's best legal vector.

    ``budget`` is an iteration count in ``"iterations"`` mode and seconds in
    ``"wallclock"`` mode.  A degenerate leg (start == goal) short-circuits to
    the zero-length trajectory without stepping.
    """
    t0 = time.perf_counter()
    planner.refresh(
        scenario,
        planner.problem.start if start is None else np.asarray(start, float),
        planner.problem.goal if goal is None else np.asarray(goal, float),
        peers,
    )
    records, iters = [], 0
    first = 0 if (planner.degenerate or len(planner.state.pool)) else None
    if not planner.degenerate:
        while True:
            if mode == "iterations":
                if iters >= budget:
                    break
            elif time.perf_counter() - t0 >= budget:
                break
            records.append(planner.advance())
            iters += 1
            if first is None and len(planner.state.pool):
                first = iters
    vec = planner.best()
    return ReplanResult(vec, iters, first, (time.perf_counter() - t0) * 1e3, records)


# --- mission log -------------------------------------------------------------------

@dataclass
class AcceptedTrajectory:
    uav: int
    leg: int
    task: int
    index: int
    sim_time: float
    path: SampledPath
    cost: CostBreakdown
    scenario_version: int
    peer_versions: dict
    version: int  # board version this trajectory was published under


@dataclass
class ReplanRecord:
    replan: int
    uav: int
    leg: int
    sim_time: float
    reason: str
    iterations: int
    first_legal: Optional[int]
    accepted: bool
    wall_ms: float


@dataclass
class MissionLog:
    assignment: list
    allocation_cost: dict
    accepted: list = field(default_factory=list)
    replans: list = field(default_factory=list)
    executed: dict = field(default_factory=dict)
    events: list = field(default_factory=list)
    visits: list = field(default_factory=list)
    stalls: list = field(default_factory=list)
    convergence: list = field(default_factory=list)
    scenarios: list = field(default_factory=list)
    completed: bool = False
    sim_time: float = 0.0


@dataclass
class _Uav:
    index: int
    position: np.ndarray
    queue: list
    leg: int = 0
    planner: Optional[LegPlanner] = None
    path: Optional[SampledPath] = None
    cumlen: Optional[np.ndarray] = None
    progress: float = 0.0
    reason: str = "new-leg"
    stall: float = 0.0
    n_accepted: int = 0

    @property
    def done(self) -> bool:
        return not self.queue


def _apply_event(scenario: Scenario, ev: Event) -> Scenario:
    if ev.kind == "obstacle-add":
        obstacles = scenario.obstacles + (Obstacle(ev.center, ev.radius),)
        return replace(scenario, obstacles=obstacles, validate=False)
    if ev.kind == "obstacle-remove":
        if not 0 <= ev.index < len(scenario.obstacles):
            raise MissionError(f"obstacle-remove index {ev.index} out of range")
        obstacles = scenario.obstacles[: ev.index] + scenario.obstacles[ev.index + 1:]
        return replace(scenario, obstacles=obstacles, validate=False)
    if not 0 <= ev.task < scenario.n_tasks:
        raise MissionError(f"task-move index {ev.task} out of range")
    tasks = list(scenario.tasks)
    tasks[ev.task] = tuple(ev.position)
    return replace(scenario, tasks=tuple(tasks), validate=False)


def _leg_seed(seed: int, uav: int, leg: int) -> int:
    return int(np.random.SeedSequence([seed, uav, leg]).generate_state(1)[0])


def run_mission(config: MissionConfig) -> MissionLog:
    scenario = config.scenario
    try:
        assignment, acost = solve_allocation(scenario, replace(config.ga, seed=config.seed))
    except SwarmPlanError as exc:
        raise MissionError(f"task allocation failed: {exc}") from exc

    log = MissionLog(assignment.to_list(), acost.as_dict())
    log.scenarios.append(scenario)
    uavs = [_Uav(k, np.array(s, dtype=float), list(t)) for k, (s, t) in enumerate(zip(scenario.uav_starts, assignment.tours))]
    for u in uavs:
        log.executed[u.index] = [(0.0, *u.position.tolist())]
    board: dict = {}  # uav -> (version, path); replaced whole on acceptance
    version = 0  # bumped on every publication
    budget = config.replan_iterations if config.budget_mode == "iterations" else config.t_max
    events = list(config.events)
    t = 0.0

    while True:
        while events and events[0].time <= t + 1e-12:
            ev = events.pop(0)
            scenario = _apply_event(scenario, ev)
            log.scenarios.append(scenario)
            invalidated = []
            for u in uavs:
                if u.done or u.path is None:
                    continue
                goal = scenario.tasks[u.queue[0]]
                if not is_legal(u.path, scenario, goal=goal):
                    u.path, u.cumlen, u.reason = None, None, "invalidated"
                    invalidated.append(u.index)
            log.events.append({"sim_time": t, **ev.to_dict(), "scenario_version": len(log.scenarios) - 1,
                               "invalidated": invalidated})

        for u in uavs:
            if u.done or u.path is not None:
                continue
            task = u.queue[0]
            goal = np.asarray(scenario.tasks[task], dtype=float)
            peers = {k: v for k, v in board.items() if k != u.index}
            if u.planner is None or u.planner.leg != u.leg:
                u.planner = LegPlanner(u.index, u.leg, task, scenario, u.position, goal, peers,
                                       config.planner, _leg_seed(config.seed, u.index, u.leg))
            res = replan(u.planner, scenario, peers, budget, config.budget_mode, u.position, goal)
            n = len(log.replans)
            for r in res.records:
                log.convergence.append({"replan": n, "uav": u.index, "leg": u.leg, **r._asdict()})
            accepted = res.vector is not None
            log.replans.append(ReplanRecord(n, u.index, u.leg, t, u.reason, res.iterations,
                                            res.first_legal, accepted, res.wall_ms))
            if not accepted:
                u.stall += budget if config.budget_mode == "iterations" else res.wall_ms / 1e3
                log.stalls.append({"sim_time": t, "uav": u.index, "leg": u.leg, "replan": n})
                if u.stall >= STALL_FACTOR * budget:
                    raise MissionError(f"no legal trajectory to task {task} within {STALL_FACTOR} budgets",
                                       uav=u.index, leg=u.leg)
                continue
            path = u.planner.problem.path(res.vector)
            if not is_legal(path, scenario, u.position, goal):
                raise MissionError("planner returned an illegal trajectory", uav=u.index, leg=u.leg)
            version += 1
            board[u.index] = (version, path)
            log.accepted.append(AcceptedTrajectory(
                u.index, u.leg, task, u.n_accepted, t, path,
                u.planner.problem.breakdown(res.vector), len(log.scenarios) - 1, dict(u.planner.peer_versions),
                version,
            ))
            u.n_accepted += 1
            u.path, u.progress, u.stall, u.reason = path, 0.0, 0.0, "new-leg"
            u.cumlen = np.concatenate([[0.0], np.cumsum(np.linalg.norm(np.diff(path.points, axis=0), axis=1))])

        if all(u.done for u in uavs):
            log.completed = True
            break
        if t >= config.max_sim_time - 1e-12:
            break

        t_next = t + config.sim_step
        for u in uavs:
            if u.done or u.path is None:
                if not u.done:
                    log.executed[u.index].append((t_next, *u.position.tolist()))
                continue
            u.progress += scenario.cruise_speed * config.sim_step
            total = u.cumlen[-1]
            if u.progress >= total:
                u.position = u.path.points[-1].copy()
                log.visits.append({"uav": u.index, "task": u.queue[0], "sim_time": t_next})
                u.queue.pop(0)
                u.leg += 1
                u.path, u.cumlen, u.planner, u.progress = None, None, None, 0.0
            else:
                u.position = np.array([np.interp(u.progress, u.cumlen, u.path.points[:, j]) for j in range(3)])
            log.executed[u.index].append((t_next, *u.position.tolist()))
        t = t_next

    log.sim_time = t
    return log


# --- run directory ----------------------------------------------------------------

def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def write_run_dir(log: MissionLog, config: MissionConfig, out_dir) -> list:
    """Serialise a mission log; returns the written file names.

    ``latency.csv`` and ``convergence.csv`` are deterministic in iteration
    mode; measured wall times go to ``timing.csv`` unless the run used the
    wall-clock budget, in which case ``latency.csv`` carries them too.
    """
    os.makedirs(out_dir, exist_ok=True)
    written = []

    summary = {
        "config": config.echo(),
        "assignment": log.assignment,
        "allocation_cost": log.allocation_cost,
        "events": log.events,
        "visits": log.visits,
        "stalls": log.stalls,
        "accepted": [
            {"uav": a.uav, "leg": a.leg, "task": a.task, "index": a.index, "sim_time": a.sim_time,
             "cost": a.cost.as_dict(), "scenario_version": a.scenario_version,
             "peer_versions": {str(k): v for k, v in a.peer_versions.items()}, "version": a.version,
             "file": f"uav_{a.uav}_trajectory_{a.index}.csv"}
            for a in log.accepted
        ],
        "completed": log.completed,
        "sim_time": log.sim_time,
    }
    with open(os.path.join(out_dir, "mission.json"), "w") as fh:
        json.dump(summary, fh, indent=2)
    written.append("mission.json")

    for a in log.accepted:
        name = f"uav_{a.uav}_trajectory_{a.index}.csv"
        rows = [(u, *p) for u, p in zip(a.path.u.tolist(), a.path.points.tolist())]
        _write_csv(os.path.join(out_dir, name), ("u", "x", "y", "z"), rows)
        written.append(name)

    for k, rows in sorted(log.executed.items()):
        name = f"uav_{k}_executed.csv"
        _write_csv(os.path.join(out_dir, name), ("t", "x", "y", "z"), rows)
        written.append(name)

    wall = config.budget_mode == "wallclock"
    header = ["replan", "uav", "leg", "sim_time", "reason", "iterations", "first_legal_iteration", "accepted"]
    rows = []
    for r in log.replans:
        row = [r.replan, r.uav, r.leg, r.sim_time, r.reason, r.iterations,
               "" if r.first_legal is None else r.first_legal, int(r.accepted)]
        rows.append(row + [r.wall_ms] if wall else row)
    _write_csv(os.path.join(out_dir, "latency.csv"), header + (["wall_ms"] if wall else []), rows)
    _write_csv(os.path.join(out_dir, "timing.csv"), ("replan", "wall_ms"),
               [(r.replan, r.wall_ms) for r in log.replans])
    written += ["latency.csv", "timing.csv"]

    conv_fields = ("replan", "uav", "leg", "iteration", "gbest_fitness", "entropy", "w", "c1", "c2", "pool_size")
    _write_csv(os.path.join(out_dir, "convergence.csv"), conv_fields,
               [[c[f] for f in conv_fields] for c in log.convergence])
    written.append("convergence.csv")
    return written


def mission_config_from_dict(data: dict, base_dir: str = ".", scenario: Optional[Scenario] = None) -> MissionConfig:
    """Build a MissionConfig from a mission document.

    The ``scenario`` key holds either an inline scenario object, a path
    relative to ``base_dir``, or ``"builtin:<name>"``.  A bare scenario
    document (one with ``bounds`` at top level) is also accepted.
    """
    from .environment import load_scenario_file, scenario_from_dict
    from .scenarios import BUILTIN

    data = dict(data)
    if "bounds" in data:
        data = {"scenario": data}
    allowed = {"scenario", "events", "t_max", "replan_iterations", "budget_mode", "sim_step",
               "max_sim_time", "planner", "ga", "seed"}
    unknown = set(data) - allowed
    if unknown:
        raise ConfigurationError(f"unknown mission keys: {sorted(unknown)}")
    if scenario is None:
        spec = data.get("scenario")
        if isinstance(spec, dict):
            scenario = scenario_from_dict(spec)
        elif isinstance(spec, str) and spec.startswith("builtin:"):
            name = spec.split(":", 1)[1]
            if name not in BUILTIN:
                raise ConfigurationError(f"unknown builtin scenario {name!r}")
            scenario = BUILTIN[name]()
        elif isinstance(spec, str):
            scenario = load_scenario_file(os.path.join(base_dir, spec))
        else:
            raise ConfigurationError("mission config needs a 'scenario'")
    kwargs = {k: data[k] for k in ("t_max", "replan_iterations", "budget_mode", "sim_step", "max_sim_time", "seed") if k in data}
    try:
        planner = PlannerSettings(**data.get("planner", {}))
        ga = GaConfig(**data.get("ga", {}))
    except TypeError as exc:
        raise ConfigurationError(str(exc)) from exc
    events = tuple(Event.from_dict(e) for e in data.get("events", []))
    return MissionConfig(scenario, planner=planner, ga=ga, events=events, **kwargs)


def load_events(path) -> tuple:
    with open(path) as fh:
        data = json.load(fh)
    if isinstance(data, dict):
        data = data.get("events", [])
    return tuple(Event.from_dict(e) for e in data)


def min_separation(a: SampledPath, b: SampledPath) -> float:
    """Smallest distance between two paths compared at equal sample indices."""
    return float(np.linalg.norm(a.points - b.points, axis=1).min())


def accepted_by_uav(log: MissionLog) -> dict:
    out: dict = {}
    for a in log.accepted:
        out.setdefault(a.uav, []).append(a)
    return out


__all__: Sequence[str] = (
    "Event", "LegPlanner", "MissionConfig", "MissionLog", "PlannerSettings", "replan",
    "run_mission", "write_run_dir", "mission_config_from_dict", "load_events",
)
