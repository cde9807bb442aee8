"""Trajectory and allocation cost functions.

Trajectory cost is the weighted sum of five terms::

    total = w1*D + w2*S + w3*C + w4*E + w5*T

    D  arc length of the sampled curve
    S  sum over samples of max(0, r_safe - clearance)**2
    C  max over samples and peers of 1 / max(eps_d, |p(t) - p_peer(t)|)
    E  alpha_E * D + beta_E * integral |v(u)|^2 du   (trapezoid rule)
    T  D / cruise_speed

Allocation cost is ``w1*total_distance + w2*max_time + w3*energy_violation``
over open tours (start -> tasks, no return leg).
"""
from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from .environment import Scenario, clearance
from .errors import ConfigurationError, InvalidAssignmentError
from .geometry import DEFAULT_ORDER, DEFAULT_SAMPLES, BSplineTrajectory, SampledPath, SplineSampler

EPS_D = 0.1
EPS_END = 1e-6
DEFAULT_FREE_POINTS = 6


@dataclass(frozen=True)
class CostBreakdown:
    distance: float
    safety: float
    collision: float
    energy: float
    time: float
    total: float

    def as_dict(self) -> dict:
        return asdict(self)


def _trapezoid(y, x):
    dx = np.diff(x)
    return ((y[..., 1:] + y[..., :-1]) * 0.5 * dx).sum(axis=-1)


def batch_cost_terms(points, velocities, u, scenario: Scenario, peers=None, eps_d: float = EPS_D,
                     clear=None) -> dict:
    """Raw cost terms for a batch of sampled curves.

    ``points`` and ``velocities`` are ``(B, S, 3)``; ``peers`` is ``(P, S, 3)``
    or None; ``clear`` optionally supplies precomputed clearances ``(B, S)``.
    Returns arrays of shape ``(B,)`` keyed by term name.
    """
    points = np.asarray(points, dtype=float)
    steps = np.diff(points, axis=-2)
    distance = np.sqrt(np.einsum("bsj,bsj->bs", steps, steps)).sum(axis=-1)

    if scenario.obstacles:
        if clear is None:
            clear = clearance(points, scenario)
        shortfall = np.maximum(0.0, scenario.r_safe - clear)
        safety = (shortfall**2).sum(axis=-1)
    else:
        safety = np.zeros(len(points))

    if peers is not None and len(peers):
        diff = points[:, :, None, :] - peers.transpose(1, 0, 2)[None]
        sep = np.sqrt(np.einsum("bspj,bspj->bsp", diff, diff))
        collision = (1.0 / np.maximum(eps_d, sep)).max(axis=(1, 2))
    else:
        collision = np.zeros(len(points))

    speed2 = np.einsum("bsj,bsj->bs", velocities, velocities)
    energy = scenario.alpha_e * distance + scenario.beta_e * _trapezoid(speed2, u)
    time = distance / scenario.cruise_speed

    w = scenario.trajectory_weights
    total = w[0] * distance + w[1] * safety + w[2] * collision + w[3] * energy + w[4] * time
    return {
        "distance": distance,
        "safety": safety,
        "collision": collision,
        "energy": energy,
        "time": time,
        "total": total,
    }


def _stack_peers(peers: Sequence[SampledPath], n_samples: int):
    if not peers:
        return None
    for l, peer in enumerate(peers):
        if len(peer) != n_samples:
            raise ConfigurationError(
                f"peer {l} has {len(peer)} samples, expected {n_samples}"
            )
    return np.stack([p.points for p in peers])


def trajectory_cost(path: SampledPath, scenario: Scenario, peers: Sequence[SampledPath] = ()) -> CostBreakdown:
    if path.velocities is None:
        raise ConfigurationError("trajectory_cost needs a path sampled with velocities")
    peer_pts = _stack_peers(peers, len(path))
    terms = batch_cost_terms(path.points[None], path.velocities[None], path.u, scenario, peer_pts)
    return CostBreakdown(**{k: float(v[0]) for k, v in terms.items()})


def batch_legality(points, scenario: Scenario, start=None, goal=None, eps_end: float = EPS_END,
                   clear=None) -> np.ndarray:
    points = np.asarray(points, dtype=float)
    lo, hi = scenario.bounds.lower, scenario.bounds.upper
    ok = np.all((points >= lo) & (points <= hi), axis=(-2, -1))
    if scenario.obstacles:
        if clear is None:
            clear = clearance(points, scenario)
        ok &= np.all(clear >= scenario.r_safe, axis=-1)
    if start is not None:
        ok &= np.linalg.norm(points[..., 0, :] - np.asarray(start, float), axis=-1) <= eps_end
    if goal is not None:
        ok &= np.linalg.norm(points[..., -1, :] - np.asarray(goal, float), axis=-1) <= eps_end
    return ok


def is_legal(path: SampledPath, scenario: Scenario, start=None, goal=None, eps_end: float = EPS_END) -> bool:
    """Legality predicate: in bounds, clearance >= r_safe everywhere, endpoints hit.

    Endpoint checks run only for the ``start``/``goal`` that are given.
    """
    return bool(batch_legality(path.points[None], scenario, start, goal, eps_end)[0])


def batched(fn):
    """Mark a fitness callable as taking a ``(N, d)`` array and returning ``(N,)``."""
    fn.batched = True
    return fn


class TrajectoryProblem:
    """Decision space for one leg: the free interior control points, flattened.

    The first and last control points are pinned to ``start`` and ``goal``.
    ``fitness`` and ``legality`` are batched over rows of decision vectors.
    """

    def __init__(
        self,
        scenario: Scenario,
        start,
        goal,
        peers: Sequence[SampledPath] = (),
        n_free: int = DEFAULT_FREE_POINTS,
        order: int = DEFAULT_ORDER,
        n_samples: int = DEFAULT_SAMPLES,
    ):
        self.scenario = scenario
        self.start = np.asarray(start, dtype=float)
        self.goal = np.asarray(goal, dtype=float)
        self.n_free = n_free
        self.sampler = SplineSampler(n_free + 2, order, n_samples)
        self.peers = tuple(peers)
        self._peer_pts = _stack_peers(self.peers, n_samples)
        self.lower = np.tile(scenario.bounds.lower, n_free)
        self.upper = np.tile(scenario.bounds.upper, n_free)
        self._cache = None

    @property
    def dimension(self) -> int:
        return 3 * self.n_free

    @property
    def order(self) -> int:
        return self.sampler.order

    @property
    def n_samples(self) -> int:
        return self.sampler.n_samples

    def control_points(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        inner = X.reshape(X.shape[:-1] + (self.n_free, 3))
        shape = inner.shape[:-2] + (1, 3)
        return np.concatenate(
            [np.broadcast_to(self.start, shape), inner, np.broadcast_to(self.goal, shape)], axis=-2
        )

    def trajectory(self, x) -> BSplineTrajectory:
        return BSplineTrajectory(self.order, self.control_points(x), self.sampler.knots)

    def path(self, x) -> SampledPath:
        return self.sampler.path(self.control_points(x))

    def straight_line(self) -> np.ndarray:
        """Decision vector whose control polygon is the start-goal segment."""
        t = np.linspace(0.0, 1.0, self.n_free + 2)[1:-1, None]
        return (self.start + t * (self.goal - self.start)).ravel()

    def _sampled(self, X):
        # fitness and legality are called back to back on the same array
        if self._cache is not None and self._cache[0] is X:
            return self._cache[1]
        cp = self.control_points(np.atleast_2d(X))
        pts = self.sampler.positions(cp)
        clear = clearance(pts, self.scenario) if self.scenario.obstacles else None
        out = (cp, pts, clear)
        self._cache = (X, out)
        return out

    def terms(self, X) -> dict:
        cp, pts, clear = self._sampled(X)
        return batch_cost_terms(
            pts, self.sampler.velocities(cp), self.sampler.u, self.scenario, self._peer_pts, clear=clear,
        )

    @batched
    def fitness(self, X) -> np.ndarray:
        return self.terms(X)["total"]

    @batched
    def legality(self, X) -> np.ndarray:
        _, pts, clear = self._sampled(X)
        return batch_legality(pts, self.scenario, self.start, self.goal, clear=clear)

    def breakdown(self, x) -> CostBreakdown:
        return trajectory_cost(self.path(x), self.scenario, self.peers)

    def is_legal(self, x) -> bool:
        return is_legal(self.path(x), self.scenario, self.start, self.goal)


# --- allocation --------------------------------------------------------------

@dataclass(frozen=True)
class Assignment:
    """Ordered task-index tours, one per UAV."""

    tours: tuple

    def __post_init__(self):
        object.__setattr__(self, "tours", tuple(tuple(int(j) for j in t) for t in self.tours))

    def validate(self, n_tasks: int, n_uavs: int | None = None) -> None:
        if n_uavs is not None and len(self.tours) != n_uavs:
            raise InvalidAssignmentError(f"expected {n_uavs} tours, got {len(self.tours)}")
        seen = [j for tour in self.tours for j in tour]
        counts = np.bincount([j for j in seen if 0 <= j < n_tasks], minlength=n_tasks)
        bad = [j for j in seen if not 0 <= j < n_tasks]
        if bad:
            raise InvalidAssignmentError(f"unknown task indices {bad}")
        missing = np.nonzero(counts == 0)[0].tolist()
        dup = np.nonzero(counts > 1)[0].tolist()
        if missing or dup:
            raise InvalidAssignmentError(f"tasks not covered exactly once: missing={missing}, repeated={dup}")

    def to_list(self) -> list:
        return [list(t) for t in self.tours]


@dataclass(frozen=True)
class AllocationCost:
    total_distance: float
    max_time: float
    energy_violation: float
    total: float

    def as_dict(self) -> dict:
        return asdict(self)


def tour_lengths(assignment: Assignment, scenario: Scenario) -> list[float]:
    tasks = np.asarray(scenario.tasks, dtype=float)
    out = []
    for k, tour in enumerate(assignment.tours):
        pts = np.vstack([scenario.uav_starts[k], tasks[list(tour)].reshape(-1, 3)])
        out.append(float(np.linalg.norm(np.diff(pts, axis=0), axis=1).sum()))
    return out


def allocation_cost(assignment: Assignment, scenario: Scenario) -> AllocationCost:
    assignment.validate(scenario.n_tasks, scenario.n_uavs)
    lengths = tour_lengths(assignment, scenario)
    total_distance = sum(lengths)
    max_time = max(lengths) / scenario.cruise_speed
    violation = sum(
        max(0.0, scenario.alpha_e * d - budget) ** 2
        for d, budget in zip(lengths, scenario.energy_budgets)
    )
    w = scenario.allocation_weights
    total = w[0] * total_distance + w[1] * max_time + w[2] * violation
    return AllocationCost(total_distance, max_time, violation, total)
