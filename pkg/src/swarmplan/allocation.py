"""GA task allocation plus an exhaustive oracle for small instances.

A chromosome is a permutation of the N tasks and K-1 sorted cut positions
in [0, N]; UAV k flies ``perm[cut[k-1]:cut[k]]`` in order.  Empty tours are
allowed, so any permutation/cut pair decodes to a valid assignment.
"""
from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .environment import Scenario
from .errors import ConfigurationError, OracleRefusedError
from .objectives import AllocationCost, Assignment, allocation_cost

__all__ = [
    "Assignment",
    "GaConfig",
    "brute_force_allocation",
    "decode",
    "solve_allocation",
]


@dataclass(frozen=True)
class GaConfig:
    population: int = 50
    generations: int = 200
    crossover_rate: float = 0.9
    mutation_rate: float = 0.2
    elitism: int = 2
    seed: int = 0
    tournament: int = 3

    def __post_init__(self):
        if self.population < 2:
            raise ConfigurationError("population must be >= 2")
        if self.generations < 0:
            raise ConfigurationError("generations must be >= 0")
        for name in ("crossover_rate", "mutation_rate"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ConfigurationError(f"{name} must lie in [0, 1]")
        if not 0 <= self.elitism < self.population:
            raise ConfigurationError("elitism must satisfy 0 <= elitism < population")


def decode(perm, cuts) -> Assignment:
    bounds = [0, *cuts, len(perm)]
    return Assignment(tuple(tuple(perm[a:b]) for a, b in zip(bounds[:-1], bounds[1:])))


def order_crossover(p1, p2, rng) -> list:
    """OX: keep a slice of ``p1``, fill the rest in ``p2`` order starting after the slice."""
    n = len(p1)
    if n < 2:
        return list(p1)
    a, b = sorted(rng.sample(range(n + 1), 2))
    child = [None] * n
    child[a:b] = p1[a:b]
    kept = set(p1[a:b])
    fill = [g for g in (p2[(b + i) % n] for i in range(n)) if g not in kept]
    slots = [(b + i) % n for i in range(n) if child[(b + i) % n] is None]
    for pos, g in zip(slots, fill):
        child[pos] = g
    return child


class _TourCost:
    """Allocation cost from precomputed leg distances; skips assignment validation."""

    def __init__(self, scenario: Scenario):
        tasks = np.asarray(scenario.tasks, dtype=float)
        starts = np.asarray(scenario.uav_starts, dtype=float)
        self.from_start = np.linalg.norm(starts[:, None] - tasks[None], axis=-1).tolist()
        self.between = np.linalg.norm(tasks[:, None] - tasks[None], axis=-1).tolist()
        self.budgets = scenario.energy_budgets
        self.alpha_e = scenario.alpha_e
        self.speed = scenario.cruise_speed
        self.w = scenario.allocation_weights

    def tour_length(self, k, tour) -> float:
        if not tour:
            return 0.0
        d = self.from_start[k][tour[0]]
        row = self.between
        for a, b in zip(tour[:-1], tour[1:]):
            d += row[a][b]
        return d

    def __call__(self, tours) -> float:
        lengths = [self.tour_length(k, t) for k, t in enumerate(tours)]
        violation = sum(max(0.0, self.alpha_e * d - e) ** 2 for d, e in zip(lengths, self.budgets))
        return self.w[0] * sum(lengths) + self.w[1] * max(lengths) / self.speed + self.w[2] * violation


def _repair(cuts, n) -> tuple:
    return tuple(sorted(min(max(int(c), 0), n) for c in cuts))


def solve_allocation(
    scenario: Scenario,
    config: GaConfig = GaConfig(),
    on_generation: Optional[Callable[[int, float], None]] = None,
) -> tuple[Assignment, AllocationCost]:
    n, k = scenario.n_tasks, scenario.n_uavs
    if n < 1 or k < 1:
        raise ConfigurationError("need at least one task and one UAV")
    rng = random.Random(config.seed)
    tour_cost = _TourCost(scenario)
    cache: dict = {}

    def cost(chrom):
        if chrom not in cache:
            cache[chrom] = tour_cost(decode(*chrom).tours)
        return cache[chrom]

    def random_chrom():
        perm = list(range(n))
        rng.shuffle(perm)
        return tuple(perm), _repair([rng.randint(0, n) for _ in range(k - 1)], n)

    pop = [random_chrom() for _ in range(config.population)]

    def tournament(scored):
        picks = rng.sample(scored, min(config.tournament, len(scored)))
        return min(picks, key=lambda s: s[0])[1]

    def ranked(population):
        # stable sort keeps the earlier chromosome on cost ties
        return sorted(((cost(c), c) for c in population), key=lambda s: s[0])

    scored = ranked(pop)
    best_cost, best = scored[0]
    if on_generation is not None:
        on_generation(0, best_cost)

    for gen in range(1, config.generations + 1):
        nxt = [c for _, c in scored[: config.elitism]]
        while len(nxt) < config.population:
            p1, p2 = tournament(scored), tournament(scored)
            if rng.random() < config.crossover_rate:
                perm = order_crossover(list(p1[0]), list(p2[0]), rng)
                cuts = [a if rng.random() < 0.5 else b for a, b in zip(p1[1], p2[1])]
            else:
                perm, cuts = list(p1[0]), list(p1[1])
            if rng.random() < config.mutation_rate and n >= 2:
                i, j = sorted(rng.sample(range(n), 2))
                if rng.random() < 0.5:
                    perm[i], perm[j] = perm[j], perm[i]
                else:
                    perm[i:j + 1] = perm[i:j + 1][::-1]
            if rng.random() < config.mutation_rate and k >= 2:
                c = rng.randrange(k - 1)
                # small shifts fine-tune a split; a redraw moves whole blocks between UAVs
                if rng.random() < 0.5:
                    cuts[c] += 1 if rng.random() < 0.5 else -1
                else:
                    cuts[c] = rng.randint(0, n)
            nxt.append((tuple(perm), _repair(cuts, n)))
        scored = ranked(nxt)
        if scored[0][0] < best_cost:
            best_cost, best = scored[0]
        if on_generation is not None:
            on_generation(gen, scored[0][0])

    assignment = decode(*best)
    return assignment, allocation_cost(assignment, scenario)


def brute_force_allocation(scenario: Scenario, max_tasks: int = 7, max_uavs: int = 3) -> tuple[Assignment, AllocationCost]:
    """Exact optimum by enumerating every task labelling and every tour order.

    Refuses (never approximates) when the instance exceeds the size guard.
    """
    n, k = scenario.n_tasks, scenario.n_uavs
    if n > max_tasks or k > max_uavs:
        raise OracleRefusedError(
            f"instance with {n} tasks and {k} UAVs exceeds oracle limit ({max_tasks} tasks, {max_uavs} UAVs)"
        )
    tour_cost = _TourCost(scenario)
    best, best_cost = None, float("inf")
    for labels in itertools.product(range(k), repeat=n):
        groups = [[j for j in range(n) if labels[j] == u] for u in range(k)]
        for orders in itertools.product(*(itertools.permutations(g) for g in groups)):
            c = tour_cost(orders)
            if c < best_cost:
                best, best_cost = orders, c
    assignment = Assignment(best)
    return assignment, allocation_cost(assignment, scenario)
