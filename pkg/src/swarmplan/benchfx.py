"""Classical benchmark functions and a PE-PSO vs vanilla PSO comparison harness.

Definitions (d = dimension):

    sphere      sum x_i^2                                          [-100, 100]
    rosenbrock  sum 100 (x_{i+1} - x_i^2)^2 + (1 - x_i)^2           [-30, 30]
    rastrigin   10 d + sum (x_i^2 - 10 cos(2 pi x_i))               [-5.12, 5.12]
    ackley      -20 exp(-0.2 sqrt(mean x^2)) - exp(mean cos 2 pi x) + 20 + e
                                                                    [-32.768, 32.768]
    griewank    1 + sum x_i^2 / 4000 - prod cos(x_i / sqrt(i))      [-600, 600]
    schwefel    418.9829 d - sum x_i sin(sqrt |x_i|)                [-500, 500]

All have global minimum value 0.  Each function maps ``(..., d)`` arrays
to ``(...)`` values, so a whole swarm is evaluated in one call.
"""
from __future__ import annotations

import csv
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import ConfigurationError
from .objectives import batched
from .pe_pso import SwarmConfig, best_so_far, init_swarm, step

SCHWEFEL_ARGMAX = 420.96874635998202731
SCHWEFEL_PEAK = 418.98288727243370627  # max of x sin(sqrt(x)), attained at SCHWEFEL_ARGMAX


def sphere(x):
    return np.sum(np.square(x), axis=-1)


def rosenbrock(x):
    x = np.asarray(x, dtype=float)
    a, b = x[..., :-1], x[..., 1:]
    return np.sum(100.0 * (b - a**2) ** 2 + (1.0 - a) ** 2, axis=-1)


def rastrigin(x):
    x = np.asarray(x, dtype=float)
    return 10.0 * x.shape[-1] + np.sum(x**2 - 10.0 * np.cos(2 * np.pi * x), axis=-1)


def ackley(x):
    x = np.asarray(x, dtype=float)
    s1 = np.mean(x**2, axis=-1)
    s2 = np.mean(np.cos(2 * np.pi * x), axis=-1)
    return -20.0 * np.exp(-0.2 * np.sqrt(s1)) - np.exp(s2) + 20.0 + np.e


def griewank(x):
    x = np.asarray(x, dtype=float)
    i = np.arange(1, x.shape[-1] + 1)
    return 1.0 + np.sum(x**2, axis=-1) / 4000.0 - np.prod(np.cos(x / np.sqrt(i)), axis=-1)


def schwefel(x):
    x = np.asarray(x, dtype=float)
    return SCHWEFEL_PEAK * x.shape[-1] - np.sum(x * np.sin(np.sqrt(np.abs(x))), axis=-1)


for _f in (sphere, rosenbrock, rastrigin, ackley, griewank, schwefel):
    batched(_f)


_SUITE = {
    # name: (function, half-width or (lo, hi), minimizer coordinate)
    "sphere": (sphere, (-100.0, 100.0), 0.0),
    "rosenbrock": (rosenbrock, (-30.0, 30.0), 1.0),
    "rastrigin": (rastrigin, (-5.12, 5.12), 0.0),
    "ackley": (ackley, (-32.768, 32.768), 0.0),
    "griewank": (griewank, (-600.0, 600.0), 0.0),
    "schwefel": (schwefel, (-500.0, 500.0), SCHWEFEL_ARGMAX),
}

FUNCTION_NAMES = tuple(_SUITE)


@dataclass(frozen=True, eq=False)
class BenchmarkFunction:
    name: str
    dimension: int
    lower: np.ndarray
    upper: np.ndarray
    global_minimum_value: float
    global_minimizer: np.ndarray | None
    fn: Callable

    def __call__(self, x) -> float:
        return evaluate_benchmark(self, x)


def get_function(name: str, dimension: int = 10) -> BenchmarkFunction:
    try:
        fn, (lo, hi), xstar = _SUITE[name]
    except KeyError:
        raise ConfigurationError(f"unknown benchmark {name!r}; choose from {', '.join(_SUITE)}") from None
    if dimension < 1 or (name == "rosenbrock" and dimension < 2):
        raise ConfigurationError(f"invalid dimension {dimension} for {name}")
    return BenchmarkFunction(
        name, dimension, np.full(dimension, lo), np.full(dimension, hi),
        0.0, np.full(dimension, xstar), fn,
    )


def evaluate_benchmark(fn: BenchmarkFunction, x) -> float:
    x = np.asarray(x, dtype=float)
    if x.shape != (fn.dimension,):
        raise ConfigurationError(f"{fn.name} expects a vector of length {fn.dimension}, got shape {x.shape}")
    return float(fn.fn(x))


OPTIMIZERS = ("pe_pso", "vanilla_pso")


def make_config(optimizer: str, fn: BenchmarkFunction, seed: int, n_particles: int = 100) -> SwarmConfig:
    if optimizer == "pe_pso":
        return SwarmConfig(fn.lower, fn.upper, n_particles=n_particles, seed=seed)
    if optimizer == "vanilla_pso":
        return SwarmConfig.vanilla(fn.lower, fn.upper, n_particles=n_particles, seed=seed)
    raise ConfigurationError(f"unknown optimizer {optimizer!r}")


@dataclass(frozen=True)
class RunRecord:
    function: str
    optimizer: str
    seed: int
    best_fitness: float
    wall_ms: float
    iters_to_threshold: float  # nan when the threshold was never reached


def single_run(fn: BenchmarkFunction, optimizer: str, seed: int, iterations: int,
               threshold: float = 1e-2, n_particles: int = 100) -> RunRecord:
    config = make_config(optimizer, fn, seed, n_particles)
    t0 = time.perf_counter()
    state = init_swarm(config, fn.fn)
    hit = 0 if best_so_far(state) <= threshold else math.nan
    for _ in range(iterations):
        state = step(state, fn.fn, config)
        if math.isnan(hit) and best_so_far(state) <= threshold:
            hit = state.iteration
    wall_ms = (time.perf_counter() - t0) * 1e3
    return RunRecord(fn.name, optimizer, seed, best_so_far(state), wall_ms, float(hit))


@dataclass(frozen=True)
class ReportRow:
    function: str
    optimizer: str
    seed_count: int
    fitness_mean: float
    fitness_std: float
    time_mean_ms: float
    iters_to_threshold_mean: float


def summarize(records: Sequence[RunRecord]) -> list[ReportRow]:
    """Aggregate per-run records into report rows, ordered by (function, optimizer)."""
    groups: dict = {}
    for r in records:
        groups.setdefault((r.function, r.optimizer), []).append(r)
    rows = []
    for (name, opt), rs in sorted(groups.items()):
        best = np.array([r.best_fitness for r in rs])
        hits = np.array([r.iters_to_threshold for r in rs])
        hits = hits[~np.isnan(hits)]
        rows.append(ReportRow(
            name, opt, len(rs), float(best.mean()), float(best.std(ddof=1)) if len(rs) > 1 else 0.0,
            float(np.mean([r.wall_ms for r in rs])), float(hits.mean()) if hits.size else math.nan,
        ))
    return rows


def _workers() -> int:
    try:
        n = int(os.environ.get("SWARMPLAN_THREADS", "0"))
    except ValueError:
        n = 0
    return n if n > 0 else min(8, os.cpu_count() or 1)


def run_comparison(functions: Sequence, optimizers: Sequence[str] = OPTIMIZERS, n_seeds: int = 20,
                   iterations: int = 200, dimension: int = 10, threshold: float = 1e-2,
                   n_particles: int = 100, base_seed: int = 0):
    """Run every (function, optimizer, seed) combination.

    Returns ``(rows, records)``; rows are recomputable from records alone.
    """
    if n_seeds < 2:
        raise ConfigurationError("n_seeds must be >= 2")
    fns = [f if isinstance(f, BenchmarkFunction) else get_function(f, dimension) for f in functions]
    for opt in optimizers:
        if opt not in OPTIMIZERS:
            raise ConfigurationError(f"unknown optimizer {opt!r}")
    jobs = [(f, opt, base_seed + s) for f in fns for opt in optimizers for s in range(n_seeds)]
    run = lambda job: single_run(job[0], job[1], job[2], iterations, threshold, n_particles)  # noqa: E731
    workers = _workers()
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            records = list(pool.map(run, jobs))
    else:
        records = [run(j) for j in jobs]
    records.sort(key=lambda r: (r.function, r.optimizer, r.seed))
    return summarize(records), records


REPORT_FIELDS = ("function", "optimizer", "seed_count", "fitness_mean", "fitness_std", "time_mean_ms")


def write_report_csv(rows: Sequence[ReportRow], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(REPORT_FIELDS + ("iters_to_threshold_mean",))
        for r in rows:
            d = asdict(r)
            w.writerow([d[k] for k in REPORT_FIELDS] + [d["iters_to_threshold_mean"]])


def write_records_csv(records: Sequence[RunRecord], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(("function", "optimizer", "seed", "best_fitness", "wall_ms", "iters_to_threshold"))
        for r in records:
            w.writerow(astuple_record(r))


def astuple_record(r: RunRecord) -> tuple:
    return (r.function, r.optimizer, r.seed, r.best_fitness, r.wall_ms, r.iters_to_threshold)


def format_table(rows: Sequence[ReportRow]) -> str:
    head = f"{'function':<12}{'optimizer':<13}{'seeds':>6}{'mean':>14}{'std':>12}{'time ms':>10}{'iters':>8}"
    lines = [head, "-" * len(head)]
    for r in rows:
        lines.append(
            f"{r.function:<12}{r.optimizer:<13}{r.seed_count:>6}{r.fitness_mean:>14.6g}"
            f"{r.fitness_std:>12.4g}{r.time_mean_ms:>10.1f}{r.iters_to_threshold_mean:>8.1f}"
        )
    return "\n".join(lines)
