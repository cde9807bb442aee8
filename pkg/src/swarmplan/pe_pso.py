"""Persistent-exploration PSO with entropy-driven coefficients.

Each iteration the worst ``floor(alpha * N)`` particles are re-drawn
uniformly, so the swarm never collapses, and ``w, c1, c2`` follow the
Shannon entropy of the swarm's fitness histogram.  Legal candidates are
collected in a bounded :class:`TrajectoryPool` whose argmin is what a
planner hands out.  Fitness is minimised throughout.
"""
from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field, replace
from typing import Callable, NamedTuple, Optional

import numpy as np

from .errors import ConfigurationError

VANILLA_PARAMS = (0.7, 1.5, 1.5)


class Params(NamedTuple):
    w: float
    c1: float
    c2: float


class Particle(NamedTuple):
    position: np.ndarray
    velocity: np.ndarray
    pbest: np.ndarray
    pbest_fitness: float


@dataclass(frozen=True, eq=False)
class SwarmConfig:
    lower: np.ndarray
    upper: np.ndarray
    n_particles: int = 100
    reset_rate: float = 0.5
    entropy_bins: int = 10
    w_range: tuple = (0.4, 0.9)
    c1_range: tuple = (1.0, 2.0)
    c2_range: tuple = (1.0, 2.0)
    v_max: Optional[np.ndarray] = None
    seed: int = 0
    pool_capacity: int = 50
    # switches used by the vanilla baseline
    persistent: bool = True
    adaptive: bool = True
    fixed_params: tuple = VANILLA_PARAMS

    def __post_init__(self):
        lower = np.atleast_1d(np.asarray(self.lower, dtype=float))
        upper = np.atleast_1d(np.asarray(self.upper, dtype=float))
        if lower.shape != upper.shape or lower.ndim != 1:
            raise ConfigurationError("lower/upper must be 1-D and of equal length")
        if np.any(lower >= upper):
            raise ConfigurationError("lower must be < upper in every dimension")
        if self.n_particles < 2:
            raise ConfigurationError("n_particles must be >= 2")
        if not 0 < self.reset_rate < 1:
            raise ConfigurationError("reset_rate must lie in (0, 1)")
        if self.entropy_bins < 2:
            raise ConfigurationError("entropy_bins must be >= 2")
        for name in ("w_range", "c1_range", "c2_range"):
            lo, hi = getattr(self, name)
            if lo > hi:
                raise ConfigurationError(f"{name}: min must be <= max")
        if self.pool_capacity < 1:
            raise ConfigurationError("pool_capacity must be >= 1")
        v_max = 0.2 * (upper - lower) if self.v_max is None else np.broadcast_to(
            np.asarray(self.v_max, dtype=float), lower.shape
        ).copy()
        if np.any(v_max <= 0):
            raise ConfigurationError("v_max must be > 0")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        object.__setattr__(self, "v_max", v_max)

    @property
    def dimension(self) -> int:
        return len(self.lower)

    @property
    def n_reset(self) -> int:
        return int(math.floor(self.reset_rate * self.n_particles + 1e-9))

    @classmethod
    def vanilla(cls, lower, upper, **kwargs) -> "SwarmConfig":
        """Plain PSO: fixed w=0.7, c1=c2=1.5, no re-initialisation, no adaptation."""
        return cls(lower, upper, persistent=False, adaptive=False, **kwargs)


# --- trajectory pool ---------------------------------------------------------

@dataclass(frozen=True, eq=False)
class PoolEntry:
    vector: np.ndarray
    fitness: float
    legal: bool = True


class TrajectoryPool:
    """Legal candidates kept sorted by fitness, worst evicted past capacity."""

    def __init__(self, capacity: int = 50):
        self.capacity = capacity
        self.entries: list[PoolEntry] = []
        self._keys: list[float] = []

    def __len__(self):
        return len(self.entries)

    def copy(self) -> "TrajectoryPool":
        out = TrajectoryPool(self.capacity)
        out.entries = list(self.entries)
        out._keys = list(self._keys)
        return out

    def insert(self, candidate, fitness: float, legal: bool) -> bool:
        """Insert a candidate; returns whether the pool changed."""
        fitness = float(fitness)
        if not legal or not math.isfinite(fitness):
            return False
        if len(self.entries) >= self.capacity and fitness >= self._keys[-1]:
            return False
        pos = bisect.bisect_right(self._keys, fitness)
        vec = np.array(candidate, dtype=float)
        vec.setflags(write=False)
        self._keys.insert(pos, fitness)
        self.entries.insert(pos, PoolEntry(vec, fitness, True))
        if len(self.entries) > self.capacity:
            self._keys.pop()
            self.entries.pop()
        return True

    def insert_many(self, X, fitness, legal) -> None:
        """Bulk insert; equivalent to inserting rows in index order."""
        fitness = np.asarray(fitness, dtype=float)
        keep = np.asarray(legal, dtype=bool) & np.isfinite(fitness)
        if len(self.entries) >= self.capacity:
            keep &= fitness < self._keys[-1]
        idx = np.nonzero(keep)[0]
        if len(idx) > self.capacity:
            # only the best `capacity` rows can survive; stable order keeps index tie-breaks
            idx = np.sort(idx[np.argsort(fitness[idx], kind="stable")[: self.capacity]])
        for i in idx:
            self.insert(X[i], fitness[i], True)

    def best(self) -> Optional[np.ndarray]:
        return self.entries[0].vector if self.entries else None

    @property
    def best_fitness(self) -> float:
        return self._keys[0] if self._keys else math.inf

    def rescore(self, fitness_fn, legality_fn=None) -> None:
        """Re-evaluate every entry (objective or world changed); drop the illegal."""
        if not self.entries:
            return
        X = np.stack([e.vector for e in self.entries])
        f = evaluate(fitness_fn, X)
        legal = evaluate_legality(legality_fn, X)
        self.entries, self._keys = [], []
        for x, fi, ok in zip(X, f, legal):
            self.insert(x, fi, bool(ok))


def pool_insert(pool: TrajectoryPool, candidate, fitness: float, legal: bool) -> TrajectoryPool:
    pool.insert(candidate, fitness, legal)
    return pool


def pool_best(pool: TrajectoryPool) -> Optional[np.ndarray]:
    return pool.best()


# --- entropy and coefficients -------------------------------------------------

def compute_entropy(fitnesses, m: int) -> float:
    """Shannon entropy (nats) of an m-bin equal-width histogram over [min, max].

    Non-finite values count towards the top (worst) bin; if no finite value
    exists, or all finite values are equal and nothing is non-finite, H = 0.
    """
    f = np.asarray(fitnesses, dtype=float).ravel()
    if f.size == 0:
        raise ConfigurationError("compute_entropy needs at least one fitness value")
    if m < 2:
        raise ConfigurationError("m must be >= 2")
    finite = np.isfinite(f)
    counts = np.zeros(m)
    if finite.any():
        vals = f[finite]
        lo, hi = vals.min(), vals.max()
        if hi > lo:
            idx = np.floor((vals - lo) / (hi - lo) * m).astype(int)
            np.clip(idx, 0, m - 1, out=idx)
            counts += np.bincount(idx, minlength=m)
        else:
            counts[0] += vals.size
    counts[-1] += np.count_nonzero(~finite)
    q = counts[counts > 0] / f.size
    return float(max(0.0, -(q * np.log(q)).sum()))


def adapt_params(H: float, config: SwarmConfig) -> Params:
    h_max = math.log(config.entropy_bins)
    (w0, w1), (a0, a1), (b0, b1) = config.w_range, config.c1_range, config.c2_range
    if h_max <= 0:
        return Params((w0 + w1) / 2, (a0 + a1) / 2, (b0 + b1) / 2)
    r = min(1.0, max(0.0, H / h_max))
    return Params(w0 + (w1 - w0) * r, a0 + (a1 - a0) * (1 - r), b0 + (b1 - b0) * r)


def select_worst(fitnesses, alpha: float) -> np.ndarray:
    """Indices of the floor(alpha*N) largest fitnesses; ties go to the lower index."""
    f = np.asarray(fitnesses, dtype=float)
    k = int(math.floor(alpha * len(f) + 1e-9))
    order = np.argsort(-f, kind="stable")
    return np.sort(order[:k])


# --- evaluation helpers ---------------------------------------------------------

def evaluate(fitness_fn, X) -> np.ndarray:
    """Fitness of each row of ``X``; non-finite results become +inf."""
    if getattr(fitness_fn, "batched", False):
        f = np.asarray(fitness_fn(X), dtype=float).reshape(len(X))
    else:
        f = np.array([fitness_fn(x) for x in X], dtype=float)
    f[~np.isfinite(f)] = np.inf
    return f


def evaluate_legality(legality_fn, X) -> np.ndarray:
    if legality_fn is None:
        return np.zeros(len(X), dtype=bool)
    if getattr(legality_fn, "batched", False):
        return np.asarray(legality_fn(X), dtype=bool).reshape(len(X))
    return np.array([bool(legality_fn(x)) for x in X])


# --- swarm state ------------------------------------------------------------------

@dataclass(eq=False)
class SwarmState:
    positions: np.ndarray
    velocities: np.ndarray
    fitness: np.ndarray  # fitness of the current positions
    pbest: np.ndarray
    pbest_fitness: np.ndarray
    gbest: np.ndarray
    gbest_fitness: float
    entropy: float
    params: Params
    rng: np.random.Generator
    pool: TrajectoryPool
    iteration: int = 0
    last_reset: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))

    @property
    def particles(self) -> list[Particle]:
        return [
            Particle(self.positions[i], self.velocities[i], self.pbest[i], float(self.pbest_fitness[i]))
            for i in range(len(self.positions))
        ]


class IterationRecord(NamedTuple):
    iteration: int
    gbest_fitness: float
    entropy: float
    w: float
    c1: float
    c2: float
    pool_size: int


def record(state: SwarmState) -> IterationRecord:
    return IterationRecord(
        state.iteration, float(state.gbest_fitness), state.entropy,
        state.params.w, state.params.c1, state.params.c2, len(state.pool),
    )


def _params_for(fitness, config: SwarmConfig) -> tuple[float, Params]:
    H = compute_entropy(fitness, config.entropy_bins)
    if config.adaptive:
        return H, adapt_params(H, config)
    return H, Params(*config.fixed_params)


def init_swarm(config: SwarmConfig, fitness_fn, initial=None) -> SwarmState:
    """Uniform positions/velocities, evaluated once; the pool starts empty.

    ``initial`` optionally supplies rows that replace the first particles'
    positions (their velocity is set to zero), e.g. a straight-line guess.
    """
    rng = np.random.default_rng(config.seed)
    N, d = config.n_particles, config.dimension
    X = rng.uniform(config.lower, config.upper, (N, d))
    V = rng.uniform(-config.v_max, config.v_max, (N, d))
    if initial is not None:
        initial = np.atleast_2d(np.asarray(initial, dtype=float))[:N]
        X[: len(initial)] = np.clip(initial, config.lower, config.upper)
        V[: len(initial)] = 0.0
    f = evaluate(fitness_fn, X)
    g = int(np.argmin(f))
    H, params = _params_for(f, config)
    return SwarmState(
        positions=X, velocities=V, fitness=f, pbest=X.copy(), pbest_fitness=f.copy(),
        gbest=X[g].copy(), gbest_fitness=float(f[g]), entropy=H, params=params,
        rng=rng, pool=TrajectoryPool(config.pool_capacity),
    )


def velocity_update(state: SwarmState, params: Params, config: SwarmConfig, rng) -> tuple[np.ndarray, np.ndarray]:
    """Standard PSO move with per-component r1, r2; clamps speed and position."""
    X, V = state.positions, state.velocities
    r1 = rng.random(X.shape)
    r2 = rng.random(X.shape)
    V = params.w * V + params.c1 * r1 * (state.pbest - X) + params.c2 * r2 * (state.gbest - X)
    np.clip(V, -config.v_max, config.v_max, out=V)
    X = X + V
    clamped = (X < config.lower) | (X > config.upper)
    np.clip(X, config.lower, config.upper, out=X)
    V[clamped] = 0.0
    return X, V


def reinitialize(X, V, indices, config: SwarmConfig, rng) -> tuple[np.ndarray, np.ndarray]:
    """Fresh uniform positions in bounds and velocities in [-v_max, v_max]."""
    X, V = X.copy(), V.copy()
    k = len(indices)
    if k:
        X[indices] = rng.uniform(config.lower, config.upper, (k, config.dimension))
        V[indices] = rng.uniform(-config.v_max, config.v_max, (k, config.dimension))
    return X, V


def _fork(rng: np.random.Generator) -> np.random.Generator:
    bg = type(rng.bit_generator)()
    bg.state = rng.bit_generator.state
    return np.random.Generator(bg)


def step(state: SwarmState, fitness_fn: Callable, config: SwarmConfig, legality_fn: Callable | None = None) -> SwarmState:
    """One PE-PSO iteration; the input state is left untouched.

    Order: take the fitness of the current positions (carried over from the
    previous commit), update personal/global bests, compute entropy and the
    coefficients, move, re-draw the worst ``floor(alpha N)`` particles, then
    evaluate the new positions and pool the legal ones.
    """
    rng = _fork(state.rng)
    f = state.fitness

    improved = f < state.pbest_fitness
    pbest = np.where(improved[:, None], state.positions, state.pbest)
    pbest_fitness = np.where(improved, f, state.pbest_fitness)
    g = int(np.argmin(pbest_fitness))
    gbest, gbest_fitness = state.gbest, state.gbest_fitness
    if pbest_fitness[g] < gbest_fitness:
        gbest, gbest_fitness = pbest[g].copy(), float(pbest_fitness[g])

    H, params = _params_for(f, config)
    moving = replace(state, pbest=pbest, gbest=gbest)
    X, V = velocity_update(moving, params, config, rng)

    worst = select_worst(f, config.reset_rate) if config.persistent else np.zeros(0, dtype=int)
    X, V = reinitialize(X, V, worst, config, rng)

    f_new = evaluate(fitness_fn, X)
    if len(worst):
        pbest[worst] = X[worst]
        pbest_fitness[worst] = f_new[worst]

    pool = state.pool.copy()
    if legality_fn is not None:
        legal = evaluate_legality(legality_fn, X)
        pool.insert_many(X, f_new, legal)

    return SwarmState(
        positions=X, velocities=V, fitness=f_new, pbest=pbest, pbest_fitness=pbest_fitness,
        gbest=gbest, gbest_fitness=gbest_fitness, entropy=H, params=params, rng=rng,
        pool=pool, iteration=state.iteration + 1, last_reset=worst,
    )


def rescore(state: SwarmState, fitness_fn, legality_fn=None) -> SwarmState:
    """Re-evaluate positions, personal bests, global best and pool under a new objective."""
    f = evaluate(fitness_fn, state.positions)
    pf = evaluate(fitness_fn, state.pbest)
    g = int(np.argmin(pf))
    gbest, gbest_fitness = state.pbest[g].copy(), float(pf[g])
    old_g = float(evaluate(fitness_fn, state.gbest[None])[0])
    if old_g <= gbest_fitness:
        gbest, gbest_fitness = state.gbest, old_g
    pool = state.pool.copy()
    pool.rescore(fitness_fn, legality_fn)
    return replace(state, fitness=f, pbest_fitness=pf, gbest=gbest, gbest_fitness=gbest_fitness, pool=pool)


def optimize(
    fitness_fn,
    config: SwarmConfig,
    iterations: int,
    legality_fn=None,
    initial=None,
    callback: Callable[[IterationRecord], None] | None = None,
) -> SwarmState:
    state = init_swarm(config, fitness_fn, initial)
    for _ in range(iterations):
        state = step(state, fitness_fn, config, legality_fn)
        if callback is not None:
            callback(record(state))
    return state


def best_so_far(state: SwarmState) -> float:
    """Best fitness ever evaluated, including positions not yet folded into gbest."""
    return float(min(state.gbest_fitness, state.fitness.min()))
