"""Clamped B-spline trajectories in 3D.

Orders follow the order convention (order k = degree + 1), so a cubic curve
has ``order=4``.  Knot vectors are clamped and uniform on [0, 1] by default.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import ConfigurationError, DomainError

DEFAULT_ORDER = 4
DEFAULT_SAMPLES = 50


def make_clamped_knots(n_control: int, order: int) -> np.ndarray:
    """Clamped uniform knot vector of length ``n_control + order`` on [0, 1].

    >>> make_clamped_knots(5, 4).tolist()
    [0.0, 0.0, 0.0, 0.0, 0.5, 1.0, 1.0, 1.0, 1.0]
    """
    if order < 2 or n_control < order:
        raise ConfigurationError(
            f"need n_control >= order >= 2, got n_control={n_control}, order={order}"
        )
    interior = np.linspace(0.0, 1.0, n_control - order + 2)[1:-1]
    knots = np.concatenate([np.zeros(order), interior, np.ones(order)])
    knots.setflags(write=False)
    return knots


def check_knots(knots, order: int) -> np.ndarray:
    knots = np.asarray(knots, dtype=float)
    if knots.ndim != 1 or knots.size < 2 * order:
        raise ConfigurationError(f"knot vector too short for order {order}")
    if not np.all(np.isfinite(knots)):
        raise ConfigurationError("knot vector contains non-finite values")
    if np.any(np.diff(knots) < 0):
        raise ConfigurationError("knot vector must be nondecreasing")
    return knots


def domain(knots, order: int) -> tuple[float, float]:
    """Evaluation domain ``[u_{k-1}, u_{n+1}]`` for ``n + 1 = len(knots) - order`` control points."""
    n = len(knots) - order - 1
    return float(knots[order - 1]), float(knots[n + 1])


def _div(num, den):
    # 0/0 and x/0 terms of the recursion are defined as 0
    return num / den if den != 0.0 else 0.0


def basis(i: int, k: int, u: float, knots) -> float:
    """Cox-de Boor value ``N_{i,k}(u)`` by direct recursion.

    The right end of the domain is included: at ``u == u_{n+1}`` the last
    non-degenerate knot span counts as containing ``u``.
    """
    knots = np.asarray(knots, dtype=float)
    n = len(knots) - k - 1
    if not 0 <= i <= n:
        raise ConfigurationError(f"basis index {i} out of range 0..{n}")
    lo, hi = domain(knots, k)
    if not lo <= u <= hi:
        raise DomainError(f"u={u} outside domain [{lo}, {hi}]")

    end_span = None
    if not np.any((knots[:-1] <= u) & (u < knots[1:])):
        # u sits on the final knot: close the last non-empty span on the right
        spans = np.nonzero((knots[:-1] < knots[1:]) & (knots[1:] <= hi))[0]
        end_span = int(spans[-1])

    def rec(j, p):
        if p == 1:
            if j == end_span:
                return 1.0
            return 1.0 if knots[j] <= u < knots[j + 1] else 0.0
        left = _div(u - knots[j], knots[j + p - 1] - knots[j]) * rec(j, p - 1)
        right = _div(knots[j + p] - u, knots[j + p] - knots[j + 1]) * rec(j + 1, p - 1)
        return left + right

    return rec(i, k)


def basis_matrix(knots, order: int, us) -> np.ndarray:
    """All basis values at once, shape ``(len(us), n + 1)``.

    Bottom-up version of the recursion in :func:`basis`, vectorised over ``us``.
    """
    knots = np.asarray(knots, dtype=float)
    us = np.atleast_1d(np.asarray(us, dtype=float))
    lo, hi = domain(knots, order)
    if np.any(us < lo) or np.any(us > hi):
        raise DomainError(f"parameters outside domain [{lo}, {hi}]")

    u = us[:, None]
    N = ((knots[:-1] <= u) & (u < knots[1:])).astype(float)
    empty = N.sum(axis=1) == 0
    if np.any(empty):
        spans = np.nonzero((knots[:-1] < knots[1:]) & (knots[1:] <= hi))[0]
        N[empty, spans[-1]] = 1.0

    for p in range(2, order + 1):
        count = len(knots) - p
        a, b = knots[:count], knots[p - 1 : p - 1 + count]
        c, d = knots[1 : 1 + count], knots[p : p + count]
        den_l = b - a
        den_r = d - c
        safe_l = np.where(den_l > 0, den_l, 1.0)
        safe_r = np.where(den_r > 0, den_r, 1.0)
        left = np.where(den_l > 0, (u - a) / safe_l, 0.0) * N[:, :count]
        right = np.where(den_r > 0, (d - u) / safe_r, 0.0) * N[:, 1 : count + 1]
        N = left + right
    return N


def derivative_operator(knots, order: int) -> np.ndarray:
    """Matrix ``D`` with ``Q = D @ P``: control points of the derivative curve.

    The derivative of an order-k spline is an order-(k-1) spline on
    ``knots[1:-1]`` with ``Q_i = (k-1)(P_{i+1} - P_i) / (u_{i+k} - u_{i+1})``.
    """
    knots = np.asarray(knots, dtype=float)
    n = len(knots) - order - 1
    D = np.zeros((n, n + 1))
    for i in range(n):
        den = knots[i + order] - knots[i + 1]
        c = (order - 1) / den if den > 0 else 0.0
        D[i, i], D[i, i + 1] = -c, c
    return D


@dataclass(frozen=True, eq=False)
class BSplineTrajectory:
    order: int
    control_points: np.ndarray
    knots: np.ndarray

    def __post_init__(self):
        cp = np.array(self.control_points, dtype=float)
        if cp.ndim != 2 or cp.shape[1] != 3:
            raise ConfigurationError("control points must have shape (n+1, 3)")
        if self.order < 2:
            raise ConfigurationError("order must be >= 2")
        if len(cp) < self.order:
            raise ConfigurationError(
                f"need at least {self.order} control points, got {len(cp)}"
            )
        if not np.all(np.isfinite(cp)):
            raise ConfigurationError("control points must be finite")
        knots = check_knots(self.knots, self.order)
        if len(knots) != len(cp) + self.order:
            raise ConfigurationError(
                f"expected {len(cp) + self.order} knots, got {len(knots)}"
            )
        lo, hi = domain(knots, self.order)
        if not lo < hi:
            raise ConfigurationError("empty evaluation domain")
        cp.setflags(write=False)
        knots = knots.copy()
        knots.setflags(write=False)
        object.__setattr__(self, "control_points", cp)
        object.__setattr__(self, "knots", knots)

    @classmethod
    def clamped(cls, control_points, order: int = DEFAULT_ORDER) -> "BSplineTrajectory":
        control_points = np.asarray(control_points, dtype=float)
        return cls(order, control_points, make_clamped_knots(len(control_points), order))

    @property
    def domain(self) -> tuple[float, float]:
        return domain(self.knots, self.order)

    def evaluate(self, u):
        """Curve point(s) ``sum_i P_i N_{i,k}(u)``; scalar ``u`` gives shape (3,)."""
        pts = basis_matrix(self.knots, self.order, u) @ self.control_points
        return pts[0] if np.ndim(u) == 0 else pts

    @cached_property
    def derivative_control_points(self) -> np.ndarray:
        return derivative_operator(self.knots, self.order) @ self.control_points

    def derivative(self, u):
        """First derivative dC/du, evaluated analytically."""
        dk = self.knots[1:-1]
        vel = basis_matrix(dk, self.order - 1, u) @ self.derivative_control_points
        return vel[0] if np.ndim(u) == 0 else vel


def evaluate(traj: BSplineTrajectory, u):
    return traj.evaluate(u)


@dataclass(frozen=True, eq=False)
class SampledPath:
    """Discretised curve: parameters ``u``, positions and optional velocities."""

    u: np.ndarray
    points: np.ndarray
    velocities: np.ndarray | None = None

    def __post_init__(self):
        u = np.asarray(self.u, dtype=float)
        pts = np.asarray(self.points, dtype=float)
        if u.ndim != 1 or len(u) < 2:
            raise ConfigurationError("a sampled path needs at least 2 samples")
        if np.any(np.diff(u) <= 0):
            raise ConfigurationError("sample parameters must be strictly increasing")
        if pts.shape != (len(u), 3):
            raise ConfigurationError("points must have shape (n_samples, 3)")
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "points", pts)
        if self.velocities is not None:
            vel = np.asarray(self.velocities, dtype=float)
            if vel.shape != pts.shape:
                raise ConfigurationError("velocities must match points")
            object.__setattr__(self, "velocities", vel)

    def __len__(self):
        return len(self.u)

    @property
    def start(self) -> np.ndarray:
        return self.points[0]

    @property
    def end(self) -> np.ndarray:
        return self.points[-1]


def sample(traj: BSplineTrajectory, n_samples: int = DEFAULT_SAMPLES, with_velocity: bool = True) -> SampledPath:
    if n_samples < 2:
        raise ConfigurationError(f"n_samples must be >= 2, got {n_samples}")
    lo, hi = traj.domain
    us = np.linspace(lo, hi, n_samples)
    us[-1] = hi
    vel = traj.derivative(us) if with_velocity else None
    return SampledPath(us, traj.evaluate(us), vel)


def arc_length(path) -> float:
    """Chord-length approximation: sum of distances between consecutive samples.

    Accepts a :class:`SampledPath` or a raw ``(n, 3)`` array of points.
    """
    pts = path.points if isinstance(path, SampledPath) else np.asarray(path, dtype=float)
    return float(np.linalg.norm(np.diff(pts, axis=0), axis=1).sum())


class SplineSampler:
    """Precomputed basis matrices for sampling many curves with the same layout.

    All curves share ``n_control``, ``order`` and ``n_samples``, so positions
    and velocities for a batch of control polygons are two matrix products.
    """

    def __init__(self, n_control: int, order: int = DEFAULT_ORDER, n_samples: int = DEFAULT_SAMPLES):
        if n_samples < 2:
            raise ConfigurationError(f"n_samples must be >= 2, got {n_samples}")
        self.n_control = n_control
        self.order = order
        self.n_samples = n_samples
        self.knots = make_clamped_knots(n_control, order)
        lo, hi = domain(self.knots, order)
        self.u = np.linspace(lo, hi, n_samples)
        self.u[-1] = hi
        self.B = basis_matrix(self.knots, order, self.u)
        dB = basis_matrix(self.knots[1:-1], order - 1, self.u)
        self.dB = dB @ derivative_operator(self.knots, order)

    def positions(self, control_points: np.ndarray) -> np.ndarray:
        """``(..., n_control, 3)`` control points -> ``(..., n_samples, 3)`` samples."""
        return np.matmul(self.B, control_points)

    def velocities(self, control_points: np.ndarray) -> np.ndarray:
        return np.matmul(self.dB, control_points)

    def path(self, control_points) -> SampledPath:
        cp = np.asarray(control_points, dtype=float)
        return SampledPath(self.u, self.positions(cp), self.velocities(cp))
