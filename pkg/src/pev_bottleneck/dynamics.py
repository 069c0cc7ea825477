"""
Queue evolution at a single bottleneck for piecewise-constant departure rates.

Within a piece of constant rate ``r`` the queue moves linearly with slope
``r - s`` and is clamped at zero, so the queue is computed exactly at any
time instead of being stepped forward.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import ModelError, ScenarioParams, TimeGrid


@dataclass(frozen=True)
class DepartureProfile:
    """
    Piecewise-constant departure rate.

    Piece ``i`` has rate ``rates[i]`` on ``[starts[i], starts[i+1])`` and the
    last piece ends at ``end``.
    """

    starts: np.ndarray
    rates: np.ndarray
    end: float

    def __post_init__(self):
        starts = np.asarray(self.starts, dtype=float)
        rates = np.asarray(self.rates, dtype=float)
        object.__setattr__(self, "starts", starts)
        object.__setattr__(self, "rates", rates)
        if starts.ndim != 1 or starts.shape != rates.shape or len(starts) == 0:
            raise ModelError("starts and rates must be matching non-empty 1-d arrays")
        if np.any(np.diff(starts) <= 0) or not self.end > starts[-1]:
            raise ModelError("profile pieces must be ordered with positive length")
        if np.any(rates < 0):
            raise ModelError("departure rates must be non-negative")

    @classmethod
    def from_pieces(cls, pieces, end: float) -> "DepartureProfile":
        """Build from ``[(t_start, rate), ...]``, dropping zero-length pieces."""
        pieces = list(pieces)
        keep = []
        for i, (t0, r) in enumerate(pieces):
            t1 = pieces[i + 1][0] if i + 1 < len(pieces) else end
            if t1 - t0 > 1e-12:
                keep.append((t0, r))
        if not keep:
            raise ModelError("profile has no piece of positive length")
        starts, rates = zip(*keep)
        return cls(np.array(starts), np.array(rates), float(end))

    @classmethod
    def constant(cls, rate: float, t0: float, t1: float) -> "DepartureProfile":
        return cls(np.array([t0]), np.array([rate]), float(t1))

    @property
    def breakpoints(self) -> np.ndarray:
        """Piece boundaries including both ends."""
        return np.append(self.starts, self.end)

    def rate_at(self, t):
        t = np.asarray(t, dtype=float)
        idx = np.clip(np.searchsorted(self.starts, t, side="right") - 1, 0, len(self.rates) - 1)
        out = np.where((t < self.starts[0]) | (t > self.end), 0.0, self.rates[idx])
        return out[()] if out.ndim == 0 else out

    def total(self) -> float:
        """Total departures over the profile's span."""
        return float(np.sum(self.rates * np.diff(self.breakpoints)))


@dataclass(frozen=True)
class QueueTrajectory:
    grid: TimeGrid
    queue: np.ndarray
    waiting: np.ndarray

    @property
    def times(self) -> np.ndarray:
        return self.grid.points


def _queue_at_piece_starts(profile: DepartureProfile, capacity: float) -> np.ndarray:
    bounds = profile.breakpoints
    q = np.zeros(len(bounds))
    for i, r in enumerate(profile.rates):
        q[i + 1] = max(0.0, q[i] + (r - capacity) * (bounds[i + 1] - bounds[i]))
    return q


def queue_at(profile: DepartureProfile, params: ScenarioParams, t):
    """Exact queue length at arbitrary times inside the profile span (Q = 0 at the start)."""
    t = np.asarray(t, dtype=float)
    if np.any(t < profile.starts[0] - 1e-9) or np.any(t > profile.end + 1e-9):
        raise ModelError("time outside the departure profile")
    q0 = _queue_at_piece_starts(profile, params.capacity)
    idx = np.clip(np.searchsorted(profile.starts, t, side="right") - 1, 0, len(profile.rates) - 1)
    net = profile.rates[idx] - params.capacity
    out = np.maximum(0.0, q0[idx] + net * (t - profile.starts[idx]))
    return out[()] if out.ndim == 0 else out


def evolve_queue(profile: DepartureProfile, params: ScenarioParams, grid: TimeGrid) -> QueueTrajectory:
    """Sample the queue and the waiting time Q/s on ``grid``."""
    tol = 1e-9 * max(1.0, grid.t1)
    if grid.t0 < profile.starts[0] - tol or grid.t1 > profile.end + tol:
        raise ModelError(
            f"profile span [{profile.starts[0]}, {profile.end}] does not cover "
            f"grid [{grid.t0}, {grid.t1}]"
        )
    t = np.clip(grid.points, profile.starts[0], profile.end)
    q = queue_at(profile, params, t)
    return QueueTrajectory(grid=grid, queue=q, waiting=q / params.capacity)


def waiting_time(traj: QueueTrajectory, t):
    """Waiting time at ``t``, linearly interpolated between grid points."""
    t = np.asarray(t, dtype=float)
    tol = 1e-9 * max(1.0, traj.grid.t1)
    if np.any(t < traj.grid.t0 - tol) or np.any(t > traj.grid.t1 + tol):
        raise ModelError("time outside the trajectory grid")
    out = np.interp(t, traj.times, traj.waiting)
    return out[()] if out.ndim == 0 else out


def arrival_time(t, traj: QueueTrajectory):
    return np.asarray(t, dtype=float) + waiting_time(traj, t)


def total_system_travel_time(traj: QueueTrajectory) -> float:
    """Integral of the waiting time over the grid (trapezoid rule), min^2."""
    return float(np.trapezoid(traj.waiting, traj.times))


def classical_equilibrium(params: ScenarioParams):
    """
    No-incentive equilibrium departure profile.

    Returns ``(profile, t_prime, t_star)``: rate ``alpha*s/(alpha-beta)`` up to
    ``t_prime`` and ``alpha*s/(alpha+gamma)`` after it, over ``[0, N/s]``.
    """
    a, b, g, s = params.alpha, params.beta, params.gamma, params.capacity
    t_prime = params.t_prime
    profile = DepartureProfile.from_pieces(
        [(0.0, a * s / (a - b)), (t_prime, a * s / (a + g))], params.horizon
    )
    return profile, t_prime, params.t_star
