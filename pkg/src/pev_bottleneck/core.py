"""
Scenario parameters and per-commuter cost structure.

Everything is in canonical units: time in minutes, money in dollars, cost
rates in $/min and capacity in veh/min.  Raw scenario files quote the
schedule-delay rates in $/h; :func:`canonical_params` converts them.
"""

from __future__ import annotations

from dataclasses import dataclass
import math

import numpy as np

MINUTES_PER_HOUR = 60.0


class ModelError(ValueError):
    """Parameters or arguments that do not describe a valid scenario."""


@dataclass(frozen=True)
class ScenarioParams:
    """
    Constants of the bottleneck model with charging.

    Parameters
    ----------
    alpha : float
        Value of time spent queueing or waiting at a charger, $/min.
    beta : float
        Earliness cost rate, $/min.
    gamma : float
        Lateness cost rate, $/min.
    n_commuters : float
        Number of commuters N.
    capacity : float
        Bottleneck capacity s, veh/min.
    delta_bar : float
        Required charging duration, min.
    p_bar : float
        Base electricity price, $/min of charging.  Only ever enters as the
        constant offset ``delta_bar * p_bar``.
    """

    alpha: float
    beta: float
    gamma: float
    n_commuters: float
    capacity: float
    delta_bar: float
    p_bar: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.beta < self.alpha < self.gamma:
            raise ModelError(
                f"need 0 < beta < alpha < gamma, got beta={self.beta}, "
                f"alpha={self.alpha}, gamma={self.gamma}"
            )
        if self.n_commuters < 0:
            raise ModelError("n_commuters must be non-negative")
        if self.capacity <= 0 or self.delta_bar <= 0:
            raise ModelError("capacity and delta_bar must be positive")
        if self.p_bar < 0:
            raise ModelError("p_bar must be non-negative")

    @property
    def horizon(self) -> float:
        """Length of the rush hour, N/s."""
        return self.n_commuters / self.capacity

    @property
    def t_star(self) -> float:
        """Common desired arrival time gamma*N / (s*(beta+gamma))."""
        return self.gamma * self.n_commuters / (self.capacity * (self.beta + self.gamma))

    @property
    def t_prime(self) -> float:
        """Departure time arriving exactly at t* in the no-incentive equilibrium."""
        return self.t_star * (self.alpha - self.beta) / self.alpha

    @property
    def base_charging_cost(self) -> float:
        return self.delta_bar * self.p_bar


def canonical_params(
    alpha: float,
    beta: float,
    gamma: float,
    n_commuters: float,
    capacity: float,
    delta_bar: float,
    p_bar: float = 0.0,
) -> ScenarioParams:
    """Build :class:`ScenarioParams` from $/h cost rates and veh/min capacity."""
    for name, v in (("alpha", alpha), ("beta", beta), ("gamma", gamma),
                    ("capacity", capacity), ("delta_bar", delta_bar)):
        if not v > 0:
            raise ModelError(f"{name} must be positive, got {v}")
    return ScenarioParams(
        alpha=alpha / MINUTES_PER_HOUR,
        beta=beta / MINUTES_PER_HOUR,
        gamma=gamma / MINUTES_PER_HOUR,
        n_commuters=float(n_commuters),
        capacity=float(capacity),
        delta_bar=float(delta_bar),
        p_bar=float(p_bar),
    )


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid ``t0, t0+dt, ..., t1``."""

    t0: float
    t1: float
    dt: float

    def __post_init__(self):
        if not self.t1 > self.t0:
            raise ModelError("TimeGrid needs t0 < t1")
        if not self.dt > 0:
            raise ModelError("TimeGrid needs dt > 0")
        n = (self.t1 - self.t0) / self.dt
        if abs(n - round(n)) > 1e-6 * max(1.0, n):
            raise ModelError(f"(t1 - t0)/dt = {n} is not an integer")

    @classmethod
    def over_horizon(cls, params: ScenarioParams, dt: float = 0.01) -> "TimeGrid":
        """Grid covering exactly [0, N/s]; ``dt`` is shrunk if it does not divide N/s."""
        n = max(1, int(math.ceil(params.horizon / dt - 1e-9)))
        return cls(0.0, params.horizon, params.horizon / n)

    @property
    def n_steps(self) -> int:
        return int(round((self.t1 - self.t0) / self.dt))

    @property
    def points(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.n_steps + 1)


def schedule_delay_cost(t, t_star: float, waiting, params: ScenarioParams):
    """
    Travel cost alpha*T + max(beta*d, -gamma*d) with d = t* - t - T.

    ``t`` and ``waiting`` may be arrays.
    """
    t = np.asarray(t, dtype=float)
    waiting = np.asarray(waiting, dtype=float)
    if np.any(waiting < 0):
        raise ModelError("waiting time must be non-negative")
    d = t_star - t - waiting
    cost = params.alpha * waiting + np.maximum(params.beta * d, -params.gamma * d)
    return cost[()] if cost.ndim == 0 else cost


def perceived_incentive(tau, t: float, delta: float, p_at_t: float, params: ScenarioParams):
    """
    Discount as perceived at time ``tau`` while charging on ``[t - delta, t]``.

    Decays linearly from ``p_at_t`` at the start of charging with slope
    ``-p_at_t / delta_bar``.
    """
    tau = np.asarray(tau, dtype=float)
    if not 0.0 <= delta <= params.delta_bar:
        raise ModelError(f"delta={delta} outside [0, delta_bar]")
    eps = 1e-9 * max(1.0, abs(t))
    if np.any(tau < t - delta - eps) or np.any(tau > t + eps):
        raise ModelError("tau outside the charging interval [t - delta, t]")
    k = p_at_t / params.delta_bar
    out = -k * tau + k * (t - delta + params.delta_bar)
    return out[()] if out.ndim == 0 else out


def charging_cost(t: float, delta, p_at_t, params: ScenarioParams):
    """
    Cost of charging ``delta`` minutes at the station at discount ``p_at_t``.

    The integral of the linear perceived incentive is taken analytically:
    ``alpha*delta + delta_bar*p_bar - p*delta + p*delta**2/(2*delta_bar)``.
    Accepts array ``delta`` and/or ``p_at_t``.
    """
    delta = np.asarray(delta, dtype=float)
    p = np.asarray(p_at_t, dtype=float)
    if np.any(delta < 0) or np.any(delta > params.delta_bar * (1 + 1e-12)):
        raise ModelError("delta outside [0, delta_bar]")
    # integral of p_hat over [t - delta, t]
    perceived = p * delta - p * delta**2 / (2.0 * params.delta_bar)
    cost = params.alpha * delta + params.base_charging_cost - perceived
    return cost[()] if cost.ndim == 0 else cost


def optimal_charging_time(p_at_t, params: ScenarioParams):
    """max{(1 - alpha/p) * delta_bar, 0}; zero whenever p <= alpha."""
    p = np.asarray(p_at_t, dtype=float)
    if np.any(p < 0):
        raise ModelError("discount must be non-negative")
    above = p > params.alpha
    safe = np.where(above, p, 1.0)
    out = np.where(above, (1.0 - params.alpha / safe) * params.delta_bar, 0.0)
    return out[()] if out.ndim == 0 else out


def optimal_charging_cost(t, p_at_t, params: ScenarioParams):
    """Charging cost at the optimal duration: base cost minus delta_bar*(p-alpha)^2/(2p) when p >= alpha."""
    p = np.asarray(p_at_t, dtype=float)
    if np.any(p < 0):
        raise ModelError("discount must be non-negative")
    above = p > params.alpha
    safe = np.where(above, p, 1.0)
    relief = np.where(above, params.delta_bar * (safe - params.alpha) ** 2 / (2.0 * safe), 0.0)
    out = params.base_charging_cost - relief
    return out[()] if out.ndim == 0 else out


def constant_incentive_charging_cost(t: float, delta, p_at_t: float, params: ScenarioParams):
    """Charging cost when the discount does not decay: (alpha - p)*delta + delta_bar*p_bar."""
    delta = np.asarray(delta, dtype=float)
    if np.any(delta < 0) or np.any(delta > params.delta_bar):
        raise ModelError("delta outside [0, delta_bar]")
    out = (params.alpha - p_at_t) * delta + params.base_charging_cost
    return out[()] if out.ndim == 0 else out


def constant_incentive_charging_time(p_at_t: float, params: ScenarioParams) -> float:
    # bang-bang; the tie p == alpha goes to 0
    return params.delta_bar if p_at_t > params.alpha else 0.0


def total_cost(t, waiting, p_at_t, params: ScenarioParams, t_star: float | None = None):
    """Schedule-delay cost plus optimal charging cost for a departure at ``t``."""
    if t_star is None:
        t_star = params.t_star
    return schedule_delay_cost(t, t_star, waiting, params) + optimal_charging_cost(t, p_at_t, params)
