"""
Independent checks for the closed-form policy results.

The best-response simulation knows nothing about the equilibrium formulas:
a finite population of agents repeatedly moves to the cheapest departure
slot given everybody else, and the charging duration is picked by grid
search on the raw charging cost.  Its fixed point is compared with the
analytic departure profiles.
"""

from __future__ import annotations

from dataclasses import dataclass
import math

import numpy as np

from .core import ScenarioParams, TimeGrid, charging_cost, schedule_delay_cost, total_cost
from .dynamics import DepartureProfile, evolve_queue
from .numerics import BracketError, MonotonicityError, bisect_monotone, quadrature

__all__ = [
    "AgentPopulation",
    "BracketError",
    "ConvergenceReport",
    "MonotonicityError",
    "best_response_dynamics",
    "bisect_monotone",
    "brute_force_delta",
    "budget_map_f_quadrature",
    "equal_cost_check",
    "quadrature",
]


def brute_force_delta(t: float, p_at_t: float, params: ScenarioParams, grid_step: float = 1e-3) -> float:
    """Charging duration minimising the raw charging cost over a grid on [0, delta_bar]."""
    if grid_step <= 0:
        raise ValueError("grid_step must be positive")
    n = int(math.ceil(params.delta_bar / grid_step))
    deltas = np.minimum(np.arange(n + 1) * grid_step, params.delta_bar)
    costs = charging_cost(t, deltas, p_at_t, params)
    return float(deltas[int(np.argmin(costs))])


def _best_charging_costs(times: np.ndarray, prices: np.ndarray, params: ScenarioParams,
                         grid_step: float):
    n = int(math.ceil(params.delta_bar / grid_step))
    deltas = np.minimum(np.arange(n + 1) * grid_step, params.delta_bar)
    costs = charging_cost(0.0, deltas[None, :], prices[:, None], params)
    k = np.argmin(costs, axis=1)
    return costs[np.arange(len(times)), k], deltas[k]


def budget_map_f_quadrature(m_perceived: float, params: ScenarioParams, dt: float = 0.01) -> float:
    """
    Nominal budget for a perceived budget, by quadrature instead of the antiderivative.

    Integrates ``(p^2 - alpha^2)/(2p)`` of the limited-budget discount over the
    two incentive tails and adds it, times ``s``, to ``m_perceived``.
    """
    from .limited import schedule_for_window, window_from_perceived

    t_ell, t_r, _ = window_from_perceived(m_perceived, params)
    sched = schedule_for_window(t_ell, t_r, params)
    a = params.alpha

    def density(t):
        p = sched.price(t)
        return np.where(p > a, (p * p - a * a) / (2.0 * np.where(p > a, p, 1.0)), 0.0)

    tails = quadrature(density, 0.0, t_ell, dt=dt) + quadrature(density, t_r, params.horizon, dt=dt)
    return m_perceived + params.capacity * tails


def equal_cost_check(schedule, profile: DepartureProfile, params: ScenarioParams, tol: float,
                     dt: float = 0.01, mask=None):
    """
    Spread of total cost over the departure support.

    The queue induced by ``profile`` is sampled on a grid of step ``dt``; the
    total cost at every grid point with a positive departure rate (and inside
    ``mask(t)`` when given) enters the spread.  Returns ``(max - min, passed)``.
    """
    grid = TimeGrid.over_horizon(params, dt)
    traj = evolve_queue(profile, params, grid)
    t = traj.times
    keep = profile.rate_at(t) > 0
    if mask is not None:
        keep &= np.asarray(mask(t), dtype=bool)
    if not np.any(keep):
        return 0.0, True
    c = total_cost(t[keep], traj.waiting[keep], schedule.price(t[keep]), params)
    dev = float(np.max(c) - np.min(c))
    return dev, dev < tol


@dataclass(frozen=True)
class AgentPopulation:
    """
    Finite population, each agent carrying ``agent_mass`` vehicles.

    ``slot`` holds each agent's departure slot index; slot ``k`` spans
    ``[k*slot_width, (k+1)*slot_width)`` and the agent's vehicles leave
    uniformly within it.
    """

    n_agents: int
    agent_mass: float
    slot_width: float
    n_slots: int
    slot: np.ndarray
    charging: np.ndarray

    @property
    def departure_times(self) -> np.ndarray:
        """Slot midpoints, where each agent is costed."""
        return (self.slot + 0.5) * self.slot_width

    def counts(self) -> np.ndarray:
        return np.bincount(self.slot, minlength=self.n_slots)

    def profile(self) -> DepartureProfile:
        """Piecewise-constant departure rate induced by the population."""
        starts = np.arange(self.n_slots) * self.slot_width
        rates = self.counts() * self.agent_mass / self.slot_width
        return DepartureProfile(starts, rates, self.n_slots * self.slot_width)

    def mean_rate(self, t0: float, t1: float) -> float:
        """Average departure rate (veh/min) over the slots starting in ``[t0, t1)``."""
        starts = np.arange(self.n_slots) * self.slot_width
        sel = (starts >= t0 - 1e-9) & (starts < t1 - 1e-9)
        n_sel = int(np.sum(sel))
        if n_sel == 0:
            return 0.0
        return float(np.sum(self.counts()[sel]) * self.agent_mass / (n_sel * self.slot_width))

    def tstt(self, capacity: float) -> float:
        """Exact integral of the waiting time for the induced profile."""
        net = self.counts() * self.agent_mass - capacity * self.slot_width
        q = _lindley(net)
        total = 0.0
        h = self.slot_width
        for q0, x in zip(q[:-1], net):
            if q0 + x >= 0:
                total += (2 * q0 + x) * 0.5 * h
            else:
                total += q0 * q0 / (2.0 * (-x / h))
        return total / capacity


@dataclass(frozen=True)
class ConvergenceReport:
    iterations: int
    max_improvement: float
    cost_dispersion: float
    converged: bool


def _lindley(net: np.ndarray) -> np.ndarray:
    """Queue at slot boundaries for per-slot net inflows, starting empty."""
    net = np.asarray(net, dtype=float)
    zero = np.zeros(net.shape[:-1] + (1,))
    s = np.concatenate((zero, np.cumsum(net, axis=-1)), axis=-1)
    return s - np.minimum.accumulate(s, axis=-1)


def best_response_dynamics(schedule, params: ScenarioParams, seed: int = 0, max_iters: int = 300,
                           n_agents: int = 900, slot_width: float = 0.1,
                           delta_step: float = 0.1, move_fraction: float = 0.1,
                           eps: float = 1e-3):
    """
    Damped sequential best response over departure slots.

    Each round up to ``move_fraction`` of the agents, drawn at random from
    those that could still gain more than ``eps``, leave their slot one after
    the other and re-enter at the slot with the lowest total cost given
    everybody else.  An agent is costed at its slot midpoint: its vehicles and
    those of its slot-mates leave uniformly over the slot, so the queue it
    faces there includes half of the slot's own inflow.  Slots within ``eps``
    of the cheapest are treated as equally good and one is drawn at random;
    an agent already in such a slot stays.  After every round the
    largest gain any single agent could still obtain is measured; the run stops
    when it drops to ``eps`` or after ``max_iters`` rounds.

    Returns ``(AgentPopulation, ConvergenceReport)``; identical inputs and
    seed give identical results.
    """
    rng = np.random.default_rng(seed)
    n_slots = int(round(params.horizon / slot_width))
    mids = (np.arange(n_slots) + 0.5) * slot_width
    mass = params.n_commuters / n_agents
    cap_step = params.capacity * slot_width

    prices = np.asarray(schedule.price(mids), dtype=float)
    charge_cost, charge_delta = _best_charging_costs(mids, prices, params, delta_step)

    def entry_costs(others):
        # cost of one more agent joining each slot, given the other agents' slot counts
        net = others * mass - cap_step
        q_start = _lindley(net)[..., :-1]
        q_mid = np.maximum(0.0, q_start + 0.5 * (net + mass))
        return schedule_delay_cost(mids, params.t_star, q_mid / params.capacity, params) + charge_cost

    slot = rng.integers(0, n_slots, size=n_agents)
    counts = np.bincount(slot, minlength=n_slots).astype(float)
    n_move = max(1, int(round(move_fraction * n_agents)))
    tie = eps

    def slot_gains(counts):
        """Best available gain for an agent in each occupied slot, computed with that agent removed."""
        occupied = np.flatnonzero(counts)
        others = np.repeat(counts[None, :], len(occupied), axis=0)
        others[np.arange(len(occupied)), occupied] -= 1
        c = entry_costs(others)
        own = c[np.arange(len(occupied)), occupied]
        gains = np.zeros(n_slots)
        gains[occupied] = own - c.min(axis=1)
        own_cost = np.zeros(n_slots)
        own_cost[occupied] = own
        return gains, own_cost

    iters = 0
    gains, own_cost = slot_gains(counts)
    while iters < max_iters and gains.max() > eps:
        iters += 1
        unhappy = np.flatnonzero(gains[slot] > eps)
        movers = rng.choice(unhappy, size=min(n_move, len(unhappy)), replace=False)
        for i in movers:
            counts[slot[i]] -= 1
            c = entry_costs(counts)
            if c[slot[i]] <= c.min() + tie:
                best = slot[i]
            else:
                # ties are broken at random, otherwise everyone piles into the earliest cheapest slot
                best = int(rng.choice(np.flatnonzero(c <= c.min() + tie)))
            slot[i] = best
            counts[best] += 1
        gains, own_cost = slot_gains(counts)

    pop = AgentPopulation(n_agents, mass, slot_width, n_slots, slot.copy(), charge_delta[slot])
    agent_costs = own_cost[slot]
    report = ConvergenceReport(
        iterations=iters,
        max_improvement=float(gains.max()),
        cost_dispersion=float(agent_costs.max() - agent_costs.min()),
        converged=bool(gains.max() <= eps),
    )
    return pop, report
