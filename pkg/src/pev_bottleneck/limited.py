"""
Optimal discount under a budget cap.

The budget cap is given on the nominal scale (see :mod:`pev_bottleneck.incentive`).
``budget_map_f`` maps a perceived budget to that scale in closed form; it is
inverted numerically, and the perceived budget fixes the congestion window
``(t_ell, t_r)`` and the queue peak ``t_dblprime``.
"""

from __future__ import annotations

from dataclasses import dataclass
import math


from .core import ModelError, ScenarioParams, TimeGrid
from .dynamics import DepartureProfile, evolve_queue, total_system_travel_time
from .incentive import (
    BudgetReport,
    IncentiveSchedule,
    Segment,
    budget_spent,
    inefficiency_gap,
    optimal_discount_unlimited,
    perceived_budget_star,
    relief_gap_integral,
)
from .numerics import bisect_monotone


class OverBudgetError(ValueError):
    """Budget above what is needed to remove congestion; use the unlimited policy."""


def window_from_perceived(m_perceived: float, params: ScenarioParams):
    """``(t_ell, t_r, t_dblprime)`` for a given perceived budget."""
    b, g, s, a = params.beta, params.gamma, params.capacity, params.alpha
    m = max(0.0, m_perceived)
    t_ell = math.sqrt(2.0 * g * m / (s * b * (b + g)))
    t_r = params.horizon - math.sqrt(2.0 * b * m / (s * g * (b + g)))
    t_dbl = params.t_prime + math.sqrt(2.0 * b * g * m / (s * (b + g))) / a
    return t_ell, t_r, t_dbl


def _check_perceived(m_perceived: float, params: ScenarioParams) -> float:
    top = perceived_budget_star(params)
    tol = 1e-9 * max(1.0, top)
    if m_perceived < -tol or m_perceived > top + tol:
        raise ModelError(f"perceived budget {m_perceived} outside [0, {top}]")
    return min(max(m_perceived, 0.0), top)


def budget_map_f(m_perceived: float, params: ScenarioParams) -> float:
    """Nominal budget that buys perceived budget ``m_perceived``."""
    m = _check_perceived(m_perceived, params)
    t_ell, t_r, _ = window_from_perceived(m, params)
    s = params.capacity
    return m + s * (
        relief_gap_integral(params.beta, t_ell, params)
        + relief_gap_integral(params.gamma, params.horizon - t_r, params)
    )


def budget_star(params: ScenarioParams) -> float:
    """Closed-form nominal budget at which congestion disappears, f(M*_per)."""
    return budget_map_f(perceived_budget_star(params), params)


def invert_budget_map(m_dollars: float, params: ScenarioParams, rel_tol: float = 1e-8) -> float:
    """
    Perceived budget bought by nominal budget ``m_dollars``.

    Bisection on ``[0, M*_per]``; raises :class:`OverBudgetError` above the
    congestion-removing budget instead of clamping.
    """
    if m_dollars < 0:
        raise ModelError("budget must be non-negative")
    top = budget_star(params)
    if top == 0.0:
        return 0.0
    if m_dollars > top * (1.0 + 1e-12):
        raise OverBudgetError(f"budget {m_dollars:.2f} exceeds {top:.2f} needed to remove congestion")
    m_dollars = min(m_dollars, top)
    return bisect_monotone(lambda m: budget_map_f(m, params), 0.0,
                           perceived_budget_star(params), m_dollars, rel_tol * top)


def congestion_window(m_dollars: float, params: ScenarioParams):
    """``(t_ell, t_r, t_dblprime)`` for nominal budget ``m_dollars``."""
    return window_from_perceived(invert_budget_map(m_dollars, params), params)


def schedule_for_window(t_ell: float, t_r: float, params: ScenarioParams,
                        label: str = "") -> IncentiveSchedule:
    # zero-length tails are dropped, so a zero budget gives the zero schedule
    segs = []
    if t_ell > 0:
        segs.append(Segment(0.0, t_ell, "root", slope=params.beta, anchor=t_ell))
    if t_r > t_ell:
        segs.append(Segment(t_ell, t_r, "zero"))
    if t_r < params.horizon:
        segs.append(Segment(t_r, params.horizon, "root", slope=params.gamma, anchor=t_r))
    return IncentiveSchedule(tuple(segs), params, label)


def optimal_discount_limited(m_dollars: float, params: ScenarioParams) -> IncentiveSchedule:
    """Zero discount inside the congestion window, relief-root discount outside it."""
    t_ell, t_r, _ = congestion_window(m_dollars, params)
    return schedule_for_window(t_ell, t_r, params, f"limited {m_dollars:g}")


def profile_for_window(t_ell: float, t_r: float, t_dbl: float,
                       params: ScenarioParams) -> DepartureProfile:
    a, b, g, s = params.alpha, params.beta, params.gamma, params.capacity
    return DepartureProfile.from_pieces(
        [(0.0, s), (t_ell, a * s / (a - b)), (t_dbl, a * s / (a + g)), (t_r, s)],
        params.horizon,
    )


def limited_departure_rate(m_dollars: float, params: ScenarioParams) -> DepartureProfile:
    """Capacity flow outside the window; early and late equilibrium rates inside it."""
    return profile_for_window(*congestion_window(m_dollars, params), params)


def tstt_constants(params: ScenarioParams):
    """
    ``(theta, nu)`` such that TSTT = M_per/(alpha*s) - theta*sqrt(M_per) + nu.

    Both are expressed per unit capacity so the TSTT is the time integral of
    the waiting time (min^2); ``nu`` is the TSTT without any incentive.
    """
    a, b, g, s, n = params.alpha, params.beta, params.gamma, params.capacity, params.n_commuters
    theta = (n / a) * math.sqrt(2.0 * b * g / (s * (b + g))) / s
    nu = b * g * n**2 / (2.0 * s * a * (b + g)) / s
    return theta, nu


def tstt_limited(m_dollars: float, params: ScenarioParams) -> float:
    """Closed-form TSTT under the optimal limited-budget policy; 0 when over budget."""
    try:
        m = invert_budget_map(m_dollars, params)
    except OverBudgetError:
        return 0.0
    theta, nu = tstt_constants(params)
    # clamp round-off at the collapse point
    return max(0.0, m / (params.alpha * params.capacity) - theta * math.sqrt(m) + nu)


def tstt_geometric(t_ell: float, t_r: float, t_dbl: float, params: ScenarioParams) -> float:
    """Area of the triangular waiting-time profile, (t_r - t_ell)*(t* - t_dbl)/2."""
    return 0.5 * (t_r - t_ell) * (params.t_star - t_dbl)


@dataclass(frozen=True)
class LimitedBudgetSolution:
    t_ell: float
    t_r: float
    t_dblprime: float
    schedule: IncentiveSchedule
    profile: DepartureProfile
    report: BudgetReport
    mass_residual: float


def solve_limited(m_dollars: float, params: ScenarioParams, dt: float = 0.01) -> LimitedBudgetSolution:
    """
    Full policy run for one budget.

    Budgets above the congestion-removing level are answered with the
    unlimited policy and flagged ``"over_budget"``.  The report's TSTT comes
    from the simulated queue; the money fields are integrated numerically.
    """
    flags = []
    try:
        m_per = invert_budget_map(m_dollars, params)
        t_ell, t_r, t_dbl = window_from_perceived(m_per, params)
        schedule = schedule_for_window(t_ell, t_r, params, f"limited {m_dollars:g}")
        profile = profile_for_window(t_ell, t_r, t_dbl, params)
    except OverBudgetError:
        flags.append("over_budget")
        m_per = perceived_budget_star(params)
        t_ell = t_r = t_dbl = params.t_star
        schedule = optimal_discount_unlimited(params)
        profile = DepartureProfile.constant(params.capacity, 0.0, params.horizon)

    grid = TimeGrid.over_horizon(params, dt)
    traj = evolve_queue(profile, params, grid)
    spent = budget_spent(schedule, profile, params, dt)
    gap = inefficiency_gap(schedule, profile, params, dt)
    if schedule.exceeds_base_price(dt):
        flags.append("discount_exceeds_base_price")
    mass = profile.total()
    report = BudgetReport(
        m_dollars=spent,
        m_perceived=m_per,
        inefficiency_gap=gap,
        tstt=total_system_travel_time(traj),
        c_e=params.beta * (params.t_star - t_ell) + params.base_charging_cost,
        window=(t_ell, t_dbl, t_r),
        m_nominal=float(m_dollars),
        flags=tuple(flags),
    )
    return LimitedBudgetSolution(t_ell, t_r, t_dbl, schedule, profile, report,
                                 mass_residual=mass - params.n_commuters)


