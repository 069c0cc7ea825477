"""Electricity-discount incentives for the bottleneck model with PEV charging."""

from .core import (
    ModelError,
    ScenarioParams,
    TimeGrid,
    canonical_params,
    charging_cost,
    constant_incentive_charging_cost,
    constant_incentive_charging_time,
    optimal_charging_cost,
    optimal_charging_time,
    perceived_incentive,
    schedule_delay_cost,
    total_cost,
)
from .dynamics import (
    DepartureProfile,
    QueueTrajectory,
    arrival_time,
    classical_equilibrium,
    evolve_queue,
    queue_at,
    total_system_travel_time,
    waiting_time,
)
from .incentive import (
    BudgetReport,
    IncentiveSchedule,
    budget_perceived,
    budget_spent,
    inefficiency_gap,
    nominal_inefficiency_gap,
    optimal_discount_unlimited,
    perceived_budget_star,
    required_budget_star,
    required_budget_star_closed_form,
)
from .limited import (
    LimitedBudgetSolution,
    OverBudgetError,
    budget_map_f,
    budget_star,
    congestion_window,
    invert_budget_map,
    limited_departure_rate,
    optimal_discount_limited,
    solve_limited,
    tstt_constants,
    tstt_geometric,
    tstt_limited,
)

__version__ = "0.1.0"


def reference_scenario(p_bar: float = 0.0) -> ScenarioParams:
    """Reference morning-commute scenario: 9000 PEV commuters, 60 veh/min, 20-min charge."""
    return canonical_params(6.4, 3.9, 15.21, 9000, 60, 20, p_bar)
