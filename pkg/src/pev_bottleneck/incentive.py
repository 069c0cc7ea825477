"""
Discount schedules, the unlimited-budget optimum and budget accounting.

Budget quantities
-----------------
``budget_spent``
    Cash paid out: integral of r * delta* * p.
``budget_perceived``
    Part of it the commuters value: integral of r * (base charging cost - C_ch).
``inefficiency_gap``
    Their difference, whose integrand is ``delta_bar * (p^2 - alpha^2) / (2p)``
    above the threshold.
``nominal_inefficiency_gap``
    The same integral without the ``delta_bar`` factor, i.e. the gap per minute
    of required charging.  The nominal budget ``M_nominal = M_per + nominal gap``
    is the budget scale the limited-budget policy is parameterised by
    (:func:`required_budget_star`, :func:`~pev_bottleneck.limited.budget_map_f`).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import ModelError, ScenarioParams, optimal_charging_cost, optimal_charging_time
from .dynamics import DepartureProfile
from .numerics import quadrature


@dataclass(frozen=True)
class Segment:
    """
    One closed-form piece of a discount schedule on ``[t0, t1]``.

    ``kind`` is ``"zero"``, ``"constant"`` (discount ``value``) or ``"root"``:
    the discount that hands out a charging relief of
    ``slope * |t - anchor|`` per commuter, i.e. the larger root of
    ``delta_bar*(p - alpha)^2 / (2p) = slope*|t - anchor|``.
    """

    t0: float
    t1: float
    kind: str
    value: float = 0.0
    slope: float = 0.0
    anchor: float = 0.0

    def evaluate(self, t: np.ndarray, params: ScenarioParams) -> np.ndarray:
        if self.kind == "zero":
            return np.zeros_like(t)
        if self.kind == "constant":
            return np.full_like(t, self.value)
        if self.kind == "root":
            return root_discount(self.slope * np.abs(t - self.anchor), params)
        raise ModelError(f"unknown segment kind {self.kind!r}")


def root_discount(relief, params: ScenarioParams):
    """
    Discount ``alpha - g/delta_bar + sqrt((g/delta_bar - alpha)^2 - alpha^2)`` with ``g = -relief``.

    The radicand is computed as ``u*(u + 2*alpha)`` with ``u = relief/delta_bar``,
    which is exactly zero at the anchor and never negative from round-off.
    """
    u = np.asarray(relief, dtype=float) / params.delta_bar
    if np.any(u < 0):
        raise ModelError("relief must be non-negative")
    rad = np.maximum(u * (u + 2.0 * params.alpha), 0.0)
    return params.alpha + u + np.sqrt(rad)


@dataclass(frozen=True)
class IncentiveSchedule:
    """
    Discount p(t) on the rush hour as a list of closed-form segments.

    At a shared segment boundary the larger of the two one-sided values is
    taken, so the root segments own their anchor points and a zero segment is
    effectively open.
    """

    segments: tuple
    params: ScenarioParams
    label: str = ""

    @property
    def span(self) -> tuple:
        return self.segments[0].t0, self.segments[-1].t1

    @property
    def nodes(self) -> list:
        return sorted({s.t0 for s in self.segments} | {s.t1 for s in self.segments})

    def price(self, t):
        t = np.asarray(t, dtype=float)
        lo, hi = self.span
        tol = 1e-9 * max(1.0, hi)
        if np.any(t < lo - tol) or np.any(t > hi + tol):
            raise ModelError(f"schedule evaluated outside [{lo}, {hi}]")
        tt = np.atleast_1d(t)
        p = np.full(tt.shape, -np.inf)
        for seg in self.segments:
            if seg.t1 < seg.t0:
                continue
            mask = (tt >= seg.t0 - tol) & (tt <= seg.t1 + tol)
            if np.any(mask):
                p[mask] = np.maximum(p[mask], seg.evaluate(tt[mask], self.params))
        p = np.maximum(p, 0.0)
        return p.reshape(t.shape)[()] if t.ndim == 0 else p.reshape(t.shape)

    __call__ = price

    def charging_time(self, t):
        return optimal_charging_time(self.price(t), self.params)

    def exceeds_base_price(self, dt: float = 0.01) -> bool:
        """Whether the discount ever exceeds the base electricity price."""
        lo, hi = self.span
        t = np.union1d(np.arange(lo, hi, dt), self.nodes)
        return bool(np.any(self.price(t) > self.params.p_bar))

    @classmethod
    def zero(cls, params: ScenarioParams) -> "IncentiveSchedule":
        return cls((Segment(0.0, params.horizon, "zero"),), params, "zero")

    @classmethod
    def constant(cls, value: float, params: ScenarioParams) -> "IncentiveSchedule":
        if value < 0:
            raise ModelError("discount must be non-negative")
        return cls((Segment(0.0, params.horizon, "constant", value=value),), params,
                   f"constant {value:g}")


@dataclass(frozen=True)
class BudgetReport:
    """Accounting and congestion summary of one policy run (money in $, times in min)."""

    m_dollars: float
    m_perceived: float
    inefficiency_gap: float
    tstt: float
    c_e: float
    window: tuple
    m_nominal: float = float("nan")
    flags: tuple = field(default_factory=tuple)


def optimal_discount_unlimited(params: ScenarioParams) -> IncentiveSchedule:
    """Discount that removes all queueing with the least perceived budget."""
    ts, T = params.t_star, params.horizon
    segs = (
        Segment(0.0, ts, "root", slope=params.beta, anchor=ts),
        Segment(ts, T, "root", slope=params.gamma, anchor=ts),
    )
    return IncentiveSchedule(segs, params, "unlimited")


def _integrate_over_profile(integrand, schedule: IncentiveSchedule,
                            profile: DepartureProfile, dt: float) -> float:
    total = 0.0
    bounds = profile.breakpoints
    nodes = schedule.nodes
    for r, a, b in zip(profile.rates, bounds[:-1], bounds[1:]):
        if r == 0:
            continue
        total += r * quadrature(lambda t: integrand(schedule.price(t)), a, b, nodes, dt)
    return total


def budget_spent(schedule: IncentiveSchedule, profile: DepartureProfile,
                 params: ScenarioParams, dt: float = 0.01) -> float:
    """Money paid out when every commuter charges for the optimal duration."""
    return _integrate_over_profile(
        lambda p: optimal_charging_time(p, params) * p, schedule, profile, dt)


def budget_perceived(schedule: IncentiveSchedule, profile: DepartureProfile,
                     params: ScenarioParams, dt: float = 0.01) -> float:
    return _integrate_over_profile(
        lambda p: params.base_charging_cost - optimal_charging_cost(0.0, p, params),
        schedule, profile, dt)


def _gap_density(p, alpha: float):
    # max{(p^2 - alpha^2) / (2p), 0} without dividing by p <= alpha
    p = np.asarray(p, dtype=float)
    above = p > alpha
    safe = np.where(above, p, 1.0)
    return np.where(above, (safe**2 - alpha**2) / (2.0 * safe), 0.0)


def inefficiency_gap(schedule: IncentiveSchedule, profile: DepartureProfile,
                     params: ScenarioParams, dt: float = 0.01) -> float:
    """Spent minus perceived budget, integrated directly from its closed-form density."""
    return params.delta_bar * _integrate_over_profile(
        lambda p: _gap_density(p, params.alpha), schedule, profile, dt)


def nominal_inefficiency_gap(schedule: IncentiveSchedule, profile: DepartureProfile,
                             params: ScenarioParams, dt: float = 0.01) -> float:
    """Inefficiency gap per minute of required charging (see module docstring)."""
    return _integrate_over_profile(
        lambda p: _gap_density(p, params.alpha), schedule, profile, dt)


def perceived_budget_star(params: ScenarioParams) -> float:
    """Least perceived budget that removes congestion, beta*gamma*N^2 / (2s(beta+gamma))."""
    b, g = params.beta, params.gamma
    return b * g * params.n_commuters**2 / (2.0 * params.capacity * (b + g))


def sqrt_antiderivative(y, alpha: float):
    """``y*sqrt(y^2 - alpha^2) - alpha^2*log(sqrt(y^2 - alpha^2) + y)``, twice an antiderivative of sqrt(y^2 - alpha^2)."""
    y = np.asarray(y, dtype=float)
    r = np.sqrt(np.maximum(y * y - alpha * alpha, 0.0))
    return y * r - alpha**2 * np.log(r + y)


def relief_gap_integral(slope: float, duration: float, params: ScenarioParams) -> float:
    """
    Closed form of the nominal gap density integrated over a root segment.

    For a segment of length ``duration`` whose relief grows at ``slope`` away
    from its anchor, the density equals ``sqrt(y^2 - alpha^2)`` with
    ``y = alpha + relief/delta_bar``; the change of variables gives
    ``delta_bar/(2*slope) * [F(y)]_alpha^{alpha + slope*duration/delta_bar}``.
    """
    if duration <= 0:
        return 0.0
    a, db = params.alpha, params.delta_bar
    upper = a + slope * duration / db
    return db / (2.0 * slope) * float(sqrt_antiderivative(upper, a) - sqrt_antiderivative(a, a))


def required_budget_star(params: ScenarioParams, dt: float = 0.01) -> float:
    """
    Nominal budget needed to remove congestion entirely.

    Perceived budget plus ``s`` times the quadrature of the nominal gap density
    under the unlimited-budget discount.
    """
    if params.n_commuters == 0:
        return 0.0
    sched = optimal_discount_unlimited(params)
    gap = quadrature(lambda t: _gap_density(sched.price(t), params.alpha),
                     0.0, params.horizon, sched.nodes, dt)
    return perceived_budget_star(params) + params.capacity * gap


def required_budget_star_closed_form(params: ScenarioParams) -> float:
    if params.n_commuters == 0:
        return 0.0
    ts, T, s = params.t_star, params.horizon, params.capacity
    return perceived_budget_star(params) + s * (
        relief_gap_integral(params.beta, ts, params)
        + relief_gap_integral(params.gamma, T - ts, params)
    )
