import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

import pev_bottleneck as pb
from pev_bottleneck.core import TimeGrid
from pev_bottleneck.oracle import equal_cost_check


def _flat(params):
    return pb.DepartureProfile.constant(params.capacity, 0.0, params.horizon)


def test_unlimited_discount_shape(params):
    sched = pb.optimal_discount_unlimited(params)
    a = params.alpha
    assert sched(params.t_star) == pytest.approx(a, abs=1e-15)
    t = np.linspace(0, params.horizon, 3001)
    p = sched(t)
    assert np.all(p >= a - 1e-15)
    left, right = t < params.t_star, t > params.t_star
    assert np.all(np.diff(p[left]) < 0) and np.all(np.diff(p[right]) > 0)
    assert np.all(p[t != params.t_star] > a)


def test_unlimited_discount_at_zero(params):
    # plug-in of the root formula with g = -beta*t*
    a, db = params.alpha, params.delta_bar
    g = -params.beta * params.t_star
    expected = a - g / db + np.sqrt((g / db - a) ** 2 - a * a)
    assert pb.optimal_discount_unlimited(params)(0.0) == pytest.approx(expected, rel=1e-12)
    # radicand non-negative on a grid
    t = np.linspace(0, params.horizon, 1001)
    g = np.where(t < params.t_star, params.beta * (t - params.t_star), params.gamma * (params.t_star - t))
    assert np.all((g / db - a) ** 2 - a * a >= -1e-15)


def test_unlimited_is_queue_free_equal_cost(params_pbar):
    P = params_pbar
    sched, prof = pb.optimal_discount_unlimited(P), _flat(P)
    traj = pb.evolve_queue(prof, P, TimeGrid.over_horizon(P, 0.01))
    assert np.all(traj.queue == 0)
    assert pb.total_system_travel_time(traj) == 0.0
    dev, ok = equal_cost_check(sched, prof, P, tol=1e-6)
    assert ok, dev
    assert pb.total_cost(0.0, 0.0, sched(0.0), P) == pytest.approx(pb.total_cost(P.t_star, 0.0, sched(P.t_star), P))


def test_zero_and_threshold_schedules_spend_nothing(params):
    prof = _flat(params)
    for sched in (pb.IncentiveSchedule.zero(params), pb.IncentiveSchedule.constant(params.alpha, params)):
        assert pb.budget_spent(sched, prof, params) == 0.0
        assert pb.budget_perceived(sched, prof, params) == pytest.approx(0.0, abs=1e-12)
        assert pb.inefficiency_gap(sched, prof, params) == 0.0


def test_constant_schedule_pointwise(params):
    # constant p over r = s: every budget is N times its pointwise value
    prof = _flat(params)
    a, db, n = params.alpha, params.delta_bar, params.n_commuters
    for p in (1.5 * a, 3 * a, 0.75 * a):
        sched = pb.IncentiveSchedule.constant(p, params)
        per = n * db * max(p - a, 0) ** 2 / (2 * p)
        spent = n * max(1 - a / p, 0) * db * p
        assert pb.budget_perceived(sched, prof, params) == pytest.approx(per, rel=1e-9, abs=1e-9)
        assert pb.budget_spent(sched, prof, params) == pytest.approx(spent, rel=1e-9, abs=1e-9)
    # halving p on an above-threshold segment
    hi, lo = pb.IncentiveSchedule.constant(4 * a, params), pb.IncentiveSchedule.constant(2 * a, params)
    ratio = pb.budget_perceived(lo, prof, params) / pb.budget_perceived(hi, prof, params)
    assert ratio == pytest.approx(((2 * a - a) ** 2 / (2 * a)) / ((4 * a - a) ** 2 / (4 * a)))


def test_perceived_budget_star(params):
    b, g, n, s = params.beta, params.gamma, params.n_commuters, params.capacity
    closed = b * g * n**2 / (2 * s * (b + g))
    assert pb.perceived_budget_star(params) == pytest.approx(closed)
    assert closed == pytest.approx(34.9e3, rel=0.002)
    sched = pb.optimal_discount_unlimited(params)
    assert pb.budget_perceived(sched, _flat(params), params) == pytest.approx(closed, rel=1e-3)


def test_accounting_identity_prop1(params):
    sched, prof = pb.optimal_discount_unlimited(params), _flat(params)
    spent = pb.budget_spent(sched, prof, params)
    per = pb.budget_perceived(sched, prof, params)
    gap = pb.inefficiency_gap(sched, prof, params)
    assert spent == pytest.approx(per + gap, rel=1e-6)
    # the cash paid out carries the full delta_bar factor on the gap
    nominal = pb.nominal_inefficiency_gap(sched, prof, params)
    assert gap == pytest.approx(params.delta_bar * nominal, rel=1e-12)
    assert spent == pytest.approx(pb.perceived_budget_star(params) + params.delta_bar * nominal, rel=1e-4)


def test_required_budget_star(params):
    m = pb.required_budget_star(params)
    assert m == pytest.approx(37_400, rel=0.01)
    assert m == pytest.approx(pb.required_budget_star_closed_form(params), rel=1e-4)
    assert pb.budget_star(params) == pytest.approx(pb.required_budget_star_closed_form(params), rel=1e-12)


def test_required_budget_star_scipy_oracle(params):
    a = params.alpha
    sched = pb.optimal_discount_unlimited(params)

    def dens(t):
        p = float(sched(t))
        return (p * p - a * a) / (2 * p)

    gap = sum(integrate.quad(dens, lo, hi, epsabs=1e-12)[0]
              for lo, hi in ((0, params.t_star), (params.t_star, params.horizon)))
    expected = pb.perceived_budget_star(params) + params.capacity * gap
    assert pb.required_budget_star_closed_form(params) == pytest.approx(expected, rel=1e-9)


def test_required_budget_star_limits(params):
    big = pb.canonical_params(6.4, 3.9, 15.21, 9000, 60, 200)
    gap_small = pb.required_budget_star(params) - pb.perceived_budget_star(params)
    gap_big = pb.required_budget_star(big) - pb.perceived_budget_star(big)
    assert 0 < gap_big < gap_small
    empty = pb.canonical_params(6.4, 3.9, 15.21, 0, 60, 20)
    assert pb.required_budget_star(empty) == 0.0
    assert pb.required_budget_star_closed_form(empty) == 0.0


def test_exceeds_base_price_flag(params):
    assert not pb.IncentiveSchedule.zero(params).exceeds_base_price()
    assert pb.optimal_discount_unlimited(params).exceeds_base_price()
    high = pb.reference_scenario(p_bar=10.0)
    assert not pb.optimal_discount_unlimited(high).exceeds_base_price()


@settings(max_examples=40, deadline=None)
@given(p=st.floats(0.0, 2.0), rate=st.floats(0.0, 200.0))
def test_accounting_identity_constant(p, rate):
    P = pb.reference_scenario()
    sched = pb.IncentiveSchedule.constant(p, P)
    prof = pb.DepartureProfile.constant(rate, 0.0, P.horizon)
    spent = pb.budget_spent(sched, prof, P, dt=0.5)
    per = pb.budget_perceived(sched, prof, P, dt=0.5)
    gap = pb.inefficiency_gap(sched, prof, P, dt=0.5)
    assert gap >= 0
    assert 0 <= per <= spent + 1e-9
    assert spent == pytest.approx(per + gap, rel=1e-9, abs=1e-9)
