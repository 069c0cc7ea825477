"""
Independent checks: grid search for the charging time, quadrature for the
budget map, and a short run of the agent best-response simulation.

The best-response run is reported as is; at this granularity it does not
settle, which the convergence report makes visible.
"""
import numpy as np

import pev_bottleneck as pb
from pev_bottleneck.oracle import best_response_dynamics, brute_force_delta, budget_map_f_quadrature

P = pb.reference_scenario()

for p in (0.5 * P.alpha, 1.5 * P.alpha, 4 * P.alpha):
    print(f"p = {p:.4f}: grid {brute_force_delta(0.0, p, P, 1e-3):.3f} min, "
          f"closed form {pb.optimal_charging_time(p, P):.3f} min")

for frac in (0.25, 0.5, 1.0):
    m = frac * pb.perceived_budget_star(P)
    print(f"Mper = {m:8.1f} $: f closed form {pb.budget_map_f(m, P):9.2f} $, "
          f"quadrature {budget_map_f_quadrature(m, P):9.2f} $")

pop, rep = best_response_dynamics(pb.optimal_discount_unlimited(P), P, seed=0, max_iters=30)
nu = pb.tstt_constants(P)[1]
print(f"best response, 30 rounds: {rep}")
print(f"  induced TSTT / no-incentive TSTT = {pop.tstt(P.capacity) / nu:.3f}")
