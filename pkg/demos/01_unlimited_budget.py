"""
Unlimited budget: the discount that removes the queue entirely.

Every commuter departs at capacity, nobody queues, and the discount makes
early and late departures exactly as attractive as arriving on time.
"""
import numpy as np

import pev_bottleneck as pb
from pev_bottleneck.oracle import equal_cost_check

P = pb.reference_scenario()
sched = pb.optimal_discount_unlimited(P)
flat = pb.DepartureProfile.constant(P.capacity, 0.0, P.horizon)

print(f"desired arrival t* = {P.t_star:.2f} min, rush hour {P.horizon:.0f} min")
for t in (0, 30, 60, 90, P.t_star, 130, 150):
    p = sched(t)
    print(f"  t = {t:6.2f}  discount {p:.4f} $/min  charge {pb.optimal_charging_time(p, P):5.2f} min")

spread, _ = equal_cost_check(sched, flat, P, tol=1e-6)
print(f"spread of the total cost over the rush hour: {spread:.1e} $")

per = pb.budget_perceived(sched, flat, P)
spent = pb.budget_spent(sched, flat, P)
print(f"perceived budget          {per:10.2f} $")
print(f"congestion-removing M$*   {pb.required_budget_star(P):10.2f} $  (nominal scale)")
print(f"cash paid out             {spent:10.2f} $")
print(f"inefficiency gap          {pb.inefficiency_gap(sched, flat, P):10.2f} $")
