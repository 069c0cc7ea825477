"""
Limited budget: 8660 $ buys a shorter and shallower congestion window.

Outside the window the discount keeps commuters at capacity flow; inside it
nobody is paid and the classical queue forms, peaking at t''.
"""
import numpy as np

import pev_bottleneck as pb
from pev_bottleneck.core import TimeGrid

P = pb.reference_scenario()
grid = TimeGrid.over_horizon(P, 0.01)

for m in (0.0, 8660.0):
    sol = pb.solve_limited(m, P)
    traj = pb.evolve_queue(sol.profile, P, grid)
    rep = sol.report
    print(f"budget {m:7.0f} $: window [{sol.t_ell:6.2f}, {sol.t_r:6.2f}] min, peak at {sol.t_dblprime:6.2f} min")
    print(f"    perceived {rep.m_perceived:8.1f} $, TSTT {rep.tstt:8.1f} min^2, "
          f"peak queue {traj.queue.max():7.1f} veh, common cost {rep.c_e:.3f} $")

base, lim = pb.tstt_limited(0.0, P), pb.tstt_limited(8660.0, P)
print(f"TSTT falls to {lim / base:.1%} of the no-incentive value")

sched = pb.optimal_discount_limited(8660.0, P)
print("discount along the rush hour:")
for t in np.arange(0, 151, 15):
    print(f"  t = {t:5.1f}  p = {sched(t):.4f} $/min")
