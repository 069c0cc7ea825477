"""
Budget sweep: the summary table the command-line tool writes to sweep.csv.

The absolute inefficiency grows with the budget while its share shrinks,
and the total waiting falls quickly at first, then more slowly.
"""
from pev_bottleneck import cli

CONFIG = """
alpha = 6.4
beta = 3.9
gamma = 15.21
n_commuters = 9000
capacity = 60
delta_bar = 20

[sweep]
min = 0
max = "star"
count = 11
"""

rows = cli.sweep_report(cli.parse_config(CONFIG))
print(f"{'M$':>9} {'Mper':>9} {'gap':>8} {'gap/M$':>7} {'TSTT/nu':>8} {'t_ell':>7} {'t_r':>7}")
for r in rows:
    ratio = "" if r["gap_ratio"] != r["gap_ratio"] else f"{r['gap_ratio']:.4f}"
    print(f"{r['m_dollars']:9.0f} {r['m_perceived']:9.0f} {r['gap']:8.1f} {ratio:>7} "
          f"{r['tstt_ratio']:8.4f} {r['t_ell']:7.2f} {r['t_r']:7.2f}")
