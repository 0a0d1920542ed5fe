"""
Length-regret frontier
======================

Trace normalized experiment length L and regret R of the information
balanced allocations as the best-arm share beta varies.
"""

# %%
import numpy as np
from adaptexp import Instance, RewardFamily, beta_grid, extremes, trace_frontier
from adaptexp.pareto import frontier_csv

inst = Instance(RewardFamily.gaussian(1.0), [0.0, 0.2, 0.4, 0.6, 0.8, 1.0])

# %%
# Shortest possible experiment (L*), smallest possible regret (R*) and the
# share that achieves L*.
l_star, r_star, beta_bai = extremes(inst)
print(f"L* = {l_star:.2f}   R* = {r_star:.3f}   beta_BAI = {beta_bai:.4f}")

# %%
points = trace_frontier(inst, beta_grid(0.05, 0.99, 0.01))
for pt in points[::10]:
    tag = "dominated" if pt.dominated else ""
    print(f"beta={pt.beta:.2f}  L={pt.norm_length:9.2f}  R={pt.norm_regret:8.3f}  {tag}")

# %%
# Halfway along, both quantities stay within a factor two of their optima.
mid = min(points, key=lambda p: abs(p.beta - 0.5))
print("L/L* =", round(mid.norm_length / l_star, 3), " R/R* =", round(mid.norm_regret / r_star, 3))

# %%
# Scale by ln(n) for a population of a million and keep the CSV around.
text = frontier_csv(points, inst, n=10**6)
print(text.splitlines()[1])
print(len(text.splitlines()) - 2, "rows")
