"""
Optimal allocations for six Gaussian arms
=========================================

Solve for the cost-optimal sampling proportions under two cost models and
look at how the best-arm share moves with the exploration cost c.
"""

# %%
import numpy as np
from adaptexp import CostModel, Instance, RewardFamily, beta_c, solve_p_star

inst = Instance(RewardFamily.gaussian(1.0), [0.0, 0.2, 0.4, 0.6, 0.8, 1.0])

# %%
# Unit costs: every sample costs the same, so this is plain best-arm
# identification. The best arm gets a bit under half the samples.
bai = solve_p_star(inst, CostModel.unit())
print("unit costs      p* =", np.round(bai.p_star, 4))
print("best-arm share     =", round(bai.p_star[bai.best_arm], 4))

# %%
# Length plus regret with c = 1: a sample of arm i costs c + gap_i, so
# clearly bad arms are sampled less and the top arm a little more.
lr = solve_p_star(inst, CostModel.length_regret(1.0))
print("length-regret   p* =", np.round(lr.p_star, 4))
print("kappa (1/Gamma*)   =", round(lr.lai_robbins_constant, 3))

# %%
# The optimal mixed strategy of the adversary puts weight on the arms
# that are hardest to tell apart from the best one.
print("q* (suboptimal arms) =", np.round(lr.q_star, 4))

# %%
# As c shrinks, regret dominates and the best arm takes nearly everything.
for c in (10.0, 1.0, 0.1, 0.01, 1e-3, 1e-4):
    print(f"c={c:<7g} best-arm share={beta_c(inst, c):.4f}")
