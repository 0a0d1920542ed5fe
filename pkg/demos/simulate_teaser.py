"""
Top-two Thompson sampling against epsilon-greedy
================================================

A small Monte Carlo run on six Gaussian arms with the normal-quantile
stopping rule. Bump ``TRIALS`` for tighter error bars.
"""

# %%
import numpy as np
from adaptexp import (
    CostModel,
    EpsilonGreedy,
    ExactProbabilities,
    FixedBetaCoin,
    Instance,
    RewardFamily,
    RunConfig,
    StoppingRule,
    TopTwoTS,
    run_monte_carlo,
)

N = 10**6
TRIALS = 20
inst = Instance(RewardFamily.gaussian(1.0), [0.0, 0.2, 0.4, 0.6, 0.8, 1.0])
stop = StoppingRule.heuristic(N)
costs = CostModel.length_regret(1.0)

# %%
# Posterior probabilities are refreshed every 100 observations.
ts_rule = TopTwoTS(FixedBetaCoin(0.7), ExactProbabilities(), batch=100)
ts = run_monte_carlo(RunConfig(inst, ts_rule, stop, costs, N, TRIALS, base_seed=1)).summary
eg = run_monte_carlo(RunConfig(inst, EpsilonGreedy(0.4), stop, costs, N, TRIALS, base_seed=2)).summary

# %%
for name, s in (("top-two TS", ts), ("eps-greedy", eg)):
    print(f"{name:11s} length={s.mean_length:8.0f} +- {s.se_length:5.0f}   regret={s.mean_regret:7.1f} +- {s.se_regret:5.1f}")

# %%
# Where the samples went. Top-two TS spends its exploration on the arms
# close to the best one; epsilon-greedy spreads it evenly.
print("TS shares ", np.round(ts.mean_allocation, 3))
print("EG shares ", np.round(eg.mean_allocation, 3))
