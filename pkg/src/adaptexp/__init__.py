"""Cost-aware adaptive experimentation: optimal allocations, anytime allocation
rules, stopping rules, Monte Carlo simulation and length-regret frontiers."""

from .errors import (
    AdaptexpError,
    ConfigError,
    InvalidParameterError,
    NumericalError,
    OrderingError,
    OutOfRangeError,
    PreconditionError,
    UnsupportedOperationError,
)
from .exp_family import Instance, RewardFamily, RewardStream, eta, eta_derivative, kl, sample
from .pareto import FrontierPoint, beta_grid, extremes, frontier_point, trace_frontier
from .policies import (
    CostAwareCoin,
    DirectTracking,
    EpsilonGreedy,
    ExactProbabilities,
    FixedBetaCoin,
    KLCostAwareCoin,
    Rejection,
    ThompsonSampling,
    TopTwoTS,
    cost_aware_coin,
    direct_tracking,
    ef_coin_bias,
    epsilon_greedy,
    optimality_probabilities,
    top_two_ts,
)
from .simulator import RunConfig, TrialRecord, evaluate_cost, run_monte_carlo, run_trial
from .solver import CostModel, OptimalAllocation, beta_c, payoff, solve_p_beta, solve_p_star
from .state import ExperimentState, chernoff_info, stopping_statistic, z_statistic
from .stopping import StoppingRule, c_exp, gamma, kaufmann_threshold, should_stop

__version__ = "0.1.0"
