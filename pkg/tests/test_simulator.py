import math

import numpy as np
import pytest

from adaptexp import (
    ConfigError,
    CostAwareCoin,
    CostModel,
    EpsilonGreedy,
    ExactProbabilities,
    FixedBetaCoin,
    Instance,
    RewardFamily,
    RunConfig,
    StoppingRule,
    ThompsonSampling,
    TopTwoTS,
    evaluate_cost,
    run_monte_carlo,
    run_trial,
)
from adaptexp.simulator import summarize, summary_text, trial_seeds, trials_csv
from conftest import TEASER

G1 = RewardFamily.gaussian(1.0)
LR1 = CostModel.length_regret(1.0)


def cfg(rule=None, stop=None, n=5000, trials=3, seed=1, means=TEASER, costs=LR1, fam=G1):
    inst = Instance(fam, means)
    return RunConfig(
        inst,
        rule or TopTwoTS(FixedBetaCoin(0.7), ExactProbabilities(), batch=20),
        stop or StoppingRule.heuristic(n),
        costs,
        n,
        trials,
        seed,
    )


def test_never_stop_runs_full_population():
    rec = run_trial(cfg(stop=StoppingRule.never(), n=800), 0)
    assert rec.tau == 800 == sum(rec.counts)


def test_trial_determinism():
    c = cfg()
    assert run_trial(c, 2) == run_trial(c, 2)
    assert run_trial(c, 2) != run_trial(c, 3)


def test_seed_derivation_independent_of_other_trials():
    seed_a, *_ = trial_seeds(7, 0)
    seed_b, *_ = trial_seeds(7, 1)
    seed_c, *_ = trial_seeds(8, 0)
    assert len({seed_a, seed_b, seed_c}) == 3 and 0 <= seed_a < 2**64


def test_regret_decomposition_and_invariants():
    c = cfg(trials=6, n=3000)
    res = run_monte_carlo(c)
    gaps = c.instance.gaps
    for r in res.records:
        assert 0 <= r.tau <= c.n
        assert r.within_regret == math.fsum(n * g for n, g in zip(r.counts, gaps))
        assert r.total_regret == r.within_regret + (c.n - r.tau) * gaps[r.selected]
        assert r.total_regret >= 0
        assert r.correct == (r.selected == 5)
        # LengthRegret: cost = c * tau + regret
        assert abs(r.total_cost - (r.tau + r.total_regret)) <= 1e-9 * r.total_cost
        assert abs(evaluate_cost(r, LR1, c.instance) - r.total_cost) <= 1e-9 * r.total_cost


def test_unit_cost_evaluation():
    c = cfg(costs=CostModel.unit(), n=2000, trials=2)
    for r in run_monte_carlo(c).records:
        assert evaluate_cost(r, CostModel.unit(), c.instance) == r.tau + (c.n - r.tau) * (not r.correct)


def test_summary_single_trial_identity():
    c = cfg(trials=1)
    res = run_monte_carlo(c)
    r, s = res.records[0], res.summary
    assert s.mean_length == r.tau and s.mean_regret == r.total_regret and s.mean_cost == r.total_cost
    assert s.se_length == 0.0
    assert np.allclose(s.mean_allocation, r.allocation)


def test_summary_allocation_and_order_independence():
    res = run_monte_carlo(cfg(trials=5))
    assert abs(sum(res.summary.mean_allocation) - 1) <= 1e-12
    shuffled = summarize(list(reversed(res.records)))
    assert shuffled == res.summary


def test_parallel_matches_serial():
    c = cfg(trials=4)
    serial = run_monte_carlo(c)
    par = run_monte_carlo(c, threads=2)
    assert serial.records == par.records and serial.summary == par.summary


def test_strong_separation_exact_stopping():
    fam = RewardFamily.gaussian(0.01)
    c = RunConfig(Instance(fam, [10.0, 0.0]), TopTwoTS(CostAwareCoin(LR1)), StoppingRule.exact(10**6), LR1, 10**6, 100, 3)
    res = run_monte_carlo(c)
    assert all(r.correct and r.tau < 1000 for r in res.records)


def test_bernoulli_trial_runs():
    c = cfg(
        rule=TopTwoTS(CostAwareCoin(LR1)),
        stop=StoppingRule.exact(10**4),
        fam=RewardFamily.bernoulli(),
        means=(0.2, 0.8),
        n=10**4,
        trials=2,
    )
    for r in run_monte_carlo(c).records:
        assert r.correct and r.tau < 10**4


def test_config_validation():
    with pytest.raises(ConfigError):
        cfg(n=3)
    with pytest.raises(ConfigError):
        cfg(trials=0)
    with pytest.raises(ConfigError):
        cfg(seed=-1)


def test_csv_and_summary_format():
    res = run_monte_carlo(cfg(trials=2))
    text = trials_csv(res.records, "config_sha256=abc")
    lines = text.splitlines()
    assert lines[0] == "# config_sha256=abc"
    assert lines[1] == "trial,seed,tau,selected,correct,within_regret,total_regret,total_cost,fallbacks"
    assert len(lines) == 4
    summ = summary_text(res.summary, "x").splitlines()
    assert summ[1] == "trials=2"
    assert summ[-2].split(",")[0] == "trials" and summ[-1].split(",")[0] == "2"


def test_rule_state_is_not_shared_between_trials():
    rule = ThompsonSampling()
    c = cfg(rule=rule, trials=2)
    a = run_trial(c, 0)
    b = run_trial(c, 0)
    assert a == b and rule._snap is None


def test_epsilon_greedy_trial():
    rec = run_trial(cfg(rule=EpsilonGreedy(0.5), n=3000), 0)
    assert sum(rec.counts) == rec.tau
