"""Acceptance gate: one test per criterion, each recording a PASS/FAIL line.

The lines are printed in the terminal summary (see conftest.py) and also
to stdout when a test runs with ``-s``. Monte Carlo criteria take minutes
on one CPU.
"""

import math
import time

import numpy as np
import pytest

from adaptexp import (
    CostAwareCoin,
    CostModel,
    DirectTracking,
    EpsilonGreedy,
    ExactProbabilities,
    ExperimentState,
    FixedBetaCoin,
    Instance,
    RewardFamily,
    RunConfig,
    StoppingRule,
    TopTwoTS,
    c_exp,
    chernoff_info,
    extremes,
    frontier_point,
    gamma,
    kaufmann_threshold,
    payoff,
    run_monte_carlo,
    solve_p_star,
    z_statistic,
)
from adaptexp.exp_family import RewardStream, kl_unchecked
from adaptexp.simulator import trials_csv
from adaptexp.solver import mixed_payoff
from conftest import ACCEPTANCE, TEASER, random_instances, simplex_grid_maximizer

G1 = RewardFamily.gaussian(1.0)
BER = RewardFamily.bernoulli()


def record(num, label, ok, detail):
    ACCEPTANCE[num] = (bool(ok), label, detail)
    print(f"criterion {num:>2} {'PASS' if ok else 'FAIL'}  {label}: {detail}")
    assert ok, f"criterion {num} ({label}) failed: {detail}"


def test_c01_teaser_datum():
    start = time.perf_counter()
    alloc = solve_p_star(Instance(G1, TEASER), CostModel.unit())
    elapsed = time.perf_counter() - start
    share = alloc.p_star[alloc.best_arm]
    ok = abs(share - 0.446) <= 0.005 and elapsed < 1.0
    record(1, "teaser unit-cost best-arm share", ok, f"p*={share:.6f} in {elapsed:.3f}s")


def test_c02_solver_vs_brute_force():
    rng = np.random.default_rng(2024)
    instances = random_instances(rng, G1, 10) + random_instances(rng, BER, 10)
    costs = CostModel.unit()
    worst_dev, worst_res, misses = 0.0, 0.0, []
    start = time.perf_counter()
    for idx, inst in enumerate(instances):
        alloc = solve_p_star(inst, costs)
        p_grid, _ = simplex_grid_maximizer(inst, costs, step=1e-3)
        dev = float(np.max(np.abs(p_grid - alloc.p_star)))
        res = max(alloc.balance_residual(), alloc.exploitation_residual())
        worst_dev, worst_res = max(worst_dev, dev), max(worst_res, res)
        if dev > 2e-3 or res > 1e-8:
            misses.append(f"#{idx} {inst.family.kind} dev={dev:.2e}")
    elapsed = time.perf_counter() - start
    ok = not misses and elapsed < 120
    detail = f"max dev {worst_dev:.2e}, max residual {worst_res:.1e}, {elapsed:.1f}s"
    if misses:
        detail += "; over tolerance: " + ", ".join(misses)
    record(2, "solver vs simplex grid", ok, detail)


def test_c03_equilibrium_suite():
    cases = [
        (Instance(G1, TEASER), CostModel.unit()),
        (Instance(G1, TEASER), CostModel.length_regret(1.0)),
        (Instance(BER, [0.6, 0.45, 0.3, 0.7]), CostModel.length_regret(0.3)),
        (Instance(RewardFamily.poisson(), [2.0, 4.0, 1.0, 3.5]), CostModel.per_arm([1.0, 2.0, 0.5, 1.5])),
    ]
    rng = np.random.default_rng(11)
    spread_alt = spread_mix = q_err = k_err = 0.0
    for inst, costs in cases:
        a = solve_p_star(inst, costs)
        vals = [payoff(inst, costs, a.p_star, alt) for alt in a.alternatives]
        spread_alt = max(spread_alt, max(vals) - min(vals))
        mixed = [mixed_payoff(inst, costs, p, a) for p in rng.dirichlet(np.ones(inst.k), 100)]
        spread_mix = max(spread_mix, max(mixed) - min(mixed))
        q_err = max(q_err, abs(math.fsum(a.q_star) - 1.0))
        k_err = max(k_err, abs(a.lai_robbins_constant - 1.0 / a.equilibrium_value))
    ok = spread_alt <= 1e-8 and spread_mix <= 1e-8 and q_err <= 1e-12 and k_err <= 1e-9
    record(
        3,
        "equilibrium",
        ok,
        f"spread over alternatives {spread_alt:.1e}, over 100 random p {spread_mix:.1e}, "
        f"|sum q - 1| {q_err:.1e}, |kappa - 1/Gamma| {k_err:.1e}",
    )


def test_c04_gaussian_identity():
    rng = np.random.default_rng(4)
    worst = 0.0
    for _ in range(10_000):
        k = int(rng.integers(2, 7))
        fam = RewardFamily.gaussian(float(rng.uniform(0.2, 5.0)))
        counts = rng.integers(1, 5000, k)
        means = rng.normal(0, 2, k)
        s = ExperimentState.from_counts(fam, counts, means)
        t = s.t
        props = s.proportions
        m = s.means
        i, j = rng.choice(k, 2, replace=False)
        if m[i] < m[j]:
            i, j = j, i
        d, _ = chernoff_info(fam, m[i], m[j], props[i], props[j])
        z = z_statistic(s, i, j)
        worst = max(worst, abs(t * d - z * z / 2) / max(1.0, z * z / 2))
    record(4, "t D = Z^2 / 2", worst <= 1e-10, f"max scaled error {worst:.1e} over 10^4 states")


def test_c05_threshold_dominance():
    bad = 0
    checked = 0
    for k in (2, 5, 10):
        for n in np.unique(np.logspace(2, 8, 25).astype(int)):
            if n < 3 / (k - 1):
                continue
            for t in np.unique(np.logspace(0, 4, 40).astype(int)):
                checked += 1
                if kaufmann_threshold(int(t), 1.0 / n, k) > gamma(int(t), int(n), k):
                    bad += 1
    xs = [0.52, 1, 2, 5, 10, 50] + list(np.linspace(0.52, 200, 400))
    bound_bad = sum(c_exp(x) > x + 3 * math.log(x + 2) + 7 for x in xs)
    ok = bad == 0 and bound_bad == 0
    record(5, "threshold dominance and C_exp bound", ok, f"{bad}/{checked} grid violations, {bound_bad}/{len(xs)} bound violations")


def test_c06_robustness_bounds():
    rng = np.random.default_rng(6)
    worst_l = worst_r = 0.0
    max_bai = 0.0
    for _ in range(10):
        k = int(rng.integers(2, 8))
        inst = Instance(RewardFamily.gaussian(float(rng.uniform(0.3, 3))), rng.normal(0, 1, k))
        l_star, r_star, bai = extremes(inst)
        max_bai = max(max_bai, bai)
        for beta in (1 / 3, 0.5, 0.7, 0.9):
            pt = frontier_point(inst, beta)
            worst_l = max(worst_l, pt.norm_length / (l_star / (1 - beta)))
            worst_r = max(worst_r, pt.norm_regret / (r_star / beta))
    ok = worst_l <= 1 + 1e-12 and worst_r <= 1 + 1e-12 and max_bai <= 0.5 + 1e-12
    record(6, "robustness bounds", ok, f"max L ratio {worst_l:.4f}, max R ratio {worst_r:.4f}, max beta_BAI {max_bai:.4f}")


def test_c07_limit_checks():
    inst = Instance(G1, [1.0, 0.5, 0.0])
    a = solve_p_star(inst, CostModel.length_regret(1e-4))
    gaps = inst.gaps[a.suboptimal]
    explore = a.p_star[a.suboptimal] / a.p_star[a.suboptimal].sum()
    target = gaps**-2 / np.sum(gaps**-2)
    share_err = float(np.max(np.abs(explore / target - 1)))
    kappa_lim = math.fsum(g / kl_unchecked(G1, th, 1.0) for g, th in zip(gaps, inst.means[a.suboptimal]))
    kappa_err = abs(a.lai_robbins_constant / kappa_lim - 1)
    ok = share_err <= 0.02 and kappa_err <= 0.02
    record(
        7,
        "small-c limits",
        ok,
        f"shares {np.round(explore, 4).tolist()} vs {np.round(target, 4).tolist()} (rel err {share_err:.2%}); "
        f"kappa {a.lai_robbins_constant:.4f} vs {kappa_lim:.4f} (rel err {kappa_err:.2%})",
    )


N_MC = 10**6


def teaser_config(rule, stop, trials, seed, costs=None):
    return RunConfig(Instance(G1, TEASER), rule, stop, costs or CostModel.length_regret(1.0), N_MC, trials, seed)


@pytest.mark.slow
def test_c08_teaser_dominance():
    stop = StoppingRule.heuristic(N_MC)
    ts = run_monte_carlo(teaser_config(TopTwoTS(FixedBetaCoin(0.7), ExactProbabilities(), batch=100), stop, 500, 81))
    eg = run_monte_carlo(teaser_config(EpsilonGreedy(0.4), stop, 500, 82))
    a, b = ts.summary, eg.summary
    ts_alloc, eg_alloc = np.array(a.mean_allocation), np.array(b.mean_allocation)
    eg_sub = eg_alloc[:5]
    cv = float(np.std(eg_sub) / np.mean(eg_sub))
    shape = ts_alloc[4] > 3 * ts_alloc[0] and cv <= 0.25
    ok = a.mean_length < b.mean_length and a.mean_regret < b.mean_regret and shape
    record(
        8,
        "top-two TS dominates epsilon-greedy",
        ok,
        f"length {a.mean_length:.0f} vs {b.mean_length:.0f}, regret {a.mean_regret:.1f} vs {b.mean_regret:.1f}; "
        f"TS shares {np.round(ts_alloc, 3).tolist()}, EG suboptimal CV {cv:.3f}",
    )


@pytest.mark.slow
def test_c09_convergence():
    costs = CostModel.length_regret(1.0)
    inst = Instance(G1, TEASER)
    p_star = solve_p_star(inst, costs).p_star
    res = run_monte_carlo(
        teaser_config(TopTwoTS(CostAwareCoin(costs), ExactProbabilities(), batch=100), StoppingRule.exact(N_MC), 200, 91)
    )
    mad = np.mean([np.abs(r.allocation - p_star) for r in res.records], axis=0)

    three = Instance(G1, [1.0, 0.5, 0.0])
    target = solve_p_star(three, CostModel.unit()).p_star
    rule = DirectTracking(CostModel.unit(), batch=1).fresh()
    state = ExperimentState(G1, 3)
    seeds = np.random.SeedSequence(92).spawn(2)
    prng, stream = np.random.default_rng(seeds[0]), RewardStream(three, np.random.default_rng(seeds[1]))
    for _ in range(10**5):
        arm = rule.choose(state, prng)
        state.update(arm, stream.next(arm))
    dt_dev = float(np.max(np.abs(state.proportions - target)))
    ok = float(mad.max()) <= 0.05 and dt_dev <= 0.02
    record(
        9,
        "allocation convergence",
        ok,
        f"TTTS per-arm mean |p_tau - p*| max {mad.max():.4f} (mean length {res.summary.mean_length:.0f}); "
        f"direct tracking max deviation {dt_dev:.4f}",
    )


@pytest.mark.slow
def test_c10_safety():
    costs = CostModel.length_regret(1.0)
    res = run_monte_carlo(
        teaser_config(TopTwoTS(CostAwareCoin(costs), ExactProbabilities(), batch=100), StoppingRule.exact(N_MC), 1000, 101)
    )
    bad = sum(r.early_wrong for r in res.records)
    stopped = sum(r.tau < N_MC for r in res.records)
    record(10, "no early wrong selection", bad == 0, f"{bad} early-wrong events in 1000 trials ({stopped} stopped early)")


def test_c11_determinism():
    cfg = RunConfig(
        Instance(G1, TEASER),
        TopTwoTS(FixedBetaCoin(0.7), ExactProbabilities(), batch=20),
        StoppingRule.heuristic(10**5),
        CostModel.length_regret(1.0),
        10**5,
        6,
        1111,
    )
    first = trials_csv(run_monte_carlo(cfg).records, "seed=1111").encode()
    second = trials_csv(run_monte_carlo(cfg).records, "seed=1111").encode()
    parallel = trials_csv(run_monte_carlo(cfg, threads=3).records, "seed=1111").encode()
    ok = first == second == parallel
    record(11, "byte-identical trial CSV", ok, f"{len(first)} bytes, serial x2 and 3-process runs {'match' if ok else 'differ'}")
