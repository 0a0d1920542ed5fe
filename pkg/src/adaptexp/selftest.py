"""Fast internal consistency checks, runnable without pytest."""

from __future__ import annotations

import math

import numpy as np

from .exp_family import Instance, RewardFamily, kl
from .pareto import extremes, frontier_point
from .policies import optimality_probabilities
from .solver import CostModel, mixed_payoff, solve_p_star
from .state import ExperimentState, stopping_statistic, z_statistic
from .stopping import c_exp, gamma, kaufmann_threshold


def _gaussian_identity(rng):
    worst = 0.0
    fam = RewardFamily.gaussian(1.7)
    for _ in range(200):
        k = int(rng.integers(2, 6))
        st = ExperimentState.from_counts(fam, rng.integers(1, 500, k), rng.normal(0, 2, k))
        lead, val = stopping_statistic(st)
        z = min(z_statistic(st, lead, j) for j in range(k) if j != lead)
        worst = max(worst, abs(val - z * z / 2.0) / max(1.0, val))
    return worst <= 1e-10, f"max rel error {worst:.2e}"


def _equilibrium(rng):
    inst = Instance(RewardFamily.bernoulli(), [0.7, 0.5, 0.3, 0.2])
    alloc = solve_p_star(inst, CostModel.length_regret(0.5))
    vals = [mixed_payoff(inst, alloc.costs, p, alloc) for p in rng.dirichlet(np.ones(4), 20)]
    spread = max(vals) - min(vals)
    ok = spread <= 1e-8 and abs(alloc.q_star.sum() - 1) <= 1e-12 and alloc.balance_residual() <= 1e-8
    return ok, f"payoff spread {spread:.1e}, balance {alloc.balance_residual():.1e}"


def _thresholds(rng):
    bad = 0
    for k in (2, 3, 6, 20):
        for n in (10, 10**3, 10**6, 10**9):
            for t in (1, 10, 10**4, 10**8):
                if kaufmann_threshold(t, 1.0 / n, k) > gamma(t, n, k):
                    bad += 1
    xs = np.linspace(0.52, 200, 200)
    bad += sum(c_exp(x) > x + 3 * math.log(x + 2) + 7 for x in xs)
    return bad == 0, f"{bad} violations"


def _teaser(rng):
    inst = Instance(RewardFamily.gaussian(1.0), [0, 0.2, 0.4, 0.6, 0.8, 1.0])
    _, _, bai = extremes(inst)
    return abs(bai - 0.446) <= 0.005, f"beta_BAI={bai:.6f}"


def _two_arm_frontier(rng):
    pt = frontier_point(Instance(RewardFamily.gaussian(1.0), [1.0, 0.0]), 0.5)
    ok = abs(pt.norm_length - 8) < 1e-9 and abs(pt.norm_regret - 4) < 1e-9
    return ok, f"L={pt.norm_length:.12g} R={pt.norm_regret:.12g}"


def _alpha_symmetry(rng):
    st = ExperimentState.from_counts(RewardFamily.gaussian(1.0), [7, 7, 7], [0.3, 0.3, 0.3])
    a = optimality_probabilities(st)
    err = float(np.abs(a - 1 / 3).max())
    return err <= 1e-6, f"max deviation {err:.1e}"


def _kl_oracle(rng):
    # 0.5 ln 2 + 0.5 ln(2/3), written out by hand
    want = 0.5 * math.log(2.0) + 0.5 * math.log(2.0 / 3.0)
    got = kl(RewardFamily.bernoulli(), 0.5, 0.25)
    return abs(got - want) <= 1e-14, f"kl={got!r}"


CHECKS = {
    "bernoulli kl": _kl_oracle,
    "gaussian t*D = Z^2/2": _gaussian_identity,
    "equilibrium payoff constant": _equilibrium,
    "threshold dominance": _thresholds,
    "teaser beta_BAI": _teaser,
    "two-arm frontier": _two_arm_frontier,
    "optimality symmetry": _alpha_symmetry,
}


def run(seed: int = 0, out=print) -> bool:
    rng = np.random.default_rng(seed)
    all_ok = True
    for name, check in CHECKS.items():
        ok, detail = check(rng)
        all_ok &= bool(ok)
        out(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
    return all_ok
