"""Shared fixtures and independent oracles.

The oracles here deliberately avoid the library's root finders: they work
on dense grids or in mpmath so they can catch errors in the solver itself.
"""

import numpy as np
import pytest
from hypothesis import settings
from scipy.special import xlogy

from adaptexp import CostModel, Instance, RewardFamily

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")

TEASER = (0.0, 0.2, 0.4, 0.6, 0.8, 1.0)


@pytest.fixture
def gauss():
    return RewardFamily.gaussian(1.0)


@pytest.fixture
def teaser(gauss):
    return Instance(gauss, TEASER)


def kl_grid(kind, a, b, sigma=1.0):
    """Elementwise KL written out directly with numpy (oracle, no library code)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if kind == "gaussian":
        return (a - b) ** 2 / (2 * sigma**2)
    if kind == "bernoulli":
        return xlogy(a, a) - xlogy(a, b) + xlogy(1 - a, 1 - a) - xlogy(1 - a, 1 - b)
    return xlogy(a, a) - xlogy(a, b) - a + b


def chernoff_grid(kind, ti, tj, wi, wj, points=10**6, sigma=1.0):
    """min over a grid of theta in [tj, ti] of wi KL(ti, .) + wj KL(tj, .)."""
    grid = np.linspace(tj, ti, points)
    vals = wi * kl_grid(kind, ti, grid, sigma) + wj * kl_grid(kind, tj, grid, sigma)
    return float(vals.min())


def simplex_grid_maximizer(instance, costs, step=1e-3):
    """Brute-force maximizer of min_j D_j(p_best, p_j) / sum_i p_i C_i over a 3-arm simplex grid.

    The inner minimum over alternatives uses the closed form of the
    weighted Chernoff information evaluated directly on the grid.
    """
    assert instance.k == 3
    kind = instance.family.kind
    sigma = instance.family.sigma or 1.0
    th = np.asarray(instance.means)
    c = costs.within_costs(th)
    m = int(round(1 / step))
    i, j = np.meshgrid(np.arange(1, m), np.arange(1, m), indexing="ij")
    keep = i + j < m
    p = np.stack([i[keep], j[keep], m - i[keep] - j[keep]], axis=1) / m
    best = int(np.argmax(th))
    worst = np.full(p.shape[0], np.inf)
    for a in range(3):
        if a == best:
            continue
        pb, pa = p[:, best], p[:, a]
        bar = (pb * th[best] + pa * th[a]) / (pb + pa)
        d = pb * kl_grid(kind, th[best], bar, sigma) + pa * kl_grid(kind, th[a], bar, sigma)
        worst = np.minimum(worst, d)
    obj = worst / (p @ c)
    return p[int(np.argmax(obj))], float(obj.max())


def random_instances(rng, family, count, k=3):
    out = []
    while len(out) < count:
        if family.kind == "gaussian":
            th = rng.normal(0, 1, k)
        elif family.kind == "bernoulli":
            th = rng.uniform(0.05, 0.95, k)
        else:
            th = rng.uniform(0.2, 5, k)
        srt = np.sort(th)
        if np.min(np.diff(srt)) < 0.05:
            continue
        out.append(Instance(family, th))
    return out


# criterion number -> (ok, label, detail); filled by test_acceptance.py
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE):
        ok, label, detail = ACCEPTANCE[num]
        terminalreporter.write_line(f"criterion {num:>2} {'PASS' if ok else 'FAIL'}  {label}: {detail}")
