"""Length-regret tradeoff of information-balanced allocations.

For an exploitation rate beta the balanced allocation p^(beta) has
normalized length L = 1 / D(beta, p_j) (the same for every suboptimal j)
and normalized regret R = L * sum_j p_j gap_j. Sweeping beta traces the
Pareto frontier; beta below the best-arm-identification rate gives
dominated points.
"""

from __future__ import annotations

import io
import math
import warnings
from dataclasses import dataclass
from typing import Iterable, List, Optional

import numpy as np

from .errors import InvalidParameterError
from .exp_family import Instance
from .solver import CostModel, solve_p_beta, solve_p_star
from .state import chernoff_info

# beta used for the numerical regret limit outside the Gaussian family
BETA_LIMIT = 1.0 - 1e-6


@dataclass(frozen=True)
class FrontierPoint:
    beta: float
    norm_length: float
    norm_regret: float
    allocation: np.ndarray
    dominated: bool = False

    def scaled(self, n: int):
        """(length, regret) multiplied back by ln(n)."""
        ln = math.log(n)
        return self.norm_length * ln, self.norm_regret * ln


def balanced_lengths(instance: Instance, p) -> np.ndarray:
    """1 / D(p_best, p_j) for each suboptimal arm j."""
    best = instance.best_arm
    th = instance.means
    out = []
    for j in range(instance.k):
        if j == best:
            continue
        d, _ = chernoff_info(instance.family, th[best], th[j], p[best], p[j])
        out.append(1.0 / d)
    return np.array(out)


def frontier_point(instance: Instance, beta: float, beta_bai: Optional[float] = None) -> FrontierPoint:
    """Normalized (length, regret) of the balanced allocation with rate beta."""
    p = solve_p_beta(instance, beta)
    lengths = balanced_lengths(instance, p)
    length = float(np.mean(lengths))
    regret = length * math.fsum(p * instance.gaps)
    dominated = beta_bai is not None and beta < beta_bai
    return FrontierPoint(float(beta), length, regret, p, bool(dominated))


def gaussian_regret_closed_form(instance: Instance, beta: float, p) -> float:
    """R^(beta) = 2 sigma^2 sum_j (p_j / beta + 1) / gap_j for Gaussian rewards."""
    sig2 = instance.family.sigma**2
    best = instance.best_arm
    gaps = instance.gaps
    return 2.0 * sig2 * math.fsum((p[j] / beta + 1.0) / gaps[j] for j in range(instance.k) if j != best)


def extremes(instance: Instance):
    """(L*, R*, beta_BAI) for an instance with a unique best arm.

    beta_BAI is the best-arm share of the unit-cost optimal allocation and
    L* its normalized length. R* has a closed form for Gaussian rewards;
    other families use the regret at beta = 1 - 1e-6 as the limit.
    """
    alloc = solve_p_star(instance, CostModel.unit())
    beta_bai = float(alloc.p_star[alloc.best_arm])
    l_star = float(np.mean(balanced_lengths(instance, alloc.p_star)))
    if instance.family.is_gaussian:
        sig2 = instance.family.sigma**2
        gaps = np.delete(instance.gaps, alloc.best_arm)
        r_star = 2.0 * sig2 * math.fsum(1.0 / gaps)
    else:
        warnings.warn(
            f"no closed form for R* with {instance.family} rewards; using beta={BETA_LIMIT}",
            RuntimeWarning,
            stacklevel=2,
        )
        r_star = frontier_point(instance, BETA_LIMIT).norm_regret
    return l_star, r_star, beta_bai


def beta_grid(lo: float = 0.01, hi: float = 0.99, step: float = 0.001) -> np.ndarray:
    """Inclusive grid lo, lo + step, ..., hi built from integer counts."""
    if not 0.0 < lo <= hi < 1.0 or not step > 0:
        raise InvalidParameterError("grid must satisfy 0 < lo <= hi < 1 and step > 0")
    m = int(round((hi - lo) / step))
    return np.round(lo + step * np.arange(m + 1), 12)


def trace_frontier(instance: Instance, betas: Iterable[float]) -> List[FrontierPoint]:
    """Frontier points sorted by beta, with ``dominated`` set for beta < beta_BAI."""
    betas = sorted(float(b) for b in betas)
    if any(not 0.0 < b < 1.0 for b in betas):
        raise InvalidParameterError("every beta must lie in (0, 1)")
    _, _, bai = _quiet_extremes(instance)
    return [frontier_point(instance, b, bai) for b in betas]


def _quiet_extremes(instance):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        return extremes(instance)


def frontier_csv(points: List[FrontierPoint], instance: Instance, n: Optional[int] = None, header: str = "") -> str:
    """CSV text; with ``n`` given, ln(n)-scaled columns are appended."""
    out = io.StringIO()
    note = f"instance={instance!r}"
    if header:
        note += f" {header}"
    out.write(f"# {note}\n")
    cols = ["beta", "norm_length", "norm_regret", "dominated"]
    if n is not None:
        cols += ["length_ln_n", "regret_ln_n"]
    out.write(",".join(cols) + "\n")
    for pt in points:
        row = [repr(pt.beta), repr(pt.norm_length), repr(pt.norm_regret), "true" if pt.dominated else "false"]
        if n is not None:
            row += [repr(v) for v in pt.scaled(n)]
        out.write(",".join(row) + "\n")
    return out.getvalue()
