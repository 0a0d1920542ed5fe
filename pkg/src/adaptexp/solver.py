"""Optimal allocation oracle.

Solves for the allocation that balances the weighted Chernoff information
against every suboptimal arm while meeting the cost-aware exploitation-rate
condition, together with the skeptic's equilibrium mixture over hard
alternatives, the equilibrium value and the Lai-Robbins-type constant.

All scalar equations are monotone in their unknown and are solved by
bracketed root finding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.optimize import brentq

from .errors import InvalidParameterError, NumericalError, OutOfRangeError, PreconditionError
from .exp_family import Instance, RewardFamily, kl_unchecked

LENGTH_REGRET = "length_regret"
UNIT = "unit"
PER_ARM = "per_arm"
CUSTOM = "custom"

_EPS = np.finfo(float).eps
_MAXITER = 200


@dataclass(frozen=True)
class CostModel:
    """Within-experiment costs C_i(theta) and post-experiment costs Delta_i(theta).

    ``length_regret(c)``: C_i = c + gap_i, Delta_i = gap_i.
    ``unit()``: C_i = 1, Delta_i = 1{i not best}.
    ``per_arm(c_1..c_k)``: C_i = c_i, Delta_i = 1{i not best}.
    ``custom(within, post)``: caller-supplied pure functions of the mean vector.
    """

    kind: str
    c: Optional[float] = None
    per_arm_costs: Optional[tuple] = None
    within: Optional[Callable] = None
    post: Optional[Callable] = None

    def __post_init__(self):
        if self.kind == LENGTH_REGRET:
            if self.c is None or not (self.c > 0) or not math.isfinite(self.c):
                raise InvalidParameterError("length-regret cost needs c > 0")
        elif self.kind == PER_ARM:
            costs = tuple(float(v) for v in (self.per_arm_costs or ()))
            if not costs or any(not (v > 0) or not math.isfinite(v) for v in costs):
                raise InvalidParameterError("per-arm costs must be positive")
            object.__setattr__(self, "per_arm_costs", costs)
        elif self.kind == CUSTOM:
            if not callable(self.within) or not callable(self.post):
                raise InvalidParameterError("custom costs need callables for within and post costs")
        elif self.kind != UNIT:
            raise InvalidParameterError(f"unknown cost model {self.kind!r}")

    @classmethod
    def length_regret(cls, c: float) -> "CostModel":
        return cls(LENGTH_REGRET, c=float(c))

    @classmethod
    def unit(cls) -> "CostModel":
        return cls(UNIT)

    @classmethod
    def per_arm(cls, costs: Sequence[float]) -> "CostModel":
        return cls(PER_ARM, per_arm_costs=tuple(costs))

    @classmethod
    def custom(cls, within: Callable, post: Callable) -> "CostModel":
        return cls(CUSTOM, within=within, post=post)

    def within_costs(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        if self.kind == LENGTH_REGRET:
            return self.c + (theta.max() - theta)
        if self.kind == UNIT:
            return np.ones_like(theta)
        if self.kind == PER_ARM:
            if len(self.per_arm_costs) != theta.size:
                raise InvalidParameterError(
                    f"{len(self.per_arm_costs)} per-arm costs for {theta.size} arms"
                )
            return np.array(self.per_arm_costs)
        out = np.asarray(self.within(theta), dtype=float)
        if out.shape != theta.shape or np.any(~(out > 0)):
            raise InvalidParameterError("custom within-experiment costs must be positive, one per arm")
        return out

    def post_costs(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        if self.kind == LENGTH_REGRET:
            return theta.max() - theta
        if self.kind in (UNIT, PER_ARM):
            return (theta < theta.max()).astype(float)
        out = np.asarray(self.post(theta), dtype=float)
        if out.shape != theta.shape or np.any(out < 0):
            raise InvalidParameterError("custom post-experiment costs must be nonnegative, one per arm")
        return out

    def __str__(self):
        if self.kind == LENGTH_REGRET:
            return f"length_regret(c={self.c:g})"
        if self.kind == PER_ARM:
            return f"per_arm({', '.join(f'{v:g}' for v in self.per_arm_costs)})"
        return self.kind


# -- g_j and its inverse ------------------------------------------------------


def _weighted_mean(top: float, other: float, x: float) -> float:
    return (top + x * other) / (1.0 + x)


def _g(family: RewardFamily, top: float, other: float, x: float) -> float:
    if family.is_gaussian:
        a = (top - other) ** 2 / (2.0 * family.sigma**2)
        return a * x / (1.0 + x)
    bar = _weighted_mean(top, other, x)
    return kl_unchecked(family, top, bar) + x * kl_unchecked(family, other, bar)


def _x_of_y(family: RewardFamily, top: float, other: float, y: float) -> float:
    """Solve g(x) = y for x >= 0."""
    if y <= 0.0:
        return 0.0
    if family.is_gaussian:
        a = (top - other) ** 2 / (2.0 * family.sigma**2)
        return y / (a - y)
    hi = 1.0
    for _ in range(2000):
        if _g(family, top, other, hi) > y:
            break
        hi *= 2.0
    else:
        raise NumericalError("could not bracket the inverse of g")
    return brentq(
        lambda x: _g(family, top, other, x) - y,
        0.0,
        hi,
        xtol=1e-300,
        rtol=4 * _EPS,
        maxiter=_MAXITER,
    )


def _best_and_others(instance: Instance):
    best = instance.best_arm
    others = np.array([j for j in range(instance.k) if j != best], dtype=int)
    return best, others


def g(instance: Instance, j: int, x: float) -> float:
    """g_j(x) = KL(top, bar) + x KL(theta_j, bar) with bar the (1, x)-weighted mean."""
    best = instance.best_arm
    if j == best:
        raise InvalidParameterError("g_j is defined for suboptimal arms")
    if x < 0:
        raise InvalidParameterError("g_j is defined for x >= 0")
    th = instance.means
    return _g(instance.family, float(th[best]), float(th[j]), float(x))


def g_inverse(instance: Instance, j: int, y: float) -> float:
    """x_j(y), the inverse of g_j on [0, KL(top, theta_j))."""
    best = instance.best_arm
    if j == best:
        raise InvalidParameterError("x_j is defined for suboptimal arms")
    th = instance.means
    top, other = float(th[best]), float(th[j])
    upper = kl_unchecked(instance.family, top, other)
    if y < 0 or y >= upper:
        raise OutOfRangeError(f"y={y} outside [0, {upper})")
    return _x_of_y(instance.family, top, other, float(y))


# -- optimal allocation -------------------------------------------------------


@dataclass
class OptimalAllocation:
    """Equilibrium of the allocation game for one instance and cost model.

    ``q_star`` and ``alternatives`` are indexed by ``suboptimal`` (the
    suboptimal arms in increasing order).
    """

    instance: Instance
    costs: CostModel
    best_arm: int
    suboptimal: np.ndarray
    p_star: np.ndarray
    q_star: np.ndarray
    equilibrium_value: float
    lai_robbins_constant: float
    y_star: float
    alternatives: np.ndarray

    def weighted_means(self) -> np.ndarray:
        th, p, b = self.instance.means, self.p_star, self.best_arm
        j = self.suboptimal
        return (p[b] * th[b] + p[j] * th[j]) / (p[b] + p[j])

    def chernoff_values(self) -> np.ndarray:
        """D(p_best, p_j) for each suboptimal arm."""
        fam, th, p, b = self.instance.family, self.instance.means, self.p_star, self.best_arm
        j = self.suboptimal
        bar = self.weighted_means()
        return p[b] * kl_unchecked(fam, np.full(j.size, th[b]), bar) + p[j] * kl_unchecked(fam, th[j], bar)

    def balance_residual(self) -> float:
        d = self.chernoff_values()
        return float((d.max() - d.min()) / d.mean())

    def exploitation_residual(self) -> float:
        fam, th, b, j = self.instance.family, self.instance.means, self.best_arm, self.suboptimal
        c = self.costs.within_costs(th)
        bar = self.weighted_means()
        num = kl_unchecked(fam, np.full(j.size, th[b]), bar) / c[b]
        den = kl_unchecked(fam, th[j], bar) / c[j]
        return float(abs(math.fsum(num / den) - 1.0))


def _exploitation_ratio(family, top, others, ratios, y):
    xs = [_x_of_y(family, top, o, y) for o in others]
    total = 0.0
    for r, o, x in zip(ratios, others, xs):
        bar = _weighted_mean(top, o, x)
        den = kl_unchecked(family, o, bar)
        if den == 0.0:
            # x so large that the weighted mean rounds onto theta_j; the ratio diverges
            return math.inf
        total += r * kl_unchecked(family, top, bar) / den
    return total


def _upper_y(family, top, others) -> float:
    return min(kl_unchecked(family, top, o) for o in others)


def solve_p_star(instance: Instance, costs: CostModel) -> OptimalAllocation:
    """Optimal allocation p*, skeptic mixture q*, equilibrium value and kappa."""
    best, others_idx = _best_and_others(instance)
    th = instance.means
    fam = instance.family
    c = costs.within_costs(th)
    if np.any(~(c > 0)) or not np.all(np.isfinite(c)):
        raise PreconditionError("within-experiment costs must be positive at the instance")
    top = float(th[best])
    others = [float(th[j]) for j in others_idx]
    ratios = [float(c[j] / c[best]) for j in others_idx]

    ymax = _upper_y(fam, top, others)
    gap = 1e-9 * ymax
    y_hi = ymax - gap
    for _ in range(_MAXITER):
        if _exploitation_ratio(fam, top, others, ratios, y_hi) >= 1.0:
            break
        gap /= 10.0
        y_next = ymax - gap
        if y_next <= y_hi:
            raise NumericalError("could not bracket the exploitation-rate equation")
        y_hi = y_next
    else:
        raise NumericalError("could not bracket the exploitation-rate equation")
    y_star = brentq(
        lambda y: _exploitation_ratio(fam, top, others, ratios, y) - 1.0,
        0.0,
        y_hi,
        xtol=1e-300,
        rtol=4 * _EPS,
        maxiter=_MAXITER,
    )
    return _assemble(instance, costs, best, others_idx, y_star, c)


def _assemble(instance, costs, best, others_idx, y_star, c) -> OptimalAllocation:
    th, fam = instance.means, instance.family
    top = float(th[best])
    x = np.ones(instance.k)
    for j in others_idx:
        x[j] = _x_of_y(fam, top, float(th[j]), y_star)
    p = x / math.fsum(x)
    bar = (p[best] * top + p[others_idx] * th[others_idx]) / (p[best] + p[others_idx])
    kl_j = kl_unchecked(fam, th[others_idx], bar)
    terms = c[others_idx] / kl_j
    kappa = math.fsum(terms)
    value = 1.0 / kappa
    q = terms * value
    alts = np.tile(th, (others_idx.size, 1))
    for row, j in enumerate(others_idx):
        alts[row, best] = bar[row]
        alts[row, j] = bar[row]
    return OptimalAllocation(
        instance=instance,
        costs=costs,
        best_arm=best,
        suboptimal=others_idx,
        p_star=p,
        q_star=q,
        equilibrium_value=value,
        lai_robbins_constant=kappa,
        y_star=float(y_star),
        alternatives=alts,
    )


def solve_p_beta(instance: Instance, beta: float) -> np.ndarray:
    """Information-balanced allocation with exploitation rate ``beta``."""
    if not 0.0 < beta < 1.0:
        raise InvalidParameterError("beta must lie in (0, 1)")
    best, others_idx = _best_and_others(instance)
    th, fam = instance.means, instance.family
    top = float(th[best])
    others = [float(th[j]) for j in others_idx]
    target = (1.0 - beta) / beta

    def excess(y):
        return math.fsum(_x_of_y(fam, top, o, y) for o in others) - target

    ymax = _upper_y(fam, top, others)
    gap = 1e-9 * ymax
    y_hi = ymax - gap
    for _ in range(_MAXITER):
        if excess(y_hi) >= 0.0:
            break
        gap /= 10.0
        y_next = ymax - gap
        if y_next <= y_hi:
            raise NumericalError("could not bracket the balance equation")
        y_hi = y_next
    y = brentq(excess, 0.0, y_hi, xtol=1e-300, rtol=4 * _EPS, maxiter=_MAXITER)
    p = np.empty(instance.k)
    p[best] = beta
    for j, o in zip(others_idx, others):
        p[j] = beta * _x_of_y(fam, top, o, y)
    return p


def payoff(instance: Instance, costs: CostModel, p, alternative) -> float:
    """Information per unit cost: sum_i p_i KL(theta_i, alt_i) / sum_i p_i C_i(theta)."""
    p = np.asarray(p, dtype=float)
    alt = np.asarray(alternative, dtype=float)
    th = instance.means
    num = math.fsum(p * kl_unchecked(instance.family, th, alt))
    den = math.fsum(p * costs.within_costs(th))
    return num / den


def mixed_payoff(instance: Instance, costs: CostModel, p, alloc: OptimalAllocation) -> float:
    """Expected payoff of allocation ``p`` against the skeptic mixture q*."""
    vals = [payoff(instance, costs, p, alt) for alt in alloc.alternatives]
    return math.fsum(q * v for q, v in zip(alloc.q_star, vals))


def beta_c(instance: Instance, c: float) -> float:
    """Optimal exploitation rate for the length-regret objective with weight c."""
    if not c > 0:
        raise InvalidParameterError("c must be positive")
    alloc = solve_p_star(instance, CostModel.length_regret(c))
    return float(alloc.p_star[alloc.best_arm])
