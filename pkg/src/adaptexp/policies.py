"""Anytime allocation rules.

Each rule maps the current :class:`~adaptexp.state.ExperimentState` to the
next arm. Rules never see the population size. A rule instance holds
mutable memo state (cached posterior statistics, tracking targets, fallback
counter) and serves a single trajectory; call :meth:`AllocationRule.reset`
or make a fresh copy before reusing it.

Posterior statistics (optimality probabilities, proportions, plug-in costs
used by the coin) are refreshed every ``batch`` steps; counts and sums
update every step.
"""

from __future__ import annotations

import bisect
import copy
import itertools
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import ndtr

from .errors import AdaptexpError, InvalidParameterError, UnsupportedOperationError
from .exp_family import BERNOULLI, GAUSSIAN, Instance, kl_unchecked
from .solver import CostModel, solve_p_star
from .state import ExperimentState

_ALPHA_FLOOR = 1e-300


# -- optimality probabilities -----------------------------------------------


def _hermite(nodes: int):
    x, w = np.polynomial.hermite.hermgauss(nodes)
    return x * math.sqrt(2.0), w / math.sqrt(math.pi)


_HERMITE_CACHE: dict = {}


def _gauss_hermite(nodes: int):
    if nodes not in _HERMITE_CACHE:
        _HERMITE_CACHE[nodes] = _hermite(nodes)
    return _HERMITE_CACHE[nodes]


def _alpha_sampled(means: np.ndarray, sds: np.ndarray, nodes: int) -> np.ndarray:
    """P(arm i has the largest draw) for independent normals, all sds finite."""
    z, w = _gauss_hermite(nodes)
    k = means.size
    # draw of arm i at node l: means[i] + sds[i] * z[l]
    draws = means[:, None] + sds[:, None] * z[None, :]
    arg = (draws[:, :, None] - means[None, None, :]) / sds[None, None, :]
    cdf = ndtr(arg)
    idx = np.arange(k)
    cdf[idx, :, idx] = 1.0
    alpha = np.prod(cdf, axis=2) @ w
    alpha = np.clip(alpha, 0.0, None)
    total = alpha.sum()
    if not total > 0:
        out = np.zeros(k)
        out[int(np.argmax(means))] = 1.0
        return out
    return alpha / total


def optimality_probabilities(state: ExperimentState, nodes: int = 64) -> np.ndarray:
    """Posterior probability that each arm is best (Gaussian, improper prior).

    Computed by Gauss-Hermite quadrature. An unsampled arm's posterior draw
    is +inf or -inf with equal probability; with u unsampled arms the
    unsampled ones share 1 - 2**-u equally and the sampled ones share the
    remaining 2**-u mass in proportion to their own optimality
    probabilities. With no arm sampled the answer is uniform.
    """
    if not state.family.is_gaussian:
        raise UnsupportedOperationError("quadrature optimality probabilities need Gaussian rewards")
    return _alpha_from(state.means, state.counts, state.family.sigma, nodes)


def _alpha_from(means, counts, sigma, nodes) -> np.ndarray:
    k = means.size
    unsampled = counts == 0
    u = int(unsampled.sum())
    if u == 0:
        return _alpha_sampled(means, sigma / np.sqrt(counts), nodes)
    out = np.zeros(k)
    if u == k:
        return np.full(k, 1.0 / k)
    out[unsampled] = (1.0 - 2.0**-u) / u
    sampled = ~unsampled
    if sampled.sum() == 1:
        out[sampled] = 2.0**-u
    else:
        sub = _alpha_sampled(means[sampled], sigma / np.sqrt(counts[sampled]), nodes)
        out[sampled] = sub * 2.0**-u
    return out


# -- coins --------------------------------------------------------------------


@dataclass(frozen=True)
class FixedBetaCoin:
    """Play the leader with constant probability beta."""

    beta: float

    def __post_init__(self):
        if not 0.0 < self.beta < 1.0:
            raise InvalidParameterError("beta must lie in (0, 1)")


@dataclass(frozen=True)
class CostAwareCoin:
    """Leader probability proportional to 1 / (p_i C_i(m)) against the challenger."""

    costs: CostModel


@dataclass(frozen=True)
class KLCostAwareCoin:
    """Exponential-family generalization of the cost-aware coin.

    Experimental: no convergence guarantee is known for this coin outside
    the Gaussian case, where it coincides with :class:`CostAwareCoin`.
    """

    costs: CostModel


def cost_aware_coin(state: ExperimentState, costs: CostModel, i: int, j: int) -> float:
    """h_{t,i,j}; 1/2 when either arm is unsampled."""
    ni, nj = state._n[i], state._n[j]
    if ni == 0 or nj == 0:
        return 0.5
    c = costs.within_costs(state.means)
    return _cost_aware(ni / state.t, nj / state.t, c[i], c[j])


def _cost_aware(pi, pj, ci, cj) -> float:
    a = 1.0 / (pi * ci)
    b = 1.0 / (pj * cj)
    return a / (a + b)


def ef_coin_bias(state: ExperimentState, costs: CostModel, i: int, j: int) -> float:
    """KL-weighted cost-aware coin.

    Needs positive counts on both arms and distinct empirical means; callers
    fall back to 1/2 otherwise.
    """
    ni, nj = state._n[i], state._n[j]
    if ni == 0 or nj == 0:
        raise InvalidParameterError("ef_coin_bias needs both arms sampled; use 1/2 instead")
    m = state.means
    if m[i] == m[j]:
        raise InvalidParameterError("ef_coin_bias needs distinct empirical means; use 1/2 instead")
    c = costs.within_costs(m)
    return _ef_coin(state.family, ni / state.t, nj / state.t, m[i], m[j], c[i], c[j])


def _ef_coin(family, pi, pj, mi, mj, ci, cj) -> float:
    bar = (pi * mi + pj * mj) / (pi + pj)
    a = pi * kl_unchecked(family, mi, bar) / ci
    b = pj * kl_unchecked(family, mj, bar) / cj
    if a + b == 0:
        return 0.5
    return a / (a + b)


# -- samplers -----------------------------------------------------------------


@dataclass(frozen=True)
class Rejection:
    """Resample Thompson draws until the challenger differs from the leader."""

    max_tries: int = 1000

    def __post_init__(self):
        if self.max_tries < 1:
            raise InvalidParameterError("max_tries must be positive")


@dataclass(frozen=True)
class ExactProbabilities:
    """Draw leader and challenger from quadrature optimality probabilities."""

    nodes: int = 64


# -- rules --------------------------------------------------------------------


class _Snapshot:
    """Posterior statistics frozen at one refresh time."""

    __slots__ = ("t", "counts", "means", "props", "mean_arr", "sds", "post_a", "post_b", "alpha", "cum", "cum_without", "plug_costs")

    def __init__(self, state: ExperimentState):
        self.t = state.t
        self.counts = list(state._n)
        self.means = state.mean_list()
        t = state.t
        self.props = [c / t for c in self.counts] if t > 0 else [0.0] * state.k
        self.alpha = None
        self.cum = None
        self.cum_without = {}
        self.plug_costs = None
        fam = state.family
        counts = np.array(self.counts, dtype=float)
        self.mean_arr = np.array(self.means)
        if fam.kind == GAUSSIAN:
            self.sds = fam.sigma / np.sqrt(np.maximum(counts, 1.0))
        elif fam.kind == BERNOULLI:
            sums = state.sums
            self.post_a = sums + 1.0
            self.post_b = counts - sums + 1.0
        else:
            # Gamma(S + 1, rate N) posterior; numpy takes the scale 1 / N
            self.post_a = state.sums + 1.0
            self.post_b = 1.0 / np.maximum(counts, 1.0)


class AllocationRule:
    """Base class; subclasses implement :meth:`_choose`."""

    name = "rule"

    def __init__(self, batch: int = 1):
        if int(batch) < 1:
            raise InvalidParameterError("batch must be a positive integer")
        self.batch = int(batch)
        self.reset()

    def reset(self):
        self.fallback_count = 0
        self._snap: Optional[_Snapshot] = None

    def fresh(self) -> "AllocationRule":
        """A copy with cleared memo state."""
        out = copy.copy(self)
        out.reset()
        return out

    def choose(self, state: ExperimentState, rng: np.random.Generator) -> int:
        return self._choose(state, rng)

    def _choose(self, state, rng) -> int:
        raise NotImplementedError

    def _snapshot(self, state: ExperimentState) -> _Snapshot:
        snap = self._snap
        if snap is None or state.t - snap.t >= self.batch:
            snap = self._snap = _Snapshot(state)
        return snap

    def __repr__(self):
        return f"{type(self).__name__}(batch={self.batch})"


def _first_unsampled(state: ExperimentState) -> int:
    n = state._n
    return n.index(0) if 0 in n else -1


def _posterior_draws(state: ExperimentState, snap: _Snapshot, rng, rows: int) -> np.ndarray:
    fam = state.family
    k = state.k
    if fam.kind == GAUSSIAN:
        return snap.mean_arr + snap.sds * rng.standard_normal((rows, k))
    if fam.kind == BERNOULLI:
        return rng.beta(snap.post_a, snap.post_b, size=(rows, k))
    return rng.gamma(snap.post_a, snap.post_b, size=(rows, k))


def _ensure_alpha(state, snap: _Snapshot, nodes: int):
    if snap.alpha is None:
        if not state.family.is_gaussian:
            raise UnsupportedOperationError("exact optimality probabilities need Gaussian rewards")
        alpha = _alpha_from(snap.mean_arr, np.array(snap.counts), state.family.sigma, nodes)
        snap.alpha = alpha.tolist()
        snap.cum = list(itertools.accumulate(snap.alpha))


def _draw_from_cum(cum: list, u: float) -> int:
    return min(bisect.bisect_right(cum, u * cum[-1]), len(cum) - 1)


class EpsilonGreedy(AllocationRule):
    """Play the empirical best arm w.p. 1 - eps, a uniform arm otherwise.

    Uses the live state; ``batch`` has no effect.
    """

    name = "epsilon_greedy"

    def __init__(self, epsilon: float, batch: int = 1):
        if not 0.0 <= epsilon <= 1.0:
            raise InvalidParameterError("epsilon must lie in [0, 1]")
        self.epsilon = float(epsilon)
        super().__init__(batch)

    def _choose(self, state, rng):
        return epsilon_greedy(state, self.epsilon, rng)

    def __repr__(self):
        return f"EpsilonGreedy(epsilon={self.epsilon}, batch={self.batch})"


def epsilon_greedy(state: ExperimentState, epsilon: float, rng: np.random.Generator) -> int:
    if rng.random() < epsilon:
        return int(rng.integers(state.k))
    return state.leader()


class ThompsonSampling(AllocationRule):
    """Play the arm with the largest posterior draw."""

    name = "thompson"

    def __init__(self, sampler=None, batch: int = 1):
        self.sampler = sampler if sampler is not None else Rejection()
        super().__init__(batch)

    def __repr__(self):
        return f"ThompsonSampling(sampler={self.sampler!r}, batch={self.batch})"

    def _choose(self, state, rng):
        first = _first_unsampled(state)
        if first >= 0:
            return first
        snap = self._snapshot(state)
        if isinstance(self.sampler, ExactProbabilities):
            _ensure_alpha(state, snap, self.sampler.nodes)
            return _draw_from_cum(snap.cum, rng.random())
        return int(np.argmax(_posterior_draws(state, snap, rng, 1)[0]))


class TopTwoTS(AllocationRule):
    """Top-two Thompson sampling with a configurable coin and sampler."""

    name = "top_two_ts"

    def __init__(self, coin, sampler=None, batch: int = 1):
        if not isinstance(coin, (FixedBetaCoin, CostAwareCoin, KLCostAwareCoin)):
            raise InvalidParameterError(f"unsupported coin {coin!r}")
        self.coin = coin
        self.sampler = sampler if sampler is not None else Rejection()
        super().__init__(batch)

    def __repr__(self):
        return f"TopTwoTS(coin={self.coin!r}, sampler={self.sampler!r}, batch={self.batch})"

    def _choose(self, state, rng):
        first = _first_unsampled(state)
        if first >= 0:
            return first
        leader, challenger = self.leader_challenger(state, rng)
        h = self.coin_bias(state, self._snap, leader, challenger)
        return leader if rng.random() < h else challenger

    def leader_challenger(self, state, rng):
        """Draw (leader, challenger) without flipping the coin."""
        snap = self._snapshot(state)
        if isinstance(self.sampler, ExactProbabilities):
            _ensure_alpha(state, snap, self.sampler.nodes)
            leader = _draw_from_cum(snap.cum, rng.random())
            return leader, self._exact_challenger(snap, leader, rng)
        return self._rejection_pair(state, snap, rng)

    def _exact_challenger(self, snap: _Snapshot, leader: int, rng, count: bool = True) -> int:
        cum = snap.cum_without.get(leader)
        if cum is None:
            rest = list(snap.alpha)
            rest[leader] = 0.0
            cum = snap.cum_without[leader] = list(itertools.accumulate(rest))
        k = len(cum)
        # 1 - alpha_leader floored at 1e-300; below that the draw is meaningless
        if not cum[-1] > _ALPHA_FLOOR:
            self.fallback_count += count
            j = int(rng.integers(k - 1))
            return j if j < leader else j + 1
        return _draw_from_cum(cum, rng.random())

    def _rejection_pair(self, state, snap, rng):
        max_tries = self.sampler.max_tries
        rows = 16
        leader = -1
        tries = 0
        while tries < max_tries:
            block = min(rows, max_tries - tries + (1 if leader < 0 else 0))
            winners = np.argmax(_posterior_draws(state, snap, rng, block), axis=1)
            start = 0
            if leader < 0:
                leader = int(winners[0])
                start = 1
            diff = np.flatnonzero(winners[start:] != leader)
            if diff.size:
                return leader, int(winners[start + diff[0]])
            tries += block - start
            rows = min(rows * 4, 256)
        self.fallback_count += 1
        if state.family.is_gaussian:
            _ensure_alpha(state, snap, 64)
            return leader, self._exact_challenger(snap, leader, rng, count=False)
        j = int(rng.integers(state.k - 1))
        return leader, (j if j < leader else j + 1)

    def coin_bias(self, state, snap: _Snapshot, i: int, j: int) -> float:
        coin = self.coin
        if isinstance(coin, FixedBetaCoin):
            return coin.beta
        if snap.counts[i] == 0 or snap.counts[j] == 0:
            return 0.5
        if snap.plug_costs is None:
            snap.plug_costs = coin.costs.within_costs(snap.mean_arr).tolist()
        c = snap.plug_costs
        if isinstance(coin, CostAwareCoin):
            return _cost_aware(snap.props[i], snap.props[j], c[i], c[j])
        if snap.means[i] == snap.means[j]:
            return 0.5
        return _ef_coin(state.family, snap.props[i], snap.props[j], snap.means[i], snap.means[j], c[i], c[j])


def top_two_ts(state: ExperimentState, rule: TopTwoTS, rng: np.random.Generator) -> int:
    """One top-two Thompson sampling decision under ``rule``."""
    return rule.choose(state, rng)


def direct_tracking(state: ExperimentState, costs: CostModel, memo: Optional[np.ndarray] = None):
    """One direct-tracking step; returns ``(arm, target)``.

    ``memo`` is the previous target allocation (uniform when None).
    """
    k = state.k
    target = np.full(k, 1.0 / k) if memo is None else np.asarray(memo, dtype=float)
    forced = _forced_arm(state)
    if forced >= 0:
        return forced, target
    target = _plug_in_target(state, costs, target)
    return _track(state, target), target


def _forced_arm(state: ExperimentState) -> int:
    floor = max(math.sqrt(state.t) - state.k / 2.0, 0.0)
    best, arm = None, -1
    for i, c in enumerate(state._n):
        if c <= floor and (best is None or c < best):
            best, arm = c, i
    return arm


def _plug_in_target(state, costs, previous):
    m = state.mean_list()
    top = max(m)
    if m.count(top) != 1:
        return previous
    try:
        return solve_p_star(Instance(state.family, m), costs).p_star
    except AdaptexpError:
        return previous


def _track(state, target) -> int:
    return int(np.argmax(state.t * np.asarray(target) - state.counts))


class DirectTracking(AllocationRule):
    """Forced exploration, then track the plug-in optimal allocation.

    The plug-in target is re-solved at most once per ``batch`` steps.
    """

    name = "direct_tracking"

    def __init__(self, costs: CostModel, batch: int = 1):
        self.costs = costs
        super().__init__(batch)

    def reset(self):
        super().reset()
        self.target = None
        self._solved_at = None

    def _choose(self, state, rng):
        if self.target is None:
            self.target = np.full(state.k, 1.0 / state.k)
        forced = _forced_arm(state)
        if forced >= 0:
            return forced
        if self._solved_at is None or state.t - self._solved_at >= self.batch:
            self.target = _plug_in_target(state, self.costs, self.target)
            self._solved_at = state.t
        return _track(state, self.target)

    def __repr__(self):
        return f"DirectTracking(costs={self.costs}, batch={self.batch})"
