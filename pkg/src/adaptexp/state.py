"""Sufficient statistics of one experiment trajectory.

The state keeps counts and reward sums; empirical means, proportions and
standard errors are derived on demand. Unsampled arms follow the sentinel
convention mean 0 and standard error +inf.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import InvalidParameterError, OrderingError, UnsupportedOperationError
from .exp_family import RewardFamily, kl_unchecked


class ExperimentState:
    """Counts and reward sums of one trajectory.

    ``counts`` and ``sums`` are returned as fresh arrays; mutate the state
    only through :meth:`update`.
    """

    def __init__(self, family: RewardFamily, k: int):
        if k < 2:
            raise InvalidParameterError("need at least two arms")
        self.family = family
        self.k = int(k)
        self.t = 0
        # plain lists keep the per-step update cheap for small k
        self._n = [0] * self.k
        self._s = [0.0] * self.k

    @classmethod
    def from_counts(cls, family: RewardFamily, counts, means) -> "ExperimentState":
        """Build a state with given counts and empirical means (for analysis and tests)."""
        counts = np.asarray(counts, dtype=np.int64)
        means = np.asarray(means, dtype=float)
        if counts.ndim != 1 or counts.shape != means.shape or np.any(counts < 0):
            raise InvalidParameterError("counts and means must match and counts be nonnegative")
        st = cls(family, counts.size)
        st._n = [int(c) for c in counts]
        st._s = [float(m) * c if c > 0 else 0.0 for c, m in zip(st._n, means)]
        st.t = sum(st._n)
        return st

    def copy(self) -> "ExperimentState":
        st = ExperimentState(self.family, self.k)
        st.t = self.t
        st._n = list(self._n)
        st._s = list(self._s)
        return st

    def update(self, arm: int, reward: float) -> "ExperimentState":
        if not 0 <= arm < self.k:
            raise IndexError(f"arm {arm} out of range for k={self.k}")
        self._n[arm] += 1
        self._s[arm] += reward
        self.t += 1
        return self

    @property
    def counts(self) -> np.ndarray:
        return np.array(self._n, dtype=np.int64)

    @property
    def sums(self) -> np.ndarray:
        return np.array(self._s, dtype=float)

    def mean_list(self) -> list:
        return [s / c if c > 0 else 0.0 for s, c in zip(self._s, self._n)]

    @property
    def means(self) -> np.ndarray:
        return np.array(self.mean_list())

    @property
    def proportions(self) -> np.ndarray:
        if self.t == 0:
            return np.zeros(self.k)
        return self.counts / self.t

    @property
    def std_errors(self) -> np.ndarray:
        """Gaussian posterior standard deviations sigma / sqrt(N)."""
        if not self.family.is_gaussian:
            raise UnsupportedOperationError("standard errors are defined for the Gaussian family")
        sig = self.family.sigma
        return np.array([sig / math.sqrt(c) if c > 0 else math.inf for c in self._n])

    def leader(self) -> int:
        """Empirical best arm, lowest index on ties."""
        m = self.mean_list()
        return m.index(max(m))

    def all_sampled(self) -> bool:
        return min(self._n) > 0

    def __repr__(self):
        return f"ExperimentState(t={self.t}, counts={self._n}, means={[round(m, 6) for m in self.mean_list()]})"


def z_statistic(state: ExperimentState, i: int, j: int) -> float:
    """Z-statistic for the difference of empirical means of arms i and j."""
    if not state.family.is_gaussian:
        raise UnsupportedOperationError("Z-statistics require the Gaussian family")
    ni, nj = state._n[i], state._n[j]
    if ni == 0 or nj == 0:
        return 0.0
    mi, mj = state._s[i] / ni, state._s[j] / nj
    var = state.family.sigma**2 * (1.0 / ni + 1.0 / nj)
    return (mi - mj) / math.sqrt(var)


def chernoff_info(family: RewardFamily, theta_i: float, theta_j: float, w_i: float, w_j: float):
    """Weighted Chernoff information between two means with theta_i >= theta_j.

    Returns ``(value, minimizer)`` where the minimizer is the weighted mean
    of the two arms.
    """
    if theta_i < theta_j:
        raise OrderingError(f"chernoff_info needs theta_i >= theta_j, got {theta_i} < {theta_j}")
    if w_i < 0 or w_j < 0:
        raise InvalidParameterError("weights must be nonnegative")
    wsum = w_i + w_j
    if wsum == 0:
        return 0.0, float(theta_j)
    bar = (w_i * theta_i + w_j * theta_j) / wsum
    value = 0.0
    if w_i > 0:
        value += w_i * kl_unchecked(family, theta_i, bar)
    if w_j > 0:
        value += w_j * kl_unchecked(family, theta_j, bar)
    return float(value), float(bar)


def stopping_statistic(state: ExperimentState):
    """Leader and t * min_j D(leader, j) at the empirical allocation.

    The value is 0 until every arm has been sampled.
    """
    means = state.mean_list()
    leader = means.index(max(means))
    counts = state._n
    if state.t == 0 or min(counts) == 0:
        return leader, 0.0
    ml, nl = means[leader], counts[leader]
    fam = state.family
    best = math.inf
    if fam.is_gaussian:
        # t * D = N_l N_j / (N_l + N_j) * gap^2 / (2 sigma^2)
        two_var = 2.0 * fam.sigma * fam.sigma
        for j in range(state.k):
            if j != leader:
                d = ml - means[j]
                nj = counts[j]
                v = d * d * (nl * nj) / ((nl + nj) * two_var)
                if v < best:
                    best = v
    else:
        for j in range(state.k):
            if j != leader:
                nj, mj = counts[j], means[j]
                bar = (nl * ml + nj * mj) / (nl + nj)
                v = nl * kl_unchecked(fam, ml, bar) + nj * kl_unchecked(fam, mj, bar)
                if v < best:
                    best = v
    return leader, float(best)
