"""Stopping thresholds and stopping rules."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq
from scipy.special import ndtr, ndtri

from .errors import InvalidParameterError, UnsupportedOperationError
from .state import ExperimentState, stopping_statistic

EXACT = "exact"
HEURISTIC = "heuristic"
NEVER = "never"

# h(1/ln(3/2)), the breakpoint of h_tilde
_H_TILDE_BREAK = 1.0 / math.log(1.5) - math.log(1.0 / math.log(1.5))


def gamma(t: int, n: int, k: int) -> float:
    """Stopping threshold gamma_t(n) for k arms; +inf at t = 0.

    For t in {1, 2} the last logarithmic term is negative and is kept as is.
    """
    if t <= 0:
        if n < 2 or k < 2:
            raise InvalidParameterError("gamma needs n >= 2 and k >= 2")
        return math.inf
    return _gamma_base(n, k) + 6.0 * math.log(math.log(t / 2.0) + 1.0)


@lru_cache(maxsize=64)
def _gamma_base(n: int, k: int) -> float:
    if n < 2 or k < 2:
        raise InvalidParameterError("gamma needs n >= 2 and k >= 2")
    base = math.log(n) + math.log(k - 1)
    return base + 6.0 * math.log(base / 2.0 + 2.0) + 14.0


def h(u: float) -> float:
    return u - math.log(u)


def h_inverse(y: float) -> float:
    """Inverse of h(u) = u - ln(u) on [1, inf)."""
    if y < 1.0:
        raise InvalidParameterError("h_inverse is defined for y >= 1")
    if y == 1.0:
        return 1.0
    hi = y + math.log(2.0 * y) + 1.0
    return brentq(lambda u: h(u) - y, 1.0, hi, xtol=1e-12, rtol=4 * np.finfo(float).eps, maxiter=200)


def h_tilde(y: float) -> float:
    if y >= _H_TILDE_BREAK:
        u = h_inverse(y)
        return math.exp(1.0 / u) * u
    if y <= 0:
        raise InvalidParameterError("h_tilde is defined for y > 0")
    return 1.5 * (y - math.log(math.log(1.5)))


def c_exp(x: float) -> float:
    """Calibration function C_exp(x) for x >= 0."""
    if x < 0:
        raise InvalidParameterError("c_exp needs x >= 0")
    y = (h_inverse(x + 1.0) + math.log(math.pi**2 / 3.0)) / 2.0
    return 2.0 * h_tilde(y)


def kaufmann_threshold(t: int, delta: float, k: int) -> float:
    """Anytime deviation threshold c_t(delta) for k arms."""
    if not 0.0 < delta < 1.0:
        raise InvalidParameterError("delta must lie in (0, 1)")
    if t < 1:
        raise InvalidParameterError("kaufmann_threshold needs t >= 1")
    return 2.0 * c_exp(math.log((k - 1) / delta) / 2.0) + 6.0 * math.log(math.log(t / 2.0) + 1.0)


def normal_quantile(p):
    """Standard normal quantile."""
    p = np.asarray(p, dtype=float)
    if np.any((p <= 0) | (p >= 1)):
        raise InvalidParameterError("quantile level must lie in (0, 1)")
    out = ndtri(p)
    return float(out) if out.ndim == 0 else out


def normal_cdf(x):
    out = ndtr(np.asarray(x, dtype=float))
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class StoppingRule:
    """When to end adaptive experimentation.

    ``exact`` compares the Chernoff/Z statistic with ``gamma``; ``heuristic``
    compares the smallest leader Z-statistic with the 1 - 1/(n(k-1)) normal
    quantile; ``never`` runs to the end of the population.
    """

    kind: str = EXACT
    n: int = 2

    def __post_init__(self):
        if self.kind not in (EXACT, HEURISTIC, NEVER):
            raise InvalidParameterError(f"unknown stopping rule {self.kind!r}")
        if self.n < 2:
            raise InvalidParameterError("population size must be >= 2")

    @classmethod
    def exact(cls, n: int) -> "StoppingRule":
        return cls(EXACT, n)

    @classmethod
    def heuristic(cls, n: int) -> "StoppingRule":
        return cls(HEURISTIC, n)

    @classmethod
    def never(cls, n: int = 2) -> "StoppingRule":
        return cls(NEVER, n)

    def heuristic_level(self, k: int) -> float:
        return _heuristic_level(self.n, k)


@lru_cache(maxsize=64)
def _heuristic_level(n: int, k: int) -> float:
    return normal_quantile(1.0 - 1.0 / (n * (k - 1)))


def should_stop(rule: StoppingRule, state: ExperimentState) -> bool:
    if rule.kind == NEVER or state.t == 0:
        return False
    if rule.kind == EXACT:
        _, value = stopping_statistic(state)
        return value >= gamma(state.t, rule.n, state.k)
    if not state.family.is_gaussian:
        raise UnsupportedOperationError("the heuristic quantile rule needs Gaussian rewards")
    if not state.all_sampled():
        return False
    _, value = stopping_statistic(state)
    # min_j Z_{leader,j} >= q  <=>  min_j Z^2 / 2 >= q^2 / 2 for q > 0
    q = rule.heuristic_level(state.k)
    return value >= q * q / 2.0
