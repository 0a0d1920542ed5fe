"""One-dimensional exponential-family reward models, parameterized by the mean.

Three families are supported: Gaussian with known variance, Bernoulli and
Poisson. Every public function takes means; natural parameters only appear
in :func:`eta` and :func:`eta_derivative`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import InvalidParameterError, PreconditionError

GAUSSIAN = "gaussian"
BERNOULLI = "bernoulli"
POISSON = "poisson"
KINDS = (GAUSSIAN, BERNOULLI, POISSON)


@dataclass(frozen=True)
class RewardFamily:
    """A reward distribution family.

    ``sigma`` is the known noise standard deviation and is only meaningful
    for the Gaussian family.
    """

    kind: str
    sigma: Optional[float] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidParameterError(f"unknown reward family {self.kind!r}")
        if self.kind == GAUSSIAN:
            if self.sigma is None or not (self.sigma > 0) or not math.isfinite(self.sigma):
                raise InvalidParameterError("Gaussian family requires sigma > 0")
            object.__setattr__(self, "sigma", float(self.sigma))
        elif self.sigma is not None:
            raise InvalidParameterError(f"sigma is not a parameter of the {self.kind} family")

    @classmethod
    def gaussian(cls, sigma: float = 1.0) -> "RewardFamily":
        return cls(GAUSSIAN, sigma)

    @classmethod
    def bernoulli(cls) -> "RewardFamily":
        return cls(BERNOULLI)

    @classmethod
    def poisson(cls) -> "RewardFamily":
        return cls(POISSON)

    @property
    def is_gaussian(self) -> bool:
        return self.kind == GAUSSIAN

    def in_domain(self, theta) -> bool:
        """True when every entry of ``theta`` lies in the open mean domain."""
        a = np.asarray(theta, dtype=float)
        if not np.all(np.isfinite(a)):
            return False
        if self.kind == BERNOULLI:
            return bool(np.all((a > 0.0) & (a < 1.0)))
        if self.kind == POISSON:
            return bool(np.all(a > 0.0))
        return True

    def check(self, theta) -> None:
        if not self.in_domain(theta):
            raise InvalidParameterError(f"mean {theta!r} outside the {self.kind} domain")

    def variance(self, theta):
        """Variance of the reward at mean ``theta``."""
        if self.kind == GAUSSIAN:
            return self.sigma**2 + 0.0 * np.asarray(theta, dtype=float)
        if self.kind == BERNOULLI:
            return np.asarray(theta, dtype=float) * (1.0 - np.asarray(theta, dtype=float))
        return np.asarray(theta, dtype=float)

    def __str__(self):
        if self.kind == GAUSSIAN:
            return f"gaussian(sigma={self.sigma:g})"
        return self.kind


def _kl_scalar(family: RewardFamily, a: float, b: float) -> float:
    # a may sit on the closed boundary (empirical means); b is assumed interior
    if a == b:
        return 0.0
    kind = family.kind
    if kind == GAUSSIAN:
        d = a - b
        return d * d / (2.0 * family.sigma * family.sigma)
    if kind == BERNOULLI:
        if b <= 0.0 or b >= 1.0:
            return math.inf
        out = 0.0
        if a > 0.0:
            out += a * (math.log(a) - math.log(b))
        if a < 1.0:
            out += (1.0 - a) * (math.log1p(-a) - math.log1p(-b))
        return max(out, 0.0)
    if b <= 0.0:
        return math.inf
    out = b - a
    if a > 0.0:
        out += a * (math.log(a) - math.log(b))
    return max(out, 0.0)


def _kl_array(family: RewardFamily, a, b) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    kind = family.kind
    if kind == GAUSSIAN:
        out = (a - b) ** 2 / (2.0 * family.sigma**2)
    else:
        from scipy.special import xlogy

        with np.errstate(divide="ignore", invalid="ignore"):
            if kind == BERNOULLI:
                out = xlogy(a, a) - xlogy(a, b) + xlogy(1.0 - a, 1.0 - a) - xlogy(1.0 - a, 1.0 - b)
            else:
                out = xlogy(a, a) - xlogy(a, b) - a + b
        out = np.where(a == b, 0.0, np.maximum(out, 0.0))
    return out


def kl_unchecked(family: RewardFamily, a, b):
    """KL divergence without domain validation (scalars or arrays)."""
    if np.ndim(a) == 0 and np.ndim(b) == 0:
        return _kl_scalar(family, float(a), float(b))
    return _kl_array(family, a, b)


def kl(family: RewardFamily, a, b):
    """KL(P(.|a) || P(.|b)) for means ``a`` and ``b`` of ``family``.

    >>> kl(RewardFamily.gaussian(1.0), 0.0, 1.0)
    0.5
    """
    family.check(a)
    family.check(b)
    return kl_unchecked(family, a, b)


def eta(family: RewardFamily, theta):
    """Natural parameter as a function of the mean."""
    family.check(theta)
    t = np.asarray(theta, dtype=float)
    if family.kind == GAUSSIAN:
        out = t / family.sigma**2
    elif family.kind == BERNOULLI:
        out = np.log(t) - np.log1p(-t)
    else:
        out = np.log(t)
    return float(out) if out.ndim == 0 else out


def eta_derivative(family: RewardFamily, theta):
    """d eta / d theta, i.e. the inverse of the variance at ``theta``."""
    family.check(theta)
    out = 1.0 / family.variance(theta)
    return float(out) if np.ndim(out) == 0 else out


def sample(family: RewardFamily, theta: float, rng: np.random.Generator, size=None):
    """Draw reward(s) from P(.|theta) using the caller's generator."""
    family.check(theta)
    if family.kind == GAUSSIAN:
        return rng.normal(theta, family.sigma, size=size)
    if family.kind == BERNOULLI:
        u = rng.random(size=size)
        return (u < theta).astype(float) if size is not None else float(u < theta)
    draw = rng.poisson(theta, size=size)
    return draw.astype(float) if size is not None else float(draw)


@dataclass(frozen=True)
class Instance:
    """Ground truth of a simulated experiment: a family and k arm means."""

    family: RewardFamily
    means: np.ndarray = field(compare=False)

    def __post_init__(self):
        means = np.array(self.means, dtype=float).reshape(-1)
        if means.size < 2:
            raise InvalidParameterError("an instance needs at least two arms")
        self.family.check(means)
        means.setflags(write=False)
        object.__setattr__(self, "means", means)

    @property
    def k(self) -> int:
        return int(self.means.size)

    @property
    def has_unique_best(self) -> bool:
        top = self.means.max()
        return int(np.count_nonzero(self.means == top)) == 1

    @property
    def best_arm(self) -> int:
        if not self.has_unique_best:
            raise PreconditionError(f"instance {self.means.tolist()} has no unique best arm")
        return int(np.argmax(self.means))

    @property
    def gaps(self) -> np.ndarray:
        return self.means.max() - self.means

    def __eq__(self, other):
        return (
            isinstance(other, Instance)
            and self.family == other.family
            and np.array_equal(self.means, other.means)
        )

    def __hash__(self):
        return hash((self.family, tuple(self.means)))

    def __repr__(self):
        return f"Instance({self.family}, means={[float(m) for m in self.means]})"


class RewardStream:
    """Per-arm buffered reward draws for a single trajectory.

    The l-th pull of arm i always consumes the l-th draw of arm i's buffer,
    so a trajectory is a pure function of the generator seed and the arm
    sequence.
    """

    def __init__(self, instance: Instance, rng: np.random.Generator, chunk: int = 4096):
        self.instance = instance
        self.chunk = chunk
        self._rngs = rng.spawn(instance.k)
        self._buf = [np.empty(0)] * instance.k
        self._pos = [0] * instance.k

    def _refill(self, arm: int):
        fam = self.instance.family
        self._buf[arm] = sample(fam, float(self.instance.means[arm]), self._rngs[arm], size=self.chunk).tolist()
        self._pos[arm] = 0

    def next(self, arm: int) -> float:
        pos = self._pos[arm]
        if pos >= len(self._buf[arm]):
            self._refill(arm)
            pos = 0
        self._pos[arm] = pos + 1
        return self._buf[arm][pos]
