"""TOML experiment definitions with strict validation.

Example::

    [instance]
    family = "gaussian"
    sigma = 1.0
    means = [0.0, 0.2, 0.4, 0.6, 0.8, 1.0]

    [costs]
    kind = "length_regret"
    c = 1.0

    [rule]
    kind = "top_two_ts"
    coin = "fixed_beta"
    beta = 0.7
    sampler = "exact"
    batch = 100

    [stop]
    kind = "heuristic"

    [run]
    n = 1000000
    trials = 100
    base_seed = 7

Unknown sections or keys are rejected. Every error is a
:class:`~adaptexp.errors.ConfigError` naming the field and, when it can be
found, the line in the source text.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass
from typing import Optional

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .errors import AdaptexpError, ConfigError
from .exp_family import Instance, RewardFamily
from .pareto import beta_grid
from .policies import (
    CostAwareCoin,
    DirectTracking,
    EpsilonGreedy,
    ExactProbabilities,
    FixedBetaCoin,
    KLCostAwareCoin,
    Rejection,
    ThompsonSampling,
    TopTwoTS,
)
from .simulator import RunConfig
from .solver import CostModel
from .stopping import StoppingRule

SCHEMA = {
    "instance": {"family", "sigma", "means"},
    "costs": {"kind", "c", "per_arm"},
    "rule": {"kind", "epsilon", "beta", "coin", "sampler", "max_tries", "batch"},
    "stop": {"kind"},
    "run": {"n", "trials", "base_seed"},
    "output": {"dir"},
    "frontier": {"beta_min", "beta_max", "beta_step", "betas"},
}
REQUIRED = ("instance",)


@dataclass
class ExperimentConfig:
    instance: Instance
    costs: CostModel
    rule: object
    stop: StoppingRule
    n: int
    trials: int
    base_seed: int
    out_dir: Optional[str]
    betas: list
    digest: str

    def run_config(self, trials: Optional[int] = None, base_seed: Optional[int] = None) -> RunConfig:
        return RunConfig(
            instance=self.instance,
            rule=self.rule,
            stop=self.stop,
            costs=self.costs,
            n=self.n,
            trials=self.trials if trials is None else trials,
            base_seed=self.base_seed if base_seed is None else base_seed,
        )


class _Locator:
    """Best-effort mapping from section.key to a line number in the source."""

    def __init__(self, text: str):
        self.lines = text.splitlines()

    def line(self, section: str, key: Optional[str] = None) -> Optional[int]:
        current = None
        for no, raw in enumerate(self.lines, 1):
            s = raw.strip()
            m = re.match(r"^\[\s*([A-Za-z0-9_.-]+)\s*\]", s)
            if m:
                current = m.group(1)
                if key is None and current == section:
                    return no
                continue
            if key is not None and current == section and re.match(rf"^{re.escape(key)}\s*=", s):
                return no
        return None


class _Reader:
    def __init__(self, data: dict, loc: _Locator, source: str):
        self.data = data
        self.loc = loc
        self.source = source

    def fail(self, section: str, key: Optional[str], msg: str):
        field = f"{section}.{key}" if key else section
        line = self.loc.line(section, key)
        where = f"{self.source}:{line}" if line else self.source
        raise ConfigError(f"{where}: {field}: {msg}")

    def section(self, name: str) -> dict:
        sec = self.data.get(name, {})
        if not isinstance(sec, dict):
            self.fail(name, None, "must be a table")
        return sec

    def get(self, section: str, key: str, kind, default=None, required=False):
        sec = self.section(section)
        if key not in sec:
            if required:
                self.fail(section, key, "missing required field")
            return default
        v = sec[key]
        if kind is float and isinstance(v, int) and not isinstance(v, bool):
            v = float(v)
        if kind is list:
            if not isinstance(v, list) or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in v):
                self.fail(section, key, "expected a list of numbers")
            return [float(x) for x in v]
        if not isinstance(v, kind) or isinstance(v, bool) and kind is not bool:
            self.fail(section, key, f"expected {kind.__name__}, got {type(v).__name__}")
        return v


def config_digest(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]


def load_config(path: str) -> ExperimentConfig:
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config: {exc.strerror}") from exc
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ConfigError(f"{path}: config is not UTF-8") from exc
    return parse_config(text, source=path)


def parse_config(text: str, source: str = "<config>") -> ExperimentConfig:
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{source}: {exc}") from exc
    rd = _Reader(data, _Locator(text), source)
    for name, sec in data.items():
        if name not in SCHEMA:
            rd.fail(name, None, f"unknown section (expected one of {sorted(SCHEMA)})")
        if not isinstance(sec, dict):
            rd.fail(name, None, "must be a table")
        for key in sec:
            if key not in SCHEMA[name]:
                rd.fail(name, key, f"unknown key (allowed: {sorted(SCHEMA[name])})")
    for name in REQUIRED:
        if name not in data:
            raise ConfigError(f"{source}: missing required section [{name}]")
    try:
        return _build(rd, config_digest(text))
    except ConfigError:
        raise
    except AdaptexpError as exc:
        raise ConfigError(f"{source}: {exc}") from exc


def _build(rd: _Reader, digest: str) -> ExperimentConfig:
    fam_name = rd.get("instance", "family", str, required=True)
    if fam_name == "gaussian":
        family = _wrap(rd, "instance", "sigma", lambda: RewardFamily.gaussian(rd.get("instance", "sigma", float, 1.0)))
    elif fam_name in ("bernoulli", "poisson"):
        if "sigma" in rd.section("instance"):
            rd.fail("instance", "sigma", f"not a parameter of the {fam_name} family")
        family = RewardFamily(fam_name)
    else:
        rd.fail("instance", "family", f"unknown family {fam_name!r}")
    means = rd.get("instance", "means", list, required=True)
    instance = _wrap(rd, "instance", "means", lambda: Instance(family, means))

    costs = _costs(rd, instance)
    rule = _rule(rd, costs)

    n = rd.get("run", "n", int, 10**6)
    trials = rd.get("run", "trials", int, 1)
    base_seed = rd.get("run", "base_seed", int, 0)
    if n < instance.k:
        rd.fail("run", "n", f"population size must be at least k={instance.k}")
    if trials < 1:
        rd.fail("run", "trials", "must be at least 1")
    if not 0 <= base_seed < 2**64:
        rd.fail("run", "base_seed", "must be an unsigned 64-bit integer")

    stop_kind = rd.get("stop", "kind", str, "exact")
    stop = _wrap(rd, "stop", "kind", lambda: StoppingRule(stop_kind, n))
    if stop_kind == "heuristic" and not family.is_gaussian:
        rd.fail("stop", "kind", "the heuristic rule needs Gaussian rewards")

    out_dir = rd.get("output", "dir", str, None)
    if "betas" in rd.section("frontier"):
        betas = rd.get("frontier", "betas", list)
        if any(not 0.0 < b < 1.0 for b in betas):
            rd.fail("frontier", "betas", "every beta must lie in (0, 1)")
    else:
        lo = rd.get("frontier", "beta_min", float, 0.01)
        hi = rd.get("frontier", "beta_max", float, 0.99)
        step = rd.get("frontier", "beta_step", float, 0.001)
        betas = _wrap(rd, "frontier", "beta_step", lambda: beta_grid(lo, hi, step).tolist())
    return ExperimentConfig(instance, costs, rule, stop, n, trials, base_seed, out_dir, betas, digest)


def _wrap(rd, section, key, fn):
    try:
        return fn()
    except AdaptexpError as exc:
        rd.fail(section, key, str(exc))


def _costs(rd: _Reader, instance: Instance) -> CostModel:
    kind = rd.get("costs", "kind", str, "length_regret")
    if kind == "length_regret":
        c = rd.get("costs", "c", float, 1.0)
        return _wrap(rd, "costs", "c", lambda: CostModel.length_regret(c))
    if kind == "unit":
        return CostModel.unit()
    if kind == "per_arm":
        per = rd.get("costs", "per_arm", list, required=True)
        if len(per) != instance.k:
            rd.fail("costs", "per_arm", f"expected {instance.k} entries, got {len(per)}")
        return _wrap(rd, "costs", "per_arm", lambda: CostModel.per_arm(per))
    rd.fail("costs", "kind", f"unknown cost model {kind!r} (custom costs are Python-only)")


def _rule(rd: _Reader, costs: CostModel):
    kind = rd.get("rule", "kind", str, "top_two_ts")
    batch = rd.get("rule", "batch", int, 1)
    if batch < 1:
        rd.fail("rule", "batch", "must be a positive integer")
    sampler_name = rd.get("rule", "sampler", str, "rejection")
    if sampler_name == "rejection":
        max_tries = rd.get("rule", "max_tries", int, 1000)
        sampler = _wrap(rd, "rule", "max_tries", lambda: Rejection(max_tries))
    elif sampler_name == "exact":
        sampler = ExactProbabilities()
    else:
        rd.fail("rule", "sampler", f"unknown sampler {sampler_name!r} (rejection or exact)")
    if kind == "epsilon_greedy":
        eps = rd.get("rule", "epsilon", float, required=True)
        return _wrap(rd, "rule", "epsilon", lambda: EpsilonGreedy(eps, batch))
    if kind == "thompson":
        return ThompsonSampling(sampler, batch)
    if kind == "direct_tracking":
        return DirectTracking(costs, batch)
    if kind == "top_two_ts":
        coin_name = rd.get("rule", "coin", str, "cost_aware")
        if coin_name == "fixed_beta":
            beta = rd.get("rule", "beta", float, required=True)
            coin = _wrap(rd, "rule", "beta", lambda: FixedBetaCoin(beta))
        elif coin_name == "cost_aware":
            coin = CostAwareCoin(costs)
        elif coin_name == "kl_cost_aware":
            coin = KLCostAwareCoin(costs)
        else:
            rd.fail("rule", "coin", f"unknown coin {coin_name!r}")
        return TopTwoTS(coin, sampler, batch)
    rd.fail("rule", "kind", f"unknown rule {kind!r}")
