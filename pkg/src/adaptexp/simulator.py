"""Seeded Monte Carlo simulation of adaptive experiments.

A trial runs one allocation rule and one stopping rule on a ground-truth
instance for a population of ``n`` people. When the experiment stops, the
empirical best arm is assigned to everyone left.
"""

from __future__ import annotations

import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from .errors import ConfigError
from .exp_family import Instance, RewardStream
from .policies import AllocationRule
from .solver import CostModel
from .state import ExperimentState
from .stopping import StoppingRule, should_stop

CSV_COLUMNS = ("trial", "seed", "tau", "selected", "correct", "within_regret", "total_regret", "total_cost", "fallbacks")


@dataclass(frozen=True)
class RunConfig:
    instance: Instance
    rule: AllocationRule
    stop: StoppingRule
    costs: CostModel
    n: int
    trials: int = 1
    base_seed: int = 0

    def __post_init__(self):
        if self.n < self.instance.k:
            raise ConfigError(f"population size n={self.n} is smaller than the number of arms k={self.instance.k}")
        if self.trials < 1:
            raise ConfigError("trials must be at least 1")
        if not 0 <= self.base_seed < 2**64:
            raise ConfigError("base_seed must be an unsigned 64-bit integer")


@dataclass(frozen=True)
class TrialRecord:
    trial: int
    seed: int
    n: int
    tau: int
    selected: int
    correct: bool
    within_regret: float
    total_regret: float
    within_cost: float
    total_cost: float
    fallback_count: int
    counts: tuple = field(repr=False)

    @property
    def length(self) -> int:
        return self.tau

    @property
    def allocation(self) -> np.ndarray:
        c = np.asarray(self.counts, dtype=float)
        return c / c.sum() if self.tau > 0 else c

    @property
    def early_wrong(self) -> bool:
        """Stopped before the end of the population and deployed a wrong arm."""
        return self.tau < self.n and not self.correct


def trial_seeds(base_seed: int, trial: int):
    """(record seed, policy generator, reward generator) for one trial."""
    ss = np.random.SeedSequence([int(base_seed), int(trial)])
    seed = int(ss.generate_state(1, dtype=np.uint64)[0])
    policy_ss, reward_ss = ss.spawn(2)
    return seed, np.random.default_rng(policy_ss), np.random.default_rng(reward_ss)


def run_trial(config: RunConfig, trial_index: int) -> TrialRecord:
    inst = config.instance
    seed, prng, rrng = trial_seeds(config.base_seed, trial_index)
    rule = config.rule.fresh()
    stop = config.stop
    n = config.n
    state = ExperimentState(inst.family, inst.k)
    stream = RewardStream(inst, rrng)
    tau = n
    for t in range(n):
        if should_stop(stop, state):
            tau = t
            break
        arm = rule.choose(state, prng)
        state.update(arm, stream.next(arm))
    return _record(config, trial_index, seed, tau, state, rule.fallback_count)


def _record(config, trial_index, seed, tau, state, fallbacks) -> TrialRecord:
    inst = config.instance
    theta = inst.means
    gaps = inst.gaps
    counts = state.counts
    selected = state.leader()
    within_regret = math.fsum(float(c) * float(g) for c, g in zip(counts, gaps))
    within_cost = math.fsum(float(c) * float(x) for c, x in zip(counts, config.costs.within_costs(theta)))
    rest = config.n - tau
    total_regret = within_regret + rest * float(gaps[selected])
    total_cost = within_cost + rest * float(config.costs.post_costs(theta)[selected])
    return TrialRecord(
        trial=int(trial_index),
        seed=seed,
        n=config.n,
        tau=int(tau),
        selected=int(selected),
        correct=bool(gaps[selected] == 0.0),
        within_regret=within_regret,
        total_regret=total_regret,
        within_cost=within_cost,
        total_cost=total_cost,
        fallback_count=int(fallbacks),
        counts=tuple(int(c) for c in counts),
    )


def evaluate_cost(record: TrialRecord, costs: CostModel, instance: Instance) -> float:
    """Within-experiment cost plus (n - tau) times the deployed arm's post cost."""
    theta = instance.means
    within = math.fsum(float(c) * float(x) for c, x in zip(record.counts, costs.within_costs(theta)))
    return within + (record.n - record.tau) * float(costs.post_costs(theta)[record.selected])


@dataclass(frozen=True)
class Summary:
    trials: int
    mean_length: float
    se_length: float
    mean_regret: float
    se_regret: float
    mean_cost: float
    se_cost: float
    misselection_rate: float
    early_wrong_rate: float
    mean_allocation: tuple
    fallbacks: int

    def as_dict(self) -> dict:
        d = {
            "trials": self.trials,
            "mean_length": self.mean_length,
            "se_length": self.se_length,
            "mean_regret": self.mean_regret,
            "se_regret": self.se_regret,
            "mean_cost": self.mean_cost,
            "se_cost": self.se_cost,
            "misselection_rate": self.misselection_rate,
            "early_wrong_rate": self.early_wrong_rate,
            "fallbacks": self.fallbacks,
        }
        for i, p in enumerate(self.mean_allocation):
            d[f"alloc_{i}"] = p
        return d


def _mean_se(values: Sequence[float]):
    m = len(values)
    mean = math.fsum(values) / m
    if m < 2:
        return mean, 0.0
    var = math.fsum((v - mean) ** 2 for v in values) / (m - 1)
    return mean, math.sqrt(var / m)


def summarize(records: Sequence[TrialRecord]) -> Summary:
    if not records:
        raise ValueError("no trial records to summarize")
    m = len(records)
    ml, sl = _mean_se([float(r.tau) for r in records])
    mr, sr = _mean_se([r.total_regret for r in records])
    mc, sc = _mean_se([r.total_cost for r in records])
    k = len(records[0].counts)
    allocs = [r.allocation for r in records]
    mean_alloc = tuple(math.fsum(a[i] for a in allocs) / m for i in range(k))
    return Summary(
        trials=m,
        mean_length=ml,
        se_length=sl,
        mean_regret=mr,
        se_regret=sr,
        mean_cost=mc,
        se_cost=sc,
        misselection_rate=sum(not r.correct for r in records) / m,
        early_wrong_rate=sum(r.early_wrong for r in records) / m,
        mean_allocation=mean_alloc,
        fallbacks=sum(r.fallback_count for r in records),
    )


@dataclass(frozen=True)
class MonteCarloResult:
    records: List[TrialRecord]
    summary: Summary


def _run_chunk(args):
    config, indices = args
    return [run_trial(config, i) for i in indices]


def run_monte_carlo(config: RunConfig, threads: int = 1, trials: Optional[Sequence[int]] = None) -> MonteCarloResult:
    """Run ``config.trials`` independent trials (or the given trial indices).

    With ``threads > 1`` trials run in worker processes; records come back
    sorted by trial index and are identical to a serial run.
    """
    indices = list(range(config.trials)) if trials is None else [int(i) for i in trials]
    if threads <= 1 or len(indices) < 2:
        records = [run_trial(config, i) for i in indices]
    else:
        chunks = [indices[w::threads] for w in range(threads)]
        with ProcessPoolExecutor(max_workers=threads) as ex:
            parts = list(ex.map(_run_chunk, [(config, c) for c in chunks if c]))
        records = sorted((r for part in parts for r in part), key=lambda r: r.trial)
    return MonteCarloResult(records, summarize(records))


def _fmt(x) -> str:
    if isinstance(x, bool):
        return "1" if x else "0"
    if isinstance(x, float):
        return repr(x)
    return str(x)


def trials_csv(records: Sequence[TrialRecord], header: str = "") -> str:
    """Per-trial CSV text; ``header`` becomes a leading ``#`` comment line."""
    out = io.StringIO()
    if header:
        out.write(f"# {header}\n")
    out.write(",".join(CSV_COLUMNS) + "\n")
    for r in records:
        row = (r.trial, r.seed, r.tau, r.selected, r.correct, r.within_regret, r.total_regret, r.total_cost, r.fallback_count)
        out.write(",".join(_fmt(v) for v in row) + "\n")
    return out.getvalue()


def summary_text(summary: Summary, header: str = "") -> str:
    """key=value lines followed by a two-line CSV (header and row)."""
    d = summary.as_dict()
    lines = [f"# {header}"] if header else []
    lines += [f"{key}={_fmt(v)}" for key, v in d.items()]
    lines.append(",".join(d))
    lines.append(",".join(_fmt(v) for v in d.values()))
    return "\n".join(lines) + "\n"
