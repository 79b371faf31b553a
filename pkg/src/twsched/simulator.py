"""Experiments on homogeneous machines: fixed-size batches and Poisson arrivals.

Every replication draws its arrivals from its own generator, seeded as
``seed + SEED_STRIDE * rep + key`` where ``key`` is the batch size ``n``
(fixed arrivals) or the run index (Poisson arrivals).  All policies of one
replication see the same arrivals.  Random generators are numpy ``PCG64``
streams built from ``SeedSequence(rep_seed, spawn_key=(0,))`` for arrivals
and ``spawn_key=(1,)`` for the Random policy, and only ever consume uniform
doubles, so results are portable across platforms.
"""

from __future__ import annotations

import bisect
import csv
import functools
import io
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from .balancing import balance_allocate
from .baselines import Policy, assign_fifo, assign_greedy, assign_random
from .errors import ConfigurationError

EXEC_TIMES = (10, 12, 13, 15, 20, 32, 40)
SEED_STRIDE = 2**20
MAX_LAMBDA = 30
ALL_POLICIES = (Policy.OURS, Policy.RANDOM, Policy.FIFO, Policy.GREEDY)


@dataclass(frozen=True)
class FixedArrivals:
    n_values: tuple  # one batch of n tasks per replication, for each n


@dataclass(frozen=True)
class PoissonArrivals:
    lam: float
    steps: int


@dataclass(frozen=True)
class ExperimentConfig:
    arrival: Union[FixedArrivals, PoissonArrivals]
    machines: int = 4
    exec_time_values: tuple = EXEC_TIMES
    replications: int = 1
    runs: int = 1
    seed: int = 0
    policies: tuple = ALL_POLICIES

    def __post_init__(self):
        if not isinstance(self.machines, int) or self.machines < 1:
            raise ConfigurationError(f"machines must be >= 1, got {self.machines!r}")
        if not self.exec_time_values:
            raise ConfigurationError("exec_time_values must not be empty")
        if any(not v > 0 for v in self.exec_time_values):
            raise ConfigurationError("execution times must be > 0")
        if self.replications < 1 or self.runs < 1:
            raise ConfigurationError("replications and runs must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ConfigurationError(f"seed must fit in 64 unsigned bits, got {self.seed}")
        if not self.policies:
            raise ConfigurationError("at least one policy is required")
        if len(set(self.policies)) != len(self.policies):
            raise ConfigurationError("policies must not repeat")
        a = self.arrival
        if isinstance(a, FixedArrivals):
            if not a.n_values or any(n < 0 for n in a.n_values):
                raise ConfigurationError("batch sizes must be a non-empty list of counts >= 0")
        elif isinstance(a, PoissonArrivals):
            _check_lambda(a.lam)
            if a.steps < 1:
                raise ConfigurationError("steps must be >= 1")
        else:
            raise ConfigurationError(f"unknown arrival model {a!r}")

    @property
    def keys(self) -> tuple:
        """Batch sizes for fixed arrivals, run indices for Poisson arrivals."""
        if isinstance(self.arrival, FixedArrivals):
            return tuple(self.arrival.n_values)
        return tuple(range(self.runs))


@dataclass(frozen=True)
class MetricsRecord:
    policy: Policy
    n: int  # batch size, or run index under Poisson arrivals
    rep: int
    seed: int
    loads: tuple

    @property
    def makespan(self):
        return max(self.loads)

    @property
    def t_min(self):
        return min(self.loads)

    @property
    def tcd(self):
        return self.makespan - self.t_min


def _check_lambda(lam):
    if not (0 < lam <= MAX_LAMBDA) or math.isnan(lam):
        raise ConfigurationError(f"lambda must be in (0, {MAX_LAMBDA}], got {lam!r}")


@functools.lru_cache(maxsize=32)
def _poisson_cdf(lam: float) -> tuple:
    _check_lambda(lam)
    p = math.exp(-lam)
    cdf = [p]
    k = 0
    while cdf[-1] < 1 - 1e-15 and k < 10 * MAX_LAMBDA + 100:
        k += 1
        p *= lam / k
        cdf.append(cdf[-1] + p)
    return tuple(cdf)


def sample_poisson(lam: float, rng: np.random.Generator) -> int:
    """One Poisson(lam) draw by inverting the cumulative distribution."""
    cdf = _poisson_cdf(lam)
    return min(bisect.bisect_right(cdf, rng.random()), len(cdf) - 1)


def sample_poisson_many(lam: float, rng: np.random.Generator, size: int) -> np.ndarray:
    """``size`` draws; equals ``size`` successive calls of :func:`sample_poisson`."""
    cdf = np.asarray(_poisson_cdf(lam))
    k = np.searchsorted(cdf, rng.random(size), side="right")
    return np.minimum(k, len(cdf) - 1)


def sample_task_batch(count: int, exec_time_values: Sequence, rng: np.random.Generator) -> tuple:
    if count < 0:
        raise ConfigurationError("batch size must be >= 0")
    values = tuple(exec_time_values)
    k = len(values)
    idx = np.minimum((rng.random(count) * k).astype(np.int64), k - 1)
    return tuple(values[i] for i in idx.tolist())


def replication_seed(seed: int, rep: int, key: int) -> int:
    return seed + SEED_STRIDE * rep + key


def _rng(rep_seed: int, stream: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(rep_seed, spawn_key=(stream,))))


def _arrivals(config: ExperimentConfig, key: int, rep_seed: int) -> list:
    rng = _rng(rep_seed, 0)
    if isinstance(config.arrival, FixedArrivals):
        return [sample_task_batch(key, config.exec_time_values, rng)]
    batches = []
    for _ in range(config.arrival.steps):
        count = sample_poisson(config.arrival.lam, rng)
        batches.append(sample_task_batch(count, config.exec_time_values, rng))
    return batches


def _apply(policy: Policy, batches: Iterable[Sequence], m: int, rep_seed: int) -> tuple:
    """Feed the batches, in order, to persistent machine queues; returns final loads."""
    loads = [0] * m
    cursor = 0
    counts = [0] * m
    rng = _rng(rep_seed, 1) if policy is Policy.RANDOM else None
    for batch in batches:
        if not batch:
            continue
        if policy is Policy.OURS:
            loads = list(balance_allocate(batch, m, loads).resulting_loads)
            continue
        if policy is Policy.RANDOM:
            a = assign_random(batch, m, rng)
        elif policy is Policy.FIFO:
            a, cursor = assign_fifo(batch, m, cursor)
        else:
            a, counts = assign_greedy(batch, m, counts)
        loads = [x + y for x, y in zip(loads, a.resulting_loads)]
    return tuple(loads)


def run_replication(config: ExperimentConfig, policy: Policy, seed: int, key: Optional[int] = None) -> MetricsRecord:
    """One replication under ``policy`` with arrivals seeded by ``seed``.

    ``key`` is the batch size for fixed arrivals (default: the first one) or
    the run index recorded for Poisson arrivals.
    """
    if key is None:
        key = config.keys[0]
    batches = _arrivals(config, key, seed)
    return MetricsRecord(policy, key, 0, seed, _apply(policy, batches, config.machines, seed))


@dataclass(frozen=True)
class AggregateRow:
    policy: Policy
    n: int
    reps: int
    mean_makespan: float
    mean_tcd: float
    makespan_minus_ours: Optional[float]
    tcd_minus_ours: Optional[float]


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    records: list = field(default_factory=list)

    def by(self, policy: Policy, n: int) -> list:
        return [r for r in self.records if r.policy is policy and r.n == n]

    def aggregate(self) -> list:
        groups = {}
        for r in self.records:
            groups.setdefault((r.policy, r.n), []).append(r)
        means = {
            k: (sum(r.makespan for r in v) / len(v), sum(r.tcd for r in v) / len(v), len(v))
            for k, v in groups.items()
        }
        rows = []
        for policy in self.config.policies:
            for n in self.config.keys:
                mk, tcd, reps = means[policy, n]
                ours = means.get((Policy.OURS, n))
                rows.append(
                    AggregateRow(
                        policy,
                        n,
                        reps,
                        mk,
                        tcd,
                        None if ours is None else mk - ours[0],
                        None if ours is None else tcd - ours[1],
                    )
                )
        return rows


def run_experiment(config: ExperimentConfig) -> ExperimentResult:
    result = ExperimentResult(config)
    per_policy = {p: [] for p in config.policies}
    for key in config.keys:
        for rep in range(config.replications):
            rep_seed = replication_seed(config.seed, rep, key)
            batches = _arrivals(config, key, rep_seed)
            for policy in config.policies:
                loads = _apply(policy, batches, config.machines, rep_seed)
                per_policy[policy].append(MetricsRecord(policy, key, rep, rep_seed, loads))
    for policy in config.policies:
        result.records.extend(per_policy[policy])
    return result


def _num(x) -> str:
    if isinstance(x, float):
        if x.is_integer():
            return str(int(x))
        return repr(x)
    return str(x)


def _mean(x) -> str:
    return "" if x is None else f"{x:.6f}"


def results_csv(result: ExperimentResult) -> str:
    m = result.config.machines
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["policy", "n", "rep", "seed", "makespan", "tcd"] + [f"load{i}" for i in range(1, m + 1)])
    for r in result.records:
        w.writerow(
            [r.policy.value, r.n, r.rep, r.seed, _num(r.makespan), _num(r.tcd)]
            + [_num(x) for x in r.loads]
        )
    return buf.getvalue()


def aggregate_csv(result: ExperimentResult) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["policy", "n", "reps", "mean_makespan", "mean_tcd", "makespan_minus_ours", "tcd_minus_ours"])
    for a in result.aggregate():
        w.writerow(
            [
                a.policy.value,
                a.n,
                a.reps,
                _mean(a.mean_makespan),
                _mean(a.mean_tcd),
                _mean(a.makespan_minus_ours),
                _mean(a.tcd_minus_ours),
            ]
        )
    return buf.getvalue()
