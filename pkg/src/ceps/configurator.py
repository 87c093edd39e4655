"""Configuration sampling and a budgeted racing tuner.

The tuner is a successive-halving race: evaluate a batch of configurations
on a growing instance/seed schedule, drop the worse half at each rung, then
seed fresh batches by perturbing the survivors until the budget is
exhausted. It fills the same (space, objective, budget) -> configuration
contract as model-based tuners, so one of those can be swapped in behind
this interface.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from statistics import fmean
from typing import Any, Callable

import numpy as np

from ceps.core import (
    CATEGORICAL,
    INTEGER,
    REAL,
    Configuration,
    ParameterSpace,
)

BATCH_SIZE = 16
PERTURB_SCALE = 0.1          # gaussian step: 10% of a numeric parameter's range
CATEGORICAL_REDRAW = 0.2     # probability of re-drawing a categorical value


@dataclass(frozen=True)
class TuneBudget:
    """Either a run-count budget (deterministic) or a wall-clock budget
    (parity experiments); exactly one is active."""

    max_runs: int | None = None
    wall_clock: float | None = None

    def __post_init__(self) -> None:
        if (self.max_runs is None) == (self.wall_clock is None):
            raise ValueError("set exactly one of max_runs / wall_clock")
        if self.max_runs is not None and self.max_runs < 1:
            raise ValueError("max_runs must be positive")
        if self.wall_clock is not None and self.wall_clock <= 0:
            raise ValueError("wall_clock must be positive")

    def scaled(self, factor: float) -> "TuneBudget":
        if self.max_runs is not None:
            return TuneBudget(max_runs=max(1, int(self.max_runs * factor)))
        return TuneBudget(wall_clock=self.wall_clock * factor)


@dataclass
class TuneObjective:
    """evaluate(configuration, instance, seed) -> score, lower is better;
    must be deterministic per (configuration, instance, seed).

    `prefetch`, when given, receives the rung's pending triples before they
    are evaluated one by one; a cache-backed objective can use it to fan the
    underlying solver runs out to workers without changing any result.
    """

    evaluate: Callable[[Configuration, Any, int], float]
    prefetch: Callable[[list[tuple[Configuration, Any, int]]], None] | None = None


class _BudgetExhausted(Exception):
    pass


# ---------------------------------------------------------------------------
# sampling and perturbation
# ---------------------------------------------------------------------------

def _draw(space: ParameterSpace, rng: np.random.Generator) -> Configuration:
    values: dict[str, Any] = {}
    for p in space:
        if p.kind == REAL:
            values[p.name] = float(rng.uniform(p.lower, p.upper))
        elif p.kind == INTEGER:
            values[p.name] = int(rng.integers(p.lower, p.upper + 1))
        else:
            values[p.name] = p.choices[int(rng.integers(len(p.choices)))]
    return Configuration(space.space_id, values)


def sample_configurations(space: ParameterSpace, count: int, seed: int
                          ) -> list[Configuration]:
    """Independent uniform draws per parameter, fingerprint-deduplicated with
    resampling; once 10x count attempts are spent, duplicates are allowed."""
    if count < 1:
        raise ValueError("count must be >= 1")
    rng = np.random.default_rng(seed)
    results: list[Configuration] = []
    seen: set[str] = set()
    attempts = 0
    while len(results) < count and attempts < 10 * count:
        attempts += 1
        config = _draw(space, rng)
        if config.fingerprint in seen:
            continue
        seen.add(config.fingerprint)
        results.append(config)
    while len(results) < count:
        results.append(_draw(space, rng))
    return results


def perturb_configuration(space: ParameterSpace, config: Configuration,
                          rng: np.random.Generator) -> Configuration:
    values: dict[str, Any] = {}
    for p in space:
        v = config[p.name]
        if p.kind == REAL:
            v = float(np.clip(v + rng.normal(0.0, PERTURB_SCALE * (p.upper - p.lower)),
                              p.lower, p.upper))
        elif p.kind == INTEGER:
            step = rng.normal(0.0, PERTURB_SCALE * (p.upper - p.lower))
            v = int(np.clip(round(v + step), p.lower, p.upper))
        elif rng.random() < CATEGORICAL_REDRAW:
            v = p.choices[int(rng.integers(len(p.choices)))]
        values[p.name] = v
    return Configuration(space.space_id, values)


# ---------------------------------------------------------------------------
# the race
# ---------------------------------------------------------------------------

def _affordable_depth(n_inst: int, batch_size: int, budget: TuneBudget,
                      with_incumbent: bool) -> int:
    """Deepest rung a single race (plus incumbent pre-evaluation) can afford.

    Keeps the final-rung schedule inside the run budget so small budgets
    still finish a race instead of truncating at an arbitrary point.
    """
    r_max = max(1, math.ceil(math.log2(n_inst))) if n_inst > 1 else 0
    if budget.max_runs is None:
        return r_max
    depth = 0
    total = 0
    pairs_before = 0
    for rung in range(r_max + 1):
        pairs = min(n_inst, 2 ** rung) * (rung + 1)
        survivors = max(1, math.ceil(batch_size / 2 ** rung))
        total += survivors * (pairs - pairs_before) + (pairs if with_incumbent else 0)
        pairs_before = pairs
        if total <= budget.max_runs:
            depth = rung
        else:
            break
    return depth


def tune(space: ParameterSpace, objective: TuneObjective, instances: list,
         budget: TuneBudget, seed: int, incumbent: Configuration | None = None,
         batch_size: int = BATCH_SIZE) -> Configuration:
    """Race configurations on a growing schedule; return the best candidate
    evaluated on the deepest completed schedule (never worse than a supplied
    incumbent on that schedule).

    The budget counts distinct (configuration, instance, seed) evaluations
    requested within this call; repeats are free, so a warm run cache
    replays a tune without new solver work.
    """
    if not instances:
        raise ValueError("tune needs a non-empty instance list")
    if incumbent is not None and incumbent.space_id != space.space_id:
        raise ValueError("incumbent belongs to a different parameter space")

    rng = np.random.default_rng(seed)
    n_inst = len(instances)
    r_sat = _affordable_depth(n_inst, batch_size, budget, incumbent is not None)

    def schedule(rung: int) -> list[tuple[int, int]]:
        return [(ii, s) for ii in range(min(n_inst, 2 ** rung)) for s in range(rung + 1)]

    memo: dict[tuple[str, int, int], float] = {}
    started = time.perf_counter()
    evals = 0

    def evaluate(config: Configuration, ii: int, s: int) -> float:
        nonlocal evals
        key = (config.fingerprint, ii, s)
        if key in memo:
            return memo[key]
        if budget.max_runs is not None and evals >= budget.max_runs:
            raise _BudgetExhausted
        if budget.wall_clock is not None and time.perf_counter() - started >= budget.wall_clock:
            raise _BudgetExhausted
        evals += 1
        value = objective.evaluate(config, instances[ii], s)
        memo[key] = value
        return value

    # best result per fingerprint, keyed by (-rung, score): deeper rungs win
    results: dict[str, tuple[int, float, Configuration]] = {}

    def aggregate(config: Configuration, rung: int) -> float:
        score = fmean(evaluate(config, ii, s) for ii, s in schedule(rung))
        prev = results.get(config.fingerprint)
        if prev is None or rung > prev[0]:
            results[config.fingerprint] = (rung, score, config)
        return score

    def prefetch_rung(survivors: list[Configuration], rung: int) -> None:
        if objective.prefetch is None:
            return
        pending = [
            (c, instances[ii], s)
            for c in survivors
            for ii, s in schedule(rung)
            if (c.fingerprint, ii, s) not in memo
        ]
        if budget.max_runs is not None:
            pending = pending[: max(0, budget.max_runs - evals)]
        if pending:
            objective.prefetch(pending)

    def race(batch: list[Configuration]) -> list[Configuration]:
        survivors = batch
        for rung in range(r_sat + 1):
            prefetch_rung(survivors, rung)
            scored = sorted(
                ((aggregate(c, rung), c.fingerprint, c) for c in survivors),
                key=lambda t: (t[0], t[1]),
            )
            keep = max(1, math.ceil(len(scored) / 2))
            survivors = [c for _, _, c in scored[:keep]]
        return survivors

    def best_so_far() -> Configuration:
        rung, _, config = min(
            results.values(), key=lambda t: (-t[0], t[1], t[2].fingerprint)
        )
        return config

    try:
        if incumbent is not None:
            # full-schedule evaluation up front, so the returned configuration
            # is always comparable against the incumbent
            for rung in range(r_sat + 1):
                aggregate(incumbent, rung)
        batch = sample_configurations(space, batch_size, seed)
        if incumbent is not None:
            batch = [incumbent] + batch[: batch_size - 1]
        while True:
            evals_before = evals
            survivors = race(batch)
            if evals == evals_before:
                break  # every reachable candidate is memoized; nothing to spend on
            leader = best_so_far()
            fresh = [perturb_configuration(
                space, survivors[int(rng.integers(len(survivors)))], rng)
                for _ in range(batch_size - 1)]
            batch = [leader] + fresh
    except _BudgetExhausted:
        pass

    if not results:
        raise ValueError("budget too small to evaluate a single configuration")
    return best_so_far()
