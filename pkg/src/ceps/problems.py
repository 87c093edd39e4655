"""Problem adapters and the cache-backed runner.

A problem bundles a solver's parameter space, the experiment cutoff, the
per-run score (penalized runtime or penalized normalized cost), the instance
mutation operator, and instance preparation (reference-optimum
certification for TSP). The Runner memoizes every (configuration, instance,
seed) execution in a RunCache and can fan uncached runs out to a process
pool; results are independent of worker scheduling because runs are pure.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from statistics import fmean
from typing import Iterable, Sequence

from ceps import tsp as tsp_mod
from ceps import vrpspdtw as vrp_mod
from ceps.core import Configuration, ParameterSpace, RunCache, RunOutcome

TSP = "tsp"
VRPSPDTW = "vrpspdtw"


@dataclass(frozen=True)
class TspProblem:
    kind = TSP
    cutoff: float
    wall_clock: bool = False
    consensus_runs: int = 10

    @property
    def space(self) -> ParameterSpace:
        return tsp_mod.TSP_SPACE

    @property
    def penalty_score(self) -> float:
        return 10.0 * self.cutoff

    def run(self, config: Configuration, instance, seed: int) -> RunOutcome:
        return tsp_mod.solve(instance, config, seed, self.cutoff, wall_clock=self.wall_clock)

    def score(self, instance, outcome: RunOutcome) -> float:
        return tsp_mod.penalized_runtime(outcome)

    def mutate(self, instance, seed: int):
        from ceps.instgen import mutate_tsp

        return mutate_tsp(instance, seed)

    def prepare(self, instance):
        """Certify a reference optimum when the instance lacks one."""
        if instance.reference_optimum is not None:
            return instance
        if instance.n <= tsp_mod.HELD_KARP_MAX_N:
            return instance.with_optimum(tsp_mod.held_karp_optimum(instance), tsp_mod.EXACT)
        return tsp_mod.certify_optimum(instance, self.cutoff, runs=self.consensus_runs,
                                       wall_clock=self.wall_clock)

    def instance_fingerprint(self, instance) -> str:
        return instance.fingerprint

    def load_instances(self, directory: str | Path) -> list:
        return tsp_mod.load_instance_dir(directory)

    def save_instances(self, instances: Sequence, directory: str | Path) -> None:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        records = tsp_mod.load_optima(directory / tsp_mod.OPTIMA_FILENAME)
        for i, inst in enumerate(instances):
            tsp_mod.write_tsplib(inst, directory / f"{inst.name or f'instance{i:04d}'}.tsp")
            if inst.reference_optimum is not None:
                records[inst.fingerprint] = {
                    "value": inst.reference_optimum,
                    "provenance": inst.optimum_provenance,
                }
        if records:
            tsp_mod.save_optima(records, directory / tsp_mod.OPTIMA_FILENAME)


@dataclass(frozen=True)
class VrpProblem:
    kind = VRPSPDTW
    cutoff: float
    wall_clock: bool = False

    @property
    def space(self) -> ParameterSpace:
        return vrp_mod.VRP_SPACE

    @property
    def penalty_score(self) -> float:
        return vrp_mod.PANC_PENALTY

    def run(self, config: Configuration, instance, seed: int) -> RunOutcome:
        return vrp_mod.baseline_solve(instance, config, seed, self.cutoff,
                                      wall_clock=self.wall_clock)

    def score(self, instance, outcome: RunOutcome) -> float:
        return vrp_mod.panc(instance, outcome)

    def mutate(self, instance, seed: int):
        return vrp_mod.mutate_vrp(instance, seed)

    def prepare(self, instance):
        return instance

    def instance_fingerprint(self, instance) -> str:
        return instance.fingerprint

    def load_instances(self, directory: str | Path) -> list:
        return vrp_mod.load_instance_dir(directory)

    def save_instances(self, instances: Sequence, directory: str | Path) -> None:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        for i, inst in enumerate(instances):
            vrp_mod.write_vrp(inst, directory / f"{inst.name or f'instance{i:04d}'}.json")


def make_problem(kind: str, cutoff: float, wall_clock: bool = False):
    if kind == TSP:
        return TspProblem(cutoff=cutoff, wall_clock=wall_clock)
    if kind == VRPSPDTW:
        return VrpProblem(cutoff=cutoff, wall_clock=wall_clock)
    raise ValueError(f"unknown problem kind {kind!r}")


def worker_count() -> int:
    """Concurrency cap: CEPS_WORKERS, defaulting to the logical core count."""
    env = os.environ.get("CEPS_WORKERS", "").strip()
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _execute(problem, config: Configuration, instance, seed: int) -> RunOutcome:
    return problem.run(config, instance, seed)


class Runner:
    """Memoized solver execution over one problem and one cutoff regime."""

    def __init__(self, problem, cache: RunCache | None = None, workers: int = 1):
        self.problem = problem
        self.cache = cache if cache is not None else RunCache()
        self.workers = max(1, workers)
        self.fresh_runs = 0

    def _key(self, config: Configuration, instance, seed: int) -> tuple[str, str, int]:
        return (config.fingerprint, self.problem.instance_fingerprint(instance), seed)

    def _checked(self, key, outcome: RunOutcome) -> RunOutcome:
        if outcome.cutoff != self.problem.cutoff:
            raise RuntimeError(
                f"cache entry {key} was recorded at cutoff {outcome.cutoff}, "
                f"this runner uses {self.problem.cutoff}; use a separate cache per regime"
            )
        return outcome

    def is_cached(self, config: Configuration, instance, seed: int) -> bool:
        return self._key(config, instance, seed) in self.cache

    def outcome(self, config: Configuration, instance, seed: int) -> RunOutcome:
        key = self._key(config, instance, seed)
        hit = self.cache.get(key)
        if hit is not None:
            return self._checked(key, hit)
        result = self.problem.run(config, instance, seed)
        self.cache.insert(key, result)
        self.fresh_runs += 1
        return result

    def outcomes(self, tasks: Sequence[tuple[Configuration, object, int]]
                 ) -> list[RunOutcome]:
        """Batch form of `outcome`; uncached tasks may run on a process pool."""
        keyed = [(self._key(c, i, s), (c, i, s)) for c, i, s in tasks]
        misses: dict[tuple, tuple] = {}
        for key, task in keyed:
            if key not in self.cache and key not in misses:
                misses[key] = task
        if misses:
            items = list(misses.items())
            if self.workers > 1 and len(items) > 1:
                with ProcessPoolExecutor(max_workers=self.workers) as pool:
                    futures = [pool.submit(_execute, self.problem, c, i, s)
                               for _, (c, i, s) in items]
                    results = [f.result() for f in futures]
            else:
                results = [self.problem.run(c, i, s) for _, (c, i, s) in items]
            for (key, _), result in zip(items, results):
                self.cache.insert(key, result)
                self.fresh_runs += 1
        return [self._checked(key, self.cache.get(key)) for key, _ in keyed]

    # -- scores ---------------------------------------------------------------

    def score(self, config: Configuration, instance, seed: int) -> float:
        return self.problem.score(instance, self.outcome(config, instance, seed))

    def pap_instance_score(self, members: Iterable[Configuration], instance,
                           seed: int) -> float:
        """f(s, Θ): best member score on the instance under a common seed."""
        members = list(members)
        outs = self.outcomes([(m, instance, seed) for m in members])
        return min(self.problem.score(instance, o) for o in outs)

    def pap_set_score(self, members: Iterable[Configuration], instances: Sequence,
                      seeds: Sequence[int] = (0,)) -> float:
        """Mean over instances (and seeds) of the portfolio score."""
        members = list(members)
        self.outcomes([(m, inst, s) for inst in instances for s in seeds for m in members])
        per_instance = []
        for inst in instances:
            per_seed = [self.pap_instance_score(members, inst, s) for s in seeds]
            per_instance.append(fmean(per_seed))
        return fmean(per_instance)
