"""Portfolio construction: greedy initialization, alternating evolution of
the configuration population and the instance population, and the GLOBAL /
PARHYDRA / EPS / initial baselines.

Every random choice draws from a stream derived from the master seed and a
named tag, and every step is recorded in an audit log of fingerprints and
seeds, so a construction replays bit-for-bit.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from ceps.configurator import TuneBudget, TuneObjective, sample_configurations, tune
from ceps.core import Configuration, Parameter, ParameterSpace, Portfolio, derive_seed
from ceps.problems import Runner

METHODS = ("ceps", "eps", "global", "parhydra", "initial")

MAX_VALIDATION_SEEDS = 8
WALL_MODE_GENERATION_CAP = 1_000_000


@dataclass(frozen=True)
class CepsSettings:
    k: int = 4
    max_ite: int = 4
    n_paps: int = 10
    init_sample_size: int = 16
    t_init: TuneBudget = field(default_factory=lambda: TuneBudget(max_runs=96))
    t_c: TuneBudget = field(default_factory=lambda: TuneBudget(max_runs=40))
    t_v: TuneBudget = field(default_factory=lambda: TuneBudget(max_runs=24))
    t_i: TuneBudget | None = None  # wall-clock parity mode for instance evolution
    instance_evolution_generations: int = 10
    seed: int = 0
    elitist_selection: bool = False  # opt-in: current PAP joins the selection step

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ValueError("portfolio size k must be >= 1")
        if self.max_ite < 0:
            raise ValueError("max_ite must be >= 0")  # 0 = initialization only
        if self.n_paps < 1:
            raise ValueError("n_paps must be >= 1")
        if self.init_sample_size < self.k:
            raise ValueError("init_sample_size must be >= k")
        if self.instance_evolution_generations < 1:
            raise ValueError("instance_evolution_generations must be >= 1")

    def to_dict_objects(self) -> dict:
        """Field dict with live TuneBudget objects (for targeted overrides)."""
        return {
            "k": self.k,
            "max_ite": self.max_ite,
            "n_paps": self.n_paps,
            "init_sample_size": self.init_sample_size,
            "t_init": self.t_init,
            "t_c": self.t_c,
            "t_v": self.t_v,
            "t_i": self.t_i,
            "instance_evolution_generations": self.instance_evolution_generations,
            "seed": self.seed,
            "elitist_selection": self.elitist_selection,
        }

    def to_dict(self) -> dict:
        def budget(b: TuneBudget | None) -> dict | None:
            if b is None:
                return None
            return {"max_runs": b.max_runs, "wall_clock": b.wall_clock}

        return {
            "k": self.k,
            "max_ite": self.max_ite,
            "n_paps": self.n_paps,
            "init_sample_size": self.init_sample_size,
            "t_init": budget(self.t_init),
            "t_c": budget(self.t_c),
            "t_v": budget(self.t_v),
            "t_i": budget(self.t_i),
            "instance_evolution_generations": self.instance_evolution_generations,
            "seed": self.seed,
            "elitist_selection": self.elitist_selection,
        }


@dataclass(frozen=True)
class PoolMember:
    instance: object
    fitness: float
    fingerprint: str


@dataclass(frozen=True)
class InstancePool:
    """Fitness-annotated training instances; fitness is the portfolio score
    against the portfolio each member was last evaluated with."""

    members: tuple[PoolMember, ...]
    kind: str

    def __post_init__(self) -> None:
        fps = [m.fingerprint for m in self.members]
        if len(set(fps)) != len(fps):
            raise ValueError("instance pool fingerprints must be unique")

    def __len__(self) -> int:
        return len(self.members)

    def instances(self) -> list:
        return [m.instance for m in self.members]

    def fingerprints(self) -> list[str]:
        return [m.fingerprint for m in self.members]


class AuditLog:
    """Append-only record of typed construction events."""

    INSTANCE_KEYS = ("train", "pool", "parent", "child", "replaced", "instance")

    def __init__(self) -> None:
        self.events: list[dict] = []

    def record(self, event: str, **fields) -> None:
        self.events.append({"event": event, **fields})

    def instance_fingerprints(self) -> set[str]:
        found: set[str] = set()
        for event in self.events:
            for key in self.INSTANCE_KEYS:
                value = event.get(key)
                if isinstance(value, str):
                    found.add(value)
                elif isinstance(value, list):
                    found.update(v for v in value if isinstance(v, str))
        return found

    def save(self, path: str | Path) -> None:
        with open(path, "w") as fh:
            for event in self.events:
                fh.write(json.dumps(event, sort_keys=True) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "AuditLog":
        log = cls()
        for line in Path(path).read_text().splitlines():
            if line.strip():
                log.events.append(json.loads(line))
        return log


@dataclass
class ConstructionResult:
    method: str
    portfolio: Portfolio
    initial_portfolio: Portfolio
    pool: InstancePool
    audit: AuditLog
    runner: Runner


# ---------------------------------------------------------------------------
# initialization
# ---------------------------------------------------------------------------

def greedy_init(candidates: Sequence[Configuration], instances: Sequence, k: int,
                runner: Runner) -> Portfolio:
    """Grow the portfolio one member at a time, always adding the candidate
    that minimizes the training-set portfolio score; ties keep the earlier
    candidate, selected candidates leave the pool."""
    pool: list[Configuration] = []
    seen: set[str] = set()
    for c in candidates:
        if c.fingerprint not in seen:
            seen.add(c.fingerprint)
            pool.append(c)
    if len(pool) < k:
        raise ValueError(f"need at least {k} distinct candidates, got {len(pool)}")

    runner.outcomes([(c, inst, 0) for c in pool for inst in instances])
    score = {c.fingerprint: [runner.score(c, inst, 0) for inst in instances]
             for c in pool}

    chosen: list[Configuration] = []
    chosen_scores: list[list[float]] = []  # per-instance mins of the current portfolio
    current = [float("inf")] * len(instances)
    for _ in range(k):
        best = None
        best_mean = float("inf")
        for c in pool:
            mean = sum(min(cur, s) for cur, s in zip(current, score[c.fingerprint])) \
                / len(instances)
            if mean < best_mean:
                best, best_mean = c, mean
        chosen.append(best)
        pool.remove(best)
        current = [min(cur, s) for cur, s in zip(current, score[best.fingerprint])]
        chosen_scores.append(list(current))
    return Portfolio(tuple(chosen), max_size=max(k, 4))


# ---------------------------------------------------------------------------
# evolution of the configuration population
# ---------------------------------------------------------------------------

def _completion_objective(runner: Runner, base_members: Sequence[Configuration]
                          ) -> TuneObjective:
    """Objective for filling one open slot: the score of the candidate PAP
    base ∪ {θ'} on an instance."""
    base = list(base_members)

    def evaluate(config: Configuration, instance, seed: int) -> float:
        return runner.pap_instance_score([*base, config], instance, seed)

    def prefetch(tasks: list[tuple[Configuration, object, int]]) -> None:
        runner.outcomes([(m, inst, s) for c, inst, s in tasks for m in [*base, c]])

    return TuneObjective(evaluate=evaluate, prefetch=prefetch)


def _validation_seeds(settings: CepsSettings, pool_size: int) -> list[int]:
    budget = settings.t_v
    if budget.max_runs is None:
        return [0]
    per_pap = settings.n_paps * settings.k * max(1, pool_size)
    return list(range(max(1, min(MAX_VALIDATION_SEEDS, budget.max_runs // per_pap))))


def evolve_configs(portfolio: Portfolio, pool: InstancePool, settings: CepsSettings,
                   runner: Runner, audit: AuditLog, ite: int,
                   grow_portfolio: bool = False) -> Portfolio:
    """One configuration-population step: build n candidate PAPs by replacing
    (or, in grow mode, extending past) one member with a tuned configuration,
    validate them on the training pool, keep the best."""
    instances = pool.instances()
    rng = np.random.default_rng(derive_seed(settings.seed, "evolve_configs", ite))
    members = list(portfolio.members)

    candidates: list[Portfolio] = []
    for slot in range(settings.n_paps):
        if grow_portfolio:
            removed = None
            base = list(members)
        else:
            removed = members[int(rng.integers(len(members)))]
            base = [m for m in members if m.fingerprint != removed.fingerprint]
        theta = tune(
            runner.problem.space,
            _completion_objective(runner, base),
            instances,
            settings.t_c,
            derive_seed(settings.seed, "tune", ite, slot),
            incumbent=removed,
        )
        new_members = list(base)
        if theta.fingerprint not in {m.fingerprint for m in new_members}:
            new_members.append(theta)
        elif removed is not None:
            new_members.append(removed)  # duplicate θ': restore the removed member
        candidates.append(Portfolio(tuple(new_members), max_size=len(new_members)))
        audit.record("tune_result", ite=ite, slot=slot,
                     removed=removed.fingerprint if removed else None,
                     theta=theta.fingerprint)

    seeds = _validation_seeds(settings, len(instances))
    scored: list[tuple[float, int, Portfolio]] = []
    for slot, candidate in enumerate(candidates):
        score = runner.pap_set_score(candidate.members, instances, seeds)
        scored.append((score, slot, candidate))
        audit.record("pap_validated", ite=ite, slot=slot,
                     portfolio=list(candidate.fingerprints), score=score)
    if settings.elitist_selection:
        score = runner.pap_set_score(portfolio.members, instances, seeds)
        scored.append((score, len(candidates), portfolio))
        audit.record("pap_validated", ite=ite, slot=len(candidates),
                     portfolio=list(portfolio.fingerprints), score=score)

    best_score, best_slot, best = min(scored, key=lambda t: (t[0], t[1]))
    audit.record("pap_selected", ite=ite, slot=best_slot,
                 portfolio=list(best.fingerprints), score=best_score)
    return best


# ---------------------------------------------------------------------------
# evolution of the instance population
# ---------------------------------------------------------------------------

def _labeled_pool(instances: Iterable, portfolio: Portfolio, runner: Runner,
                  kind: str) -> InstancePool:
    members = []
    seen: set[str] = set()
    for inst in instances:
        fp = runner.problem.instance_fingerprint(inst)
        if fp in seen:
            continue
        seen.add(fp)
        fitness = runner.pap_instance_score(portfolio.members, inst, 0)
        members.append(PoolMember(instance=inst, fitness=fitness, fingerprint=fp))
    return InstancePool(tuple(members), kind)


def evolve_instances(pool: InstancePool, portfolio: Portfolio, settings: CepsSettings,
                     runner: Runner, audit: AuditLog, ite: int) -> InstancePool:
    """One instance-population step: mutate random members of a working copy,
    let offspring replace a random strictly-less-fit member, then merge the
    copy back into the training pool."""
    problem = runner.problem
    rng = np.random.default_rng(derive_seed(settings.seed, "evolve_instances", ite))
    working = list(_labeled_pool(pool.instances(), portfolio, runner, pool.kind).members)

    wall_budget = settings.t_i.wall_clock if settings.t_i is not None else None
    started = time.perf_counter()
    generations = (WALL_MODE_GENERATION_CAP if wall_budget is not None
                   else settings.instance_evolution_generations)

    for gen in range(generations):
        if wall_budget is not None and time.perf_counter() - started >= wall_budget:
            break
        parent = working[int(rng.integers(len(working)))]
        child = problem.mutate(parent.instance,
                               derive_seed(settings.seed, "mutate", ite, gen))
        child = problem.prepare(child)
        child_fp = problem.instance_fingerprint(child)
        if child_fp in {m.fingerprint for m in working}:
            continue  # duplicate geometry; nothing to add
        fitness = runner.pap_instance_score(portfolio.members, child, 0)
        audit.record("offspring", ite=ite, gen=gen, parent=parent.fingerprint,
                     child=child_fp, fitness=fitness)
        weaker = [i for i, m in enumerate(working) if m.fitness < fitness]
        if not weaker:
            continue
        victim = weaker[int(rng.integers(len(weaker)))]
        audit.record("replacement", ite=ite, gen=gen,
                     replaced=working[victim].fingerprint, child=child_fp)
        working[victim] = PoolMember(instance=child, fitness=fitness,
                                     fingerprint=child_fp)

    merged = list(working)
    seen = {m.fingerprint for m in merged}
    for member in pool.members:
        if member.fingerprint not in seen:
            seen.add(member.fingerprint)
            fitness = runner.pap_instance_score(portfolio.members, member.instance, 0)
            merged.append(replace(member, fitness=fitness))
    result = InstancePool(tuple(merged), pool.kind)
    audit.record("merge", ite=ite, pool=result.fingerprints())
    return result


# ---------------------------------------------------------------------------
# full constructions
# ---------------------------------------------------------------------------

def _initial_portfolio(problem, train: list, settings: CepsSettings, runner: Runner,
                       audit: AuditLog, method: str) -> Portfolio:
    count = settings.init_sample_size
    if settings.t_init.max_runs is not None:
        count = min(count, max(settings.k, settings.t_init.max_runs // max(1, len(train))))
    candidates = sample_configurations(problem.space, count,
                                       derive_seed(settings.seed, "init_sample"))
    portfolio = greedy_init(candidates, train, settings.k, runner)
    audit.record("init", method=method, seed=settings.seed,
                 train=[problem.instance_fingerprint(i) for i in train],
                 candidates=[c.fingerprint for c in candidates],
                 portfolio=list(portfolio.fingerprints),
                 score=runner.pap_set_score(portfolio.members, train))
    return portfolio


def run_ceps(problem, train_instances: Sequence, settings: CepsSettings,
             cache=None, workers: int = 1) -> ConstructionResult:
    """Alternating co-evolution: n tuned candidate PAPs per iteration, then
    instance evolution against the surviving PAP (skipped after the final
    iteration)."""
    if not train_instances:
        raise ValueError("need at least one training instance")
    runner = Runner(problem, cache, workers)
    audit = AuditLog()
    train = [problem.prepare(inst) for inst in train_instances]
    portfolio = _initial_portfolio(problem, train, settings, runner, audit, "ceps")
    initial = portfolio
    pool = _labeled_pool(train, portfolio, runner, problem.kind)
    for ite in range(1, settings.max_ite + 1):
        portfolio = evolve_configs(portfolio, pool, settings, runner, audit, ite)
        if ite == settings.max_ite:
            break
        pool = evolve_instances(pool, portfolio, settings, runner, audit, ite)
    return ConstructionResult("ceps", portfolio, initial, pool, audit, runner)


def _product_space(space: ParameterSpace, k: int) -> ParameterSpace:
    params: list[Parameter] = []
    for i in range(k):
        for p in space:
            params.append(replace(p, name=f"m{i}.{p.name}"))
    return ParameterSpace(f"{space.space_id}.x{k}", tuple(params))


def split_product_configuration(space: ParameterSpace, k: int,
                                config: Configuration) -> list[Configuration]:
    return [
        Configuration(space.space_id,
                      {p.name: config[f"m{i}.{p.name}"] for p in space})
        for i in range(k)
    ]


def _combined_budget(settings: CepsSettings, factor: int) -> TuneBudget:
    t_c, t_v = settings.t_c, settings.t_v
    if t_c.max_runs is not None and t_v.max_runs is not None:
        return TuneBudget(max_runs=factor * (t_c.max_runs + t_v.max_runs))
    if t_c.wall_clock is not None and t_v.wall_clock is not None:
        return TuneBudget(wall_clock=factor * (t_c.wall_clock + t_v.wall_clock))
    raise ValueError("t_c and t_v must use the same budget mode")


def _distinct_members(members: Iterable[Configuration]) -> list[Configuration]:
    out: list[Configuration] = []
    seen: set[str] = set()
    for m in members:
        if m.fingerprint not in seen:
            seen.add(m.fingerprint)
            out.append(m)
    return out


def run_baseline(method: str, problem, train_instances: Sequence,
                 settings: CepsSettings, cache=None, workers: int = 1
                 ) -> ConstructionResult:
    if method not in ("global", "parhydra", "eps", "initial"):
        raise ValueError(f"unknown baseline {method!r}; choose from "
                         "global, parhydra, eps, initial")
    if not train_instances:
        raise ValueError("need at least one training instance")
    runner = Runner(problem, cache, workers)
    audit = AuditLog()
    train = [problem.prepare(inst) for inst in train_instances]

    if method == "initial":
        portfolio = _initial_portfolio(problem, train, settings, runner, audit, method)
        pool = _labeled_pool(train, portfolio, runner, problem.kind)
        return ConstructionResult(method, portfolio, portfolio, pool, audit, runner)

    if method == "global":
        space = _product_space(problem.space, settings.k)

        def evaluate(config: Configuration, instance, seed: int) -> float:
            members = split_product_configuration(problem.space, settings.k, config)
            return runner.pap_instance_score(members, instance, seed)

        def prefetch(tasks) -> None:
            runner.outcomes([
                (m, inst, s)
                for c, inst, s in tasks
                for m in split_product_configuration(problem.space, settings.k, c)
            ])

        joint = tune(space, TuneObjective(evaluate=evaluate, prefetch=prefetch),
                     train, _combined_budget(settings, settings.k * settings.n_paps),
                     derive_seed(settings.seed, "global"))
        members = _distinct_members(
            split_product_configuration(problem.space, settings.k, joint))
        portfolio = Portfolio(tuple(members), max_size=settings.k)
        audit.record("init", method=method, seed=settings.seed,
                     train=[problem.instance_fingerprint(i) for i in train],
                     candidates=[], portfolio=list(portfolio.fingerprints),
                     score=runner.pap_set_score(portfolio.members, train))
        pool = _labeled_pool(train, portfolio, runner, problem.kind)
        return ConstructionResult(method, portfolio, portfolio, pool, audit, runner)

    if method == "parhydra":
        members: list[Configuration] = []
        round_budget = _combined_budget(settings, settings.n_paps)
        for rnd in range(settings.k):
            theta = tune(problem.space, _completion_objective(runner, members),
                         train, round_budget,
                         derive_seed(settings.seed, "parhydra", rnd))
            if theta.fingerprint not in {m.fingerprint for m in members}:
                members.append(theta)
            audit.record("tune_result", ite=rnd, slot=0, removed=None,
                         theta=theta.fingerprint)
        portfolio = Portfolio(tuple(members), max_size=settings.k)
        audit.record("init", method=method, seed=settings.seed,
                     train=[problem.instance_fingerprint(i) for i in train],
                     candidates=[], portfolio=list(portfolio.fingerprints),
                     score=runner.pap_set_score(portfolio.members, train))
        pool = _labeled_pool(train, portfolio, runner, problem.kind)
        return ConstructionResult(method, portfolio, portfolio, pool, audit, runner)

    # eps: grow the training set first (unconditionally, no fitness gate),
    # then run the configuration phases on the fixed union
    rng = np.random.default_rng(derive_seed(settings.seed, "eps_growth"))
    grown = list(train)
    fingerprints = {problem.instance_fingerprint(i) for i in grown}
    attempts = max(0, settings.max_ite - 1) * settings.instance_evolution_generations
    accepted = 0
    for attempt in range(attempts):
        parent = grown[int(rng.integers(len(grown)))]
        child = problem.mutate(parent, derive_seed(settings.seed, "eps_mutate", attempt))
        child = problem.prepare(child)
        fp = problem.instance_fingerprint(child)
        if fp in fingerprints:
            continue
        fingerprints.add(fp)
        grown.append(child)
        accepted += 1
    audit.record("eps_growth", attempted=attempts, accepted=accepted,
                 pool=[problem.instance_fingerprint(i) for i in grown])

    portfolio = _initial_portfolio(problem, grown, settings, runner, audit, method)
    initial = portfolio
    pool = _labeled_pool(grown, portfolio, runner, problem.kind)
    for ite in range(1, settings.max_ite + 1):
        portfolio = evolve_configs(portfolio, pool, settings, runner, audit, ite)
    return ConstructionResult(method, portfolio, initial, pool, audit, runner)
