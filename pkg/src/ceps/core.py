"""Problem-agnostic types: parameter spaces, configurations, portfolios,
run outcomes and the persistent run cache.

Everything here is an immutable value except :class:`RunCache`, which is the
single shared mutable structure and is safe for concurrent lookup/insert.
"""

from __future__ import annotations

import hashlib
import json
import math
import threading
from dataclasses import dataclass, field
from pathlib import Path
from statistics import fmean
from typing import Any, Iterable, Iterator


# ---------------------------------------------------------------------------
# canonical serialization / fingerprints
# ---------------------------------------------------------------------------

def _canon(value: Any) -> Any:
    """Normalize a value tree for fingerprinting.

    Floats are rendered with 17 significant digits (round-trip exact for
    float64), so fingerprints are stable across sessions and platforms.
    """
    if isinstance(value, bool) or isinstance(value, int) or isinstance(value, str):
        return value
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ValueError(f"non-finite value in canonical serialization: {value}")
        return f"{value:.17g}"
    if isinstance(value, (list, tuple)):
        return [_canon(v) for v in value]
    if isinstance(value, dict):
        return {str(k): _canon(value[k]) for k in sorted(value)}
    raise TypeError(f"cannot canonicalize {type(value).__name__}")


def canonical_json(value: Any) -> str:
    """Key-sorted, fixed-precision JSON used for all fingerprints."""
    return json.dumps(_canon(value), sort_keys=True, separators=(",", ":"))


def fingerprint(value: Any) -> str:
    return hashlib.sha256(canonical_json(value).encode()).hexdigest()[:16]


def derive_seed(master: int, *tags: Any) -> int:
    """A named, replayable child seed: hash of the master seed plus tags."""
    text = f"{master}|" + "|".join(str(t) for t in tags)
    return int.from_bytes(hashlib.sha256(text.encode()).digest()[:8], "big")


# ---------------------------------------------------------------------------
# parameter spaces and configurations
# ---------------------------------------------------------------------------

REAL = "real"
INTEGER = "integer"
CATEGORICAL = "categorical"


@dataclass(frozen=True)
class Parameter:
    """One tunable parameter: a closed interval (real/integer) or a finite
    value set (categorical), plus a default inside the domain."""

    name: str
    kind: str
    lower: float | None = None
    upper: float | None = None
    choices: tuple[Any, ...] | None = None
    default: Any = None

    def __post_init__(self) -> None:
        if self.kind in (REAL, INTEGER):
            if self.lower is None or self.upper is None or self.lower > self.upper:
                raise ValueError(f"parameter {self.name}: need lower <= upper")
        elif self.kind == CATEGORICAL:
            if not self.choices:
                raise ValueError(f"parameter {self.name}: empty categorical domain")
        else:
            raise ValueError(f"parameter {self.name}: unknown kind {self.kind!r}")
        if not self.contains(self.default):
            raise ValueError(f"parameter {self.name}: default {self.default!r} outside domain")

    def contains(self, value: Any) -> bool:
        if self.kind == REAL:
            return isinstance(value, (int, float)) and not isinstance(value, bool) \
                and self.lower <= float(value) <= self.upper
        if self.kind == INTEGER:
            return isinstance(value, int) and not isinstance(value, bool) \
                and self.lower <= value <= self.upper
        return value in self.choices


def real_param(name: str, lower: float, upper: float, default: float) -> Parameter:
    return Parameter(name, REAL, lower=float(lower), upper=float(upper), default=float(default))


def integer_param(name: str, lower: int, upper: int, default: int) -> Parameter:
    return Parameter(name, INTEGER, lower=lower, upper=upper, default=default)


def categorical_param(name: str, choices: Iterable[Any], default: Any) -> Parameter:
    return Parameter(name, CATEGORICAL, choices=tuple(choices), default=default)


@dataclass(frozen=True)
class ParameterSpace:
    space_id: str
    parameters: tuple[Parameter, ...]

    def __post_init__(self) -> None:
        names = [p.name for p in self.parameters]
        if len(set(names)) != len(names):
            raise ValueError(f"space {self.space_id}: duplicate parameter names")

    def __iter__(self) -> Iterator[Parameter]:
        return iter(self.parameters)

    def __getitem__(self, name: str) -> Parameter:
        for p in self.parameters:
            if p.name == name:
                return p
        raise KeyError(name)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(p.name for p in self.parameters)

    def default_configuration(self) -> "Configuration":
        return Configuration(self.space_id, {p.name: p.default for p in self.parameters})

    def validate_values(self, values: dict[str, Any]) -> None:
        missing = set(self.names) - set(values)
        extra = set(values) - set(self.names)
        if missing or extra:
            raise ValueError(
                f"space {self.space_id}: assignment must be total "
                f"(missing={sorted(missing)}, extra={sorted(extra)})"
            )
        for p in self.parameters:
            if not p.contains(values[p.name]):
                raise ValueError(
                    f"space {self.space_id}: value {values[p.name]!r} outside domain of {p.name}"
                )


@dataclass(frozen=True)
class Configuration:
    """A total assignment of one parameter space; identified with the solver
    it instantiates."""

    space_id: str
    values: dict[str, Any]

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", dict(self.values))

    @property
    def fingerprint(self) -> str:
        return fingerprint({"space": self.space_id, "values": self.values})

    def __getitem__(self, name: str) -> Any:
        return self.values[name]

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Configuration) and self.fingerprint == other.fingerprint

    def __hash__(self) -> int:
        return hash(self.fingerprint)

    def to_dict(self) -> dict[str, Any]:
        return {"space": self.space_id, "values": dict(self.values)}

    @classmethod
    def from_dict(cls, doc: dict[str, Any]) -> "Configuration":
        return cls(doc["space"], doc["values"])


@dataclass(frozen=True)
class Portfolio:
    """An ordered set of distinct configurations run side by side.

    Its score on an instance is the best member score (see
    :func:`portfolio_score`).
    """

    members: tuple[Configuration, ...]
    max_size: int = 4

    def __post_init__(self) -> None:
        object.__setattr__(self, "members", tuple(self.members))
        fps = [m.fingerprint for m in self.members]
        if len(set(fps)) != len(fps):
            raise ValueError("portfolio members must have pairwise distinct fingerprints")
        if not 1 <= len(self.members) <= self.max_size:
            raise ValueError(f"portfolio size {len(self.members)} outside [1, {self.max_size}]")

    def __len__(self) -> int:
        return len(self.members)

    def __iter__(self) -> Iterator[Configuration]:
        return iter(self.members)

    @property
    def fingerprints(self) -> tuple[str, ...]:
        return tuple(m.fingerprint for m in self.members)

    def to_dict(self) -> dict[str, Any]:
        return {"members": [m.to_dict() for m in self.members]}

    @classmethod
    def from_dict(cls, doc: dict[str, Any], max_size: int | None = None) -> "Portfolio":
        members = tuple(Configuration.from_dict(m) for m in doc["members"])
        return cls(members, max_size=max_size if max_size is not None else max(4, len(members)))


# ---------------------------------------------------------------------------
# run outcomes
# ---------------------------------------------------------------------------

SUCCESS = "success"
TIMEOUT = "timeout"
INFEASIBLE = "infeasible"


@dataclass(frozen=True)
class RunOutcome:
    """One seeded solver execution.

    status    success / timeout / infeasible
    elapsed   seconds on the run's clock (virtual work-unit time by default)
    quality   tour length or solution cost; absent on timeout/infeasible
    """

    status: str
    elapsed: float
    seed: int
    cutoff: float
    quality: float | None = None

    def __post_init__(self) -> None:
        if self.status not in (SUCCESS, TIMEOUT, INFEASIBLE):
            raise ValueError(f"unknown status {self.status!r}")
        if self.elapsed < 0:
            raise ValueError("elapsed must be >= 0")
        if self.status == SUCCESS:
            if self.quality is None:
                raise ValueError("successful run must carry a quality")
            if self.elapsed > self.cutoff:
                raise ValueError("successful run cannot exceed its cutoff")
        if self.status == TIMEOUT and self.elapsed != self.cutoff:
            raise ValueError("timeout must record elapsed == cutoff")

    def to_dict(self) -> dict[str, Any]:
        doc: dict[str, Any] = {
            "status": self.status,
            "elapsed": self.elapsed,
            "seed": self.seed,
            "cutoff": self.cutoff,
        }
        if self.quality is not None:
            doc["quality"] = self.quality
        return doc

    @classmethod
    def from_dict(cls, doc: dict[str, Any]) -> "RunOutcome":
        return cls(
            status=doc["status"],
            elapsed=doc["elapsed"],
            seed=doc["seed"],
            cutoff=doc["cutoff"],
            quality=doc.get("quality"),
        )


# ---------------------------------------------------------------------------
# run cache
# ---------------------------------------------------------------------------

CacheKey = tuple[str, str, int]  # (configuration fp, instance fp, seed)


class CacheConflictError(RuntimeError):
    """Same (configuration, instance, seed) key, different outcome: a
    determinism violation somewhere upstream."""


class RunCache:
    """Persistent memo of all solver measurements, keyed by
    (configuration fingerprint, instance fingerprint, seed).

    Duplicate inserts with identical outcomes are no-ops; conflicting
    outcomes raise :class:`CacheConflictError`. Persists as an append-only
    JSONL record file.
    """

    def __init__(self) -> None:
        self._entries: dict[CacheKey, RunOutcome] = {}
        self._lock = threading.Lock()

    def __len__(self) -> int:
        return len(self._entries)

    def __contains__(self, key: CacheKey) -> bool:
        return key in self._entries

    def get(self, key: CacheKey) -> RunOutcome | None:
        return self._entries.get(key)

    def insert(self, key: CacheKey, outcome: RunOutcome) -> None:
        with self._lock:
            existing = self._entries.get(key)
            if existing is None:
                self._entries[key] = outcome
            elif existing != outcome:
                raise CacheConflictError(
                    f"cache key {key} already holds {existing}, refusing {outcome}"
                )

    def items(self) -> list[tuple[CacheKey, RunOutcome]]:
        return list(self._entries.items())

    # -- persistence --------------------------------------------------------

    def save(self, path: str | Path) -> None:
        with open(path, "w") as fh:
            for (config_fp, instance_fp, seed), outcome in self._entries.items():
                record = {
                    "config": config_fp,
                    "instance": instance_fp,
                    "seed": seed,
                    "outcome": outcome.to_dict(),
                }
                fh.write(json.dumps(record, sort_keys=True) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "RunCache":
        cache = cls()
        with open(path) as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                record = json.loads(line)
                key = (record["config"], record["instance"], record["seed"])
                outcome = RunOutcome.from_dict(record["outcome"])
                try:
                    cache.insert(key, outcome)
                except CacheConflictError as err:
                    raise CacheConflictError(f"{path}:{lineno}: {err}") from None
        return cache


# ---------------------------------------------------------------------------
# performance aggregation
# ---------------------------------------------------------------------------

def portfolio_score(instance_scores: list[float]) -> float:
    """Portfolio performance on one instance: the best (minimum) member score."""
    if not instance_scores:
        raise ValueError("portfolio_score needs at least one member score")
    return min(instance_scores)


def set_score(per_instance_scores: list[float]) -> float:
    """Performance on an instance set: arithmetic mean of per-instance scores."""
    if not per_instance_scores:
        raise ValueError("set_score needs at least one instance score")
    return fmean(per_instance_scores)


# ---------------------------------------------------------------------------
# enumerable toy universes (used by the generalization-bound checks)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ToyUniverse:
    """A fully enumerable universe: a precomputed |configs| x |instances|
    score matrix standing in for f(s, θ)."""

    matrix: tuple[tuple[float, ...], ...]  # matrix[c][s]

    @property
    def n_configs(self) -> int:
        return len(self.matrix)

    @property
    def n_instances(self) -> int:
        return len(self.matrix[0])

    def score(self, config_idx: int, instance_idx: int) -> float:
        return self.matrix[config_idx][instance_idx]

    def pap_score(self, config_idxs: Iterable[int], instance_idx: int) -> float:
        return portfolio_score([self.matrix[c][instance_idx] for c in config_idxs])

    def universe_total(self, config_idxs: Iterable[int]) -> float:
        """Generalization objective J: the unnormalized total of the
        portfolio's score over the whole universe."""
        idxs = list(config_idxs)
        return sum(self.pap_score(idxs, s) for s in range(self.n_instances))


def improvement_upper_bound(
    universe: ToyUniverse,
    theta: Iterable[int],
    theta_prime: Iterable[int],
    pooled_instances: Iterable[int],
) -> tuple[float, float]:
    """Return (J(Θ') − J(Θ), Σ_{s in T∪T'} [f(s,Θ') − f(s,Θ)]).

    When Θ ⊆ Θ', the first component never exceeds the second.
    """
    theta = list(theta)
    theta_prime = list(theta_prime)
    gap = universe.universe_total(theta_prime) - universe.universe_total(theta)
    bound = sum(
        universe.pap_score(theta_prime, s) - universe.pap_score(theta, s)
        for s in set(pooled_instances)
    )
    return gap, bound
