"""TSP instance model with the classic EUC_2D metric (nearest-integer
Euclidean distances, half away from zero) and TSPLIB-subset file I/O."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable

from ceps.core import fingerprint

EXACT = "exact"
CONSENSUS = "consensus"


def nint(x: float) -> int:
    """Round half away from zero (the EUC_2D convention)."""
    return int(math.floor(x + 0.5)) if x >= 0 else -int(math.floor(-x + 0.5))


def euc_2d(a: tuple[float, float], b: tuple[float, float]) -> int:
    return nint(math.hypot(a[0] - b[0], a[1] - b[1]))


@dataclass(frozen=True)
class TspInstance:
    """City coordinates plus an optional certified optimal tour length.

    The reference optimum is what makes "solved" a well-defined integer
    equality test; `optimum_provenance` records whether it came from the
    exact oracle or the consensus protocol.
    """

    cities: tuple[tuple[float, float], ...]
    name: str = ""
    reference_optimum: int | None = None
    optimum_provenance: str | None = None

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "cities", tuple((float(x), float(y)) for x, y in self.cities)
        )
        if len(self.cities) < 3:
            raise ValueError("a TSP instance needs at least 3 cities")
        for x, y in self.cities:
            if not (math.isfinite(x) and math.isfinite(y)):
                raise ValueError("city coordinates must be finite")

    @property
    def n(self) -> int:
        return len(self.cities)

    @property
    def fingerprint(self) -> str:
        # identity is the geometry; name and annotations do not enter
        return fingerprint([list(c) for c in self.cities])

    def distance(self, i: int, j: int) -> int:
        return euc_2d(self.cities[i], self.cities[j])

    def distance_matrix(self) -> list[list[int]]:
        n = self.n
        dist = [[0] * n for _ in range(n)]
        for i in range(n):
            for j in range(i + 1, n):
                d = self.distance(i, j)
                dist[i][j] = dist[j][i] = d
        return dist

    def with_optimum(self, value: int, provenance: str) -> "TspInstance":
        if provenance not in (EXACT, CONSENSUS):
            raise ValueError(f"unknown optimum provenance {provenance!r}")
        return replace(self, reference_optimum=int(value), optimum_provenance=provenance)

    def without_optimum(self) -> "TspInstance":
        return replace(self, reference_optimum=None, optimum_provenance=None)


@dataclass(frozen=True)
class Tour:
    order: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "order", tuple(int(v) for v in self.order))

    def validate(self, n: int) -> None:
        if sorted(self.order) != list(range(n)):
            raise ValueError(f"tour is not a permutation of 0..{n - 1}")


def tour_length(instance: TspInstance, tour: Tour) -> int:
    """Cyclically closed tour length under EUC_2D."""
    tour.validate(instance.n)
    order = tour.order
    total = 0
    for i, a in enumerate(order):
        b = order[(i + 1) % len(order)]
        total += instance.distance(a, b)
    return total


# ---------------------------------------------------------------------------
# TSPLIB subset I/O
# ---------------------------------------------------------------------------

def write_tsplib(instance: TspInstance, path: str | Path) -> None:
    lines = [
        f"NAME: {instance.name or Path(path).stem}",
        "TYPE: TSP",
        f"DIMENSION: {instance.n}",
        "EDGE_WEIGHT_TYPE: EUC_2D",
        "NODE_COORD_SECTION",
    ]
    for i, (x, y) in enumerate(instance.cities, start=1):
        lines.append(f"{i} {x!r} {y!r}")
    lines.append("EOF")
    Path(path).write_text("\n".join(lines) + "\n")


def read_tsplib(path: str | Path) -> TspInstance:
    name = ""
    dimension = None
    coords: dict[int, tuple[float, float]] = {}
    in_coords = False
    for raw in Path(path).read_text().splitlines():
        line = raw.strip()
        if not line or line == "EOF":
            continue
        if in_coords:
            parts = line.split()
            idx = int(parts[0])
            coords[idx] = (float(parts[1]), float(parts[2]))
            continue
        key, _, value = line.partition(":")
        key = key.strip().upper()
        value = value.strip()
        if key == "NAME":
            name = value
        elif key == "TYPE":
            if value.split()[0] != "TSP":
                raise ValueError(f"{path}: TYPE must be TSP, got {value!r}")
        elif key == "DIMENSION":
            dimension = int(value)
        elif key == "EDGE_WEIGHT_TYPE":
            if value != "EUC_2D":
                raise ValueError(f"{path}: only EUC_2D is supported, got {value!r}")
        elif key == "NODE_COORD_SECTION":
            in_coords = True
    if dimension is None or len(coords) != dimension:
        raise ValueError(f"{path}: DIMENSION does not match coordinate count")
    cities = tuple(coords[i] for i in range(1, dimension + 1))
    return TspInstance(cities, name=name)


# ---------------------------------------------------------------------------
# reference-optimum sidecar: instance fingerprint -> {value, provenance}
# ---------------------------------------------------------------------------

OPTIMA_FILENAME = "optima.json"


def save_optima(records: dict[str, dict], path: str | Path) -> None:
    Path(path).write_text(json.dumps(records, sort_keys=True, indent=2) + "\n")


def load_optima(path: str | Path) -> dict[str, dict]:
    path = Path(path)
    if not path.exists():
        return {}
    records = json.loads(path.read_text())
    for fp, rec in records.items():
        if rec.get("provenance") not in (EXACT, CONSENSUS):
            raise ValueError(f"{path}: bad provenance for {fp}: {rec!r}")
    return records


def attach_optima(
    instances: Iterable[TspInstance], records: dict[str, dict]
) -> list[TspInstance]:
    out = []
    for inst in instances:
        rec = records.get(inst.fingerprint)
        if rec is not None:
            inst = inst.with_optimum(rec["value"], rec["provenance"])
        out.append(inst)
    return out


def load_instance_dir(directory: str | Path) -> list[TspInstance]:
    """Read every .tsp file in a directory, attaching sidecar optima."""
    directory = Path(directory)
    instances = [read_tsplib(p) for p in sorted(directory.glob("*.tsp"))]
    records = load_optima(directory / OPTIMA_FILENAME)
    return attach_optima(instances, records)
