"""VRPSPDTW data model and serialization.

An instance is a depot with an operating horizon, a homogeneous fleet, and
customers that each carry a delivery demand, a pickup demand, a hard time
window and a service time. Travel distances are real-valued Euclidean and
travel time equals distance (unit speed).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from ceps.core import fingerprint


@dataclass(frozen=True)
class Depot:
    x: float
    y: float
    a: float  # earliest departure
    b: float  # latest return

    def __post_init__(self) -> None:
        if self.a > self.b:
            raise ValueError("depot horizon needs a <= b")


@dataclass(frozen=True)
class Customer:
    x: float
    y: float
    delivery: float
    pickup: float
    a: float
    b: float
    service: float

    def __post_init__(self) -> None:
        if self.delivery < 0 or self.pickup < 0:
            raise ValueError("demands must be non-negative")
        if self.service < 0:
            raise ValueError("service time must be non-negative")
        if self.a > self.b:
            raise ValueError("time window needs a <= b")


@dataclass(frozen=True)
class Fleet:
    vehicles: int  # J
    capacity: float  # Q
    dispatch_cost: float  # c_d
    unit_cost: float  # u

    def __post_init__(self) -> None:
        if self.vehicles < 1:
            raise ValueError("need at least one vehicle")
        if self.capacity <= 0:
            raise ValueError("capacity must be positive")
        if self.dispatch_cost < 0 or self.unit_cost < 0:
            raise ValueError("costs must be non-negative")


@dataclass(frozen=True)
class VrpInstance:
    depot: Depot
    customers: tuple[Customer, ...]
    fleet: Fleet
    name: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "customers", tuple(self.customers))
        if len(self.customers) < 1:
            raise ValueError("an instance needs at least one customer")

    @property
    def n(self) -> int:
        return len(self.customers)

    @property
    def fingerprint(self) -> str:
        return fingerprint(self.to_dict(include_name=False))

    def node_xy(self, index: int) -> tuple[float, float]:
        """Node 0 is the depot; customers are 1..N."""
        if index == 0:
            return self.depot.x, self.depot.y
        c = self.customers[index - 1]
        return c.x, c.y

    def distance(self, i: int, j: int) -> float:
        (xi, yi), (xj, yj) = self.node_xy(i), self.node_xy(j)
        return math.hypot(xi - xj, yi - yj)

    def mean_pairwise_distance(self) -> float:
        """Average Euclidean distance over all unordered customer pairs."""
        n = self.n
        if n < 2:
            raise ValueError("mean pairwise distance needs at least 2 customers")
        total = 0.0
        for i in range(n):
            xi, yi = self.customers[i].x, self.customers[i].y
            for j in range(i + 1, n):
                total += math.hypot(xi - self.customers[j].x, yi - self.customers[j].y)
        return total / (n * (n - 1) / 2)

    def with_name(self, name: str) -> "VrpInstance":
        return replace(self, name=name)

    # -- serialization ------------------------------------------------------

    def to_dict(self, include_name: bool = True) -> dict:
        doc = {
            "depot": {"x": self.depot.x, "y": self.depot.y,
                      "a": self.depot.a, "b": self.depot.b},
            "fleet": {"J": self.fleet.vehicles, "Q": self.fleet.capacity,
                      "dispatch_cost": self.fleet.dispatch_cost,
                      "unit_cost": self.fleet.unit_cost},
            "customers": [
                {"x": c.x, "y": c.y, "delivery": c.delivery, "pickup": c.pickup,
                 "a": c.a, "b": c.b, "service": c.service}
                for c in self.customers
            ],
        }
        if include_name:
            doc["name"] = self.name
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "VrpInstance":
        depot = Depot(**doc["depot"])
        fleet = Fleet(vehicles=doc["fleet"]["J"], capacity=doc["fleet"]["Q"],
                      dispatch_cost=doc["fleet"]["dispatch_cost"],
                      unit_cost=doc["fleet"]["unit_cost"])
        customers = tuple(Customer(**c) for c in doc["customers"])
        return cls(depot=depot, customers=customers, fleet=fleet,
                   name=doc.get("name", ""))


def write_vrp(instance: VrpInstance, path: str | Path) -> None:
    Path(path).write_text(json.dumps(instance.to_dict(), sort_keys=True, indent=2) + "\n")


def read_vrp(path: str | Path) -> VrpInstance:
    return VrpInstance.from_dict(json.loads(Path(path).read_text()))


def load_instance_dir(directory: str | Path) -> list[VrpInstance]:
    return [read_vrp(p) for p in sorted(Path(directory).glob("*.json"))]


# ---------------------------------------------------------------------------
# synthetic instances: a pooled customer population, sampled per instance
# ---------------------------------------------------------------------------

def synthetic_pool(pool_size: int, seed: int, *, horizon: float = 1000.0,
                   area: float = 100.0) -> tuple[Depot, list[Customer]]:
    """A depot plus a pooled population of customers with plausible windows
    and demands; instances draw a subset of this pool."""
    rng = np.random.default_rng(seed)
    depot = Depot(x=area / 2, y=area / 2, a=0.0, b=horizon)
    pool = []
    for _ in range(pool_size):
        x = float(rng.uniform(0, area))
        y = float(rng.uniform(0, area))
        delivery = float(rng.uniform(1, 10))
        pickup = float(rng.uniform(0, 8))
        width = float(rng.uniform(0.2, 0.6)) * horizon
        start = float(rng.uniform(0, horizon - width))
        service = float(rng.uniform(2, 10))
        pool.append(Customer(x=x, y=y, delivery=delivery, pickup=pickup,
                             a=start, b=start + width, service=service))
    return depot, pool


def sample_instance(depot: Depot, pool: list[Customer], n_customers: int,
                    fleet: Fleet, seed: int, name: str = "") -> VrpInstance:
    """Draw n customers from the pool without replacement (the daily-subset
    picture: fixed depot and fleet, varying customer selection)."""
    if n_customers > len(pool):
        raise ValueError("pool too small for the requested customer count")
    rng = np.random.default_rng(seed)
    picks = sorted(int(i) for i in rng.choice(len(pool), size=n_customers, replace=False))
    return VrpInstance(depot=depot, customers=tuple(pool[i] for i in picks),
                       fleet=fleet, name=name or f"vrp-n{n_customers}-s{seed}")
