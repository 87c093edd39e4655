"""Route scheduling, feasibility checking, the total-cost objective and the
penalized normalized cost score."""

from __future__ import annotations

from dataclasses import dataclass

from ceps.core import SUCCESS, RunOutcome
from ceps.vrpspdtw.instance import VrpInstance

PANC_PENALTY = 2000.0


@dataclass(frozen=True)
class Violation:
    kind: str  # time_window | capacity | late_return | fleet_size | unserved | duplicate
    node: int | None = None


@dataclass(frozen=True)
class VrpSolution:
    """Routes as ordered customer-index sequences; depot endpoints implicit."""

    routes: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "routes", tuple(tuple(int(v) for v in r) for r in self.routes)
        )
        for route in self.routes:
            if not route:
                raise ValueError("routes must not be empty")
            if any(v < 1 for v in route):
                raise ValueError("routes hold customer indices starting at 1")

    def to_dict(self) -> dict:
        return {"routes": [list(r) for r in self.routes]}

    @classmethod
    def from_dict(cls, doc: dict) -> "VrpSolution":
        return cls(tuple(tuple(r) for r in doc["routes"]))


@dataclass(frozen=True)
class RouteSchedule:
    route: tuple[int, ...]
    arrivals: tuple[float, ...]    # per customer, route order
    departures: tuple[float, ...]  # service start is max(arrival, window open)
    return_time: float             # arrival back at the depot
    travel_distance: float
    peak_load: float
    violations: tuple[Violation, ...]

    @property
    def feasible(self) -> bool:
        return not self.violations


def schedule_route(instance: VrpInstance, route: tuple[int, ...] | list[int]) -> RouteSchedule:
    """Simulate one route: depart the depot at its earliest time carrying all
    the route's deliveries, wait when early, load change at customer i is
    +pickup - delivery."""
    route = tuple(int(v) for v in route)
    for v in route:
        if not 1 <= v <= instance.n:
            raise ValueError(f"route references unknown customer {v}")
    depot = instance.depot
    violations: list[Violation] = []

    load = sum(instance.customers[v - 1].delivery for v in route)
    peak_load = load
    capacity_hit = load > instance.fleet.capacity

    time = depot.a
    prev = 0
    distance = 0.0
    arrivals, departures = [], []
    for v in route:
        c = instance.customers[v - 1]
        leg = instance.distance(prev, v)
        distance += leg
        arr = time + leg
        arrivals.append(arr)
        if arr > c.b:
            violations.append(Violation("time_window", v))
        dep = max(arr, c.a) + c.service
        departures.append(dep)
        load += c.pickup - c.delivery
        peak_load = max(peak_load, load)
        capacity_hit = capacity_hit or load > instance.fleet.capacity
        time = dep
        prev = v
    leg = instance.distance(prev, 0)
    distance += leg
    return_time = time + leg
    if return_time > depot.b:
        violations.append(Violation("late_return"))
    if capacity_hit:
        violations.append(Violation("capacity"))

    return RouteSchedule(
        route=route,
        arrivals=tuple(arrivals),
        departures=tuple(departures),
        return_time=return_time,
        travel_distance=distance,
        peak_load=peak_load,
        violations=tuple(violations),
    )


def route_cost(instance: VrpInstance, schedule: RouteSchedule) -> float:
    return instance.fleet.dispatch_cost + schedule.travel_distance * instance.fleet.unit_cost


def evaluate_solution(instance: VrpInstance, solution: VrpSolution
                      ) -> tuple[float, list[Violation]]:
    """Total cost (dispatch plus distance) and the aggregate violation list;
    the solution is feasible iff the list is empty."""
    violations: list[Violation] = []
    if len(solution.routes) > instance.fleet.vehicles:
        violations.append(Violation("fleet_size"))
    counts = [0] * (instance.n + 1)
    for route in solution.routes:
        for v in route:
            if v > instance.n:
                raise ValueError(f"solution references unknown customer {v}")
            counts[v] += 1
    for v in range(1, instance.n + 1):
        if counts[v] == 0:
            violations.append(Violation("unserved", v))
        elif counts[v] > 1:
            violations.append(Violation("duplicate", v))
    cost = 0.0
    for route in solution.routes:
        schedule = schedule_route(instance, route)
        cost += route_cost(instance, schedule)
        violations.extend(schedule.violations)
    return cost, violations


def panc(instance: VrpInstance, outcome: RunOutcome) -> float:
    """Penalized normalized cost: solution cost divided by the mean pairwise
    customer distance on success, a flat penalty otherwise."""
    mean_distance = instance.mean_pairwise_distance()
    if outcome.status == SUCCESS:
        return outcome.quality / mean_distance
    return PANC_PENALTY
