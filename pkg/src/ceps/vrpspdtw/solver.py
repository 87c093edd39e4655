"""Baseline parameterized VRPSPDTW solver: ruin-and-recreate over insertion
heuristics, with optional relocate / swap / tail-exchange local search.

Runs on the same deterministic work-unit clock as the TSP solver (one unit
per candidate insertion or move evaluation). The run keeps the best feasible
solution seen; success is only ever reported for solutions that pass the
feasibility checker.
"""

from __future__ import annotations

import numpy as np

from ceps.clock import OutOfBudget, WorkClock
from ceps.core import (
    INFEASIBLE,
    SUCCESS,
    Configuration,
    ParameterSpace,
    RunOutcome,
    categorical_param,
    integer_param,
    real_param,
)
from ceps.vrpspdtw.evaluate import VrpSolution, evaluate_solution, schedule_route
from ceps.vrpspdtw.instance import VrpInstance

WORK_UNITS_PER_SECOND = 20_000.0

VRP_SPACE = ParameterSpace(
    "vrp_ruin_recreate",
    (
        categorical_param("insertion_criterion", ("cheapest", "regret2", "regret3"),
                          "cheapest"),
        real_param("distance_weight", 0.0, 1.0, 0.8),
        real_param("ruin_fraction", 0.05, 0.3, 0.15),
        categorical_param("relocate", (False, True), True),
        categorical_param("swap", (False, True), True),
        categorical_param("two_opt_star", (False, True), False),
        integer_param("restart_patience", 5, 200, 50),
    ),
)


class _RouteEval:
    """Feasibility and cost summary of one candidate route."""

    __slots__ = ("feasible", "distance", "return_time")

    def __init__(self, feasible: bool, distance: float, return_time: float):
        self.feasible = feasible
        self.distance = distance
        self.return_time = return_time


def _eval_route(instance: VrpInstance, route: list[int], clock: WorkClock) -> _RouteEval:
    """Lean route simulation used inside the search loop (one work unit)."""
    clock.charge(1)
    depot = instance.depot
    fleet = instance.fleet
    customers = instance.customers
    load = 0.0
    for v in route:
        load += customers[v - 1].delivery
    if load > fleet.capacity:
        return _RouteEval(False, 0.0, 0.0)
    time = depot.a
    prev = 0
    distance = 0.0
    for v in route:
        c = customers[v - 1]
        leg = instance.distance(prev, v)
        distance += leg
        arr = time + leg
        if arr > c.b:
            return _RouteEval(False, 0.0, 0.0)
        time = max(arr, c.a) + c.service
        load += c.pickup - c.delivery
        if load > fleet.capacity:
            return _RouteEval(False, 0.0, 0.0)
        prev = v
    leg = instance.distance(prev, 0)
    distance += leg
    time += leg
    if time > depot.b:
        return _RouteEval(False, 0.0, 0.0)
    return _RouteEval(True, distance, time)


def _solution_cost(instance: VrpInstance, routes: list[list[int]], clock: WorkClock) -> float:
    fleet = instance.fleet
    total = 0.0
    for route in routes:
        ev = _eval_route(instance, route, clock)
        total += fleet.dispatch_cost + ev.distance * fleet.unit_cost
    return total


class _Search:
    def __init__(self, instance: VrpInstance, values: dict, seed: int, clock: WorkClock):
        self.inst = instance
        self.values = values
        self.rng = np.random.default_rng(seed)
        self.clock = clock
        self.routes: list[list[int]] = []
        self.unassigned: list[int] = list(range(1, instance.n + 1))
        self.best_routes: list[list[int]] | None = None
        self.best_cost = float("inf")
        self.best_at = 0.0

    # -- insertion ----------------------------------------------------------

    def _insertion_cost(self, route: list[int], position: int, customer: int,
                        base: _RouteEval | None) -> float | None:
        """Blended insertion cost, or None when infeasible."""
        candidate = route[:position] + [customer] + route[position:]
        ev = _eval_route(self.inst, candidate, self.clock)
        if not ev.feasible:
            return None
        fleet = self.inst.fleet
        if base is None:  # opening a new route
            delta_dist = ev.distance
            delta_time = ev.return_time - self.inst.depot.a
            open_cost = fleet.dispatch_cost
        else:
            delta_dist = ev.distance - base.distance
            delta_time = ev.return_time - base.return_time
            open_cost = 0.0
        w = self.values["distance_weight"]
        return w * (delta_dist * fleet.unit_cost + open_cost) + (1.0 - w) * delta_time

    def _best_position(self, customer: int) -> tuple[float, int, int] | None:
        """Best feasible (cost, route index, position); route index == len(routes)
        means opening a new route."""
        best: tuple[float, int, int] | None = None
        for ri, route in enumerate(self.routes):
            base = _eval_route(self.inst, route, self.clock)
            for pos in range(len(route) + 1):
                cost = self._insertion_cost(route, pos, customer, base)
                if cost is not None and (best is None or cost < best[0]):
                    best = (cost, ri, pos)
        if len(self.routes) < self.inst.fleet.vehicles:
            cost = self._insertion_cost([], 0, customer, None)
            if cost is not None and (best is None or cost < best[0]):
                best = (cost, len(self.routes), 0)
        return best

    def _route_options(self, customer: int) -> list[tuple[float, int, int]]:
        """Best feasible insertion per route (for regret ranking)."""
        options = []
        for ri, route in enumerate(self.routes):
            base = _eval_route(self.inst, route, self.clock)
            best_here: tuple[float, int, int] | None = None
            for pos in range(len(route) + 1):
                cost = self._insertion_cost(route, pos, customer, base)
                if cost is not None and (best_here is None or cost < best_here[0]):
                    best_here = (cost, ri, pos)
            if best_here is not None:
                options.append(best_here)
        if len(self.routes) < self.inst.fleet.vehicles:
            cost = self._insertion_cost([], 0, customer, None)
            if cost is not None:
                options.append((cost, len(self.routes), 0))
        return sorted(options)

    def _apply_insertion(self, customer: int, ri: int, pos: int) -> None:
        if ri == len(self.routes):
            self.routes.append([customer])
        else:
            self.routes[ri].insert(pos, customer)
        self.unassigned.remove(customer)

    def recreate(self) -> None:
        criterion = self.values["insertion_criterion"]
        regret_k = {"cheapest": 1, "regret2": 2, "regret3": 3}[criterion]
        while self.unassigned:
            best_pick: tuple[float, int, int, int] | None = None  # (key, cust, ri, pos)
            for customer in self.unassigned:
                if regret_k == 1:
                    found = self._best_position(customer)
                    if found is None:
                        continue
                    cost, ri, pos = found
                    # cheapest insertion: minimize cost (key is negated for
                    # the shared max-key selection below)
                    key = -cost
                else:
                    options = self._route_options(customer)
                    if not options:
                        continue
                    cost, ri, pos = options[0]
                    regret = sum(options[i][0] - options[0][0]
                                 for i in range(1, min(regret_k, len(options))))
                    key = regret
                if best_pick is None or key > best_pick[0] or \
                        (key == best_pick[0] and customer < best_pick[1]):
                    best_pick = (key, customer, ri, pos)
            if best_pick is None:
                return  # nothing insertable; leave the rest unassigned
            _, customer, ri, pos = best_pick
            self._apply_insertion(customer, ri, pos)

    # -- ruin ----------------------------------------------------------------

    def ruin(self) -> None:
        served = [v for route in self.routes for v in route]
        if not served:
            return
        k = max(1, round(self.values["ruin_fraction"] * self.inst.n))
        k = min(k, len(served))
        removed = {int(v) for v in self.rng.choice(served, size=k, replace=False)}
        self.clock.charge(k)
        self.routes = [[v for v in route if v not in removed] for route in self.routes]
        self.routes = [r for r in self.routes if r]
        self.unassigned.extend(sorted(removed))

    # -- local search ---------------------------------------------------------

    def _try_relocate(self) -> bool:
        fleet = self.inst.fleet
        for ri, route in enumerate(self.routes):
            base_r = _eval_route(self.inst, route, self.clock)
            for i, customer in enumerate(route):
                shrunk = route[:i] + route[i + 1:]
                ev_shrunk = _eval_route(self.inst, shrunk, self.clock) if shrunk else None
                gain = base_r.distance - (ev_shrunk.distance if shrunk else 0.0)
                if shrunk and not ev_shrunk.feasible:
                    continue
                for rj, other in enumerate(self.routes):
                    if rj == ri:
                        continue
                    base_o = _eval_route(self.inst, other, self.clock)
                    for pos in range(len(other) + 1):
                        cand = other[:pos] + [customer] + other[pos:]
                        ev = _eval_route(self.inst, cand, self.clock)
                        if not ev.feasible:
                            continue
                        delta = (ev.distance - base_o.distance - gain) * fleet.unit_cost
                        if not shrunk:
                            delta -= fleet.dispatch_cost  # route disappears
                        if delta < -1e-9:
                            self.routes[rj] = cand
                            if shrunk:
                                self.routes[ri] = shrunk
                            else:
                                del self.routes[ri]
                            return True
        return False

    def _try_swap(self) -> bool:
        fleet = self.inst.fleet
        n_routes = len(self.routes)
        for ri in range(n_routes):
            for rj in range(ri + 1, n_routes):
                r1, r2 = self.routes[ri], self.routes[rj]
                base = _eval_route(self.inst, r1, self.clock).distance + \
                    _eval_route(self.inst, r2, self.clock).distance
                for i in range(len(r1)):
                    for j in range(len(r2)):
                        c1 = r1[:i] + [r2[j]] + r1[i + 1:]
                        c2 = r2[:j] + [r1[i]] + r2[j + 1:]
                        e1 = _eval_route(self.inst, c1, self.clock)
                        if not e1.feasible:
                            continue
                        e2 = _eval_route(self.inst, c2, self.clock)
                        if not e2.feasible:
                            continue
                        delta = (e1.distance + e2.distance - base) * fleet.unit_cost
                        if delta < -1e-9:
                            self.routes[ri], self.routes[rj] = c1, c2
                            return True
        return False

    def _try_two_opt_star(self) -> bool:
        fleet = self.inst.fleet
        n_routes = len(self.routes)
        for ri in range(n_routes):
            for rj in range(ri + 1, n_routes):
                r1, r2 = self.routes[ri], self.routes[rj]
                base = _eval_route(self.inst, r1, self.clock).distance + \
                    _eval_route(self.inst, r2, self.clock).distance
                for i in range(len(r1) + 1):
                    for j in range(len(r2) + 1):
                        if i == 0 and j == 0:
                            continue
                        c1 = r1[:i] + r2[j:]
                        c2 = r2[:j] + r1[i:]
                        if not c1 and not c2:
                            continue
                        e1 = _eval_route(self.inst, c1, self.clock) if c1 else None
                        if e1 is not None and not e1.feasible:
                            continue
                        e2 = _eval_route(self.inst, c2, self.clock) if c2 else None
                        if e2 is not None and not e2.feasible:
                            continue
                        new_dist = (e1.distance if e1 else 0.0) + (e2.distance if e2 else 0.0)
                        delta = (new_dist - base) * fleet.unit_cost
                        delta -= fleet.dispatch_cost * ((not c1) + (not c2))
                        if delta < -1e-9:
                            new_routes = []
                            for k, r in enumerate(self.routes):
                                if k == ri:
                                    r = c1
                                elif k == rj:
                                    r = c2
                                if r:
                                    new_routes.append(r)
                            self.routes = new_routes
                            return True
        return False

    def local_search(self) -> None:
        moves = []
        if self.values["relocate"]:
            moves.append(self._try_relocate)
        if self.values["swap"]:
            moves.append(self._try_swap)
        if self.values["two_opt_star"]:
            moves.append(self._try_two_opt_star)
        improved = True
        while improved and moves:
            improved = any(move() for move in moves)

    # -- main loop -------------------------------------------------------------

    def _consider_best(self) -> bool:
        if self.unassigned:
            return False
        cost = _solution_cost(self.inst, self.routes, self.clock)
        if cost < self.best_cost:
            self.best_cost = cost
            self.best_routes = [list(r) for r in self.routes]
            self.best_at = self.clock.seconds()
            return True
        return False

    def restart(self) -> None:
        self.routes = []
        self.unassigned = list(range(1, self.inst.n + 1))
        self.rng.shuffle(self.unassigned)
        self.unassigned = [int(v) for v in self.unassigned]
        self.recreate()
        self.local_search()
        self._consider_best()

    def run(self) -> None:
        self.restart()
        stall = 0
        while True:
            snapshot = ([list(r) for r in self.routes], list(self.unassigned))
            snapshot_cost = _solution_cost(self.inst, self.routes, self.clock) \
                if not self.unassigned else float("inf")
            self.ruin()
            self.recreate()
            self.local_search()
            if self._consider_best():
                stall = 0
            else:
                stall += 1
            # keep the move when it serves everyone at no higher cost
            if self.unassigned or (
                snapshot_cost < float("inf")
                and _solution_cost(self.inst, self.routes, self.clock) > snapshot_cost
            ):
                self.routes, self.unassigned = snapshot
            if stall >= self.values["restart_patience"]:
                self.restart()
                stall = 0


def baseline_search(instance: VrpInstance, config: Configuration, seed: int,
                    cutoff: float, wall_clock: bool = False
                    ) -> tuple[RunOutcome, VrpSolution | None]:
    """Run the configured search; returns the outcome plus the best feasible
    solution when one was found."""
    if cutoff <= 0:
        raise ValueError("cutoff must be positive")
    if config.space_id != VRP_SPACE.space_id:
        raise ValueError(f"configuration is for space {config.space_id!r}, "
                         f"expected {VRP_SPACE.space_id!r}")
    VRP_SPACE.validate_values(config.values)

    clock = WorkClock(cutoff, WORK_UNITS_PER_SECOND, wall_clock=wall_clock)
    search = _Search(instance, config.values, seed, clock)
    try:
        search.run()
    except OutOfBudget:
        pass
    if search.best_routes is None:
        return RunOutcome(INFEASIBLE, elapsed=cutoff, seed=seed, cutoff=cutoff), None
    solution = VrpSolution(tuple(tuple(r) for r in search.best_routes))
    cost, violations = evaluate_solution(instance, solution)
    if violations:  # checker gate: never report success with a violating solution
        return RunOutcome(INFEASIBLE, elapsed=cutoff, seed=seed, cutoff=cutoff), None
    outcome = RunOutcome(SUCCESS, elapsed=search.best_at, seed=seed, cutoff=cutoff,
                         quality=cost)
    return outcome, solution


def baseline_solve(instance: VrpInstance, config: Configuration, seed: int,
                   cutoff: float, wall_clock: bool = False) -> RunOutcome:
    outcome, _ = baseline_search(instance, config, seed, cutoff, wall_clock=wall_clock)
    return outcome
