"""Deterministic run clocks.

Solvers charge work units (one unit per move/insertion evaluation) against a
budget derived from the cutoff; the unit-to-seconds constant is calibrated
per problem so a virtual second is roughly a wall second of pure-Python
evaluation. A wall-clock mode exists for realistic benchmarking; virtual
mode is the default because it makes every run a pure function of its
inputs.
"""

from __future__ import annotations

import time


class OutOfBudget(Exception):
    """Raised by the clock when the run's budget is exhausted."""


class WorkClock:
    def __init__(self, cutoff: float, units_per_second: float, wall_clock: bool = False):
        self.cutoff = cutoff
        self.units_per_second = units_per_second
        self.wall = wall_clock
        self.units = 0
        self._limit_units = int(cutoff * units_per_second)
        self._t0 = time.perf_counter()
        self._pending_check = 0

    def charge(self, units: int = 1) -> None:
        self.units += units
        if self.wall:
            self._pending_check += units
            if self._pending_check >= 1024:
                self._pending_check = 0
                if time.perf_counter() - self._t0 >= self.cutoff:
                    raise OutOfBudget
        elif self.units > self._limit_units:
            raise OutOfBudget

    def seconds(self) -> float:
        if self.wall:
            return min(time.perf_counter() - self._t0, self.cutoff)
        return self.units / self.units_per_second
