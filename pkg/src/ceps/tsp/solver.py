"""Built-in parameterized TSP solver: iterated local search over 2-opt and
Or-opt moves restricted to nearest-neighbor candidate lists.

Elapsed time is measured on a deterministic virtual clock that counts move
evaluations and maps them to seconds by a calibrated constant, so a run is a
pure function of (instance, config, seed, cutoff). A wall-clock override
exists for realistic benchmarking.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from statistics import fmean

import numpy as np

from ceps.clock import OutOfBudget, WorkClock
from ceps.core import (
    SUCCESS,
    TIMEOUT,
    Configuration,
    ParameterSpace,
    RunOutcome,
    categorical_param,
    integer_param,
)
from ceps.tsp.instance import CONSENSUS, TspInstance

# One work unit is one candidate-move (or distance) evaluation; the constant
# is calibrated so a virtual second is roughly a wall second of pure-Python
# evaluation on one core.
WORK_UNITS_PER_SECOND = 200_000.0

TSP_SPACE = ParameterSpace(
    "tsp_ils",
    (
        categorical_param("construction", ("nearest_neighbor", "greedy_edge", "random"),
                          "nearest_neighbor"),
        integer_param("candidate_list_size", 5, 20, 10),
        categorical_param("use_or_opt", (False, True), True),
        categorical_param("dont_look_bits", (False, True), True),
        categorical_param("perturbation", ("double_bridge", "segment_shuffle"),
                          "double_bridge"),
        integer_param("perturbation_strength", 1, 10, 1),
        integer_param("restart_patience", 10, 1000, 100),
        categorical_param("acceptance", ("accept_better", "restart_from_best"),
                          "restart_from_best"),
    ),
)

OR_OPT_SEGMENT_LENGTHS = (1, 2, 3)


class _TargetHit(Exception):
    def __init__(self, length: int, seconds: float):
        self.length = length
        self.seconds = seconds


@dataclass
class _Best:
    order: list[int] | None = None
    length: int | None = None


class _SearchState:
    def __init__(self, dist: list[list[int]], cand: list[list[int]], clock: WorkClock,
                 target: int | None):
        self.n = len(dist)
        self.dist = dist
        self.cand = cand
        self.clock = clock
        self.target = target
        self.tour: list[int] = []
        self.pos: list[int] = [0] * self.n
        self.length = 0

    def set_tour(self, order: list[int]) -> None:
        self.clock.charge(self.n)
        self.tour = list(order)
        for i, v in enumerate(self.tour):
            self.pos[v] = i
        dist = self.dist
        n = self.n
        self.length = sum(dist[self.tour[i]][self.tour[(i + 1) % n]] for i in range(n))
        self._check_target()

    def load(self, order: list[int], length: int) -> None:
        self.clock.charge(1)
        self.tour = list(order)
        for i, v in enumerate(self.tour):
            self.pos[v] = i
        self.length = length

    def _check_target(self) -> None:
        if self.target is not None and self.length <= self.target:
            raise _TargetHit(self.length, self.clock.seconds())

    def succ(self, v: int) -> int:
        return self.tour[(self.pos[v] + 1) % self.n]

    def pred(self, v: int) -> int:
        return self.tour[(self.pos[v] - 1) % self.n]

    def _reverse(self, i: int, j: int) -> None:
        # reverse tour positions i..j cyclically; use the shorter arc (the
        # complement reversal yields the same undirected cycle)
        n = self.n
        seg = (j - i) % n + 1
        if seg > n - seg:
            i, j = (j + 1) % n, (i - 1) % n
            seg = n - seg
        self.clock.charge(seg // 2 + 1)
        tour, pos = self.tour, self.pos
        for k in range(seg // 2):
            p, q = (i + k) % n, (j - k) % n
            tour[p], tour[q] = tour[q], tour[p]
            pos[tour[p]] = p
            pos[tour[q]] = q

    def _two_opt_from(self, a: int) -> list[int] | None:
        """First improving 2-opt move removing edge (a, succ(a)); returns the
        nodes whose adjacency changed, or None."""
        dist, clock = self.dist, self.clock
        b = self.succ(a)
        d_ab = dist[a][b]
        da = dist[a]
        for c in self.cand[a]:
            clock.charge(1)
            d_ac = da[c]
            if d_ac >= d_ab:
                break  # candidates are distance-sorted: no gain beyond here
            if c == b:
                continue
            cn = self.succ(c)
            if cn == a:
                continue
            delta = d_ac + dist[b][cn] - d_ab - dist[c][cn]
            if delta < 0:
                self._reverse(self.pos[b], self.pos[c])
                self.length += delta
                self._check_target()
                return [a, b, c, cn]
        return None

    def _or_opt_from(self, a: int) -> list[int] | None:
        """First improving Or-opt move relocating a short segment that starts
        at `a` (both orientations), insertion points from a's candidates."""
        dist, clock, n = self.dist, self.clock, self.n
        for seg_len in OR_OPT_SEGMENT_LENGTHS:
            if seg_len >= n - 2:
                break
            pa = self.pos[a]
            if pa + seg_len > n:
                continue  # skip wrap-around segments
            seg = self.tour[pa:pa + seg_len]
            last = seg[-1]
            p = self.tour[pa - 1]
            q = self.tour[(pa + seg_len) % n]
            gain = dist[p][a] + dist[last][q] - dist[p][q]
            if gain <= 0:
                continue
            in_seg = set(seg)
            for c in self.cand[a]:
                clock.charge(2)
                if c in in_seg or c == p:
                    continue
                cn = self.succ(c)
                if cn in in_seg:
                    continue
                base = dist[c][cn]
                fwd = dist[c][a] + dist[last][cn] - base
                rev = dist[c][last] + dist[a][cn] - base
                cost, flip = (fwd, False) if fwd <= rev else (rev, True)
                if cost < gain:
                    self._splice(pa, seg_len, c, flip)
                    self.length += cost - gain
                    self._check_target()
                    return [p, q, c, cn, a, last]
        return None

    def _splice(self, pa: int, seg_len: int, c: int, flip: bool) -> None:
        seg = self.tour[pa:pa + seg_len]
        if flip:
            seg.reverse()
        rest = self.tour[:pa] + self.tour[pa + seg_len:]
        at = rest.index(c) + 1
        self.tour = rest[:at] + seg + rest[at:]
        for i, v in enumerate(self.tour):
            self.pos[v] = i
        self.clock.charge(seg_len + 2)

    def _improve_from(self, a: int, use_or_opt: bool) -> list[int] | None:
        moved = self._two_opt_from(a)
        if moved is None and use_or_opt:
            moved = self._or_opt_from(a)
        return moved

    def local_search(self, use_or_opt: bool, dlb: bool,
                     touched: list[int] | None = None) -> None:
        n = self.n
        if dlb:
            queue = deque(self.tour if touched is None else touched)
            queued = [False] * n
            for v in queue:
                queued[v] = True
            while queue:
                a = queue.popleft()
                queued[a] = False
                moved = self._improve_from(a, use_or_opt)
                if moved:
                    for v in moved:
                        if not queued[v]:
                            queue.append(v)
                            queued[v] = True
        else:
            improved = True
            while improved:
                improved = False
                for a in range(n):
                    if self._improve_from(a, use_or_opt):
                        improved = True


# ---------------------------------------------------------------------------
# construction heuristics
# ---------------------------------------------------------------------------

def _construct(kind: str, dist: list[list[int]], rng: np.random.Generator,
               clock: WorkClock) -> list[int]:
    n = len(dist)
    if kind == "random":
        clock.charge(n)
        return [int(v) for v in rng.permutation(n)]
    if kind == "nearest_neighbor":
        start = int(rng.integers(n))
        tour = [start]
        unvisited = set(range(n))
        unvisited.remove(start)
        cur = start
        while unvisited:
            clock.charge(len(unvisited))
            drow = dist[cur]
            cur = min(unvisited, key=lambda v: (drow[v], v))
            unvisited.remove(cur)
            tour.append(cur)
        return tour
    if kind == "greedy_edge":
        return _greedy_edge(dist, clock)
    raise ValueError(f"unknown construction {kind!r}")


def _greedy_edge(dist: list[list[int]], clock: WorkClock) -> list[int]:
    n = len(dist)
    edges = sorted(
        ((dist[i][j], i, j) for i in range(n) for j in range(i + 1, n)),
        key=lambda e: e,
    )
    clock.charge(len(edges))
    parent = list(range(n))

    def find(v: int) -> int:
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    degree = [0] * n
    adj: list[list[int]] = [[] for _ in range(n)]
    picked = 0
    for _, i, j in edges:
        clock.charge(1)
        if picked == n - 1:
            break
        if degree[i] >= 2 or degree[j] >= 2:
            continue
        ri, rj = find(i), find(j)
        if ri == rj:
            continue
        parent[ri] = rj
        adj[i].append(j)
        adj[j].append(i)
        degree[i] += 1
        degree[j] += 1
        picked += 1
    # stitch remaining path endpoints into one cycle
    ends = [v for v in range(n) if degree[v] < 2]
    while len(ends) > 2:
        a = ends[0]
        ra = find(a)
        clock.charge(len(ends))
        b = min(
            (v for v in ends[1:] if find(v) != ra),
            key=lambda v: (dist[a][v], v),
        )
        adj[a].append(b)
        adj[b].append(a)
        degree[a] += 1
        degree[b] += 1
        parent[find(a)] = find(b)
        ends = [v for v in range(n) if degree[v] < 2]
    if len(ends) == 2:
        a, b = ends
        adj[a].append(b)
        adj[b].append(a)
    # walk the cycle
    tour = [0]
    prev = -1
    cur = 0
    while len(tour) < n:
        nxt = adj[cur][0] if adj[cur][0] != prev else adj[cur][1]
        tour.append(nxt)
        prev, cur = cur, nxt
    return tour


# ---------------------------------------------------------------------------
# perturbation
# ---------------------------------------------------------------------------

def _perturb(order: list[int], kind: str, strength: int,
             rng: np.random.Generator) -> tuple[list[int], list[int]]:
    """Return (new order, nodes whose adjacency changed)."""
    n = len(order)
    touched: set[int] = set()
    new = list(order)
    if kind == "double_bridge" and n >= 5:
        for _ in range(strength):
            i, j, k = sorted(int(v) for v in rng.choice(np.arange(1, n), 3, replace=False))
            touched.update((new[i - 1], new[i], new[j - 1], new[j], new[k - 1], new[k]))
            new = new[:i] + new[j:k] + new[i:j] + new[k:]
    else:
        length = min(n - 1, strength + 3)
        start = int(rng.integers(0, n - length + 1))
        window = new[start:start + length]
        rng.shuffle(window)
        new[start:start + length] = [int(v) for v in window]
        touched.update(window)
        touched.add(new[start - 1])
        touched.add(new[(start + length) % n])
    return new, sorted(touched)


# ---------------------------------------------------------------------------
# the solver
# ---------------------------------------------------------------------------

def _candidate_lists(dist: list[list[int]], k: int, clock: WorkClock) -> list[list[int]]:
    n = len(dist)
    k = min(k, n - 1)
    clock.charge(n * k)
    cand = []
    for i in range(n):
        drow = dist[i]
        order = sorted((v for v in range(n) if v != i), key=lambda v: (drow[v], v))
        cand.append(order[:k])
    return cand


def ils_best(instance: TspInstance, values: dict, seed: int, cutoff: float,
             target: int | None, wall_clock: bool = False) -> tuple[int | None, float | None]:
    """Run the ILS until the target length is reached or the budget dies.

    Returns (best length found or None if the budget died before any tour
    existed, seconds at which the target was hit or None).
    """
    clock = WorkClock(cutoff, WORK_UNITS_PER_SECOND, wall_clock=wall_clock)
    rng = np.random.default_rng(seed)
    best = _Best()
    try:
        _ils_loop(instance, values, rng, clock, target, best)
    except _TargetHit as hit:
        return hit.length, hit.seconds
    except OutOfBudget:
        return best.length, None
    raise AssertionError("ILS loop cannot fall through")


def _ils_loop(instance: TspInstance, values: dict, rng: np.random.Generator,
              clock: WorkClock, target: int | None, best: _Best) -> None:
    dist = instance.distance_matrix()
    clock.charge(instance.n * (instance.n - 1) // 2)
    cand = _candidate_lists(dist, values["candidate_list_size"], clock)
    st = _SearchState(dist, cand, clock, target)
    use_or_opt = values["use_or_opt"]
    dlb = values["dont_look_bits"]

    def fresh_start() -> None:
        st.set_tour(_construct(values["construction"], dist, rng, clock))
        st.local_search(use_or_opt, dlb)

    fresh_start()
    best.order, best.length = list(st.tour), st.length
    cur, cur_len = list(st.tour), st.length
    stall = 0
    while True:
        if values["acceptance"] == "restart_from_best":
            base, base_len = best.order, best.length
        else:
            base, base_len = cur, cur_len
        perturbed, touched = _perturb(base, values["perturbation"],
                                      values["perturbation_strength"], rng)
        st.set_tour(perturbed)
        st.local_search(use_or_opt, dlb, touched=touched)
        if st.length < cur_len or values["acceptance"] == "restart_from_best":
            cur, cur_len = list(st.tour), st.length
        if st.length < best.length:
            best.order, best.length = list(st.tour), st.length
            stall = 0
        else:
            stall += 1
        if stall >= values["restart_patience"]:
            fresh_start()
            if st.length < best.length:
                best.order, best.length = list(st.tour), st.length
            cur, cur_len = list(st.tour), st.length
            stall = 0


def solve(instance: TspInstance, config: Configuration, seed: int, cutoff: float,
          wall_clock: bool = False) -> RunOutcome:
    """Run the configured solver until the reference optimum is found or the
    cutoff expires. Identical (instance, config, seed, cutoff) gives an
    identical outcome in virtual-clock mode."""
    if instance.reference_optimum is None:
        raise ValueError(
            f"instance {instance.name or instance.fingerprint} has no reference "
            "optimum; success detection needs one (see the oracle subcommand)"
        )
    if cutoff <= 0:
        raise ValueError("cutoff must be positive")
    if config.space_id != TSP_SPACE.space_id:
        raise ValueError(f"configuration is for space {config.space_id!r}, "
                         f"expected {TSP_SPACE.space_id!r}")
    TSP_SPACE.validate_values(config.values)

    length, hit_at = ils_best(instance, config.values, seed, cutoff,
                              target=instance.reference_optimum, wall_clock=wall_clock)
    if hit_at is not None:
        return RunOutcome(SUCCESS, elapsed=hit_at, seed=seed, cutoff=cutoff,
                          quality=float(length))
    return RunOutcome(TIMEOUT, elapsed=cutoff, seed=seed, cutoff=cutoff)


def certify_optimum(instance: TspInstance, experiment_cutoff: float, runs: int = 10,
                    config: Configuration | None = None, base_seed: int = 0,
                    wall_clock: bool = False) -> TspInstance:
    """Consensus protocol for instances beyond the exact oracle: the best
    length over `runs` independent long runs (10x the experiment cutoff) with
    distinct seeds, recorded with consensus provenance."""
    values = (config or TSP_SPACE.default_configuration()).values
    lengths = []
    for i in range(runs):
        length, _ = ils_best(instance, values, base_seed + i, experiment_cutoff * 10,
                             target=None, wall_clock=wall_clock)
        if length is not None:
            lengths.append(length)
    if not lengths:
        raise RuntimeError("consensus runs produced no tour; increase the cutoff")
    return instance.with_optimum(min(lengths), CONSENSUS)


# ---------------------------------------------------------------------------
# scoring
# ---------------------------------------------------------------------------

PENALTY_FACTOR = 10.0


def penalized_runtime(outcome: RunOutcome) -> float:
    """Single-run penalized runtime: elapsed on success, 10x cutoff otherwise."""
    if outcome.status == SUCCESS:
        return outcome.elapsed
    return PENALTY_FACTOR * outcome.cutoff


def par10(outcomes: list[RunOutcome], cutoff: float) -> float:
    """Penalized average runtime with penalty factor 10."""
    if not outcomes:
        raise ValueError("par10 needs at least one outcome")
    for o in outcomes:
        if o.cutoff != cutoff:
            raise ValueError("all outcomes must share the stated cutoff")
    return fmean(penalized_runtime(o) for o in outcomes)
