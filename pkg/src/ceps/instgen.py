"""TSP instance generators and the coordinate mutation operator.

Ten generators: `portgen` places points uniformly at random (rue instances);
`clustered_network` places points around randomly located centers; the other
eight first synthesize a rue base instance and then apply a structural
point-cloud transformation. Only the selected subset of points moves; all
other points are carried over bit-identically.

Geometric magnitudes the original generator descriptions leave open
(explosion radius, tube width, moved-subset fraction, relocation box size)
default to intensity-scaled fractions of the bounding box, with the formulas
spelled out next to each operator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ceps.tsp.instance import TspInstance

GENERATOR_KINDS = (
    "portgen",
    "clustered_network",
    "explosion",
    "implosion",
    "cluster",
    "rotation",
    "linearprojection",
    "expansion",
    "compression",
    "gridmutation",
)

DEFAULT_BOX = (0.0, 1_000_000.0, 0.0, 1_000_000.0)

# shrink factors for the pull-toward operators
IMPLOSION_SHRINK = 0.2
COMPRESSION_SHRINK = 0.1


@dataclass(frozen=True)
class GeneratorParams:
    n_cities: int
    n_clusters: int = 5
    intensity: float = 0.3
    box: tuple[float, float, float, float] = DEFAULT_BOX

    def __post_init__(self) -> None:
        x_lo, x_hi, y_lo, y_hi = self.box
        if self.n_cities < 3:
            raise ValueError("n_cities must be >= 3")
        if self.n_clusters < 1:
            raise ValueError("n_clusters must be >= 1")
        if not 0.0 <= self.intensity <= 1.0:
            raise ValueError("intensity must lie in [0, 1]")
        if not (x_lo < x_hi and y_lo < y_hi):
            raise ValueError("bounding box must be non-degenerate")

    @property
    def width(self) -> float:
        return self.box[1] - self.box[0]

    @property
    def height(self) -> float:
        return self.box[3] - self.box[2]

    @property
    def span(self) -> float:
        return min(self.width, self.height)


def cluster_radius(params: GeneratorParams) -> float:
    """Dispersion radius used by clustered_network: 8% of the shorter box side."""
    return 0.08 * params.span


def generate(kind: str, params: GeneratorParams, seed: int) -> TspInstance:
    """Deterministically generate one instance of the given kind."""
    if kind not in GENERATOR_KINDS:
        raise ValueError(f"unknown generator kind {kind!r}; choose from {GENERATOR_KINDS}")
    rng = np.random.default_rng(seed)
    if kind == "portgen":
        points = _rue_points(params, rng)
    elif kind == "clustered_network":
        points = _clustered_points(params, rng)
    else:
        points = _rue_points(params, rng)
        points = _STRUCTURAL_OPS[kind](points, params, rng)
    name = f"{kind}-n{params.n_cities}-s{seed}"
    return TspInstance(tuple(points), name=name)


def _rue_points(params: GeneratorParams, rng: np.random.Generator) -> list[tuple[float, float]]:
    x_lo, x_hi, y_lo, y_hi = params.box
    xs = rng.uniform(x_lo, x_hi, params.n_cities)
    ys = rng.uniform(y_lo, y_hi, params.n_cities)
    return [(float(x), float(y)) for x, y in zip(xs, ys)]


def _clustered_points(params: GeneratorParams, rng: np.random.Generator) -> list[tuple[float, float]]:
    x_lo, x_hi, y_lo, y_hi = params.box
    radius = cluster_radius(params)
    centers_x = rng.uniform(x_lo + radius, x_hi - radius, params.n_clusters)
    centers_y = rng.uniform(y_lo + radius, y_hi - radius, params.n_clusters)
    assignment = rng.integers(0, params.n_clusters, params.n_cities)
    points = []
    for i in range(params.n_cities):
        c = int(assignment[i])
        r = radius * math.sqrt(rng.random())
        angle = rng.random() * 2.0 * math.pi
        points.append((float(centers_x[c] + r * math.cos(angle)),
                       float(centers_y[c] + r * math.sin(angle))))
    return points


# ---------------------------------------------------------------------------
# structural operators over a rue base
# ---------------------------------------------------------------------------

Points = list[tuple[float, float]]


def _random_point(params: GeneratorParams, rng: np.random.Generator) -> tuple[float, float]:
    x_lo, x_hi, y_lo, y_hi = params.box
    return float(rng.uniform(x_lo, x_hi)), float(rng.uniform(y_lo, y_hi))


def _subset(n: int, fraction: float, rng: np.random.Generator) -> set[int]:
    k = max(1, round(fraction * n))
    return {int(v) for v in rng.choice(n, size=min(k, n), replace=False)}


def _explosion(points: Points, params: GeneratorParams, rng: np.random.Generator) -> Points:
    # hole radius: intensity-scaled half of the shorter box side
    cx, cy = _random_point(params, rng)
    radius = 0.5 * params.intensity * params.span
    out = []
    for x, y in points:
        d = math.hypot(x - cx, y - cy)
        if d >= radius:
            out.append((x, y))
            continue
        if d == 0.0:
            angle = rng.random() * 2.0 * math.pi
            ux, uy = math.cos(angle), math.sin(angle)
        else:
            ux, uy = (x - cx) / d, (y - cy) / d
        shift = radius + abs(rng.normal(0.0, 0.1 * radius))
        out.append((cx + ux * shift, cy + uy * shift))
    return out


def _implosion(points: Points, params: GeneratorParams, rng: np.random.Generator) -> Points:
    cx, cy = _random_point(params, rng)
    radius = 0.5 * params.intensity * params.span
    out = []
    for x, y in points:
        if math.hypot(x - cx, y - cy) < radius:
            out.append((cx + (x - cx) * IMPLOSION_SHRINK, cy + (y - cy) * IMPLOSION_SHRINK))
        else:
            out.append((x, y))
    return out


def _cluster(points: Points, params: GeneratorParams, rng: np.random.Generator) -> Points:
    # relocate an intensity-sized fraction of points into a small disc
    cx, cy = _random_point(params, rng)
    moved = _subset(len(points), params.intensity, rng)
    radius = 0.05 * params.span
    out = []
    for i, (x, y) in enumerate(points):
        if i in moved:
            r = radius * math.sqrt(rng.random())
            angle = rng.random() * 2.0 * math.pi
            out.append((cx + r * math.cos(angle), cy + r * math.sin(angle)))
        else:
            out.append((x, y))
    return out


def _rotation(points: Points, params: GeneratorParams, rng: np.random.Generator) -> Points:
    moved = _subset(len(points), max(params.intensity, 0.2), rng)
    angle = rng.random() * 2.0 * math.pi
    cos_a, sin_a = math.cos(angle), math.sin(angle)
    cx = sum(points[i][0] for i in moved) / len(moved)
    cy = sum(points[i][1] for i in moved) / len(moved)
    out = []
    for i, (x, y) in enumerate(points):
        if i in moved:
            dx, dy = x - cx, y - cy
            out.append((cx + dx * cos_a - dy * sin_a, cy + dx * sin_a + dy * cos_a))
        else:
            out.append((x, y))
    return out


def _line(params: GeneratorParams, rng: np.random.Generator):
    """A random line: anchor point plus unit direction."""
    px, py = _random_point(params, rng)
    angle = rng.random() * math.pi
    return px, py, math.cos(angle), math.sin(angle)


def _linearprojection(points: Points, params: GeneratorParams, rng: np.random.Generator) -> Points:
    px, py, ux, uy = _line(params, rng)
    moved = _subset(len(points), max(params.intensity, 0.2), rng)
    out = []
    for i, (x, y) in enumerate(points):
        if i in moved:
            t = (x - px) * ux + (y - py) * uy
            out.append((px + t * ux, py + t * uy))
        else:
            out.append((x, y))
    return out


def _tube_op(points: Points, params: GeneratorParams, rng: np.random.Generator,
             push_out: bool) -> Points:
    # tube half-width: a quarter of the explosion radius scale
    px, py, ux, uy = _line(params, rng)
    half_width = 0.125 * params.intensity * params.span
    nx, ny = -uy, ux  # unit normal
    out = []
    for x, y in points:
        d = (x - px) * nx + (y - py) * ny  # signed orthogonal distance
        if abs(d) >= half_width:
            out.append((x, y))
            continue
        if push_out:
            side = 1.0 if d > 0 else -1.0 if d < 0 else (1.0 if rng.random() < 0.5 else -1.0)
            new_d = side * (half_width + abs(rng.normal(0.0, 0.1 * half_width)))
        else:
            new_d = d * COMPRESSION_SHRINK
        out.append((x + (new_d - d) * nx, y + (new_d - d) * ny))
    return out


def _expansion(points: Points, params: GeneratorParams, rng: np.random.Generator) -> Points:
    return _tube_op(points, params, rng, push_out=True)


def _compression(points: Points, params: GeneratorParams, rng: np.random.Generator) -> Points:
    return _tube_op(points, params, rng, push_out=False)


def _gridmutation(points: Points, params: GeneratorParams, rng: np.random.Generator) -> Points:
    # relocate every point inside a random axis-aligned box by one shared offset
    x_lo, x_hi, y_lo, y_hi = params.box
    bw = max(params.intensity, 0.1) * 0.5 * params.width
    bh = max(params.intensity, 0.1) * 0.5 * params.height
    bx = float(rng.uniform(x_lo, x_hi - bw))
    by = float(rng.uniform(y_lo, y_hi - bh))
    tx = float(rng.uniform(x_lo, x_hi - bw)) - bx
    ty = float(rng.uniform(y_lo, y_hi - bh)) - by
    out = []
    for x, y in points:
        if bx <= x <= bx + bw and by <= y <= by + bh:
            out.append((x + tx, y + ty))
        else:
            out.append((x, y))
    return out


_STRUCTURAL_OPS = {
    "explosion": _explosion,
    "implosion": _implosion,
    "cluster": _cluster,
    "rotation": _rotation,
    "linearprojection": _linearprojection,
    "expansion": _expansion,
    "compression": _compression,
    "gridmutation": _gridmutation,
}


def generate_mixed(count: int, n_cities: int, seed: int,
                   box: tuple[float, float, float, float] = DEFAULT_BOX) -> list[TspInstance]:
    """A generator-mixed instance set: kinds cycle round-robin, cluster counts
    cycle 4..8 for clustered_network."""
    instances = []
    for i in range(count):
        kind = GENERATOR_KINDS[i % len(GENERATOR_KINDS)]
        params = GeneratorParams(n_cities=n_cities, n_clusters=4 + (i // len(GENERATOR_KINDS)) % 5,
                                 box=box)
        instances.append(generate(kind, params, seed * 100_003 + i))
    return instances


# ---------------------------------------------------------------------------
# instance mutation
# ---------------------------------------------------------------------------

COORD_SIGMA_FRACTION = 0.025
GAUSSIAN_BRANCH_PROBABILITY = 0.9


def mutate_coords(xs: list[float], ys: list[float], rng: np.random.Generator
                  ) -> tuple[list[float], list[float], list[bool]]:
    """Coordinate mutation shared by the TSP and VRPSPDTW operators.

    Per point: with probability 0.9 offset x and y by Gaussian steps with
    sigma = 0.025 * coordinate range; otherwise resample both uniformly
    within the observed ranges. Extrema are computed once from the input.
    Offsets are not clamped to the original bounding box. Returns the new
    coordinates plus a mask of the points that took the uniform branch.
    """
    x_min, x_max = min(xs), max(xs)
    y_min, y_max = min(ys), max(ys)
    sigma_x = COORD_SIGMA_FRACTION * (x_max - x_min)
    sigma_y = COORD_SIGMA_FRACTION * (y_max - y_min)
    new_xs, new_ys, uniform_mask = [], [], []
    for x, y in zip(xs, ys):
        if rng.random() <= GAUSSIAN_BRANCH_PROBABILITY:
            new_xs.append(x + float(rng.normal(0.0, sigma_x)))
            new_ys.append(y + float(rng.normal(0.0, sigma_y)))
            uniform_mask.append(False)
        else:
            new_xs.append(float(rng.uniform(x_min, x_max)))
            new_ys.append(float(rng.uniform(y_min, y_max)))
            uniform_mask.append(True)
    return new_xs, new_ys, uniform_mask


def mutate_tsp(instance: TspInstance, seed: int) -> TspInstance:
    """Mutate each city's coordinates; the stale reference optimum is dropped."""
    rng = np.random.default_rng(seed)
    xs = [c[0] for c in instance.cities]
    ys = [c[1] for c in instance.cities]
    new_xs, new_ys, _ = mutate_coords(xs, ys, rng)
    name = f"{instance.name}-m{seed}" if instance.name else f"m{seed}"
    return TspInstance(tuple(zip(new_xs, new_ys)), name=name)
