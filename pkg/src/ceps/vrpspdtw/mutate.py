"""Instance mutation for VRPSPDTW: coordinates move under the shared
coordinate operator, demands are resampled within the observed ranges, and
time windows drift by Gaussian offsets scaled to the depot horizon. The
depot and the fleet never change."""

from __future__ import annotations

import numpy as np

from ceps.instgen import COORD_SIGMA_FRACTION, mutate_coords
from ceps.vrpspdtw.instance import Customer, VrpInstance


def mutate_vrp(instance: VrpInstance, seed: int) -> VrpInstance:
    rng = np.random.default_rng(seed)
    customers = instance.customers
    depot = instance.depot

    xs = [c.x for c in customers]
    ys = [c.y for c in customers]
    new_xs, new_ys, _ = mutate_coords(xs, ys, rng)

    p_min, p_max = min(c.pickup for c in customers), max(c.pickup for c in customers)
    d_min, d_max = min(c.delivery for c in customers), max(c.delivery for c in customers)
    window_sigma = COORD_SIGMA_FRACTION * (depot.b - depot.a)

    mutated = []
    for i, c in enumerate(customers):
        pickup = float(rng.uniform(p_min, p_max))
        delivery = float(rng.uniform(d_min, d_max))
        a = c.a + float(rng.normal(0.0, window_sigma))
        b = c.b + float(rng.normal(0.0, window_sigma))
        # offsets can invert or escape the horizon: swap then clip so the
        # window invariant a <= b and the depot horizon both keep holding
        if a > b:
            a, b = b, a
        a = min(max(a, depot.a), depot.b)
        b = min(max(b, depot.a), depot.b)
        mutated.append(Customer(x=new_xs[i], y=new_ys[i], delivery=delivery,
                                pickup=pickup, a=a, b=b, service=c.service))

    name = f"{instance.name}-m{seed}" if instance.name else f"m{seed}"
    return VrpInstance(depot=depot, customers=tuple(mutated), fleet=instance.fleet,
                       name=name)
