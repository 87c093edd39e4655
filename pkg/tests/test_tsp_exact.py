import itertools

import numpy as np
import pytest

from ceps.tsp import Tour, TspInstance, held_karp_optimum, tour_length


def brute_force_optimum(instance):
    """Independent oracle: minimum tour length over all (n-1)! permutations."""
    n = instance.n
    best = None
    for perm in itertools.permutations(range(1, n)):
        length = tour_length(instance, Tour((0, *perm)))
        if best is None or length < best:
            best = length
    return best


def random_instance(n, seed):
    rng = np.random.default_rng(seed)
    return TspInstance(tuple((float(x), float(y))
                             for x, y in rng.uniform(0, 1000, size=(n, 2))))


def test_unit_square():
    inst = TspInstance(((0.0, 0.0), (0.0, 1.0), (1.0, 1.0), (1.0, 0.0)))
    assert held_karp_optimum(inst) == 4


def test_colinear_points_out_and_back():
    for k in (3, 5, 8):
        inst = TspInstance(tuple((float(i), 0.0) for i in range(k + 1)))
        assert held_karp_optimum(inst) == 2 * k


def test_matches_brute_force_on_random_instances():
    rng = np.random.default_rng(0)
    for trial in range(12):
        n = int(rng.integers(5, 10))
        inst = random_instance(n, 1000 + trial)
        assert held_karp_optimum(inst) == brute_force_optimum(inst)


def test_capacity_error_beyond_limit():
    inst = random_instance(15, 2)
    with pytest.raises(ValueError, match="consensus"):
        held_karp_optimum(inst)
