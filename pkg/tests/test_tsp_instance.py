import math

import numpy as np
import pytest

from ceps.tsp import (
    Tour,
    TspInstance,
    attach_optima,
    load_optima,
    nint,
    read_tsplib,
    save_optima,
    tour_length,
    write_tsplib,
)

UNIT_SQUARE = ((0.0, 0.0), (0.0, 1.0), (1.0, 1.0), (1.0, 0.0))


def random_instance(n, seed):
    rng = np.random.default_rng(seed)
    return TspInstance(tuple((float(x), float(y))
                             for x, y in rng.uniform(0, 1000, size=(n, 2))))


def test_nint_rounds_half_away_from_zero():
    assert nint(0.5) == 1
    assert nint(1.4999) == 1
    assert nint(2.5) == 3
    assert nint(-0.5) == -1
    assert nint(-2.5) == -3


def test_instance_validation():
    with pytest.raises(ValueError):
        TspInstance(((0, 0), (1, 1)))  # fewer than 3 cities
    with pytest.raises(ValueError):
        TspInstance(((0, 0), (1, 1), (float("inf"), 0)))


def test_unit_square_tour_length():
    inst = TspInstance(UNIT_SQUARE)
    assert tour_length(inst, Tour((0, 1, 2, 3))) == 4


def test_tour_must_be_permutation():
    inst = TspInstance(UNIT_SQUARE)
    with pytest.raises(ValueError):
        tour_length(inst, Tour((0, 1, 2, 2)))
    with pytest.raises(ValueError):
        tour_length(inst, Tour((0, 1, 2)))


def test_tour_length_reversal_and_rotation_invariance():
    rng = np.random.default_rng(5)
    for trial in range(20):
        inst = random_instance(int(rng.integers(4, 12)), trial)
        order = list(rng.permutation(inst.n))
        base = tour_length(inst, Tour(tuple(order)))
        assert tour_length(inst, Tour(tuple(reversed(order)))) == base
        shift = int(rng.integers(inst.n))
        rotated = order[shift:] + order[:shift]
        assert tour_length(inst, Tour(tuple(rotated))) == base


def test_tour_length_matches_independent_edge_sum():
    # independent oracle: per-edge rounded euclidean distances, summed directly
    rng = np.random.default_rng(11)
    for trial in range(10):
        inst = random_instance(8, 100 + trial)
        order = [int(v) for v in rng.permutation(8)]
        expected = 0
        for i in range(8):
            (x1, y1) = inst.cities[order[i]]
            (x2, y2) = inst.cities[order[(i + 1) % 8]]
            d = math.sqrt((x1 - x2) ** 2 + (y1 - y2) ** 2)
            expected += int(math.floor(d + 0.5))
        assert tour_length(inst, Tour(tuple(order))) == expected


def test_fingerprint_ignores_name_and_annotations():
    inst = random_instance(5, 0)
    named = TspInstance(inst.cities, name="other")
    assert inst.fingerprint == named.fingerprint
    assert inst.with_optimum(123, "exact").fingerprint == inst.fingerprint


def test_tsplib_roundtrip(tmp_path):
    inst = random_instance(7, 3)
    path = tmp_path / "x.tsp"
    write_tsplib(TspInstance(inst.cities, name="x"), path)
    again = read_tsplib(path)
    assert again.cities == inst.cities  # repr floats round-trip exactly
    assert again.name == "x"
    text = path.read_text()
    assert "EDGE_WEIGHT_TYPE: EUC_2D" in text
    assert "DIMENSION: 7" in text
    assert text.rstrip().endswith("EOF")


def test_tsplib_rejects_other_metrics(tmp_path):
    path = tmp_path / "bad.tsp"
    path.write_text("NAME: bad\nTYPE: TSP\nDIMENSION: 3\nEDGE_WEIGHT_TYPE: GEO\n"
                    "NODE_COORD_SECTION\n1 0 0\n2 1 1\n3 2 2\nEOF\n")
    with pytest.raises(ValueError):
        read_tsplib(path)


def test_optima_sidecar_roundtrip(tmp_path):
    inst = random_instance(6, 9)
    records = {inst.fingerprint: {"value": 321, "provenance": "exact"}}
    path = tmp_path / "optima.json"
    save_optima(records, path)
    loaded = load_optima(path)
    assert loaded == records
    attached = attach_optima([inst, random_instance(6, 10)], loaded)
    assert attached[0].reference_optimum == 321
    assert attached[0].optimum_provenance == "exact"
    assert attached[1].reference_optimum is None


def test_optima_sidecar_rejects_unknown_provenance(tmp_path):
    path = tmp_path / "optima.json"
    path.write_text('{"abc": {"value": 1, "provenance": "guessed"}}')
    with pytest.raises(ValueError):
        load_optima(path)
