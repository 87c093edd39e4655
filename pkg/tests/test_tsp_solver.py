import numpy as np
import pytest

from ceps.core import Configuration, RunOutcome
from ceps.tsp import (
    TSP_SPACE,
    TspInstance,
    certify_optimum,
    held_karp_optimum,
    ils_best,
    par10,
    penalized_runtime,
    solve,
)


def prepared_instance(n, seed):
    rng = np.random.default_rng(seed)
    inst = TspInstance(tuple((float(x), float(y))
                             for x, y in rng.uniform(0, 1000, size=(n, 2))))
    return inst.with_optimum(held_karp_optimum(inst), "exact")


def config(**overrides):
    values = {p.name: p.default for p in TSP_SPACE}
    values.update(overrides)
    return Configuration(TSP_SPACE.space_id, values)


def test_requires_reference_optimum_and_positive_cutoff():
    rng = np.random.default_rng(0)
    inst = TspInstance(tuple((float(x), float(y))
                             for x, y in rng.uniform(0, 1000, size=(6, 2))))
    with pytest.raises(ValueError, match="reference"):
        solve(inst, config(), seed=0, cutoff=1.0)
    with pytest.raises(ValueError):
        solve(prepared_instance(6, 0), config(), seed=0, cutoff=0.0)


def test_rejects_invalid_configuration():
    inst = prepared_instance(6, 0)
    with pytest.raises(ValueError):
        solve(inst, config(candidate_list_size=99), seed=0, cutoff=1.0)
    with pytest.raises(ValueError):
        solve(inst, Configuration("weird", {"a": 1}), seed=0, cutoff=1.0)


def test_small_instance_reaches_optimum_with_generous_cutoff():
    for trial in range(5):
        inst = prepared_instance(10, 40 + trial)
        out = solve(inst, config(), seed=trial, cutoff=5.0)
        assert out.status == "success"
        assert out.quality == inst.reference_optimum
        assert out.elapsed <= 5.0


def test_determinism_same_inputs_same_outcome():
    inst = prepared_instance(10, 3)
    for cfg in (config(), config(construction="random", dont_look_bits=False,
                                use_or_opt=False, acceptance="accept_better")):
        a = solve(inst, cfg, seed=7, cutoff=2.0)
        b = solve(inst, cfg, seed=7, cutoff=2.0)
        assert a == b
    # a different seed is allowed to differ (and usually does in elapsed)
    c = solve(inst, config(), seed=8, cutoff=2.0)
    assert isinstance(c, RunOutcome)


def test_forced_timeout_on_large_instance():
    rng = np.random.default_rng(1)
    inst = TspInstance(tuple((float(x), float(y))
                             for x, y in rng.uniform(0, 1e6, size=(500, 2))))
    inst = inst.with_optimum(1, "consensus")  # unreachable target
    out = solve(inst, config(), seed=0, cutoff=0.001)
    assert out.status == "timeout"
    assert out.elapsed == 0.001
    assert out.quality is None


def test_quality_never_beats_the_exact_optimum():
    for trial in range(8):
        inst = prepared_instance(8, 60 + trial)
        out = solve(inst, config(construction="random"), seed=trial, cutoff=2.0)
        if out.status == "success":
            assert out.quality >= inst.reference_optimum


def test_every_construction_variant_runs():
    inst = prepared_instance(9, 5)
    for construction in ("nearest_neighbor", "greedy_edge", "random"):
        for perturbation in ("double_bridge", "segment_shuffle"):
            out = solve(inst, config(construction=construction,
                                     perturbation=perturbation),
                        seed=1, cutoff=2.0)
            assert out.status == "success"


def test_ils_best_without_target_returns_best_length():
    inst = prepared_instance(9, 6)
    length, hit = ils_best(inst, config().values, seed=0, cutoff=0.05, target=None)
    assert hit is None
    assert length >= inst.reference_optimum


def test_certify_optimum_consensus_matches_exact_on_small_instances():
    inst = prepared_instance(9, 12)
    bare = inst.without_optimum()
    certified = certify_optimum(bare, experiment_cutoff=0.05, runs=4)
    assert certified.optimum_provenance == "consensus"
    assert certified.reference_optimum == inst.reference_optimum


def test_par10_examples():
    timeout = RunOutcome("timeout", elapsed=10.0, seed=0, cutoff=10.0)
    fast = RunOutcome("success", elapsed=2.0, seed=0, cutoff=10.0, quality=5.0)
    assert par10([timeout], cutoff=10.0) == 100.0
    assert par10([fast, timeout], cutoff=10.0) == 51.0
    assert par10([fast, RunOutcome("success", elapsed=4.0, seed=1, cutoff=10.0,
                                   quality=5.0)], cutoff=10.0) == 3.0
    assert penalized_runtime(timeout) == 100.0
    assert penalized_runtime(fast) == 2.0


def test_par10_validates_inputs():
    with pytest.raises(ValueError):
        par10([], cutoff=10.0)
    odd = RunOutcome("success", elapsed=1.0, seed=0, cutoff=5.0, quality=1.0)
    with pytest.raises(ValueError):
        par10([odd], cutoff=10.0)


def test_par10_equals_mean_elapsed_when_all_succeed():
    rng = np.random.default_rng(9)
    inst = prepared_instance(8, 77)
    outs = [solve(inst, config(), seed=s, cutoff=5.0) for s in range(5)]
    assert all(o.status == "success" for o in outs)
    assert par10(outs, cutoff=5.0) == pytest.approx(
        sum(o.elapsed for o in outs) / len(outs))
