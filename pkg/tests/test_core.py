import itertools
import json

import numpy as np
import pytest

from ceps.core import (
    CacheConflictError,
    Configuration,
    ParameterSpace,
    Portfolio,
    RunCache,
    RunOutcome,
    ToyUniverse,
    canonical_json,
    categorical_param,
    fingerprint,
    improvement_upper_bound,
    integer_param,
    portfolio_score,
    real_param,
    set_score,
)


def small_space():
    return ParameterSpace("toy", (
        real_param("x", 0.0, 1.0, 0.5),
        integer_param("k", 5, 20, 10),
        categorical_param("mode", ("a", "b"), "a"),
    ))


# ---------------------------------------------------------------------------
# parameter spaces and configurations
# ---------------------------------------------------------------------------

def test_space_rejects_bad_domains():
    with pytest.raises(ValueError):
        real_param("x", 1.0, 0.0, 0.5)
    with pytest.raises(ValueError):
        categorical_param("c", (), None)
    with pytest.raises(ValueError):
        integer_param("k", 0, 10, 99)  # default outside domain
    with pytest.raises(ValueError):
        ParameterSpace("dup", (integer_param("k", 0, 1, 0), integer_param("k", 0, 1, 0)))


def test_configuration_must_be_total_and_in_domain():
    space = small_space()
    space.validate_values({"x": 0.25, "k": 7, "mode": "b"})
    with pytest.raises(ValueError):
        space.validate_values({"x": 0.25, "k": 7})
    with pytest.raises(ValueError):
        space.validate_values({"x": 0.25, "k": 7, "mode": "z"})
    with pytest.raises(ValueError):
        space.validate_values({"x": 2.0, "k": 7, "mode": "a"})
    with pytest.raises(ValueError):
        space.validate_values({"x": 0.25, "k": 7, "mode": "a", "extra": 1})


def test_fingerprint_stable_under_field_reordering():
    a = Configuration("s", {"x": 0.1, "y": 2, "z": "m"})
    b = Configuration("s", {"z": "m", "y": 2, "x": 0.1})
    assert a.fingerprint == b.fingerprint
    assert a == b


def test_fingerprint_distinguishes_values_and_space():
    a = Configuration("s", {"x": 0.1})
    assert a.fingerprint != Configuration("s", {"x": 0.2}).fingerprint
    assert a.fingerprint != Configuration("other", {"x": 0.1}).fingerprint


def test_canonical_json_17_digit_floats():
    text = canonical_json({"v": 0.1 + 0.2})
    rendered = json.loads(text)["v"]
    assert rendered == f"{0.1 + 0.2:.17g}"
    assert float(rendered) == 0.1 + 0.2  # round-trip exact


def test_fingerprint_rejects_non_finite():
    with pytest.raises(ValueError):
        fingerprint({"v": float("nan")})


def test_portfolio_distinct_members_and_size():
    c1 = Configuration("s", {"x": 1})
    c2 = Configuration("s", {"x": 2})
    p = Portfolio((c1, c2))
    assert len(p) == 2
    with pytest.raises(ValueError):
        Portfolio((c1, Configuration("s", {"x": 1})))
    with pytest.raises(ValueError):
        Portfolio((c1, c2), max_size=1)
    with pytest.raises(ValueError):
        Portfolio(())


def test_portfolio_roundtrip():
    p = Portfolio((Configuration("s", {"x": 1}), Configuration("s", {"x": 2})))
    again = Portfolio.from_dict(p.to_dict())
    assert again.fingerprints == p.fingerprints


# ---------------------------------------------------------------------------
# run outcomes
# ---------------------------------------------------------------------------

def test_outcome_invariants():
    ok = RunOutcome("success", elapsed=1.5, seed=0, cutoff=10.0, quality=42.0)
    assert ok.quality == 42.0
    with pytest.raises(ValueError):
        RunOutcome("success", elapsed=1.5, seed=0, cutoff=10.0)  # no quality
    with pytest.raises(ValueError):
        RunOutcome("success", elapsed=11.0, seed=0, cutoff=10.0, quality=1.0)
    with pytest.raises(ValueError):
        RunOutcome("timeout", elapsed=5.0, seed=0, cutoff=10.0)  # elapsed != cutoff
    with pytest.raises(ValueError):
        RunOutcome("exploded", elapsed=0.0, seed=0, cutoff=1.0)


def test_outcome_roundtrip():
    out = RunOutcome("timeout", elapsed=10.0, seed=3, cutoff=10.0)
    assert RunOutcome.from_dict(out.to_dict()) == out


# ---------------------------------------------------------------------------
# run cache
# ---------------------------------------------------------------------------

def test_cache_roundtrip_and_idempotence(tmp_path):
    cache = RunCache()
    key = ("cfg", "inst", 0)
    out = RunOutcome("success", elapsed=0.5, seed=0, cutoff=10.0, quality=7.0)
    cache.insert(key, out)
    cache.insert(key, out)  # identical duplicate is a no-op
    assert len(cache) == 1

    path = tmp_path / "cache.jsonl"
    cache.save(path)
    again = RunCache.load(path)
    assert again.get(key) == out

    # and the persisted form round-trips byte for byte
    again.save(tmp_path / "cache2.jsonl")
    assert (tmp_path / "cache.jsonl").read_bytes() == (tmp_path / "cache2.jsonl").read_bytes()


def test_cache_conflict_is_an_error(tmp_path):
    cache = RunCache()
    key = ("cfg", "inst", 0)
    cache.insert(key, RunOutcome("success", elapsed=0.5, seed=0, cutoff=10.0, quality=7.0))
    with pytest.raises(CacheConflictError):
        cache.insert(key, RunOutcome("success", elapsed=0.6, seed=0, cutoff=10.0, quality=7.0))

    path = tmp_path / "cache.jsonl"
    with open(path, "w") as fh:
        base = {"config": "c", "instance": "i", "seed": 0}
        fh.write(json.dumps({**base, "outcome": {"status": "timeout", "elapsed": 1.0,
                                                 "seed": 0, "cutoff": 1.0}}) + "\n")
        fh.write(json.dumps({**base, "outcome": {"status": "success", "elapsed": 0.5,
                                                 "seed": 0, "cutoff": 1.0,
                                                 "quality": 3.0}}) + "\n")
    with pytest.raises(CacheConflictError):
        RunCache.load(path)


# ---------------------------------------------------------------------------
# score aggregation
# ---------------------------------------------------------------------------

def test_portfolio_score_examples():
    assert portfolio_score([3.2, 100.0, 7.5]) == 3.2
    assert portfolio_score([100.0, 100.0, 100.0, 100.0]) == 100.0
    assert portfolio_score([5.0]) == 5.0
    with pytest.raises(ValueError):
        portfolio_score([])


def test_set_score_examples():
    assert set_score([2.0, 100.0]) == 51.0
    assert set_score([3.7]) == 3.7
    assert set_score([100.0] * 470) == 100.0
    with pytest.raises(ValueError):
        set_score([])


def test_portfolio_score_is_min_on_random_vectors():
    rng = np.random.default_rng(0)
    for _ in range(200):
        scores = list(rng.uniform(0, 100, size=int(rng.integers(1, 9))))
        assert portfolio_score(scores) == min(scores)


def test_subset_monotonicity_exhaustive():
    # adding members can only improve (reduce) the portfolio score
    rng = np.random.default_rng(1)
    scores = list(rng.uniform(0, 100, size=8))
    indices = range(8)
    for r in range(1, 5):
        for theta in itertools.combinations(indices, r):
            sup = [i for i in indices if i not in theta]
            for extra in itertools.chain.from_iterable(
                    itertools.combinations(sup, e) for e in range(len(sup) + 1)):
                theta_prime = list(theta) + list(extra)
                assert portfolio_score([scores[i] for i in theta_prime]) \
                    <= portfolio_score([scores[i] for i in theta])


# ---------------------------------------------------------------------------
# generalization upper bound on enumerable toy universes
# ---------------------------------------------------------------------------

def test_improvement_upper_bound_random_universes():
    rng = np.random.default_rng(7)
    for trial in range(20):
        n_configs = int(rng.integers(2, 9))
        n_instances = int(rng.integers(2, 65))
        universe = ToyUniverse(tuple(
            tuple(float(v) for v in rng.uniform(0, 100, size=n_instances))
            for _ in range(n_configs)
        ))
        for _ in range(10):
            k = int(rng.integers(1, n_configs))
            theta = sorted(int(i) for i in rng.choice(n_configs, size=k, replace=False))
            extra = [i for i in range(n_configs) if i not in theta]
            grow = int(rng.integers(0, len(extra) + 1))
            theta_prime = theta + sorted(
                int(i) for i in rng.choice(extra, size=grow, replace=False))
            pooled = [int(i) for i in rng.choice(
                n_instances, size=int(rng.integers(0, n_instances + 1)), replace=False)]
            gap, bound = improvement_upper_bound(universe, theta, theta_prime, pooled)
            assert gap <= bound + 1e-9
            assert bound <= 1e-9  # non-positive whenever theta <= theta_prime
