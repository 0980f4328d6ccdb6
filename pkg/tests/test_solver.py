import numpy as np
import pytest
from hypothesis import example, given
from hypothesis import strategies as st

from optrta.errors import InternalGuardError, PreconditionError, RefusalError
from optrta.fixtures import random_plant
from optrta.plant import Mdp, Plant, RewardStructure, StationaryPolicy, UnsafeSet, stationary_policy_value
from optrta.shaping import SafetyVerdict, shape_for
from optrta.solver import (
    brute_force_best_safe,
    extract_policy,
    geometric_tail,
    load_policy,
    policy_values,
    save_policy,
    synthesize_safe_optimal,
    synthesize_spec,
    value_iteration,
)

from .conftest import doomed_plant

seeds = st.integers(0, 2**32 - 1)


def shaped_vf(spec):
    return value_iteration(spec.model, shape_for(spec.model, spec.reward, spec.unsafe))


def test_value_iteration_on_fixtures(left, right):
    assert abs(shaped_vf(right).v[0] - 10.0) <= 1e-10
    assert abs(shaped_vf(left).v[0]) <= 1e-10


def test_single_state_fixed_point():
    plant = Plant(("a",), 0, ("S", "U"), np.array([[0, 0]]))
    vf = value_iteration(plant, RewardStructure(np.array([[3.0, 3.0]]), 0.8))
    assert abs(vf.v[0] - 15.0) < 1e-9


def test_extracted_policies(left, right):
    pr = extract_policy(shaped_vf(right))
    assert pr.named(right.model)["q0"] == "U" and pr.named(right.model)["q1"] == "U"
    assert extract_policy(shaped_vf(left)).named(left.model)["q0"] == "S"


def test_exact_tie_goes_to_untrusted():
    plant = Plant(("a", "b"), 0, ("S", "U"), np.array([[1, 1], [1, 1]]))
    vf = value_iteration(plant, RewardStructure(np.array([[0.5, 0.5], [1.0, 0.0]]), 0.9))
    pol = extract_policy(vf)
    assert pol[0] == 1  # U on the tie
    assert pol[1] == 0  # strict preference for S


def test_iteration_cap_trips_guard(right):
    with pytest.raises(InternalGuardError):
        value_iteration(right.model, right.reward, max_iter=3)


def test_tolerance_must_be_positive(right):
    with pytest.raises(PreconditionError):
        value_iteration(right.model, right.reward, tol=0.0)


def test_brute_force_examples(left, right):
    pol, val = brute_force_best_safe(right.model, right.reward, right.unsafe)
    assert pol.named(right.model)["q0"] == "U" and pol.named(right.model)["q1"] == "U"
    assert abs(val - 10.0) < 1e-12
    pol, val = brute_force_best_safe(left.model, left.reward, left.unsafe)
    assert pol.named(left.model)["q0"] == "S" and val == 0.0
    plant, rs, unsafe = doomed_plant()
    assert brute_force_best_safe(plant, rs, unsafe) is None


def test_brute_force_refuses_huge_enumerations():
    n = 21
    plant = Plant([f"q{i}" for i in range(n)], 0, ("S", "U"), np.zeros((n, 2), dtype=int))
    with pytest.raises(RefusalError):
        brute_force_best_safe(plant, RewardStructure(np.zeros((n, 2)), 0.9), UnsafeSet())


def test_synthesis_examples(left, right):
    r = synthesize_spec(right)
    assert r.policy == StationaryPolicy.constant(right.model, "U")
    assert r.verdict is SafetyVerdict.SAFE_EXISTS and abs(r.unshaped_value - 10.0) < 1e-12
    r = synthesize_spec(left)
    assert r.verdict is SafetyVerdict.SAFE_EXISTS and r.unshaped_value == 0.0
    plant, rs, unsafe = doomed_plant()
    assert synthesize_safe_optimal(plant, rs, unsafe).verdict is SafetyVerdict.NO_SAFE_POLICY


def test_policy_values_match_cycle_formula(right):
    m = right.model
    pol = StationaryPolicy.constant(m, "U")
    v = policy_values(m, pol, right.reward)
    assert abs(v[0] - stationary_policy_value(m, pol, right.reward)) < 1e-12


def test_policy_file_round_trip(tmp_path, right):
    res = synthesize_spec(right)
    for name in ("p.json", "p.yaml"):
        save_policy(right.model, res, tmp_path / name)
        pol, meta = load_policy(right.model, tmp_path / name)
        assert pol == res.policy and meta["verdict"] == "SafeExists"


def test_policy_file_missing_state(tmp_path, right):
    (tmp_path / "p.json").write_text('{"policy": {"q0": "U"}}')
    with pytest.raises(PreconditionError, match="no action"):
        load_policy(right.model, tmp_path / "p.json")


def test_geometric_tail():
    assert geometric_tail(0.5, 3, 2.0) == 0.5


@given(seeds)
def test_shaped_synthesis_matches_brute_force(seed):
    spec = random_plant(np.random.default_rng(seed))
    res = synthesize_spec(spec)
    oracle = brute_force_best_safe(spec.model, spec.reward, spec.unsafe)
    assert (res.verdict is SafetyVerdict.SAFE_EXISTS) == (oracle is not None)
    if oracle is not None:
        assert abs(res.unshaped_value - oracle[1]) <= 1e-9


def random_mdp(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 5))
    prob = np.zeros((n, 2, n))
    for q in range(n):
        for a in range(2):
            support = rng.choice(n, size=int(rng.integers(1, min(n, 2) + 1)), replace=False)
            if len(support) == 1:
                prob[q, a, support[0]] = 1.0
            else:
                prob[q, a, support] = [0.5, 0.5]
    mdp = Mdp([f"q{i}" for i in range(n)], 0, ("S", "U"), prob)
    unsafe = UnsafeSet(frozenset(int(q) for q in np.flatnonzero(rng.random(n) < 0.3)))
    rs = RewardStructure(rng.integers(0, 2, size=(n, 2)).astype(float), 0.9)
    return mdp, rs, unsafe


@given(seeds)
@example(11083)  # optimal shaped value is exactly 0; the linear solve returns -1e-14
def test_mdp_synthesis_matches_brute_force(seed):
    mdp, rs, unsafe = random_mdp(seed)
    res = synthesize_safe_optimal(mdp, rs, unsafe)
    oracle = brute_force_best_safe(mdp, rs, unsafe)
    assert (res.verdict is SafetyVerdict.SAFE_EXISTS) == (oracle is not None)
    if oracle is not None:
        assert abs(res.unshaped_value - oracle[1]) <= 1e-9
    assert res.residual < 1e-9


@given(seeds)
def test_value_iteration_is_a_bellman_fixed_point(seed):
    spec = random_plant(np.random.default_rng(seed))
    m = spec.model
    vf = value_iteration(m, spec.reward)
    nxt = np.asarray(m.delta)
    backed = (spec.reward.table + spec.reward.gamma * vf.v[nxt]).max(axis=1)
    assert np.max(np.abs(backed - vf.v)) <= vf.threshold * 2


@given(seeds)
def test_greedy_policy_is_near_optimal(seed):
    spec = random_plant(np.random.default_rng(seed))
    m = spec.model
    vf = value_iteration(m, spec.reward)
    got = policy_values(m, extract_policy(vf), spec.reward)
    best = max(
        policy_values(m, StationaryPolicy(tuple((c >> i) & 1 for i in range(m.n))), spec.reward)[0]
        for c in range(2**m.n)
    )
    assert got[0] >= best - 1e-10
