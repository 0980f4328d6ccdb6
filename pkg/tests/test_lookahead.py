import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from optrta.errors import PreconditionError
from optrta.fixtures import random_plant
from optrta.lookahead import (
    acc_braking_margin,
    acc_in_recoverable,
    lookahead_policy,
    recoverable_set,
    safe_set_lookahead,
    verify_proposition1,
)
from optrta.plant import Mdp, Plant, UnsafeSet, is_safe_policy

seeds = st.integers(0, 2**32 - 1)


def test_recoverable_sets(left, right):
    for spec in (left, right):
        R = recoverable_set(spec.model, spec.unsafe)
        assert [spec.model.states[q] for q in R] == ["q0"]
        assert R.iterations == 1


def test_no_unsafe_states_keeps_everything():
    plant = Plant(("a", "b", "c"), 0, ("S", "U"), np.array([[0, 1], [1, 2], [2, 0]]))
    R = recoverable_set(plant, UnsafeSet())
    assert set(R) == {0, 1, 2} and R.iterations == 0


def test_lookahead_examples(left, right):
    L = left.model
    assert safe_set_lookahead(L, left.unsafe).named(L)["q0"] == "U"
    R = right.model
    pol = lookahead_policy(R, {R.state_index("q0")}).named(R)
    assert pol["q0"] == "S" and pol["q1"] == "U"
    assert set(lookahead_policy(R, set()).named(R).values()) == {"S"}


def test_proposition1_on_fixtures(left, right):
    for spec in (left, right):
        chk = verify_proposition1(spec.model, spec.unsafe)
        assert chk and not chk.vacuous


def test_needs_deterministic_plant():
    prob = np.zeros((1, 2, 1))
    prob[..., 0] = 1.0
    with pytest.raises(PreconditionError):
        recoverable_set(Mdp(("a",), 0, ("S", "U"), prob), UnsafeSet())


@given(seeds)
def test_recoverable_set_is_closed_and_safe(seed):
    spec = random_plant(np.random.default_rng(seed))
    m = spec.model
    R = recoverable_set(m, spec.unsafe)
    for q in R:
        assert q not in spec.unsafe
        assert int(m.delta[q, 0]) in R


@given(seeds)
def test_recoverable_set_is_largest(seed):
    # every closed safe subset lies inside R
    spec = random_plant(np.random.default_rng(seed))
    m = spec.model
    R = set(recoverable_set(m, spec.unsafe))
    for mask in range(1, 2**m.n):
        sub = {q for q in range(m.n) if mask >> q & 1}
        closed = all(q not in spec.unsafe and int(m.delta[q, 0]) in sub for q in sub)
        if closed:
            assert sub <= R


@given(seeds)
def test_recoverable_lookahead_is_safe(seed):
    spec = random_plant(np.random.default_rng(seed))
    chk = verify_proposition1(spec.model, spec.unsafe)
    assert chk
    if not chk.vacuous:
        assert is_safe_policy(spec.model, chk.policy, spec.unsafe)


def test_acc_margin():
    assert acc_braking_margin(10.0, 5.0, 5.0, 3.0, 2.0) == 7.0
    # closing at 4 m/s needs 16 / 4 = 4 m to brake
    assert acc_braking_margin(10.0, 9.0, 5.0, 3.0, 2.0) == 3.0
    assert not acc_in_recoverable(7.0, 9.0, 5.0, 3.0, 2.0)
