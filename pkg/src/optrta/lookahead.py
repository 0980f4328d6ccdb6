"""Lookahead switching policies and recoverable sets on finite plants."""

from __future__ import annotations

from dataclasses import dataclass

from .errors import PreconditionError
from .plant import SAFE, UNTRUSTED, Plant, StationaryPolicy, UnsafeSet, is_safe_policy


@dataclass(frozen=True)
class RecoverableSet:
    """A safe set closed under the safety action; ``iterations`` counts removal sweeps."""

    members: frozenset[int]
    iterations: int

    def __contains__(self, q) -> bool:
        return int(q) in self.members

    def __iter__(self):
        return iter(sorted(self.members))

    def __len__(self) -> int:
        return len(self.members)


def _su(plant: Plant) -> tuple[int, int]:
    if not plant.deterministic:
        raise PreconditionError("lookahead policies need a deterministic plant")
    return plant.action_index(SAFE), plant.action_index(UNTRUSTED)


def recoverable_set(plant: Plant, unsafe: UnsafeSet) -> RecoverableSet:
    """Largest subset of the safe states closed under ``delta(., S)`` (greatest fixpoint)."""
    s, _ = _su(plant)
    current = set(range(plant.n)) - set(unsafe.members)
    iterations = 0
    while True:
        keep = {q for q in current if int(plant.delta[q, s]) in current}
        if keep == current:
            return RecoverableSet(frozenset(current), iterations)
        current = keep
        iterations += 1


def lookahead_policy(plant: Plant, P) -> StationaryPolicy:
    """Choose U exactly when the U-successor lies in ``P``."""
    s, u = _su(plant)
    members = set(int(q) for q in P)
    choice = [u if int(plant.delta[q, u]) in members else s for q in range(plant.n)]
    return StationaryPolicy(tuple(choice), plant.m)


def safe_set_lookahead(plant: Plant, unsafe: UnsafeSet) -> StationaryPolicy:
    return lookahead_policy(plant, set(range(plant.n)) - set(unsafe.members))


@dataclass(frozen=True)
class Prop1Check:
    holds: bool
    vacuous: bool
    recoverable: RecoverableSet
    policy: StationaryPolicy

    def __bool__(self) -> bool:
        return self.holds


def verify_proposition1(plant: Plant, unsafe: UnsafeSet) -> Prop1Check:
    """Check that the lookahead policy over the largest recoverable set is safe.

    When the initial state is outside the recoverable set there is nothing to
    check; the result is then true with ``vacuous`` set.
    """
    R = recoverable_set(plant, unsafe)
    pol = lookahead_policy(plant, R.members)
    if plant.initial not in R:
        return Prop1Check(True, True, R, pol)
    return Prop1Check(is_safe_policy(plant, pol, unsafe), False, R, pol)


# ----------------------------------------------------------- continuous Acc set


def acc_braking_margin(gap: float, v: float, v_lead: float, c: float, a_max: float) -> float:
    """``gap - c - max(0, v - v_lead)^2 / (2 a_max)``; positive inside the recoverable set.

    ``gap`` is the leader position minus the follower position.
    """
    closing = max(0.0, v - v_lead)
    return gap - c - closing * closing / (2.0 * a_max)


def acc_in_recoverable(gap: float, v: float, v_lead: float, c: float, a_max: float) -> bool:
    return acc_braking_margin(gap, v, v_lead, c, a_max) > 0.0
