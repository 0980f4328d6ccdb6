"""Finite plants and MDPs, runs, switching policies, run rewards and safety.

States and actions are dense integer indices; names live in side tables.
A :class:`Plant` has a deterministic transition table ``delta[q, a]``; an
:class:`Mdp` has a transition tensor ``prob[q, a, q']``.
"""

from __future__ import annotations

import math
from collections.abc import Callable, Iterable, Sequence
from dataclasses import dataclass, field
from typing import Protocol, Union

import numpy as np

from .errors import PreconditionError

SAFE = "S"
UNTRUSTED = "U"

_PROB_TOL = 1e-12


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Plant:
    """Deterministic finite plant ``(Q, q0, A, delta)``."""

    states: tuple[str, ...]
    initial: int
    actions: tuple[str, ...]
    delta: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "states", tuple(self.states))
        object.__setattr__(self, "actions", tuple(self.actions))
        delta = np.asarray(self.delta, dtype=np.int64)
        n, m = len(self.states), len(self.actions)
        if n < 1:
            raise PreconditionError("a plant needs at least one state")
        if m < 1:
            raise PreconditionError("a plant needs at least one action")
        if delta.shape != (n, m):
            raise PreconditionError(f"transition table has shape {delta.shape}, expected {(n, m)}")
        if delta.min() < 0 or delta.max() >= n:
            raise PreconditionError("transition table refers to an unknown state")
        if not 0 <= self.initial < n:
            raise PreconditionError(f"initial state index {self.initial} out of range")
        object.__setattr__(self, "delta", _frozen(delta))

    deterministic = True

    @property
    def n(self) -> int:
        return len(self.states)

    @property
    def m(self) -> int:
        return len(self.actions)

    def state_index(self, name: str) -> int:
        return _index(self.states, name, "state")

    def action_index(self, name: str) -> int:
        return _index(self.actions, name, "action")

    def successors(self, q: int, a: int) -> list[tuple[int, float]]:
        return [(int(self.delta[q, a]), 1.0)]

    def transition_prob(self, q: int, a: int, q2: int) -> float:
        return 1.0 if self.delta[q, a] == q2 else 0.0

    def to_mdp(self) -> Mdp:
        prob = np.zeros((self.n, self.m, self.n))
        for q in range(self.n):
            for a in range(self.m):
                prob[q, a, self.delta[q, a]] = 1.0
        return Mdp(self.states, self.initial, self.actions, prob)


@dataclass(frozen=True, eq=False)
class Mdp:
    """Finite MDP: like :class:`Plant` but ``prob[q, a]`` is a distribution over states."""

    states: tuple[str, ...]
    initial: int
    actions: tuple[str, ...]
    prob: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "states", tuple(self.states))
        object.__setattr__(self, "actions", tuple(self.actions))
        prob = np.asarray(self.prob, dtype=float)
        n, m = len(self.states), len(self.actions)
        if n < 1 or m < 1:
            raise PreconditionError("an MDP needs at least one state and one action")
        if prob.shape != (n, m, n):
            raise PreconditionError(f"transition tensor has shape {prob.shape}, expected {(n, m, n)}")
        if np.any(prob < 0.0) or np.any(prob > 1.0):
            raise PreconditionError("transition probabilities must lie in [0, 1]")
        sums = prob.sum(axis=2)
        bad = np.argwhere(np.abs(sums - 1.0) > _PROB_TOL)
        if len(bad):
            q, a = bad[0]
            raise PreconditionError(
                f"distribution for ({self.states[q]}, {self.actions[a]}) sums to {sums[q, a]!r}, not 1"
            )
        if not 0 <= self.initial < n:
            raise PreconditionError(f"initial state index {self.initial} out of range")
        object.__setattr__(self, "prob", _frozen(prob))

    deterministic = False

    @property
    def n(self) -> int:
        return len(self.states)

    @property
    def m(self) -> int:
        return len(self.actions)

    def state_index(self, name: str) -> int:
        return _index(self.states, name, "state")

    def action_index(self, name: str) -> int:
        return _index(self.actions, name, "action")

    def successors(self, q: int, a: int) -> list[tuple[int, float]]:
        row = self.prob[q, a]
        return [(int(t), float(row[t])) for t in np.flatnonzero(row)]

    def transition_prob(self, q: int, a: int, q2: int) -> float:
        return float(self.prob[q, a, q2])

    def min_nonzero_prob(self) -> float:
        return float(self.prob[self.prob > 0.0].min())


Model = Union[Plant, Mdp]


def _index(names: Sequence[str], name: str | int, kind: str) -> int:
    if isinstance(name, (int, np.integer)):
        if not 0 <= name < len(names):
            raise PreconditionError(f"{kind} index {name} out of range")
        return int(name)
    try:
        return names.index(name)
    except ValueError:
        raise PreconditionError(f"unknown {kind} {name!r}") from None


@dataclass(frozen=True)
class UnsafeSet:
    """The unsafe states, stored as a frozen set of indices."""

    members: frozenset[int] = field(default_factory=frozenset)

    def __post_init__(self):
        object.__setattr__(self, "members", frozenset(int(q) for q in self.members))

    @classmethod
    def of(cls, model: Model, names: Iterable[str | int]) -> UnsafeSet:
        return cls(frozenset(model.state_index(x) for x in names))

    def __contains__(self, q) -> bool:
        return int(q) in self.members

    def __iter__(self):
        return iter(sorted(self.members))

    def __len__(self) -> int:
        return len(self.members)

    def mask(self, n: int) -> np.ndarray:
        out = np.zeros(n, dtype=bool)
        for q in self.members:
            if q >= n:
                raise PreconditionError(f"unsafe state {q} outside a {n}-state model")
            out[q] = True
        return out


@dataclass(frozen=True, eq=False)
class RewardStructure:
    """Reward table ``r[q, a]`` with discount ``gamma`` in (0, 1)."""

    table: np.ndarray
    gamma: float

    def __post_init__(self):
        if not 0.0 < self.gamma < 1.0:
            raise PreconditionError(f"discount must lie in (0, 1), got {self.gamma}")
        table = np.asarray(self.table, dtype=float)
        if table.ndim != 2:
            raise PreconditionError("reward table must be 2-D (state x action)")
        if not np.all(np.isfinite(table)):
            raise PreconditionError("reward table must be finite")
        object.__setattr__(self, "table", _frozen(table))

    @property
    def r_max(self) -> float:
        return float(self.table.max())

    def reward(self, q: int, a: int) -> float:
        return float(self.table[q, a])

    def scaled(self, c: float) -> RewardStructure:
        return RewardStructure(self.table * c, self.gamma)


def untrusted_reward(model: Model, gamma: float, value: float = 1.0) -> RewardStructure:
    """The reward that pays ``value`` for every use of the untrusted action."""
    table = np.zeros((model.n, model.m))
    table[:, model.action_index(UNTRUSTED)] = value
    return RewardStructure(table, gamma)


@dataclass(frozen=True)
class FiniteRun:
    """Finite run ``p0, a0, p1, ..., pk``; ``len(run)`` is the number of transitions."""

    states: tuple[int, ...]
    actions: tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "states", tuple(int(s) for s in self.states))
        object.__setattr__(self, "actions", tuple(int(a) for a in self.actions))
        if len(self.states) != len(self.actions) + 1:
            raise PreconditionError("a finite run alternates states and actions and ends in a state")

    def __len__(self) -> int:
        return len(self.actions)

    @property
    def last(self) -> int:
        return self.states[-1]

    def prefix(self, i: int) -> FiniteRun:
        return FiniteRun(self.states[: i + 1], self.actions[:i])

    def extend(self, a: int, q: int) -> FiniteRun:
        return FiniteRun(self.states + (q,), self.actions + (a,))

    def named(self, model: Model) -> list[str]:
        out = [model.states[self.states[0]]]
        for a, q in zip(self.actions, self.states[1:]):
            out += [model.actions[a], model.states[q]]
        return out


class HistoryPolicy(Protocol):
    """Anything mapping a finite run to a distribution over actions."""

    def action_probs(self, run: FiniteRun) -> Sequence[float]: ...


@dataclass(frozen=True)
class StationaryPolicy:
    """Memoryless deterministic policy ``choice[q]``."""

    choice: tuple[int, ...]
    n_actions: int = 2

    def __post_init__(self):
        object.__setattr__(self, "choice", tuple(int(a) for a in self.choice))
        if any(not 0 <= a < self.n_actions for a in self.choice):
            raise PreconditionError("stationary policy chooses an unknown action")

    @classmethod
    def constant(cls, model: Model, action: str | int) -> StationaryPolicy:
        a = model.action_index(action)
        return cls((a,) * model.n, model.m)

    @classmethod
    def from_names(cls, model: Model, mapping: dict[str, str]) -> StationaryPolicy:
        choice = [0] * model.n
        for s, a in mapping.items():
            choice[model.state_index(s)] = model.action_index(a)
        return cls(tuple(choice), model.m)

    def __getitem__(self, q: int) -> int:
        return self.choice[q]

    def __len__(self) -> int:
        return len(self.choice)

    def action_probs(self, run: FiniteRun) -> list[float]:
        probs = [0.0] * self.n_actions
        probs[self.choice[run.last]] = 1.0
        return probs

    def named(self, model: Model) -> dict[str, str]:
        return {model.states[q]: model.actions[a] for q, a in enumerate(self.choice)}


class FunctionPolicy:
    """Wraps ``fn(run) -> action distribution`` as a history policy."""

    def __init__(self, fn: Callable[[FiniteRun], Sequence[float]]):
        self._fn = fn

    def action_probs(self, run: FiniteRun) -> Sequence[float]:
        return self._fn(run)


class UniformPolicy:
    def __init__(self, n_actions: int):
        self.n_actions = n_actions

    def action_probs(self, run: FiniteRun) -> list[float]:
        return [1.0 / self.n_actions] * self.n_actions


def _check_distribution(probs: Sequence[float], m: int) -> None:
    if len(probs) != m:
        raise PreconditionError(f"policy returned {len(probs)} probabilities for {m} actions")
    if abs(math.fsum(probs) - 1.0) > _PROB_TOL or min(probs) < 0.0:
        raise PreconditionError(f"policy returned an invalid distribution {list(probs)}")


# --------------------------------------------------------------------- ops


def step(plant: Plant, q: int, a: int) -> int:
    """One deterministic transition ``delta(q, a)``."""
    if not 0 <= q < plant.n:
        raise PreconditionError(f"state index {q} out of range")
    if not 0 <= a < plant.m:
        raise PreconditionError(f"action index {a} out of range")
    return int(plant.delta[q, a])


def generate_run(model: Model, policy: HistoryPolicy, horizon: int, rng_seed: int = 0) -> FiniteRun:
    """Sample a run with exactly ``horizon`` transitions; deterministic for a fixed seed."""
    if horizon < 0:
        raise PreconditionError("horizon must be non-negative")
    rng = np.random.default_rng(rng_seed)
    states = [model.initial]
    actions: list[int] = []
    run = FiniteRun((model.initial,))
    for _ in range(horizon):
        probs = policy.action_probs(run)
        _check_distribution(probs, model.m)
        a = _draw(probs, rng.random())
        succ = model.successors(run.last, a)
        if len(succ) == 1:
            q = succ[0][0]
        else:
            q = _draw([p for _, p in succ], rng.random(), [t for t, _ in succ])
        states.append(q)
        actions.append(a)
        run = FiniteRun(tuple(states), tuple(actions))
    return run


def _draw(probs: Sequence[float], u: float, labels: Sequence[int] | None = None) -> int:
    acc = 0.0
    last = 0
    for i, p in enumerate(probs):
        if p <= 0.0:
            continue
        last = i
        acc += p
        if u < acc:
            return labels[i] if labels is not None else i
    return labels[last] if labels is not None else last


def run_reward(run: FiniteRun, rs) -> float:
    """Discounted reward ``sum_i gamma^i r(p_i, a_i)`` of a finite run."""
    g = rs.gamma
    table = rs.table
    return math.fsum(g**i * float(table[p, a]) for i, (p, a) in enumerate(zip(run.states, run.actions)))


def _unique_run_until_repeat(plant: Plant, policy: StationaryPolicy) -> tuple[list[int], int]:
    """States of the unique run up to (not including) the first repeated state, and its first index."""
    seen: dict[int, int] = {}
    states: list[int] = []
    q = plant.initial
    while q not in seen:
        seen[q] = len(states)
        states.append(q)
        q = int(plant.delta[q, policy[q]])
    return states, seen[q]


def stationary_policy_value(plant: Plant, policy: StationaryPolicy, rs) -> float:
    """Exact infinite-horizon discounted reward of a stationary policy on a plant.

    The unique run is eventually periodic: a prefix of length ``s`` followed by
    a cycle of length ``L``; value = prefix + gamma^s * C / (1 - gamma^L).
    """
    if not plant.deterministic:
        raise PreconditionError("stationary_policy_value needs a deterministic plant")
    g = rs.gamma
    table = rs.table
    states, start = _unique_run_until_repeat(plant, policy)
    rewards = [float(table[q, policy[q]]) for q in states]
    prefix = math.fsum(g**i * rewards[i] for i in range(start))
    cycle_len = len(states) - start
    cycle = math.fsum(g**j * rewards[start + j] for j in range(cycle_len))
    return prefix + g**start * cycle / (1.0 - g**cycle_len)


def cylinder_probability(model: Model, policy: HistoryPolicy, tau: FiniteRun) -> float:
    """Probability of the cylinder set of ``tau`` under ``policy``.

    For an MDP each factor also carries the transition probability; a ``tau``
    inconsistent with the model's support has probability 0.
    """
    if tau.states[0] != model.initial:
        raise PreconditionError("the run must start in the initial state")
    p = 1.0
    for i, a in enumerate(tau.actions):
        probs = policy.action_probs(tau.prefix(i))
        p *= float(probs[a])
        if p == 0.0:
            return 0.0
        p *= model.transition_prob(tau.states[i], a, tau.states[i + 1])
        if p == 0.0:
            return 0.0
    return p


def is_safe_policy(model: Model, policy: StationaryPolicy, unsafe: UnsafeSet) -> bool:
    """True iff the policy reaches an unsafe state with probability 0."""
    if model.deterministic:
        q = model.initial
        for _ in range(model.n + 1):
            if q in unsafe:
                return False
            q = int(model.delta[q, policy[q]])
        return True
    seen = {model.initial}
    frontier = [model.initial]
    while frontier:
        q = frontier.pop()
        if q in unsafe:
            return False
        for t in np.flatnonzero(model.prob[q, policy[q]]):
            t = int(t)
            if t not in seen:
                seen.add(t)
                frontier.append(t)
    return True
