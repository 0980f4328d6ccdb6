"""Worked counterexamples on the built-in plants, with every number computed."""

from __future__ import annotations

import itertools
import math

import numpy as np

from .fixtures import PlantSpec, fixture
from .lookahead import lookahead_policy, recoverable_set, safe_set_lookahead
from .plant import (
    SAFE,
    UNTRUSTED,
    FiniteRun,
    FunctionPolicy,
    RewardStructure,
    StationaryPolicy,
    generate_run,
    run_reward,
    stationary_policy_value,
)
from .solver import synthesize_spec


def first_violation(run: FiniteRun, unsafe) -> int | None:
    for i, q in enumerate(run.states):
        if q in unsafe:
            return i
    return None


def alternate_then_goal(model, k: int) -> FunctionPolicy:
    """U for the first ``2k`` steps, S once, then U forever (history-dependent)."""
    s, u = model.action_index(SAFE), model.action_index(UNTRUSTED)

    def probs(run: FiniteRun):
        out = [0.0] * model.m
        out[s if len(run) == 2 * k else u] = 1.0
        return out

    return FunctionPolicy(probs)


def truncation_horizon(gamma: float, r_max: float, eps: float = 1e-15) -> int:
    """Steps after which the discounted tail is below ``eps``."""
    if r_max <= 0:
        return 1
    return max(1, math.ceil(math.log(eps * (1.0 - gamma) / r_max) / math.log(gamma)))


def truncated_value(model, policy, rs: RewardStructure, horizon: int | None = None) -> float:
    horizon = horizon or truncation_horizon(rs.gamma, rs.r_max)
    return run_reward(generate_run(model, policy, horizon), rs)


def reaches(model, policy: StationaryPolicy, goal) -> bool:
    """Whether the unique run of a stationary policy on a plant visits ``goal``."""
    q, seen = model.initial, set()
    while q not in seen:
        if q in goal:
            return True
        seen.add(q)
        q = int(model.delta[q, policy[q]])
    return False


def stationary_policies(model):
    for choice in itertools.product(range(model.m), repeat=model.n):
        yield StationaryPolicy(choice, model.m)


def reward_state_structure(spec: PlantSpec, state: str = "qr") -> RewardStructure:
    """Reward 1 for any action taken in ``state`` and 0 elsewhere."""
    model = spec.model
    table = np.zeros((model.n, model.m))
    table[model.state_index(state), :] = 1.0
    return RewardStructure(table, spec.reward.gamma)


# --------------------------------------------------------------- narratives


def fig2_left(spec: PlantSpec | None = None) -> list[str]:
    spec = spec or fixture("fig2-left")
    m, unsafe = spec.model, spec.unsafe
    pol = safe_set_lookahead(m, unsafe)
    run = generate_run(m, pol, m.n - 1)
    hit = first_violation(run, unsafe)
    R = recoverable_set(m, unsafe)
    res = synthesize_spec(spec)
    return [
        "Lookahead on the safe set chooses U whenever the U-successor is safe.",
        f"  run: {' '.join(run.named(m))}",
        f"  unsafe state reached at step {hit}" if hit is not None else "  no violation",
        f"Largest recoverable set: {{{', '.join(m.states[q] for q in R)}}} ({R.iterations} removal sweeps)",
        f"  recoverable lookahead policy: {lookahead_policy(m, R.members).named(m)}",
        f"Shaped synthesis: {res.policy.named(m)}, verdict {res.verdict}, value {res.unshaped_value!r}",
    ]


def fig2_right(spec: PlantSpec | None = None) -> list[str]:
    spec = spec or fixture("fig2-right")
    m, unsafe, rs = spec.model, spec.unsafe, spec.reward
    R = recoverable_set(m, unsafe)
    pi_r = lookahead_policy(m, R.members)
    always_u = StationaryPolicy.constant(m, UNTRUSTED)
    res = synthesize_spec(spec)
    return [
        f"Largest recoverable set: {{{', '.join(m.states[q] for q in R)}}}",
        f"  recoverable lookahead policy {pi_r.named(m)} earns {stationary_policy_value(m, pi_r, rs)!r}",
        f"Always-U never leaves {{q0, q1}} and earns {stationary_policy_value(m, always_u, rs)!r}"
        f" (1/(1-gamma) = {1.0 / (1.0 - rs.gamma)!r})",
        f"Shaped synthesis: {res.policy.named(m)}, verdict {res.verdict}, value {res.unshaped_value!r}",
    ]


def sec6_goal(spec: PlantSpec | None = None, ks=range(1, 6)) -> list[str]:
    spec = spec or fixture("sec6-goal")
    m, rs = spec.model, spec.reward
    g = rs.gamma
    sup = 1.0 / (1.0 - g)
    lines = [f"Reward 1 per U step; supremum over goal-reaching policies is 1/(1-gamma) = {sup!r}"]
    for k in ks:
        v = truncated_value(m, alternate_then_goal(m, k), rs)
        lines.append(f"  alternate {k}x then goal: {v!r}   1/(1-gamma) - gamma^(2k) = {sup - g ** (2 * k)!r}")
    literal = reward_state_structure(spec)
    reaching = [p for p in stationary_policies(m) if reaches(m, p, spec.goal)]
    best = max(reaching, key=lambda p: stationary_policy_value(m, p, rs))
    lit = max(stationary_policy_value(m, p, literal) for p in reaching)
    lines.append(f"{len(reaching)} of {m.m ** m.n} stationary policies reach the goal")
    lines.append(f"  best under U-rewards {best.named(m)} earns {stationary_policy_value(m, best, rs)!r} < {sup!r}")
    lines.append(f"  with reward only in qr the best earns {lit!r}: no stationary policy attains the supremum")
    return lines


DEMOS = {"fig2-left": fig2_left, "fig2-right": fig2_right, "sec6-goal": sec6_goal}
