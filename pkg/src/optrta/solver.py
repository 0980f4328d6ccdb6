"""Exact synthesis on finite plants and MDPs.

Value iteration plus greedy extraction, an exhaustive oracle over stationary
policies, and the shaping pipeline that returns a safe optimal policy or a
certificate that none exists.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._backend import kernels
from .errors import InternalGuardError, PreconditionError, RefusalError
from .fixtures import PlantSpec, read_structured, write_structured
from .plant import (
    UNTRUSTED,
    Model,
    RewardStructure,
    StationaryPolicy,
    UnsafeSet,
    is_safe_policy,
    stationary_policy_value,
)
from .shaping import SafetyVerdict, ShapedReward, certify, shape_for

DEFAULT_TOL = 1e-10
MAX_ITER = 10_000_000
ENUMERATION_LIMIT = 1_000_000
_REL_TIE = 1e-12


@dataclass(frozen=True, eq=False)
class ValueFunction:
    v: np.ndarray
    q: np.ndarray
    residual: float
    iterations: int
    gamma: float
    threshold: float
    untrusted: int | None = None


def value_iteration(model: Model, rs, tol: float = DEFAULT_TOL, max_iter: int = MAX_ITER) -> ValueFunction:
    """Bellman iteration until the sup-norm change is at most ``tol (1 - gamma) / (2 gamma)``.

    That threshold keeps the greedy policy within ``tol`` of optimal.
    """
    if not tol > 0.0:
        raise PreconditionError(f"tol must be positive, got {tol}")
    g = rs.gamma
    rew = np.ascontiguousarray(rs.table, dtype=float)
    if rew.shape != (model.n, model.m):
        raise PreconditionError(f"reward table shape {rew.shape} does not match model {(model.n, model.m)}")
    thr = tol * (1.0 - g) / (2.0 * g)
    if model.deterministic:
        nxt = np.ascontiguousarray(model.delta, dtype=np.int64)
        v, q, it, res = kernels.value_iteration_det(nxt, rew, g, thr, max_iter)
    else:
        P = np.ascontiguousarray(model.prob, dtype=float)
        v, q, it, res = kernels.value_iteration_prob(P, rew, g, thr, max_iter)
    if res > thr:
        raise InternalGuardError(f"value iteration hit the {max_iter}-iteration cap (residual {res:g})")
    u = model.actions.index(UNTRUSTED) if UNTRUSTED in model.actions else None
    return ValueFunction(np.asarray(v), np.asarray(q), float(res), int(it), g, thr, u)


def extract_policy(vf: ValueFunction) -> StationaryPolicy:
    """Greedy policy; near-ties go to the untrusted action, then to the lowest index.

    Two actions count as tied when their Q-values differ by less than the
    error bound left by value iteration (or a relative 1e-12).
    """
    q = vf.q
    n, m = q.shape
    g = vf.gamma
    slack = 2.0 * g * g * vf.residual / (1.0 - g)
    order = list(range(m))
    if vf.untrusted is not None:
        order.remove(vf.untrusted)
        order.insert(0, vf.untrusted)
    choice = []
    for s in range(n):
        best = float(q[s].max())
        tie = max(slack, _REL_TIE * abs(best))
        choice.append(next(a for a in order if q[s, a] >= best - tie))
    return StationaryPolicy(tuple(choice), m)


def policy_values(model: Model, policy: StationaryPolicy, rs) -> np.ndarray:
    """Value of a stationary policy from every state, by a direct linear solve."""
    n = model.n
    idx = np.arange(n)
    a = np.array(policy.choice)
    r = np.asarray(rs.table)[idx, a]
    if model.deterministic:
        P = np.zeros((n, n))
        P[idx, np.asarray(model.delta)[idx, a]] = 1.0
    else:
        P = np.asarray(model.prob)[idx, a, :]
    return np.linalg.solve(np.eye(n) - rs.gamma * P, r)


def _policy_value(model: Model, policy: StationaryPolicy, rs) -> float:
    if model.deterministic:
        return stationary_policy_value(model, policy, rs)
    return float(policy_values(model, policy, rs)[model.initial])


def brute_force_best_safe(
    plant: Model, rs: RewardStructure, unsafe: UnsafeSet
) -> tuple[StationaryPolicy, float] | None:
    """Best safe stationary policy by exhaustive enumeration, or None if none is safe."""
    total = plant.m**plant.n
    if total > ENUMERATION_LIMIT:
        raise RefusalError(f"{plant.m}^{plant.n} = {total} stationary policies exceeds {ENUMERATION_LIMIT}")
    best: tuple[StationaryPolicy, float] | None = None
    for choice in itertools.product(range(plant.m), repeat=plant.n):
        pol = StationaryPolicy(choice, plant.m)
        if not is_safe_policy(plant, pol, unsafe):
            continue
        val = _policy_value(plant, pol, rs)
        if best is None or val > best[1]:
            best = (pol, val)
    return best


@dataclass(frozen=True, eq=False)
class SynthesisResult:
    policy: StationaryPolicy
    shaped_value: float
    verdict: SafetyVerdict
    unshaped_value: float
    shaped: ShapedReward
    value_function: ValueFunction
    residual: float = 0.0


def synthesize_safe_optimal(
    plant: Model, rs: RewardStructure, unsafe: UnsafeSet, tol: float = DEFAULT_TOL, n: int | None = None
) -> SynthesisResult:
    """Shape, solve, extract, then certify from the policy's exact shaped value at the initial state.

    For MDPs the value comes from a linear solve.  Its residual
    ``|(I - gamma P) v - r|`` bounds the solve error by ``residual / (1 - gamma)``,
    and the verdict tolerates that bound (plus rounding in the residual itself).
    """
    shaped = shape_for(plant, rs, unsafe, n)
    vf = value_iteration(plant, shaped, tol)
    policy = extract_policy(vf)
    residual = bound = 0.0
    if plant.deterministic:
        shaped_value = stationary_policy_value(plant, policy, shaped)
        unshaped_value = stationary_policy_value(plant, policy, rs)
    else:
        vs = policy_values(plant, policy, shaped)
        shaped_value = float(vs[plant.initial])
        unshaped_value = float(policy_values(plant, policy, rs)[plant.initial])
        idx = np.arange(plant.n)
        a = np.array(policy.choice)
        Pp = np.asarray(plant.prob)[idx, a, :]
        r = np.asarray(shaped.table)[idx, a]
        residual = float(np.max(np.abs(vs - shaped.gamma * Pp @ vs - r)))
        scale = float(np.max(np.abs(r))) + float(np.max(np.abs(vs)))
        bound = (residual + 8.0 * np.finfo(float).eps * scale) / (1.0 - shaped.gamma)
    verdict = certify(shaped_value, bound)
    return SynthesisResult(policy, shaped_value, verdict, unshaped_value, shaped, vf, residual)


def synthesize_spec(spec: PlantSpec, tol: float = DEFAULT_TOL) -> SynthesisResult:
    return synthesize_safe_optimal(spec.model, spec.reward, spec.unsafe, tol)


# ------------------------------------------------------------------ policy files


def policy_to_dict(model: Model, result: SynthesisResult) -> dict:
    return {
        "policy": result.policy.named(model),
        "verdict": str(result.verdict),
        "value": result.unshaped_value,
        "shaped_value": result.shaped_value,
        "gamma": result.shaped.gamma,
        "penalty": result.shaped.penalty,
    }


def save_policy(model: Model, result: SynthesisResult, path: str | Path) -> None:
    write_structured(policy_to_dict(model, result), path)


def load_policy(model: Model, path: str | Path) -> tuple[StationaryPolicy, dict]:
    data = read_structured(path)
    mapping = data.get("policy", {})
    missing = [s for s in model.states if s not in mapping]
    if missing:
        raise PreconditionError(f"{path}: policy has no action for states {missing}")
    return StationaryPolicy.from_names(model, mapping), {k: v for k, v in data.items() if k != "policy"}


def geometric_tail(gamma: float, horizon: int, r_max: float) -> float:
    """Upper bound on the reward a run can collect after ``horizon`` steps."""
    return gamma**horizon * abs(r_max) / (1.0 - gamma)

