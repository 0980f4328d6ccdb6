"""Lookahead switching baselines.

``sim_rta_decide`` rolls sampled states forward under U and allows U when
every sample stays in the check set.  ``reach_rta_decide`` does the same
with guaranteed interval over-approximations of the reachable states.  The
check set is either the safe set or, for Acc, the braking-distance
recoverable set.  Fleet decisions are joint: all agents get U or all get S.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import interval as iv
from ._backend import kernels
from .dynamics import ACC, AIR, ANGLE_IDX
from .errors import PreconditionError
from .lookahead import acc_braking_margin
from .scenarios.config import LookaheadConfig, ScenarioConfig
from .scenarios.env import (
    S,
    U,
    ScenarioState,
    advance_follower,
    follower_input_box,
    leader_state,
    position,
    unsafe_distance,
)


@dataclass(frozen=True)
class ReachBox:
    lo: np.ndarray
    hi: np.ndarray
    step: int
    exploded: bool = False

    def __post_init__(self):
        if np.any(self.lo > self.hi):
            raise PreconditionError("reach box has lo > hi")

    def contains(self, state, model: int, slack: float = 0.0) -> bool:
        angles = ANGLE_IDX[model]
        for i, x in enumerate(state):
            a, b = self.lo[i] - slack, self.hi[i] + slack
            if i in angles:
                if not iv.contains_angle((a, b), float(x)):
                    return False
            elif not a <= x <= b:
                return False
        return True

    def width(self) -> np.ndarray:
        return self.hi - self.lo


def _infinite(dim: int, step: int) -> ReachBox:
    return ReachBox(np.full(dim, -math.inf), np.full(dim, math.inf), step, True)


def interval_reach(
    cfg: ScenarioConfig,
    box: ReachBox,
    steps: int,
    lk: LookaheadConfig | None = None,
    mode: int = U,
    agent: int = 0,
) -> list[ReachBox]:
    """Boxes enclosing every trajectory from ``box`` at each of the next ``steps`` decisions.

    The controller is evaluated once per decision on the whole box (zero-order
    hold), then the flow is enclosed by interval Euler sub-steps of length
    ``dt / lk.substeps_per_dt``.  Once a box fails to enclose or grows past
    ``lk.max_width`` the remaining boxes are unbounded and flagged.
    """
    lk = lk or cfg.lookahead
    model = cfg.model
    dim = cfg.state_dim
    vi = dim - 1
    vlo, vhi = cfg.v_bounds
    h = cfg.dt / lk.substeps_per_dt
    nsub = cfg.control_period * lk.substeps_per_dt
    lo = np.array(box.lo, dtype=float)
    hi = np.array(box.hi, dtype=float)
    out: list[ReachBox] = []
    for j in range(steps):
        k = box.step + j
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            out.extend(_infinite(dim, box.step + i + 1) for i in range(j, steps))
            break
        leader = leader_state(cfg, k)
        X = list(zip(lo.tolist(), hi.tolist()))
        Ub = follower_input_box(cfg, leader, X, mode, agent)
        ulo = [u[0] for u in Ub]
        uhi = [u[1] for u in Ub]
        nlo, nhi, ok = kernels.enclose_period(model, lo, hi, ulo, uhi, h, nsub, lk.pad)
        if not ok or np.any(nhi - nlo > lk.max_width):
            out.extend(_infinite(dim, box.step + i + 1) for i in range(j, steps))
            break
        nlo = np.asarray(nlo)
        nhi = np.asarray(nhi)
        # the speed clamp is monotone, so clamping the bounds encloses the clamped states
        nlo[vi] = min(max(nlo[vi], vlo), vhi)
        nhi[vi] = min(max(nhi[vi], vlo), vhi)
        lo, hi = nlo, nhi
        out.append(ReachBox(lo.copy(), hi.copy(), k + 1))
    return out


# ------------------------------------------------------------- box geometry


def _box_point_distance(lo, hi, p) -> float:
    """Lower bound on the distance from any point of the box to ``p``."""
    acc = 0.0
    for a, b, x in zip(lo, hi, p):
        if x < a:
            acc += iv.dn(a - x) ** 2
        elif x > b:
            acc += iv.dn(x - b) ** 2
    return iv.dn(math.sqrt(acc)) if acc > 0 else 0.0


def _box_box_distance(lo1, hi1, lo2, hi2) -> float:
    acc = 0.0
    for a1, b1, a2, b2 in zip(lo1, hi1, lo2, hi2):
        if b1 < a2:
            acc += iv.dn(a2 - b1) ** 2
        elif b2 < a1:
            acc += iv.dn(a1 - b2) ** 2
    return iv.dn(math.sqrt(acc)) if acc > 0 else 0.0


def _pos_slice(cfg: ScenarioConfig, arr):
    return position(cfg, arr)


def box_is_safe(cfg: ScenarioConfig, boxes: list[ReachBox], leader, check_set: str = "safe") -> bool:
    """Conservative test: False whenever some state in the boxes might be unsafe."""
    if any(b.exploded for b in boxes):
        return False
    c = cfg.gains.c
    lp = position(cfg, leader)
    for i, b in enumerate(boxes):
        plo, phi = _pos_slice(cfg, b.lo), _pos_slice(cfg, b.hi)
        if _box_point_distance(plo, phi, lp) < c:
            return False
        for olo, ohi in cfg.obstacles:
            # closed boxes; touching counts as a possible intersection
            if all(a <= d and e <= bb for a, bb, e, d in zip(plo, phi, olo, ohi)):
                return False
        if cfg.model == AIR and b.lo[2] < 0.0:
            return False
        for other in boxes[i + 1 :]:
            if _box_box_distance(plo, phi, _pos_slice(cfg, other.lo), _pos_slice(cfg, other.hi)) < cfg.inter_radius:
                return False
        if check_set == "recoverable":
            g = cfg.gains
            gap_lo = iv.dn(leader[0] - b.hi[0])
            if not acc_braking_margin(gap_lo, b.hi[1], leader[1], c, g.a_max) > 0.0:
                return False
    return True


def _check_set(cfg: ScenarioConfig, lk: LookaheadConfig) -> str:
    if lk.check_set == "recoverable" and cfg.model != ACC:
        raise PreconditionError("the recoverable check set is only available for the acc scenario")
    return lk.check_set


def estimate_boxes(s: ScenarioState, cfg: ScenarioConfig, lk: LookaheadConfig) -> list[ReachBox]:
    w = lk.widths(cfg.state_dim)
    return [ReachBox(q - w, q + w, s.step) for q in s.followers]


def reach_rta_decide(s: ScenarioState, cfg: ScenarioConfig, lk: LookaheadConfig | None = None):
    """U iff every reach box over the horizon stays clear of the unsafe set (and inside the check set)."""
    lk = lk or cfg.lookahead
    check = _check_set(cfg, lk)
    if s.done:
        raise PreconditionError("cannot decide on a finished episode")
    per_agent = [
        interval_reach(cfg, box, lk.horizon, lk, U, i) for i, box in enumerate(estimate_boxes(s, cfg, lk))
    ]
    ok = True
    for j in range(lk.horizon):
        leader = leader_state(cfg, s.step + j + 1)
        if not box_is_safe(cfg, [boxes[j] for boxes in per_agent], leader, check):
            ok = False
            break
    return _joint(cfg, U if ok else S)


def _joint(cfg: ScenarioConfig, a: int):
    return (a,) * cfg.n_agents if cfg.n_agents > 1 else a


def _in_check_set(cfg: ScenarioConfig, leader, followers, check: str) -> bool:
    if unsafe_distance(cfg, leader, followers) < 0.0:
        return False
    if check == "recoverable":
        g = cfg.gains
        q = followers[0]
        return acc_braking_margin(leader[0] - q[0], q[1], leader[1], g.c, g.a_max) > 0.0
    return True


def sim_rta_decide(s: ScenarioState, cfg: ScenarioConfig, lk: LookaheadConfig | None = None, rng_seed: int = 0):
    """U iff all sampled U-rollouts from the estimate box stay in the check set."""
    lk = lk or cfg.lookahead
    check = _check_set(cfg, lk)
    if s.done:
        raise PreconditionError("cannot decide on a finished episode")
    rng = np.random.default_rng(rng_seed)
    w = lk.widths(cfg.state_dim)
    zero = not np.any(w)
    n = 1 if zero else lk.samples
    leaders = [leader_state(cfg, s.step + j) for j in range(lk.horizon + 1)]
    for _ in range(n):
        followers = [q.copy() if zero else q + w * (2.0 * rng.random(len(q)) - 1.0) for q in s.followers]
        for j in range(lk.horizon):
            followers = [advance_follower(cfg, leaders[j], q, U, i) for i, q in enumerate(followers)]
            if not _in_check_set(cfg, leaders[j + 1], followers, check):
                return _joint(cfg, S)
    return _joint(cfg, U)


def rollout_samples(
    cfg: ScenarioConfig, box: ReachBox, steps: int, n: int, rng: np.random.Generator, mode: int = U, agent: int = 0
) -> np.ndarray:
    """RK4 trajectories from ``n`` uniform points in ``box``; shape ``(n, steps + 1, dim)``."""
    out = np.empty((n, steps + 1, cfg.state_dim))
    for i in range(n):
        q = box.lo + (box.hi - box.lo) * rng.random(cfg.state_dim)
        out[i, 0] = q
        for j in range(steps):
            q = advance_follower(cfg, leader_state(cfg, box.step + j), q, mode, agent)
            out[i, j + 1] = q
    return out
