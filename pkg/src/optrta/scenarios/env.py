"""Episodic leader-follower environments.

Decision step ``k`` covers ``control_period`` integrator steps of length
``dt``.  The leader follows a closed-form path, so its state at any step is
exactly reproducible.  Actions are ``S = 0`` and ``U = 1`` (a tuple of four
for the fleet).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .. import controllers as ctl
from .._backend import kernels
from ..dynamics import ACC, AIR, DUBINS, wrap_angle
from ..errors import IntegrationError, PreconditionError, UsageError
from ..plant import RewardStructure, UnsafeSet
from ..shaping import shape
from .config import ScenarioConfig

S, U = 0, 1
ACTION_NAMES = ("S", "U")

_COS30 = math.cos(math.pi / 6)
_SIN30 = math.sin(math.pi / 6)


# ----------------------------------------------------------------- leader path


def leader_omega(cfg: ScenarioConfig) -> float:
    """Heading rate of the leader (zero on the straight Acc road)."""
    if cfg.model == ACC:
        return 0.0
    return cfg.leader.speed / cfg.leader.radius


def leader_state(cfg: ScenarioConfig, k: float) -> np.ndarray:
    """Leader state after ``k`` decision steps (closed form; ``k`` may be fractional)."""
    t = k * cfg.period
    L = cfg.leader
    if cfg.model == ACC:
        return np.array([L.x0 + L.speed * t, L.speed])
    th = L.phase + L.speed / L.radius * t
    x, y = L.radius * math.cos(th), L.radius * math.sin(th)
    psi = wrap_angle(th + math.pi / 2)
    if cfg.model == DUBINS:
        return np.array([x, y, psi, L.speed])
    return np.array([x, y, L.altitude, psi, 0.0, L.speed])


# ------------------------------------------------------------ reference points


def _fleet_offset(agent: int, scale: float, d: float) -> tuple[float, float]:
    """V formation in the leader frame: (forward, left)."""
    dist = (2.0 if agent < 2 else 4.0) * d * scale
    side = 1.0 if agent % 2 == 0 else -1.0
    return -dist * _COS30, side * dist * _SIN30


def reference_point(leader, mode: int, cfg: ScenarioConfig, agent: int = 0) -> np.ndarray:
    """Target state a follower tracks in the given mode."""
    g = cfg.gains
    if cfg.model == ACC:
        return np.array([leader[0] - g.d, leader[1]])
    if cfg.model == DUBINS:
        x, y, psi, v = leader[0], leader[1], leader[2], leader[3]
    else:
        x, y, psi, v = leader[0], leader[1], leader[3], leader[5]
    c, s = math.cos(psi), math.sin(psi)
    if cfg.scenario == "fleet":
        fwd, left = _fleet_offset(agent, 1.5 if mode == S else 1.0, g.d)
    else:
        fwd, left = -g.d, 0.0
        if cfg.scenario == "dubins_o" and mode == S:
            left = cfg.avoid_offset
    rx = x + c * fwd - s * left
    ry = y + s * fwd + c * left
    if cfg.model == DUBINS:
        return np.array([rx, ry, psi, v])
    rz = leader[2] - (g.delta_z if mode == U else 0.0)
    return np.array([rx, ry, rz, psi, leader[4], v])


def follower_from_offset(cfg: ScenarioConfig, leader, offset, agent: int = 0) -> np.ndarray:
    """Follower state displaced from its U-mode reference by ``offset`` (leader frame)."""
    ref = reference_point(leader, U, cfg, agent)
    off = list(offset) if len(offset) else [0.0] * cfg.state_dim
    if cfg.model == ACC:
        return np.array([ref[0] + off[0], ref[1] + off[1]])
    psi = ref[2] if cfg.model == DUBINS else ref[3]
    c, s = math.cos(psi), math.sin(psi)
    px = ref[0] + c * off[0] - s * off[1]
    py = ref[1] + s * off[0] + c * off[1]
    if cfg.model == DUBINS:
        return np.array([px, py, wrap_angle(psi + off[2]), ref[3] + off[3]])
    return np.array([px, py, ref[2] + off[2], wrap_angle(psi + off[3]), off[4], ref[5] + off[5]])


# ---------------------------------------------------------------------- state


@dataclass
class ScenarioState:
    step: int
    leader: np.ndarray
    followers: list[np.ndarray]
    done: bool = False
    violated: bool = False
    last_distance: float = math.inf
    history: list = field(default_factory=list, repr=False)

    @property
    def follower(self) -> np.ndarray:
        return self.followers[0]

    def copy(self) -> ScenarioState:
        return ScenarioState(
            self.step, self.leader.copy(), [f.copy() for f in self.followers], self.done, self.violated,
            self.last_distance,
        )


def _sample_offset(cfg: ScenarioConfig, rng: np.random.Generator) -> list[float]:
    if not cfg.init_range:
        return list(cfg.init_offset)
    lo = np.array([a for a, _ in cfg.init_range])
    hi = np.array([b for _, b in cfg.init_range])
    return list(lo + (hi - lo) * rng.random(len(lo)))


def reset(cfg: ScenarioConfig, rng: np.random.Generator | None = None) -> ScenarioState:
    """Initial state; with ``rng`` the offsets are drawn from ``init.range``."""
    leader = leader_state(cfg, 0)
    for _ in range(100):
        followers = []
        for i in range(cfg.n_agents):
            off = cfg.init_offset if rng is None else _sample_offset(cfg, rng)
            followers.append(follower_from_offset(cfg, leader, off, i))
        s = ScenarioState(0, leader, followers)
        s.last_distance = min_unsafe_distance(s, cfg)
        if rng is None or s.last_distance >= 0:
            return s
    raise PreconditionError("could not draw a safe initial state from init.range in 100 tries")


# ------------------------------------------------------------------- geometry


def _box_distance(p, lo, hi) -> float:
    """Signed Euclidean distance from a point to an axis-aligned box (negative inside)."""
    outside = 0.0
    inside = math.inf
    for x, a, b in zip(p, lo, hi):
        if x < a:
            outside += (a - x) ** 2
        elif x > b:
            outside += (x - b) ** 2
        else:
            inside = min(inside, x - a, b - x)
    if outside > 0.0:
        return math.sqrt(outside)
    return -inside


def position(cfg: ScenarioConfig, q) -> tuple[float, ...]:
    if cfg.model == ACC:
        return (q[0],)
    if cfg.model == DUBINS:
        return (q[0], q[1])
    return (q[0], q[1], q[2])


def agent_unsafe_distance(cfg: ScenarioConfig, leader, followers, i: int) -> float:
    """Signed distance of follower ``i`` to its nearest unsafe component."""
    q = followers[i]
    p = position(cfg, q)
    lp = position(cfg, leader)
    best = math.dist(p, lp) - cfg.gains.c
    for lo, hi in cfg.obstacles:
        best = min(best, _box_distance(p, lo, hi))
    if cfg.model == AIR:
        best = min(best, q[2])  # ground plane
    for j, other in enumerate(followers):
        if j != i:
            best = min(best, math.dist(p, position(cfg, other)) - cfg.inter_radius)
    return best


def unsafe_distance(cfg: ScenarioConfig, leader, followers) -> float:
    return min(agent_unsafe_distance(cfg, leader, followers, i) for i in range(len(followers)))


def min_unsafe_distance(s: ScenarioState, cfg: ScenarioConfig) -> float:
    """Minimum signed distance to the unsafe set; negative iff in violation."""
    return unsafe_distance(cfg, s.leader, s.followers)


# ----------------------------------------------------------------- controllers


def follower_input(cfg: ScenarioConfig, leader, q, mode: int, agent: int = 0) -> list[float]:
    g = cfg.gains
    if cfg.model == ACC:
        return ctl.acc_untrusted(q, leader, g) if mode == U else ctl.acc_safety(q, leader, g)
    ref = reference_point(leader, mode, cfg, agent)
    om = leader_omega(cfg)
    if cfg.model == DUBINS:
        return ctl.dubins_tracking(q, ref, om, g, allow_accel=(mode == U))
    return ctl.air_tracking(q, (ref[0], ref[1], ref[2], ref[3]), om, cfg.leader.speed, g, safety_mode=(mode == S))


def follower_input_box(cfg: ScenarioConfig, leader, X, mode: int, agent: int = 0):
    g = cfg.gains
    if cfg.model == ACC:
        return ctl.acc_untrusted_box(X, leader, g) if mode == U else ctl.acc_safety_box(X, leader, g)
    ref = reference_point(leader, mode, cfg, agent)
    om = leader_omega(cfg)
    if cfg.model == DUBINS:
        return ctl.dubins_tracking_box(X, ref, om, g, allow_accel=(mode == U))
    return ctl.air_tracking_box(X, (ref[0], ref[1], ref[2], ref[3]), om, cfg.leader.speed, g, safety_mode=(mode == S))


def advance_follower(cfg: ScenarioConfig, leader, q, mode: int, agent: int = 0) -> np.ndarray:
    """One decision period: zero-order-hold input, RK4 sub-steps, then the speed clamp."""
    u = follower_input(cfg, leader, q, mode, agent)
    out, bad = kernels.rk4(cfg.model, q, u, cfg.dt, cfg.control_period)
    if bad >= 0:
        raise IntegrationError(bad)
    vi = cfg.state_dim - 1
    lo, hi = cfg.v_bounds
    if out[vi] < lo:
        out[vi] = lo
    elif out[vi] > hi:
        out[vi] = hi
    return out


# ----------------------------------------------------------------------- step


def violation_penalty(cfg: ScenarioConfig) -> float:
    """Shaped penalty with the episode cap standing in for the state count."""
    cached = _PENALTY_CACHE.get((cfg.gamma, cfg.episode_len))
    if cached is None:
        rs = RewardStructure(np.ones((1, 2)), cfg.gamma)
        cached = shape(rs, UnsafeSet(frozenset({0})), cfg.episode_len).penalty
        _PENALTY_CACHE[(cfg.gamma, cfg.episode_len)] = cached
    return cached


_PENALTY_CACHE: dict = {}


def normalize_action(action, cfg: ScenarioConfig) -> tuple[int, ...]:
    if isinstance(action, str):
        action = ACTION_NAMES.index(action) if action in ACTION_NAMES else action
    if isinstance(action, (int, np.integer)):
        acts = (int(action),) * cfg.n_agents if cfg.n_agents > 1 else (int(action),)
    else:
        acts = tuple(ACTION_NAMES.index(a) if isinstance(a, str) else int(a) for a in action)
    if len(acts) != cfg.n_agents or any(a not in (S, U) for a in acts):
        raise PreconditionError(f"action {action!r} is not valid for {cfg.n_agents} agent(s)")
    return acts


def agent_reward(cfg: ScenarioConfig, leader, q, mode: int, agent: int) -> float:
    if cfg.reward_kind == "r_U":
        return 1.0 if mode == U else 0.0
    ref = reference_point(leader, U, cfg, agent)
    return 1.0 if math.dist(position(cfg, q), position(cfg, ref)) <= cfg.zone else 0.0


def env_step(s: ScenarioState, action, cfg: ScenarioConfig) -> tuple[ScenarioState, float, bool]:
    """Advance one decision step in place; returns ``(state, reward, done)``."""
    if s.done:
        raise UsageError("episode is finished; call reset()")
    acts = normalize_action(action, cfg)
    new = [advance_follower(cfg, s.leader, q, a, i) for i, (q, a) in enumerate(zip(s.followers, acts))]
    s.step += 1
    s.leader = leader_state(cfg, s.step)
    s.followers = new
    s.last_distance = unsafe_distance(cfg, s.leader, new)
    if s.last_distance < 0.0:
        s.violated = True
        s.done = True
        return s, violation_penalty(cfg), True
    r = sum(agent_reward(cfg, s.leader, q, a, i) for i, (q, a) in enumerate(zip(new, acts))) / cfg.n_agents
    if s.step >= cfg.episode_len:
        s.done = True
    return s, r, s.done


def agent_rewards(cfg: ScenarioConfig, s: ScenarioState, acts) -> list[float]:
    """Per-agent reward for the transition that produced ``s``."""
    if s.violated:
        return [violation_penalty(cfg)] * cfg.n_agents
    return [agent_reward(cfg, s.leader, q, a, i) for i, (q, a) in enumerate(zip(s.followers, acts))]


# ---------------------------------------------------------------- observation


def observation(cfg: ScenarioConfig, s: ScenarioState, agent: int = 0) -> np.ndarray:
    """Features relative to the agent's U-mode reference.

    Acc: position and speed error.  Planar: body-frame errors, heading error,
    speed error, signed unsafe distance.  Air adds the vertical error and pitch.
    """
    q = s.followers[agent]
    ref = reference_point(s.leader, U, cfg, agent)
    if cfg.model == ACC:
        return np.array([q[0] - ref[0], q[1] - ref[1]])
    dist = agent_unsafe_distance(cfg, s.leader, s.followers, agent)
    if cfg.model == DUBINS:
        ex, ey, ep = ctl.tracking_errors(q[0], q[1], q[2], ref)
        return np.array([ex, ey, wrap_angle(ep), q[3] - ref[3], dist])
    ex, ey, ep = ctl.tracking_errors(q[0], q[1], q[3], (ref[0], ref[1], ref[3]))
    return np.array([ex, ey, q[2] - ref[2], wrap_angle(ep), q[4], q[5] - ref[5], dist])


OBS_DEFAULTS = {
    ACC: ((-40.0, -10.0), (8.0, 10.0), (40, 40)),
    DUBINS: ((-30.0, -15.0, -1.0, -6.0, -1.0), (10.0, 15.0, 1.0, 6.0, 30.0), (8, 8, 6, 8, 8)),
    AIR: (
        (-30.0, -15.0, -20.0, -1.0, -0.3, -8.0, -1.0),
        (10.0, 15.0, 20.0, 1.0, 0.3, 8.0, 30.0),
        (6, 6, 6, 5, 4, 6, 6),
    ),
}
