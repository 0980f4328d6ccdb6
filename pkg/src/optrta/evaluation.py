"""Episode evaluation under a chosen switching decider, metrics and exports."""

from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from .baselines import reach_rta_decide, sim_rta_decide
from .errors import ConfigError, PreconditionError
from .fixtures import write_structured
from .scenarios.config import CHECK_SETS, ScenarioConfig, config_to_dict
from .scenarios.env import (
    ACTION_NAMES,
    S,
    U,
    agent_rewards,
    agent_unsafe_distance,
    env_step,
    normalize_action,
    observation,
    position,
    reset,
)
from .tabular import QTable

RTA_TAGS = ("sim", "reach", "qtable", "always_s", "always_u")
EPS_V = 1e-6
NO_CLOSING = 1e9
_MASK64 = (1 << 64) - 1


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def episode_seeds(master: int, n: int) -> list[int]:
    out, x = [], master & _MASK64
    for _ in range(n):
        x = splitmix64(x)
        out.append(x)
    return out


def time_to_collision(distances, period: float) -> float:
    """Minimum estimated time to collision over a sequence of signed unsafe distances.

    Closing speed at step ``j`` is the backward difference
    ``(d[j-1] - d[j]) / period``.  A step that is not closing contributes no
    bound; a trajectory that never closes returns ``NO_CLOSING``.  If the
    trajectory enters the unsafe set, the result is negative with magnitude
    equal to the time-to-collision estimate at the last safe step.
    """
    d = [float(x) for x in distances]
    if not d:
        raise PreconditionError("time_to_collision needs a non-empty trajectory")
    if d[0] < 0:
        return -EPS_V
    best = math.inf
    for j in range(1, len(d)):
        closing = (d[j - 1] - d[j]) / period
        if d[j] < 0.0:
            return -max(d[j - 1] / max(closing, EPS_V), 1e-9)
        if closing > 0.0:
            best = min(best, d[j] / max(closing, EPS_V))
    return best if math.isfinite(best) else NO_CLOSING


@dataclass
class EpisodeMetrics:
    rt_ms: float
    ttc_s: float
    u_pct: float
    mean_dist: float
    violated: bool
    steps: int
    ret: float
    seed: int


@dataclass
class Episode:
    """Per-step record; index ``k`` of ``states`` and ``distances`` is the state after ``k`` decisions."""

    cfg: ScenarioConfig
    states: list = field(default_factory=list)  # list of (leader, followers)
    actions: list = field(default_factory=list)  # tuple per step (len = steps)
    rewards: list = field(default_factory=list)  # per-agent list per step
    distances: list = field(default_factory=list)  # per-agent signed distance per state


@dataclass
class Report:
    rta: str
    check_set: str | None
    episodes: list[EpisodeMetrics]
    config: dict
    seed: int
    seeds: list[int]

    @property
    def aggregates(self) -> dict:
        eps = self.episodes
        n = len(eps)
        if n == 0:
            return {"episodes": 0}
        return {
            "episodes": n,
            "rt_ms": float(np.mean([e.rt_ms for e in eps])),
            "ttc_s": float(np.mean([e.ttc_s for e in eps])),
            "min_ttc_s": float(min(e.ttc_s for e in eps)),
            "u_pct": float(np.mean([e.u_pct for e in eps])),
            "mean_dist": float(np.mean([e.mean_dist for e in eps])),
            "fail_pct": 100.0 * sum(e.violated for e in eps) / n,
            "return": float(np.mean([e.ret for e in eps])),
        }

    def to_dict(self) -> dict:
        return {
            "rta": self.rta,
            "check_set": self.check_set,
            "seed": self.seed,
            "aggregates": self.aggregates,
            "episodes": [asdict(e) for e in self.episodes],
            "seeds": [str(s) for s in self.seeds],
            "config": self.config,
        }

    def save(self, path: str | Path) -> None:
        write_structured(self.to_dict(), path)


class Decider:
    """Callable ``(state, step_seed) -> action`` for one of the RTA tags."""

    def __init__(self, cfg: ScenarioConfig, rta: str, table: QTable | None = None, check_set: str | None = None):
        if rta not in RTA_TAGS:
            raise ConfigError(f"unknown rta {rta!r}; choose from {', '.join(RTA_TAGS)}")
        if rta == "qtable" and table is None:
            raise PreconditionError("the qtable decider needs a table file")
        if check_set is not None and check_set not in CHECK_SETS:
            raise ConfigError(f"unknown check set {check_set!r}")
        self.cfg = cfg
        self.rta = rta
        self.table = table
        lk = cfg.lookahead
        if check_set is not None:
            lk = replace(lk, check_set=check_set)
        self.lk = lk
        if rta == "qtable":
            dim = len(observation(cfg, reset(cfg), 0))
            qdim = getattr(table.quantizer, "dim", None)
            if qdim != dim:
                raise PreconditionError(f"table expects {qdim}-D observations, scenario gives {dim}-D")

    def __call__(self, s, step_seed: int):
        cfg = self.cfg
        if self.rta == "always_s":
            return S
        if self.rta == "always_u":
            return U
        if self.rta == "sim":
            return sim_rta_decide(s, cfg, self.lk, step_seed)
        if self.rta == "reach":
            return reach_rta_decide(s, cfg, self.lk)
        acts = tuple(self.table.decide(observation(cfg, s, i)) for i in range(cfg.n_agents))
        return acts if cfg.n_agents > 1 else acts[0]


def run_episode(cfg: ScenarioConfig, decider: Decider, seed: int, randomize: bool = True) -> tuple[EpisodeMetrics, Episode]:
    rng = np.random.default_rng(seed)
    s = reset(cfg, rng if randomize else None)
    ep = Episode(cfg)
    ep.states.append((s.leader.copy(), [q.copy() for q in s.followers]))
    ep.distances.append([agent_unsafe_distance(cfg, s.leader, s.followers, i) for i in range(cfg.n_agents)])
    total_dt = 0.0
    u_count = 0
    decisions = 0
    ret = 0.0
    disc = 1.0
    while not s.done:
        t0 = time.perf_counter()
        action = decider(s, (seed + s.step) & _MASK64)
        total_dt += time.perf_counter() - t0
        acts = normalize_action(action, cfg)
        u_count += sum(1 for a in acts if a == U)
        decisions += len(acts)
        s, r, _ = env_step(s, action, cfg)
        ret += disc * r
        disc *= cfg.gamma
        ep.actions.append(acts)
        ep.rewards.append(agent_rewards(cfg, s, acts))
        ep.states.append((s.leader.copy(), [q.copy() for q in s.followers]))
        ep.distances.append([agent_unsafe_distance(cfg, s.leader, s.followers, i) for i in range(cfg.n_agents)])
    steps = len(ep.actions)
    overall = [min(row) for row in ep.distances]
    metrics = EpisodeMetrics(
        rt_ms=1000.0 * total_dt / max(1, steps),
        ttc_s=time_to_collision(overall, cfg.period),
        u_pct=100.0 * u_count / max(1, decisions),
        mean_dist=_mean_separation(cfg, ep),
        violated=bool(s.violated),
        steps=steps,
        ret=ret,
        seed=seed,
    )
    return metrics, ep


def _mean_separation(cfg: ScenarioConfig, ep: Episode) -> float:
    """Mean over states and agents of the distance to the leader or the nearest other agent."""
    vals = []
    for leader, followers in ep.states:
        lp = position(cfg, leader)
        for i, q in enumerate(followers):
            p = position(cfg, q)
            d = math.dist(p, lp)
            for j, other in enumerate(followers):
                if j != i:
                    d = min(d, math.dist(p, position(cfg, other)))
            vals.append(d)
    return float(np.mean(vals))


def evaluate(
    cfg: ScenarioConfig,
    rta: str,
    episodes: int = 100,
    seed: int = 0,
    table: QTable | None = None,
    check_set: str | None = None,
    export_dir: str | Path | None = None,
    randomize: bool = True,
) -> Report:
    """Run ``episodes`` seeded episodes under the decider and collect metrics."""
    if episodes < 1:
        raise PreconditionError("episodes must be >= 1")
    decider = Decider(cfg, rta, table, check_set)
    seeds = episode_seeds(seed, episodes)
    rows = []
    for i, es in enumerate(seeds):
        m, ep = run_episode(cfg, decider, es, randomize)
        rows.append(m)
        if export_dir is not None:
            Path(export_dir).mkdir(parents=True, exist_ok=True)
            export_trajectory(ep, Path(export_dir) / f"episode_{i:04d}.csv")
    return Report(rta, decider.lk.check_set if rta in ("sim", "reach") else None, rows, config_to_dict(cfg), seed, seeds)


# ------------------------------------------------------------------- export

COLUMNS = ("t", "agent_id", "x", "y", "z", "psi", "gamma", "v", "action", "reward", "min_unsafe_dist")


def _fmt(x) -> str:
    return format(float(x), ".17g")


def _state_fields(cfg: ScenarioConfig, q) -> list[str]:
    if cfg.state_dim == 2:
        return [_fmt(q[0]), "", "", "", "", _fmt(q[1])]
    if cfg.state_dim == 4:
        return [_fmt(q[0]), _fmt(q[1]), "", _fmt(q[2]), "", _fmt(q[3])]
    return [_fmt(x) for x in q]


def export_trajectory(ep: Episode, path: str | Path) -> Path:
    """CSV, one row per agent per decision step (t = 0 included); 17 significant digits."""
    cfg = ep.cfg
    path = Path(path)
    lines = [",".join(COLUMNS)]
    for k, ((_, followers), dists) in enumerate(zip(ep.states, ep.distances)):
        t = _fmt(k * cfg.period)
        for i, q in enumerate(followers):
            action = ACTION_NAMES[ep.actions[k - 1][i]] if k > 0 else ""
            reward = _fmt(ep.rewards[k - 1][i]) if k > 0 else _fmt(0.0)
            lines.append(",".join([t, str(i), *_state_fields(cfg, q), action, reward, _fmt(dists[i])]))
    try:
        with open(path, "w", newline="\n") as fh:
            fh.write("\n".join(lines) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write trajectory to {path}: {exc}") from exc
    return path
