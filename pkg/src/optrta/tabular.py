"""Tabular Q-learning of switching policies.

Two modes share one table type: *scenario* mode learns over quantized
observations of a continuous scenario (violations end the episode with the
shaped penalty), and *plant* mode learns directly on a finite plant with the
shaped reward.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .dynamics import Identity, Quantizer
from .errors import ConfigError, PreconditionError
from .fixtures import PlantSpec
from .plant import UNTRUSTED
from .scenarios.config import ScenarioConfig, config_from_dict, config_to_dict
from .scenarios.env import (
    OBS_DEFAULTS,
    U,
    agent_rewards,
    env_step,
    observation,
    reset,
)
from .shaping import shape_for


@dataclass(frozen=True)
class HyperParams:
    alpha0: float = 0.2
    alpha_visits: float = 1000.0
    eps_start: float = 0.3
    eps_end: float = 0.02
    eps_fraction: float = 0.8
    gamma: float | None = None  # None: take the scenario's discount
    checkpoints: int = 10
    eval_episodes: int = 20
    plant_episode_len: int = 30

    def epsilon(self, episode: int, total: int) -> float:
        ramp = max(1.0, self.eps_fraction * total)
        frac = min(1.0, episode / ramp)
        return self.eps_start + (self.eps_end - self.eps_start) * frac

    def alpha(self, visits: int) -> float:
        return self.alpha0 / (1.0 + visits / self.alpha_visits)


class QTable:
    def __init__(self, quantizer, n_actions: int, gamma: float, u_action: int = U, meta: dict | None = None):
        self.quantizer = quantizer
        self.q = np.zeros((quantizer.size, n_actions))
        self.visits = np.zeros((quantizer.size, n_actions), dtype=np.int64)
        self.gamma = gamma
        self.u_action = u_action
        self.meta = dict(meta or {})
        self.curve: list[tuple[float, bool]] = []

    def cell(self, obs) -> int:
        return self.quantizer.quantize(obs)

    def greedy(self, cell: int) -> int:
        row = self.q[cell]
        best = row.max()
        if row[self.u_action] >= best:
            return self.u_action
        return int(np.argmax(row))

    def decide(self, obs) -> int:
        return self.greedy(self.cell(obs))

    def copy(self) -> QTable:
        out = QTable(self.quantizer, self.q.shape[1], self.gamma, self.u_action, self.meta)
        out.q = self.q.copy()
        out.visits = self.visits.copy()
        out.curve = list(self.curve)
        return out

    # -------------------------------------------------------------- file I/O

    def save(self, path: str | Path) -> None:
        header = dict(self.meta)
        header["gamma"] = self.gamma
        header["u_action"] = self.u_action
        if isinstance(self.quantizer, Quantizer):
            header["quantizer"] = self.quantizer.to_dict()
        else:
            header["quantizer"] = {"identity": self.quantizer.size}
        with open(path, "wb") as fh:
            np.savez(fh, q=self.q, visits=self.visits, header=np.array(json.dumps(header, sort_keys=True)))

    @classmethod
    def load(cls, path: str | Path) -> QTable:
        try:
            with np.load(path, allow_pickle=False) as z:
                q, visits, header = z["q"], z["visits"], json.loads(str(z["header"]))
        except (OSError, KeyError, ValueError) as exc:
            raise ConfigError(f"cannot read Q-table {path}: {exc}") from exc
        qd = header.pop("quantizer")
        quant = Identity(int(qd["identity"])) if "identity" in qd else Quantizer.from_dict(qd)
        gamma = header.pop("gamma")
        u = header.pop("u_action")
        out = cls(quant, q.shape[1], gamma, u, header)
        if q.shape[0] != quant.size:
            raise ConfigError(f"Q-table {path}: {q.shape[0]} rows but quantizer has {quant.size} cells")
        out.q = q
        out.visits = visits
        return out

    def scenario_config(self) -> ScenarioConfig | None:
        cfg = self.meta.get("config")
        return config_from_dict(cfg, "table.config") if cfg else None


def default_quantizer(cfg: ScenarioConfig) -> Quantizer:
    if cfg.learning is not None:
        L = cfg.learning
        return Quantizer(L.lower, L.upper, L.cells)
    lo, hi, cells = OBS_DEFAULTS[cfg.model]
    return Quantizer(lo, hi, cells)


def decide(qt: QTable, obs) -> int:
    """Greedy action; ties (including unvisited all-zero rows) go to U."""
    return qt.decide(obs)


# ------------------------------------------------------------ scenario mode


@dataclass
class TrainResult:
    table: QTable
    checkpoint: int
    checkpoint_returns: list[float] = field(default_factory=list)
    checkpoint_violations: list[int] = field(default_factory=list)
    selected_safe: bool = True


def _greedy_episode(qt: QTable, cfg: ScenarioConfig, rng) -> tuple[float, bool]:
    s = reset(cfg, rng)
    total = 0.0
    disc = 1.0
    while not s.done:
        acts = tuple(qt.decide(observation(cfg, s, i)) for i in range(cfg.n_agents))
        s, r, _ = env_step(s, acts if cfg.n_agents > 1 else acts[0], cfg)
        total += disc * r
        disc *= qt.gamma
    return total, s.violated


def evaluate_table(qt: QTable, cfg: ScenarioConfig, episodes: int, seed: int) -> tuple[float, int]:
    rng = np.random.default_rng(seed)
    rets, viols = [], 0
    for _ in range(episodes):
        ret, v = _greedy_episode(qt, cfg, rng)
        rets.append(ret)
        viols += int(v)
    return float(np.mean(rets)), viols


def train(cfg: ScenarioConfig, hp: HyperParams | None = None, episodes: int = 1000, seed: int = 0,
          quantizer: Quantizer | None = None) -> TrainResult:
    """Epsilon-greedy Q-learning on the scenario with the shaped violation penalty.

    Checkpoints are taken every ``1/hp.checkpoints`` of training; the returned
    table is the checkpoint with the best greedy return among those with no
    violations on ``hp.eval_episodes`` held-out episodes (the last checkpoint
    if none is violation-free).
    """
    if episodes < 1:
        raise PreconditionError("episodes must be >= 1")
    hp = hp or HyperParams()
    gamma = hp.gamma if hp.gamma is not None else cfg.gamma
    quant = quantizer or default_quantizer(cfg)
    meta = {"scenario": cfg.scenario, "seed": seed, "episodes": episodes, "config": config_to_dict(cfg),
            "hyperparams": asdict(hp)}
    qt = QTable(quant, 2, gamma, U, meta)
    rng = np.random.default_rng(seed)
    init_rng = np.random.default_rng([seed, 1])
    n_agents = cfg.n_agents
    q, visits = qt.q, qt.visits
    every = max(1, math.ceil(episodes / max(1, hp.checkpoints)))
    snaps: list[tuple[int, QTable]] = []

    for ep in range(episodes):
        eps = hp.epsilon(ep, episodes)
        s = reset(cfg, init_rng)
        cells = [qt.cell(observation(cfg, s, i)) for i in range(n_agents)]
        ret = 0.0
        disc = 1.0
        while not s.done:
            acts = []
            for c in cells:
                if rng.random() < eps:
                    acts.append(int(rng.integers(2)))
                else:
                    acts.append(qt.greedy(c))
            s, r, done = env_step(s, tuple(acts) if n_agents > 1 else acts[0], cfg)
            ret += disc * r
            disc *= gamma
            rewards = agent_rewards(cfg, s, acts) if n_agents > 1 else [r]
            nxt = [qt.cell(observation(cfg, s, i)) for i in range(n_agents)]
            for c, a, rr, c2 in zip(cells, acts, rewards, nxt):
                target = rr if s.violated else rr + gamma * q[c2].max()
                alpha = hp.alpha(visits[c, a])
                q[c, a] += alpha * (target - q[c, a])
                visits[c, a] += 1
            cells = nxt
        qt.curve.append((ret, s.violated))
        if (ep + 1) % every == 0 or ep + 1 == episodes:
            snaps.append((ep + 1, qt.copy()))

    results = []
    for n_ep, snap in snaps:
        mean_ret, viols = evaluate_table(snap, cfg, hp.eval_episodes, seed + 7919)
        results.append((n_ep, snap, mean_ret, viols))
    safe = [r for r in results if r[3] == 0]
    if safe:
        n_ep, best, _, _ = max(safe, key=lambda r: (r[2], r[0]))
    else:
        n_ep, best, _, _ = results[-1]
    best.curve = qt.curve
    best.meta["checkpoint"] = n_ep
    return TrainResult(best, n_ep, [r[2] for r in results], [r[3] for r in results], bool(safe))


# --------------------------------------------------------------- plant mode


def train_plant(spec: PlantSpec, hp: HyperParams | None = None, episodes: int = 10_000, seed: int = 0) -> QTable:
    """Q-learning on a finite plant with the shaped reward and exploring starts.

    Each episode starts in a uniformly random state and runs
    ``hp.plant_episode_len`` steps; the tail is bootstrapped, so the table
    estimates the infinite-horizon discounted values.
    """
    if episodes < 1:
        raise PreconditionError("episodes must be >= 1")
    hp = hp or HyperParams()
    model = spec.model
    shaped = shape_for(model, spec.reward, spec.unsafe)
    gamma = spec.reward.gamma if hp.gamma is None else hp.gamma
    table = np.asarray(shaped.table)
    u = model.action_index(UNTRUSTED) if UNTRUSTED in model.actions else 0
    qt = QTable(Identity(model.n), model.m, gamma, u, {"plant": spec.name, "seed": seed, "episodes": episodes})
    rng = np.random.default_rng(seed)
    q, visits = qt.q, qt.visits
    for ep in range(episodes):
        eps = hp.epsilon(ep, episodes)
        s = int(rng.integers(model.n))
        for _ in range(hp.plant_episode_len):
            a = int(rng.integers(model.m)) if rng.random() < eps else qt.greedy(s)
            if model.deterministic:
                s2 = int(model.delta[s, a])
            else:
                s2 = int(rng.choice(model.n, p=model.prob[s, a]))
            target = table[s, a] + gamma * q[s2].max()
            q[s, a] += hp.alpha(visits[s, a]) * (target - q[s, a])
            visits[s, a] += 1
            s = s2
    return qt
