"""Scenario configuration: parsing, defaults and validation."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

import numpy as np

from ..controllers import Gains
from ..dynamics import ACC, AIR, DUBINS, STATE_DIM
from ..errors import ConfigError
from ..fixtures import read_structured

SCENARIOS = ("acc", "dubins", "dubins_o", "air", "fleet")
MODEL_OF = {"acc": ACC, "dubins": DUBINS, "dubins_o": DUBINS, "air": AIR, "fleet": DUBINS}
REWARD_KINDS = ("r_U", "r_zone")
CHECK_SETS = ("safe", "recoverable")
FIXTURE_NAMES = tuple(
    [f"{s}-var{i}" for s in ("acc", "dubins", "dubins_o", "air") for i in (1, 2, 3)] + ["fleet-var1"]
)


@dataclass(frozen=True)
class LeaderSpec:
    speed: float = 10.0
    radius: float = 60.0
    x0: float = 0.0
    phase: float = 0.0
    altitude: float = 100.0


@dataclass(frozen=True)
class LookaheadConfig:
    horizon: int = 20
    samples: int = 10
    half_widths: tuple[float, ...] = ()
    check_set: str = "safe"
    substeps_per_dt: int = 4
    pad: float = 1e-9
    max_width: float = 1e6

    def __post_init__(self):
        if self.horizon < 1:
            raise ConfigError("lookahead.horizon must be >= 1")
        if self.samples < 1:
            raise ConfigError("lookahead.samples must be >= 1")
        if any(not (w >= 0.0) for w in self.half_widths):
            raise ConfigError("lookahead.half_widths must be >= 0")
        if self.check_set not in CHECK_SETS:
            raise ConfigError(f"lookahead.check_set must be one of {CHECK_SETS}, got {self.check_set!r}")
        if self.substeps_per_dt < 1:
            raise ConfigError("lookahead.substeps_per_dt must be >= 1")

    def widths(self, dim: int) -> np.ndarray:
        if not self.half_widths:
            return np.zeros(dim)
        if len(self.half_widths) != dim:
            raise ConfigError(f"lookahead.half_widths needs {dim} entries, got {len(self.half_widths)}")
        return np.asarray(self.half_widths, dtype=float)


@dataclass(frozen=True)
class LearningConfig:
    lower: tuple[float, ...]
    upper: tuple[float, ...]
    cells: tuple[int, ...]


@dataclass(frozen=True)
class ScenarioConfig:
    scenario: str
    variation: int = 1
    gains: Gains = field(default_factory=Gains)
    leader: LeaderSpec = field(default_factory=LeaderSpec)
    episode_len: int = 400
    dt: float = 0.02
    control_period: int = 10
    obstacles: tuple[tuple[tuple[float, ...], tuple[float, ...]], ...] = ()
    reward_kind: str = "r_U"
    zone_radius: float | None = None
    seed: int = 0
    init_offset: tuple[float, ...] = ()
    init_range: tuple[tuple[float, float], ...] = ()
    v_bounds: tuple[float, float] = (0.0, 20.0)
    gamma: float = 0.995
    avoid_offset: float = 4.0
    n_agents: int = 1
    inter_radius: float = 3.0
    lookahead: LookaheadConfig = field(default_factory=LookaheadConfig)
    learning: LearningConfig | None = None
    name: str = ""

    @property
    def model(self) -> int:
        return MODEL_OF[self.scenario]

    @property
    def state_dim(self) -> int:
        return STATE_DIM[self.model]

    @property
    def period(self) -> float:
        """Seconds per decision step."""
        return self.dt * self.control_period

    @property
    def zone(self) -> float:
        return self.zone_radius if self.zone_radius is not None else self.gains.d / 2.0

    def with_(self, **kw) -> ScenarioConfig:
        return replace(self, **kw)


def _num(d: dict, key: str, default, where: str, kind=float):
    val = d.get(key, default)
    try:
        out = kind(val)
    except (TypeError, ValueError):
        raise ConfigError(f"{where}.{key} must be a number, got {val!r}") from None
    if kind is float and not math.isfinite(out):
        raise ConfigError(f"{where}.{key} must be finite")
    return out


def config_from_dict(data: dict, where: str = "config") -> ScenarioConfig:
    scen = data.get("scenario")
    if scen not in SCENARIOS:
        raise ConfigError(f"{where}.scenario must be one of {SCENARIOS}, got {scen!r}")
    known = {
        "scenario", "variation", "gains", "leader", "episode_len", "dt", "control_period",
        "obstacles", "reward", "seed", "init", "v_bounds", "gamma", "avoid_offset",
        "n_agents", "inter_radius", "lookahead", "learning", "name",
    }
    extra = set(data) - known
    if extra:
        raise ConfigError(f"{where}: unknown keys {sorted(extra)}")
    try:
        gains = Gains.from_dict(data.get("gains"))
    except ConfigError as exc:
        raise ConfigError(f"{where}.{exc}") from None

    ld = data.get("leader", {}) or {}
    leader = LeaderSpec(
        speed=_num(ld, "speed", 10.0, f"{where}.leader"),
        radius=_num(ld, "radius", 60.0, f"{where}.leader"),
        x0=_num(ld, "x0", 0.0, f"{where}.leader"),
        phase=_num(ld, "phase", 0.0, f"{where}.leader"),
        altitude=_num(ld, "altitude", 100.0, f"{where}.leader"),
    )
    if leader.speed <= 0 or leader.radius <= 0:
        raise ConfigError(f"{where}.leader: speed and radius must be positive")

    default_len = 150 if scen == "acc" else 400
    episode_len = _num(data, "episode_len", default_len, where, int)
    if episode_len < 1:
        raise ConfigError(f"{where}.episode_len must be >= 1")
    dt = _num(data, "dt", 0.05 if scen == "acc" else 0.02, where)
    if dt <= 0:
        raise ConfigError(f"{where}.dt must be positive")
    cp = _num(data, "control_period", 10, where, int)
    if cp < 1:
        raise ConfigError(f"{where}.control_period must be >= 1")

    obstacles = []
    for i, ob in enumerate(data.get("obstacles", []) or []):
        try:
            lo, hi = (tuple(float(x) for x in ob[0]), tuple(float(x) for x in ob[1]))
        except (TypeError, ValueError, IndexError):
            raise ConfigError(f"{where}.obstacles[{i}] must be [[min...], [max...]]") from None
        if len(lo) != len(hi) or any(a >= b for a, b in zip(lo, hi)):
            raise ConfigError(f"{where}.obstacles[{i}]: need min < max in every coordinate")
        obstacles.append((lo, hi))

    rd = data.get("reward", {}) or {}
    kind = rd.get("kind", "r_U")
    if kind not in REWARD_KINDS:
        raise ConfigError(f"{where}.reward.kind must be one of {REWARD_KINDS}, got {kind!r}")
    zone = rd.get("zone_radius")
    if zone is not None:
        zone = _num(rd, "zone_radius", None, f"{where}.reward")
        if zone <= 0:
            raise ConfigError(f"{where}.reward.zone_radius must be positive")

    init = data.get("init", {}) or {}
    offset = tuple(float(x) for x in init.get("offset", []))
    rng_ = tuple((float(a), float(b)) for a, b in init.get("range", []))
    dim = STATE_DIM[MODEL_OF[scen]]
    if offset and len(offset) != dim:
        raise ConfigError(f"{where}.init.offset needs {dim} entries, got {len(offset)}")
    if rng_ and len(rng_) != dim:
        raise ConfigError(f"{where}.init.range needs {dim} [lo, hi] pairs, got {len(rng_)}")
    if any(a > b for a, b in rng_):
        raise ConfigError(f"{where}.init.range: lo > hi")

    vb = tuple(float(x) for x in data.get("v_bounds", (5.0, 40.0) if scen == "air" else (0.0, 20.0)))
    if len(vb) != 2 or vb[0] >= vb[1]:
        raise ConfigError(f"{where}.v_bounds must be [v_min, v_max] with v_min < v_max")

    gamma = _num(data, "gamma", 0.995, where)
    if not 0.0 < gamma < 1.0:
        raise ConfigError(f"{where}.gamma must lie in (0, 1)")

    lk = data.get("lookahead", {}) or {}
    try:
        look = LookaheadConfig(
            horizon=_num(lk, "horizon", 20, f"{where}.lookahead", int),
            samples=_num(lk, "samples", 10, f"{where}.lookahead", int),
            half_widths=tuple(float(x) for x in lk.get("half_widths", [])),
            check_set=lk.get("check_set", "safe"),
            substeps_per_dt=_num(lk, "substeps_per_dt", 4, f"{where}.lookahead", int),
            pad=_num(lk, "pad", 1e-9, f"{where}.lookahead"),
            max_width=_num(lk, "max_width", 1e6, f"{where}.lookahead"),
        )
    except ConfigError as exc:
        raise ConfigError(f"{where}: {exc}") from None

    learning = None
    if "learning" in data:
        le = data["learning"]
        try:
            learning = LearningConfig(
                tuple(float(x) for x in le["lower"]),
                tuple(float(x) for x in le["upper"]),
                tuple(int(x) for x in le["cells"]),
            )
        except (KeyError, TypeError, ValueError):
            raise ConfigError(f"{where}.learning needs lower, upper and cells lists") from None

    n_agents = 4 if scen == "fleet" else 1
    if "n_agents" in data and int(data["n_agents"]) != n_agents:
        raise ConfigError(f"{where}.n_agents must be {n_agents} for scenario {scen}")

    cfg = ScenarioConfig(
        scenario=scen,
        variation=_num(data, "variation", 1, where, int),
        gains=gains,
        leader=leader,
        episode_len=episode_len,
        dt=dt,
        control_period=cp,
        obstacles=tuple(obstacles),
        reward_kind=kind,
        zone_radius=zone,
        seed=_num(data, "seed", 0, where, int),
        init_offset=offset,
        init_range=rng_,
        v_bounds=vb,
        gamma=gamma,
        avoid_offset=_num(data, "avoid_offset", 4.0, where),
        n_agents=n_agents,
        inter_radius=_num(data, "inter_radius", gains.c, where),
        lookahead=look,
        learning=learning,
        name=str(data.get("name", "")),
    )
    _validate(cfg, where)
    return cfg


def _validate(cfg: ScenarioConfig, where: str) -> None:
    # imported here: env depends on this module
    from .env import leader_state, min_unsafe_distance, reset

    if cfg.inter_radius <= 0:
        raise ConfigError(f"{where}.inter_radius must be positive")
    pos_dim = {ACC: 1, DUBINS: 2, AIR: 3}[cfg.model]
    for i, (lo, hi) in enumerate(cfg.obstacles):
        if len(lo) != pos_dim:
            raise ConfigError(f"{where}.obstacles[{i}] must be {pos_dim}-dimensional")
    if cfg.obstacles:
        # the leader must never touch an obstacle during an episode
        for k in range(cfg.episode_len + 1):
            ls = leader_state(cfg, k)
            p = _position(cfg.model, ls)
            for i, (lo, hi) in enumerate(cfg.obstacles):
                if all(a <= x <= b for x, a, b in zip(p, lo, hi)):
                    raise ConfigError(f"{where}.obstacles[{i}] intersects the leader path at step {k}")
    s = reset(cfg)
    dist = min_unsafe_distance(s, cfg)
    if dist < 0:
        raise ConfigError(f"{where}.init: follower starts inside the unsafe set (signed distance {dist:.3g})")


def _position(model: int, state) -> tuple[float, ...]:
    if model == ACC:
        return (float(state[0]),)
    if model == DUBINS:
        return (float(state[0]), float(state[1]))
    return (float(state[0]), float(state[1]), float(state[2]))


def config_to_dict(cfg: ScenarioConfig) -> dict:
    out = {
        "name": cfg.name,
        "scenario": cfg.scenario,
        "variation": cfg.variation,
        "gains": cfg.gains.to_dict(),
        "leader": {
            "speed": cfg.leader.speed,
            "radius": cfg.leader.radius,
            "x0": cfg.leader.x0,
            "phase": cfg.leader.phase,
            "altitude": cfg.leader.altitude,
        },
        "episode_len": cfg.episode_len,
        "dt": cfg.dt,
        "control_period": cfg.control_period,
        "obstacles": [[list(lo), list(hi)] for lo, hi in cfg.obstacles],
        "reward": {"kind": cfg.reward_kind, "zone_radius": cfg.zone_radius},
        "seed": cfg.seed,
        "init": {"offset": list(cfg.init_offset), "range": [list(r) for r in cfg.init_range]},
        "v_bounds": list(cfg.v_bounds),
        "gamma": cfg.gamma,
        "avoid_offset": cfg.avoid_offset,
        "inter_radius": cfg.inter_radius,
        "lookahead": {
            "horizon": cfg.lookahead.horizon,
            "samples": cfg.lookahead.samples,
            "half_widths": list(cfg.lookahead.half_widths),
            "check_set": cfg.lookahead.check_set,
            "substeps_per_dt": cfg.lookahead.substeps_per_dt,
            "pad": cfg.lookahead.pad,
            "max_width": cfg.lookahead.max_width,
        },
    }
    if cfg.learning is not None:
        out["learning"] = {
            "lower": list(cfg.learning.lower),
            "upper": list(cfg.learning.upper),
            "cells": list(cfg.learning.cells),
        }
    return out


def load_config(path: str | Path) -> ScenarioConfig:
    path = Path(path)
    cfg = config_from_dict(read_structured(path), str(path))
    return cfg if cfg.name else cfg.with_(name=path.stem)


def scenario_fixture(name: str) -> ScenarioConfig:
    if name not in FIXTURE_NAMES:
        raise ConfigError(f"unknown scenario fixture {name!r}; choose from {', '.join(FIXTURE_NAMES)}")
    text = resources.files("optrta.scenarios").joinpath("fixtures", f"{name}.json").read_text()
    cfg = config_from_dict(json.loads(text), name)
    return cfg if cfg.name else cfg.with_(name=name)


def resolve_config(ref: str | Path) -> ScenarioConfig:
    """A config file path, or the name of a shipped fixture."""
    if str(ref) in FIXTURE_NAMES and not Path(ref).exists():
        return scenario_fixture(str(ref))
    return load_config(ref)
