"""Plant description files, the built-in fixture plants, and a random plant generator."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from .errors import ConfigError, PreconditionError
from .plant import Mdp, Plant, RewardStructure, UnsafeSet, untrusted_reward

FIXTURES = ("fig2-left", "fig2-right", "sec6-goal")


@dataclass(frozen=True, eq=False)
class PlantSpec:
    """A plant (or MDP) bundled with its unsafe set and reward structure."""

    model: Plant | Mdp
    unsafe: UnsafeSet
    reward: RewardStructure
    goal: frozenset[int] = field(default_factory=frozenset)
    name: str = ""


def read_structured(path: str | Path) -> dict:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    try:
        if path.suffix.lower() in (".yaml", ".yml"):
            data = yaml.safe_load(text)
        else:
            data = json.loads(text)
    except (json.JSONDecodeError, yaml.YAMLError) as exc:
        raise ConfigError(f"{path}: malformed file: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return data


def write_structured(data: dict, path: str | Path) -> None:
    path = Path(path)
    if path.suffix.lower() in (".yaml", ".yml"):
        text = yaml.safe_dump(data, sort_keys=False)
    else:
        text = json.dumps(data, indent=2) + "\n"
    with open(path, "w", newline="\n") as fh:
        fh.write(text)


def _require(data: dict, key: str, where: str):
    if key not in data:
        raise ConfigError(f"{where}: missing key {key!r}")
    return data[key]


def plant_from_dict(data: dict, where: str = "plant") -> PlantSpec:
    states = [str(s) for s in _require(data, "states", where)]
    actions = [str(a) for a in data.get("actions", ["S", "U"])]
    if len(set(states)) != len(states):
        raise ConfigError(f"{where}: duplicate state names")
    if len(set(actions)) != len(actions):
        raise ConfigError(f"{where}: duplicate action names")
    s_idx = {s: i for i, s in enumerate(states)}
    a_idx = {a: i for i, a in enumerate(actions)}

    def sid(name, key):
        try:
            return s_idx[str(name)]
        except KeyError:
            raise ConfigError(f"{where}: {key} refers to unknown state {name!r}") from None

    def aid(name, key):
        try:
            return a_idx[str(name)]
        except KeyError:
            raise ConfigError(f"{where}: {key} refers to unknown action {name!r}") from None

    n, m = len(states), len(actions)
    initial = sid(data.get("initial", states[0] if states else None), "initial")
    trans = _require(data, "transitions", where)
    probabilistic = any(isinstance(t[2], dict) for t in trans if len(t) == 3)
    table = np.zeros((n, m, n))
    seen = np.zeros((n, m), dtype=bool)
    for t in trans:
        if len(t) != 3:
            raise ConfigError(f"{where}: transitions entries are [state, action, next]")
        q, a = sid(t[0], "transitions"), aid(t[1], "transitions")
        if seen[q, a]:
            raise ConfigError(f"{where}: duplicate transition for ({t[0]}, {t[1]})")
        seen[q, a] = True
        if isinstance(t[2], dict):
            for q2, p in t[2].items():
                table[q, a, sid(q2, "transitions")] += float(p)
        else:
            table[q, a, sid(t[2], "transitions")] = 1.0
    missing = np.argwhere(~seen)
    if len(missing):
        q, a = missing[0]
        raise ConfigError(f"{where}: transitions: no entry for ({states[q]}, {actions[a]})")
    try:
        if probabilistic:
            model: Plant | Mdp = Mdp(states, initial, actions, table)
        else:
            model = Plant(states, initial, actions, table.argmax(axis=2))
    except PreconditionError as exc:
        raise ConfigError(f"{where}: transitions: {exc}") from exc

    unsafe = UnsafeSet(frozenset(sid(s, "unsafe") for s in data.get("unsafe", [])))
    goal = frozenset(sid(s, "goal") for s in data.get("goal", []))
    gamma = float(data.get("gamma", 0.9))
    if not 0.0 < gamma < 1.0:
        raise ConfigError(f"{where}: gamma must lie in (0, 1), got {gamma}")
    if "reward" in data:
        rtab = np.zeros((n, m))
        for entry in data["reward"]:
            if len(entry) != 3:
                raise ConfigError(f"{where}: reward entries are [state, action, value]")
            rtab[sid(entry[0], "reward"), aid(entry[1], "reward")] = float(entry[2])
        reward = RewardStructure(rtab, gamma)
    elif "U" in a_idx:
        reward = untrusted_reward(model, gamma)
    else:
        raise ConfigError(f"{where}: no reward given and no action named 'U' to default to")
    return PlantSpec(model, unsafe, reward, goal, str(data.get("name", "")))


def plant_to_dict(spec: PlantSpec) -> dict:
    model = spec.model
    S, A = model.states, model.actions
    trans = []
    for q in range(model.n):
        for a in range(model.m):
            if model.deterministic:
                trans.append([S[q], A[a], S[int(model.delta[q, a])]])
            else:
                trans.append([S[q], A[a], {S[t]: p for t, p in model.successors(q, a)}])
    out = {
        "states": list(S),
        "initial": S[model.initial],
        "actions": list(A),
        "transitions": trans,
        "unsafe": [S[q] for q in spec.unsafe],
        "reward": [
            [S[q], A[a], float(spec.reward.table[q, a])]
            for q in range(model.n)
            for a in range(model.m)
            if spec.reward.table[q, a] != 0.0
        ],
        "gamma": spec.reward.gamma,
    }
    if spec.goal:
        out["goal"] = [S[q] for q in sorted(spec.goal)]
    return out


def load_plant(path: str | Path) -> PlantSpec:
    spec = plant_from_dict(read_structured(path), str(path))
    if not spec.name:
        spec = PlantSpec(spec.model, spec.unsafe, spec.reward, spec.goal, Path(path).stem)
    return spec


def save_plant(spec: PlantSpec, path: str | Path) -> None:
    write_structured(plant_to_dict(spec), path)


def fixture(name: str) -> PlantSpec:
    """One of the built-in plants: ``fig2-left``, ``fig2-right`` or ``sec6-goal``."""
    if name not in FIXTURES:
        raise ConfigError(f"unknown fixture {name!r}; choose from {', '.join(FIXTURES)}")
    text = resources.files("optrta").joinpath("fixtures", f"{name}.json").read_text()
    spec = plant_from_dict(json.loads(text), name)
    return PlantSpec(spec.model, spec.unsafe, spec.reward, spec.goal, name)


def random_plant(rng: np.random.Generator, n_max: int = 6, gamma: float = 0.9, p_unsafe: float = 0.3) -> PlantSpec:
    """Random deterministic {S, U} plant with 0/1 rewards and a random unsafe set."""
    n = int(rng.integers(1, n_max + 1))
    delta = rng.integers(0, n, size=(n, 2))
    states = [f"q{i}" for i in range(n)]
    plant = Plant(states, 0, ("S", "U"), delta)
    unsafe = UnsafeSet(frozenset(int(q) for q in np.flatnonzero(rng.random(n) < p_unsafe)))
    reward = RewardStructure(rng.integers(0, 2, size=(n, 2)).astype(float), gamma)
    return PlantSpec(plant, unsafe, reward)
