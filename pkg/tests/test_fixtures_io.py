import json

import numpy as np
import pytest

from optrta.errors import ConfigError
from optrta.fixtures import FIXTURES, fixture, load_plant, plant_from_dict, plant_to_dict, random_plant, save_plant


@pytest.mark.parametrize("name", FIXTURES)
@pytest.mark.parametrize("suffix", [".json", ".yaml"])
def test_round_trip(tmp_path, name, suffix):
    spec = fixture(name)
    path = tmp_path / f"plant{suffix}"
    save_plant(spec, path)
    back = load_plant(path)
    assert back.model.states == spec.model.states
    assert np.array_equal(back.model.delta, spec.model.delta)
    assert back.unsafe == spec.unsafe
    assert back.goal == spec.goal
    assert np.array_equal(back.reward.table, spec.reward.table)
    assert back.reward.gamma == spec.reward.gamma
    assert b"\r\n" not in path.read_bytes()


def test_probabilistic_transitions_build_an_mdp():
    spec = plant_from_dict(
        {
            "states": ["a", "b"],
            "transitions": [["a", "S", "a"], ["a", "U", {"a": 0.5, "b": 0.5}], ["b", "S", "b"], ["b", "U", "b"]],
            "unsafe": ["b"],
        }
    )
    assert not spec.model.deterministic
    assert spec.model.prob[0, 1].tolist() == [0.5, 0.5]
    assert spec.reward.table[:, 1].tolist() == [1.0, 1.0]  # default reward pays for U
    assert plant_from_dict(plant_to_dict(spec)).model.prob.tolist() == spec.model.prob.tolist()


def base():
    return {
        "states": ["a", "b"],
        "transitions": [["a", "S", "a"], ["a", "U", "b"], ["b", "S", "b"], ["b", "U", "a"]],
    }


@pytest.mark.parametrize(
    "patch, message",
    [
        ({"states": ["a", "a"]}, "duplicate state"),
        ({"initial": "z"}, "unknown state"),
        ({"unsafe": ["z"]}, "unknown state"),
        ({"gamma": 1.0}, "gamma"),
        ({"transitions": [["a", "S", "a"]]}, "no entry"),
        ({"transitions": [["a", "S", "a"], ["a", "S", "b"]]}, "duplicate transition"),
        ({"transitions": [["a", "X", "a"]]}, "unknown action"),
        ({"transitions": [["a", "S", {"a": 0.3}], ["a", "U", "a"], ["b", "S", "b"], ["b", "U", "b"]]}, "sums to"),
        ({"reward": [["a", "S"]]}, "reward entries"),
    ],
)
def test_malformed_plants(patch, message):
    data = base()
    data.update(patch)
    with pytest.raises(ConfigError, match=message):
        plant_from_dict(data)


def test_missing_transitions_key():
    with pytest.raises(ConfigError, match="transitions"):
        plant_from_dict({"states": ["a"]})


def test_unreadable_and_malformed_files(tmp_path):
    with pytest.raises(ConfigError, match="cannot read"):
        load_plant(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigError, match="malformed"):
        load_plant(bad)
    lst = tmp_path / "list.json"
    lst.write_text(json.dumps([1, 2]))
    with pytest.raises(ConfigError, match="mapping"):
        load_plant(lst)


def test_unknown_fixture():
    with pytest.raises(ConfigError):
        fixture("nope")


def test_random_plant_shape():
    rng = np.random.default_rng(3)
    for _ in range(50):
        spec = random_plant(rng)
        m = spec.model
        assert 1 <= m.n <= 6 and m.m == 2 and m.initial == 0
        assert set(np.unique(spec.reward.table)) <= {0.0, 1.0}
