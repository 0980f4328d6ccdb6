import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from optrta.fixtures import fixture
from optrta.plant import Plant, RewardStructure, UnsafeSet

settings.register_profile(
    "default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


@pytest.fixture
def left():
    return fixture("fig2-left")


@pytest.fixture
def right():
    return fixture("fig2-right")


@pytest.fixture
def goal():
    return fixture("sec6-goal")


def doomed_plant(gamma=0.9):
    """Two states; every action from q0 lands in the unsafe state qB."""
    plant = Plant(("q0", "qB"), 0, ("S", "U"), np.array([[1, 1], [1, 1]]))
    rs = RewardStructure(np.array([[0.0, 1.0], [0.0, 1.0]]), gamma)
    return plant, rs, UnsafeSet(frozenset({1}))
