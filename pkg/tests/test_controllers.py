import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from optrta import controllers as ctl
from optrta import interval as iv
from optrta.errors import ConfigError

G = ctl.Gains()


def test_acc_untrusted_cases():
    g = ctl.Gains(d=5.0, c=3.0, a_max=1.0)
    assert ctl.acc_untrusted([0.0, 0.0], [10.0, 0.0], g) == [1.0]
    assert ctl.acc_untrusted([6.0, 0.0], [10.0, 0.0], g) == [-1.0]
    assert ctl.acc_untrusted([5.0, 0.0], [10.0, 0.0], g) == [1.0]


def test_acc_safety_cases():
    g = ctl.Gains(k1=1.0, k2=2.0, d=5.0, c=3.0, a_max=10.0)
    assert ctl.acc_safety([5.0, 4.0], [10.0, 4.0], g) == [0.0]
    assert ctl.acc_safety([2.0, 5.0], [10.0, 4.0], g) == [1.0]
    g2 = ctl.Gains(k1=1.0, k2=2.0, d=5.0, c=3.0, a_max=2.0)
    assert ctl.acc_safety([-5.0, 4.0], [10.0, 4.0], g2) == [2.0]


def test_dubins_fixed_point_and_turning():
    ref = (10.0, 5.0, 0.3, 8.0)
    assert ctl.dubins_tracking([10.0, 5.0, 0.3, 8.0], ref, 0.1, G) == [0.1, 0.0]
    # reference to the left of the follower: turn left
    om, _ = ctl.dubins_tracking([0.0, 0.0, 0.0, 8.0], (0.0, 1.0, 0.0, 8.0), 0.1, G)
    assert om == pytest.approx(0.1 + 8.0 * G.k1 * 1.0) and om > 0.1


def test_dubins_no_catch_up_without_permission():
    _, a = ctl.dubins_tracking([0.0, 0.0, 0.0, 5.0], (0.0, 0.0, 0.0, 8.0), 0.0, G, allow_accel=False)
    assert a == 0.0
    _, a = ctl.dubins_tracking([0.0, 0.0, 0.0, 9.0], (0.0, 0.0, 0.0, 8.0), 0.0, G, allow_accel=False)
    assert a < 0.0


def test_air_cases():
    out = ctl.air_tracking([1.0, 2.0, 80.0, 0.2, 0.0, 20.0], (1.0, 2.0, 80.0, 0.2), 0.25, 20.0, G)
    assert out == [0.25, 0.0, 0.0]
    g = ctl.Gains(Gamma_max=10.0)
    _, Gamma, _ = ctl.air_tracking([0.0, 0.0, 0.0, 0.0, 0.0, 20.0], (100.0, 0.0, 100.0, 0.0), 0.0, 20.0, g)
    assert Gamma == pytest.approx(g.k4 * math.pi / 4)
    assert ctl.air_tracking([0, 0, 80.0, 0, 0, 12.0], (0, 0, 80.0, 0), 0.0, 20.0, G, safety_mode=True)[2] == 0.0


def test_gains_validation():
    with pytest.raises(ConfigError):
        ctl.Gains(k1=-1.0)
    with pytest.raises(ConfigError):
        ctl.Gains(c=20.0, d=10.0)
    with pytest.raises(ConfigError, match="unknown"):
        ctl.Gains.from_dict({"kp": 1.0})
    assert ctl.Gains.from_dict(G.to_dict()) == G


def box_around(rng, q, w):
    lo = q - w
    hi = q + w
    pt = lo + (hi - lo) * rng.random(len(q))
    return list(zip(lo.tolist(), hi.tolist())), pt


seeds = st.integers(0, 2**32 - 1)


def enclosed(box, vals):
    return all(a - 1e-12 <= v <= b + 1e-12 for (a, b), v in zip(box, vals))


@given(seeds)
def test_box_controllers_enclose_point_controllers(seed):
    rng = np.random.default_rng(seed)
    w = rng.random() * 2.0
    ql = np.array([rng.normal() * 20, 10 + rng.normal()])
    X, p = box_around(rng, np.array([ql[0] - 10 + rng.normal() * 5, 10 + rng.normal() * 2]), w)
    assert enclosed(ctl.acc_untrusted_box(X, ql, G), ctl.acc_untrusted(p, ql, G))
    assert enclosed(ctl.acc_safety_box(X, ql, G), ctl.acc_safety(p, ql, G))

    ref = (rng.normal() * 10, rng.normal() * 10, rng.uniform(-3, 3), 8.0)
    X, p = box_around(rng, np.array([rng.normal() * 10, rng.normal() * 10, rng.uniform(-3, 3), 8.0]), w)
    for allow in (True, False):
        assert enclosed(ctl.dubins_tracking_box(X, ref, 0.1, G, allow), ctl.dubins_tracking(p, ref, 0.1, G, allow))

    aref = (rng.normal() * 10 + 40, rng.normal() * 10, 80.0, rng.uniform(-3, 3))
    q = np.array([rng.normal() * 10, rng.normal() * 10, 90.0, rng.uniform(-3, 3), rng.normal() * 0.1, 20.0])
    X, p = box_around(rng, q, w * np.array([1, 1, 1, 0.2, 0.05, 1]))
    for mode in (True, False):
        assert enclosed(ctl.air_tracking_box(X, aref, 0.25, 20.0, G, mode), ctl.air_tracking(p, aref, 0.25, 20.0, G, mode))


def test_box_of_a_point_is_tight():
    X = [(1.0, 1.0), (2.0, 2.0), (0.3, 0.3), (8.0, 8.0)]
    ref = (5.0, 5.0, 0.5, 8.0)
    for (a, b), v in zip(ctl.dubins_tracking_box(X, ref, 0.1, G), ctl.dubins_tracking([1, 2, 0.3, 8.0], ref, 0.1, G)):
        assert a <= v <= b and b - a < 1e-12
    assert iv.contains(ctl.acc_safety_box([(0.0, 0.0), (5.0, 5.0)], [12.0, 6.0], G)[0], ctl.acc_safety([0, 5.0], [12, 6.0], G)[0])
