import numpy as np
import pytest

from optrta._backend import kernels
from optrta.baselines import (
    ReachBox,
    box_is_safe,
    interval_reach,
    reach_rta_decide,
    rollout_samples,
    sim_rta_decide,
)
from optrta.dynamics import ACC, DUBINS
from optrta.errors import PreconditionError
from optrta.scenarios import (
    FIXTURE_NAMES,
    S,
    U,
    advance_follower,
    env_step,
    leader_state,
    reset,
    scenario_fixture,
    unsafe_distance,
)
from optrta.scenarios.config import LookaheadConfig

from .test_scenarios import acc_cfg


def escapes(cfg, q, widths, steps=10, n=20, seed=0):
    w = np.asarray(widths)
    box = ReachBox(q - w, q + w, 0)
    boxes = interval_reach(cfg, box, steps)
    traj = rollout_samples(cfg, box, steps, n, np.random.default_rng(seed))
    bad = 0
    for t in traj:
        for j, b in enumerate(boxes):
            if not b.exploded and not b.contains(t[j + 1], cfg.model, 1e-9):
                bad += 1
    return bad


@pytest.mark.parametrize("name", FIXTURE_NAMES)
def test_reach_boxes_contain_sampled_trajectories(name):
    cfg = scenario_fixture(name)
    q = reset(cfg).follower
    w = np.full(cfg.state_dim, 0.2)
    assert escapes(cfg, q, w) == 0


def test_point_box_acc_tracks_closed_form():
    lo, hi, ok = kernels.enclose_period(ACC, np.array([0.0, 5.0]), np.array([0.0, 5.0]), [2.0], [2.0], 0.0125, 40, 1e-9)
    assert ok
    exact = [5.0 * 0.5 + 0.5 * 2.0 * 0.25, 6.0]
    assert np.all(lo <= exact) and np.all(exact <= hi)
    assert np.max(hi - lo) < 0.02


def test_point_box_straight_heading_stays_degenerate():
    q = np.array([0.0, 0.0, 0.3, 5.0])
    lo, hi, ok = kernels.enclose_period(DUBINS, q, q, [0.0, 0.0], [0.0, 0.0], 0.005, 40, 0.0)
    assert ok and hi[2] - lo[2] < 1e-13


def test_far_follower_gets_u():
    cfg = acc_cfg(init={"offset": [-30.0, 0.0]})
    s = reset(cfg)
    lk = LookaheadConfig(horizon=3)
    assert sim_rta_decide(s, cfg, lk) == U
    assert reach_rta_decide(s, cfg, lk) == U


def test_follower_about_to_collide_gets_s():
    cfg = acc_cfg(init={"offset": [5.5, 6.0]}, v_bounds=[0.0, 40.0])
    s = reset(cfg)
    # under U this state violates within one decision step
    nxt = advance_follower(cfg, s.leader, s.follower, U)
    assert leader_state(cfg, 1)[0] - nxt[0] < cfg.gains.c
    assert sim_rta_decide(s, cfg) == S
    assert reach_rta_decide(s, cfg) == S


def test_zero_width_sim_is_nominal_rollout():
    cfg = scenario_fixture("dubins_o-var1")
    lk = LookaheadConfig(horizon=10, samples=7)
    s = reset(cfg)
    for _ in range(15):
        nominal = U
        q = s.follower.copy()
        for j in range(lk.horizon):
            q = advance_follower(cfg, leader_state(cfg, s.step + j), q, U)
            if unsafe_distance(cfg, leader_state(cfg, s.step + j + 1), [q]) < 0:
                nominal = S
                break
        assert sim_rta_decide(s, cfg, lk, rng_seed=s.step) == nominal
        s, _, done = env_step(s, nominal, cfg)
        if done:
            break


def test_box_overlapping_obstacle_is_unsafe():
    cfg = scenario_fixture("dubins_o-var1")
    (olo, ohi), = cfg.obstacles
    mid = [(a + b) / 2 for a, b in zip(olo, ohi)]
    box = ReachBox(np.array([mid[0] - 0.1, mid[1] - 0.1, 0.0, 9.0]), np.array([mid[0] + 0.1, mid[1] + 0.1, 0.1, 10.0]), 1)
    assert not box_is_safe(cfg, [box], leader_state(cfg, 1))


def test_exploded_box_is_unsafe():
    cfg = scenario_fixture("dubins-var1")
    box = ReachBox(np.full(4, -np.inf), np.full(4, np.inf), 1, exploded=True)
    assert not box_is_safe(cfg, [box], leader_state(cfg, 1))


def test_wide_box_explodes_after_width_cap():
    cfg = scenario_fixture("dubins-var1")
    lk = LookaheadConfig(max_width=1.0)
    q = reset(cfg).follower
    boxes = interval_reach(cfg, ReachBox(q - 0.4, q + 0.4, 0), 20, lk)
    assert len(boxes) == 20 and boxes[-1].exploded
    assert all(np.isinf(b.hi).all() for b in boxes if b.exploded)


def test_recoverable_check_only_for_acc():
    cfg = scenario_fixture("dubins-var1")
    lk = LookaheadConfig(check_set="recoverable")
    with pytest.raises(PreconditionError):
        sim_rta_decide(reset(cfg), cfg, lk)
    with pytest.raises(PreconditionError):
        reach_rta_decide(reset(cfg), cfg, lk)


def test_fleet_decisions_are_joint():
    cfg = scenario_fixture("fleet-var1")
    a = reach_rta_decide(reset(cfg), cfg)
    assert isinstance(a, tuple) and len(set(a)) == 1 and len(a) == 4


def test_reach_box_rejects_inverted_bounds():
    with pytest.raises(PreconditionError):
        ReachBox(np.array([1.0]), np.array([0.0]), 0)


def test_decide_on_finished_episode_refused():
    cfg = acc_cfg(episode_len=1)
    s = reset(cfg)
    env_step(s, S, cfg)
    with pytest.raises(PreconditionError):
        sim_rta_decide(s, cfg)
