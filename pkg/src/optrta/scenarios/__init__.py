from .config import (
    FIXTURE_NAMES,
    SCENARIOS,
    LearningConfig,
    LeaderSpec,
    LookaheadConfig,
    ScenarioConfig,
    config_from_dict,
    config_to_dict,
    load_config,
    resolve_config,
    scenario_fixture,
)
from .env import (
    ACTION_NAMES,
    OBS_DEFAULTS,
    S,
    U,
    ScenarioState,
    advance_follower,
    agent_rewards,
    agent_unsafe_distance,
    env_step,
    follower_input,
    follower_input_box,
    leader_omega,
    leader_state,
    min_unsafe_distance,
    normalize_action,
    observation,
    position,
    reference_point,
    reset,
    unsafe_distance,
    violation_penalty,
)
