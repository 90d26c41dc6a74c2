"""Rolling-upgrade container scheduling simulator, PPO scheduler and baselines."""

from ._core import (
    OcsError,
    Hyperparams,
    ScenarioConfig,
    Simulator,
    compare,
    gae,
    generate_scenario,
    load_checkpoint_info,
    run_episode,
    train,
)

__all__ = [
    "OcsError",
    "Hyperparams",
    "ScenarioConfig",
    "Simulator",
    "compare",
    "gae",
    "generate_scenario",
    "load_checkpoint_info",
    "run_episode",
    "train",
]
