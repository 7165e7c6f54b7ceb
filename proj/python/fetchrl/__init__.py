"""Gridworld fetch agents with simulated perception, trained with PPO."""

from ._core import (
    ACTION_COUNT,
    CLASS_COUNT,
    ConfigError,
    ContractViolation,
    FetchEnv,
    ShapeMismatch,
    __version__,
    checkpoint_info,
    compute_gae,
    compute_reward,
    default_config,
    observation_schema,
    relative_change,
    render_scene,
    resolve_config,
    scene_ids,
    train,
)

__all__ = [
    "ACTION_COUNT",
    "CLASS_COUNT",
    "ConfigError",
    "ContractViolation",
    "FetchEnv",
    "ShapeMismatch",
    "__version__",
    "checkpoint_info",
    "compute_gae",
    "compute_reward",
    "default_config",
    "observation_schema",
    "relative_change",
    "render_scene",
    "resolve_config",
    "scene_ids",
    "train",
]
