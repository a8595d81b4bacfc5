"""Classic-control environments and a toy continuous task.

Environments are looked up by Gym-style id (``"CartPole-v1"``) or by a short
lower-case alias (``"cartpole"``).
"""

from ..errors import ConfigurationError, UsageError
from .classic import Acrobot, CartPole, MountainCar, height_bonus, shaped_reward, shaped_rewards
from .core import ActionSpace, Env, EnvSpec, Trajectory, Transition, replay, rollout
from .pointmass import PointMass1D, pd_controller

REGISTRY = {cls.spec.id: cls for cls in (CartPole, Acrobot, MountainCar, PointMass1D)}

ALIASES = {
    "cartpole": "CartPole-v1",
    "acrobot": "Acrobot-v1",
    "mountaincar": "MountainCar-v0",
    "pointmass": "PointMass1D",
}


def canonical_id(env_id: str) -> str:
    if env_id in REGISTRY:
        return env_id
    key = env_id.lower().replace("_", "").replace("-", "")
    for alias, full in ALIASES.items():
        if key == alias or key == full.lower().replace("-", ""):
            return full
    raise ConfigurationError(f"unknown env id {env_id!r}; known: {sorted(REGISTRY)}")


def make(env_id: str) -> Env:
    return REGISTRY[canonical_id(env_id)]()


def spec(env_id: str) -> EnvSpec:
    return REGISTRY[canonical_id(env_id)].spec


__all__ = [
    "ActionSpace", "Env", "EnvSpec", "Trajectory", "Transition", "CartPole", "Acrobot", "MountainCar",
    "PointMass1D", "REGISTRY", "ConfigurationError", "UsageError", "canonical_id", "make", "spec",
    "rollout", "replay", "height_bonus", "shaped_reward", "shaped_rewards", "pd_controller",
]
