"""A 1-D point mass pushed towards the origin; continuous-action test bed."""

from __future__ import annotations

import numpy as np

from . import constants as C
from .core import ActionSpace, Env, EnvSpec


class PointMass1D(Env):
    """State ``(position, velocity)``, action a force in ``[-1, 1]`` (clipped),
    reward ``-position**2`` per step, fixed 200-step episodes."""

    spec = EnvSpec(
        id="PointMass1D",
        state_dim=2,
        action_space=ActionSpace(low=(-C.POINTMASS_MAX_FORCE,), high=(C.POINTMASS_MAX_FORCE,)),
        max_steps=C.POINTMASS_MAX_STEPS,
        state_low=(-float("inf"), -float("inf")),
        state_high=(float("inf"), float("inf")),
    )

    def _initial_state(self):
        return np.array([self.rng.uniform(-C.POINTMASS_INIT_HIGH, C.POINTMASS_INIT_HIGH), 0.0])

    def _advance(self, action):
        force = float(np.clip(np.asarray(action, dtype=np.float64).reshape(-1)[0],
                              -C.POINTMASS_MAX_FORCE, C.POINTMASS_MAX_FORCE))
        p, v = self.state
        # semi-implicit Euler
        v = v + C.POINTMASS_DT * (force - C.POINTMASS_DAMPING * v)
        p = p + C.POINTMASS_DT * v
        self.state = np.array([p, v])
        return -p * p, False


def pd_controller(states, kp: float = 1.0, kd: float = 1.6) -> np.ndarray:
    """Saturated PD law driving the mass to the origin; used as the expert."""
    s = np.atleast_2d(states)
    return np.clip(-kp * s[:, 0] - kd * s[:, 1], -C.POINTMASS_MAX_FORCE, C.POINTMASS_MAX_FORCE)[:, None]
