"""CartPole-v1, Acrobot-v1 and MountainCar-v0 dynamics."""

from __future__ import annotations

import math

import numpy as np

from . import constants as C
from .core import ActionSpace, Env, EnvSpec, Transition

_INF = float("inf")


class CartPole(Env):
    spec = EnvSpec(
        id="CartPole-v1",
        state_dim=4,
        action_space=ActionSpace(n=2),
        max_steps=C.CARTPOLE_MAX_STEPS,
        state_low=(-2 * C.CARTPOLE_X_THRESHOLD, -_INF, -2 * C.CARTPOLE_THETA_THRESHOLD, -_INF),
        state_high=(2 * C.CARTPOLE_X_THRESHOLD, _INF, 2 * C.CARTPOLE_THETA_THRESHOLD, _INF),
    )

    def _initial_state(self):
        return self.rng.uniform(-C.CARTPOLE_INIT_HIGH, C.CARTPOLE_INIT_HIGH, size=4)

    def _advance(self, action):
        x, x_dot, theta, theta_dot = self.state
        total_mass = C.CARTPOLE_MASSPOLE + C.CARTPOLE_MASSCART
        polemass_length = C.CARTPOLE_MASSPOLE * C.CARTPOLE_LENGTH
        force = C.CARTPOLE_FORCE_MAG if action == 1 else -C.CARTPOLE_FORCE_MAG
        costheta, sintheta = math.cos(theta), math.sin(theta)
        temp = (force + polemass_length * theta_dot**2 * sintheta) / total_mass
        thetaacc = (C.CARTPOLE_GRAVITY * sintheta - costheta * temp) / (
            C.CARTPOLE_LENGTH * (4.0 / 3.0 - C.CARTPOLE_MASSPOLE * costheta**2 / total_mass)
        )
        xacc = temp - polemass_length * thetaacc * costheta / total_mass
        tau = C.CARTPOLE_TAU
        x = x + tau * x_dot
        x_dot = x_dot + tau * xacc
        theta = theta + tau * theta_dot
        theta_dot = theta_dot + tau * thetaacc
        self.state = np.array([x, x_dot, theta, theta_dot])
        terminated = (
            x < -C.CARTPOLE_X_THRESHOLD or x > C.CARTPOLE_X_THRESHOLD
            or theta < -C.CARTPOLE_THETA_THRESHOLD or theta > C.CARTPOLE_THETA_THRESHOLD
        )
        return 1.0, bool(terminated)


def _wrap(x, lo, hi):
    diff = hi - lo
    while x > hi:
        x -= diff
    while x < lo:
        x += diff
    return x


def _acrobot_derivs(s, torque):
    m1, m2 = C.ACROBOT_LINK_MASS_1, C.ACROBOT_LINK_MASS_2
    l1 = C.ACROBOT_LINK_LENGTH_1
    lc1, lc2 = C.ACROBOT_LINK_COM_POS_1, C.ACROBOT_LINK_COM_POS_2
    i1 = i2 = C.ACROBOT_LINK_MOI
    g = C.ACROBOT_GRAVITY
    theta1, theta2, dtheta1, dtheta2 = s
    d1 = m1 * lc1**2 + m2 * (l1**2 + lc2**2 + 2 * l1 * lc2 * math.cos(theta2)) + i1 + i2
    d2 = m2 * (lc2**2 + l1 * lc2 * math.cos(theta2)) + i2
    phi2 = m2 * lc2 * g * math.cos(theta1 + theta2 - math.pi / 2.0)
    phi1 = (
        -m2 * l1 * lc2 * dtheta2**2 * math.sin(theta2)
        - 2 * m2 * l1 * lc2 * dtheta2 * dtheta1 * math.sin(theta2)
        + (m1 * lc1 + m2 * l1) * g * math.cos(theta1 - math.pi / 2)
        + phi2
    )
    ddtheta2 = (torque + d2 / d1 * phi1 - m2 * l1 * lc2 * dtheta1**2 * math.sin(theta2) - phi2) / (
        m2 * lc2**2 + i2 - d2**2 / d1
    )
    ddtheta1 = -(d2 * ddtheta2 + phi1) / d1
    return np.array([dtheta1, dtheta2, ddtheta1, ddtheta2])


def _rk4(s, torque, dt):
    k1 = _acrobot_derivs(s, torque)
    k2 = _acrobot_derivs(s + dt / 2 * k1, torque)
    k3 = _acrobot_derivs(s + dt / 2 * k2, torque)
    k4 = _acrobot_derivs(s + dt * k3, torque)
    return s + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)


class Acrobot(Env):
    """Internal state is ``(theta1, theta2, dtheta1, dtheta2)``; observations
    are ``(cos t1, sin t1, cos t2, sin t2, dt1, dt2)``."""

    spec = EnvSpec(
        id="Acrobot-v1",
        state_dim=6,
        action_space=ActionSpace(n=3, labels=(-1, 0, 1)),
        max_steps=C.ACROBOT_MAX_STEPS,
        state_low=(-1.0, -1.0, -1.0, -1.0, -C.ACROBOT_MAX_VEL_1, -C.ACROBOT_MAX_VEL_2),
        state_high=(1.0, 1.0, 1.0, 1.0, C.ACROBOT_MAX_VEL_1, C.ACROBOT_MAX_VEL_2),
    )

    def _initial_state(self):
        return self.rng.uniform(-C.ACROBOT_INIT_HIGH, C.ACROBOT_INIT_HIGH, size=4)

    def observation(self):
        t1, t2, d1, d2 = self.state
        return np.array([math.cos(t1), math.sin(t1), math.cos(t2), math.sin(t2), d1, d2])

    def _advance(self, action):
        ns = _rk4(np.asarray(self.state, dtype=np.float64), C.ACROBOT_TORQUES[int(action)], C.ACROBOT_DT)
        ns[0] = _wrap(ns[0], -math.pi, math.pi)
        ns[1] = _wrap(ns[1], -math.pi, math.pi)
        ns[2] = min(max(ns[2], -C.ACROBOT_MAX_VEL_1), C.ACROBOT_MAX_VEL_1)
        ns[3] = min(max(ns[3], -C.ACROBOT_MAX_VEL_2), C.ACROBOT_MAX_VEL_2)
        self.state = ns
        terminated = bool(-math.cos(ns[0]) - math.cos(ns[1] + ns[0]) > 1.0)
        return (0.0 if terminated else -1.0), terminated


class MountainCar(Env):
    spec = EnvSpec(
        id="MountainCar-v0",
        state_dim=2,
        action_space=ActionSpace(n=3, labels=(-1, 0, 1)),
        max_steps=C.MOUNTAINCAR_MAX_STEPS,
        state_low=(C.MOUNTAINCAR_MIN_POSITION, -C.MOUNTAINCAR_MAX_SPEED),
        state_high=(C.MOUNTAINCAR_MAX_POSITION, C.MOUNTAINCAR_MAX_SPEED),
    )

    def _initial_state(self):
        return np.array([self.rng.uniform(C.MOUNTAINCAR_INIT_LOW, C.MOUNTAINCAR_INIT_HIGH), 0.0])

    def _advance(self, action):
        position, velocity = self.state
        velocity += (int(action) - 1) * C.MOUNTAINCAR_FORCE + math.cos(3 * position) * (-C.MOUNTAINCAR_GRAVITY)
        velocity = min(max(velocity, -C.MOUNTAINCAR_MAX_SPEED), C.MOUNTAINCAR_MAX_SPEED)
        position += velocity
        position = min(max(position, C.MOUNTAINCAR_MIN_POSITION), C.MOUNTAINCAR_MAX_POSITION)
        if position == C.MOUNTAINCAR_MIN_POSITION and velocity < 0:
            velocity = 0.0
        self.state = np.array([position, velocity])
        terminated = bool(position >= C.MOUNTAINCAR_GOAL_POSITION and velocity >= C.MOUNTAINCAR_GOAL_VELOCITY)
        return -1.0, terminated


def height_bonus(position) -> np.ndarray:
    """Track height ``0.45 sin(3x) + 0.55`` rescaled from [0.1, 1.0] to [0, 1]."""
    h = np.sin(3.0 * np.asarray(position, dtype=np.float64)) * 0.45 + 0.55
    return (h - 0.1) / 0.9


def shaped_reward(env_id: str, transition: Transition, enabled: bool = True) -> float:
    """Training-only reward for MountainCar: ``-1 + height_bonus(next position)``.

    Any other env, or ``enabled=False``, passes the true reward through.
    """
    if not enabled or env_id != MountainCar.spec.id:
        return transition.true_reward
    return -1.0 + float(height_bonus(transition.next_state[0]))


def shaped_rewards(env_id: str, next_states: np.ndarray, true_rewards: np.ndarray, enabled: bool = True) -> np.ndarray:
    """Vectorised :func:`shaped_reward` over one trajectory."""
    if not enabled or env_id != MountainCar.spec.id:
        return np.asarray(true_rewards, dtype=np.float64)
    return -1.0 + height_bonus(np.asarray(next_states)[:, 0])
