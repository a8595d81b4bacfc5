"""Environment base class, episode records and a lockstep rollout helper."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from ..errors import UsageError


@dataclass(frozen=True)
class ActionSpace:
    """Either ``n`` discrete actions or a box ``[low, high]^shape``."""

    n: int | None = None
    low: tuple[float, ...] | None = None
    high: tuple[float, ...] | None = None
    labels: tuple | None = None

    @property
    def discrete(self) -> bool:
        return self.n is not None

    @property
    def dim(self) -> int:
        return 1 if self.discrete else len(self.low)

    def contains(self, action) -> bool:
        if self.discrete:
            return isinstance(action, (int, np.integer)) and 0 <= int(action) < self.n
        a = np.asarray(action, dtype=np.float64).reshape(-1)
        return a.shape == (len(self.low),) and bool(np.all(np.isfinite(a)))

    def describe(self) -> str:
        if self.discrete:
            return "/".join(str(x) for x in (self.labels or range(self.n)))
        return f"[{list(self.low)}, {list(self.high)}]"


@dataclass(frozen=True)
class EnvSpec:
    id: str
    state_dim: int
    action_space: ActionSpace
    max_steps: int
    state_low: tuple[float, ...]
    state_high: tuple[float, ...]


@dataclass(frozen=True)
class Transition:
    state: np.ndarray
    action: object
    next_state: np.ndarray
    true_reward: float
    done: bool
    t: int


@dataclass
class Trajectory:
    """One episode stored column-wise.

    ``states[t]`` is the state in which ``actions[t]`` was taken; the state
    reached after the last action is ``final_state``.
    """

    env_id: str
    seed: int
    states: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    final_state: np.ndarray
    terminated: bool = False

    def __len__(self) -> int:
        return len(self.actions)

    @property
    def ret(self) -> float:
        return float(np.sum(self.rewards))

    @property
    def next_states(self) -> np.ndarray:
        return np.vstack([self.states[1:], self.final_state[None, :]])

    @property
    def transitions(self) -> list[Transition]:
        nxt = self.next_states
        n = len(self)
        return [
            Transition(self.states[t], self.actions[t], nxt[t], float(self.rewards[t]), t == n - 1, t)
            for t in range(n)
        ]


class Env:
    """Seeded single-episode environment.

    Each instance owns its own ``numpy.random.Generator``; ``reset(seed)``
    reseeds it, so an episode is a deterministic function of the seed and the
    action sequence.
    """

    spec: EnvSpec

    def __init__(self):
        self.rng = np.random.default_rng()
        self.state = None
        self.t = 0
        self.done = True

    def reset(self, seed: int | None = None) -> np.ndarray:
        if seed is not None:
            self.rng = np.random.default_rng(seed)
        self.state = self._initial_state()
        self.t = 0
        self.done = False
        return self.observation()

    def observation(self) -> np.ndarray:
        return np.array(self.state, dtype=np.float64)

    def step(self, action) -> Transition:
        if self.done:
            raise UsageError("step() called on a finished episode; call reset() first")
        if not self.spec.action_space.contains(action):
            raise ValueError(f"action {action!r} outside {self.spec.id} action space")
        obs = self.observation()
        reward, terminated = self._advance(action)
        self.t += 1
        truncated = self.t >= self.spec.max_steps
        self.done = terminated or truncated
        self.terminated = terminated
        return Transition(obs, action, self.observation(), float(reward), self.done, self.t - 1)

    # subclasses
    def _initial_state(self) -> np.ndarray:
        raise NotImplementedError

    def _advance(self, action) -> tuple[float, bool]:
        raise NotImplementedError


PolicyFn = Callable[[np.ndarray], np.ndarray]


def rollout(make_env: Callable[[], Env], policy: PolicyFn, seeds: Sequence[int],
            max_steps: int | None = None) -> list[Trajectory]:
    """Run one episode per seed, querying ``policy`` once per step on the
    stacked states of all unfinished episodes.

    ``policy`` maps an ``(B, state_dim)`` array to ``B`` actions.
    """
    envs = [make_env() for _ in seeds]
    spec = envs[0].spec
    discrete = spec.action_space.discrete
    obs = [e.reset(int(s)) for e, s in zip(envs, seeds)]
    rec = [{"s": [], "a": [], "r": []} for _ in seeds]
    active = list(range(len(envs)))
    limit = spec.max_steps if max_steps is None else min(max_steps, spec.max_steps)
    steps = 0
    while active and steps < limit:
        batch = np.array([obs[i] for i in active])
        acts = policy(batch)
        still = []
        for i, a in zip(active, acts):
            a = int(a) if discrete else np.asarray(a, dtype=np.float64).reshape(-1)
            tr = envs[i].step(a)
            rec[i]["s"].append(tr.state)
            rec[i]["a"].append(a)
            rec[i]["r"].append(tr.true_reward)
            obs[i] = tr.next_state
            if not tr.done:
                still.append(i)
        active = still
        steps += 1
    out = []
    for e, s, r in zip(envs, seeds, rec):
        actions = np.array(r["a"], dtype=np.int64) if discrete else np.array(r["a"], dtype=np.float64)
        out.append(Trajectory(spec.id, int(s), np.array(r["s"], dtype=np.float64).reshape(-1, spec.state_dim),
                              actions, np.array(r["r"], dtype=np.float64), e.observation(),
                              bool(getattr(e, "terminated", False))))
    return out


def replay(env: Env, seed: int, actions) -> Trajectory:
    """Re-run a recorded action sequence from ``seed``."""
    env.reset(seed)
    states, rewards = [], []
    for a in actions:
        a = int(a) if env.spec.action_space.discrete else np.asarray(a, dtype=np.float64)
        tr = env.step(a)
        states.append(tr.state)
        rewards.append(tr.true_reward)
    return Trajectory(env.spec.id, int(seed), np.array(states).reshape(-1, env.spec.state_dim),
                      np.asarray(actions), np.array(rewards), env.observation(), bool(getattr(env, "terminated", False)))
