"""Running VQC policies in environments."""

from __future__ import annotations

import numpy as np

from . import envs
from .envs import Trajectory


def policy_fn(policy, rng: np.random.Generator, greedy: bool = False):
    """Adapt a VQC policy to the ``states -> actions`` callable used by
    :func:`qil.envs.rollout`.  ``greedy`` takes the most likely action (or the
    Gaussian mean) instead of sampling."""
    if greedy:
        if policy.kind == "softmax":
            return lambda s: np.argmax(policy.probs(s), axis=1)
        return lambda s: policy.mean(s)
    return lambda s: policy.sample(s, rng)


def collect(policy, env_id: str, seeds, rng: np.random.Generator, greedy: bool = False) -> list[Trajectory]:
    env_id = envs.canonical_id(env_id)
    return envs.rollout(lambda: envs.make(env_id), policy_fn(policy, rng, greedy), list(seeds))


def evaluate(policy, env_id: str, n_episodes: int, seed: int, greedy: bool = False) -> np.ndarray:
    """True-reward returns of ``n_episodes`` fresh episodes.

    Episode seeds and action noise both derive from ``seed`` and are disjoint
    from anything used during training.
    """
    ss = np.random.SeedSequence([int(seed), 0x51A7E])
    env_seeds = ss.generate_state(n_episodes)
    rng = np.random.default_rng(ss.spawn(1)[0])
    trajs = collect(policy, env_id, env_seeds.tolist(), rng, greedy)
    return np.array([t.ret for t in trajs])
