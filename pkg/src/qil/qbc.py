"""Behavioural cloning of a VQC policy by minibatch negative log-likelihood.

Training never touches the environment except in the evaluation episodes
scheduled by ``eval_interval`` (and the final evaluation).
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import envs, qgail, rollouts
from .errors import ConfigurationError
from .optim import make_optimizer

CURVE_FIELDS = ["iteration", "eval_return_mean", "eval_return_std", "loss"]


@dataclass
class QbcConfig:
    env_id: str
    n_layers: int
    observables: list[str]
    beta: float
    lr: list[float]  # lam, phi, nu (, log_sigma)
    state_bounds: list[float]
    iterations: int = 300
    batch_size: int = 2000
    optimizer: str = "adam"
    entangler: str = "cnot"
    rotations: list[str] = field(default_factory=lambda: ["X", "Y", "Z"])
    train_lambda: bool = True
    train_nu: bool = True
    sigma_init: float = 0.5
    eval_interval: int = 25
    eval_episodes: int = 10
    final_eval_episodes: int = 20
    seed: int = 0

    def __post_init__(self):
        self.env_id = envs.canonical_id(self.env_id)
        spec = envs.spec(self.env_id)
        if len(self.state_bounds) != spec.state_dim:
            raise ConfigurationError(f"{self.env_id} needs {spec.state_dim} state bounds")
        if spec.action_space.discrete and len(self.observables) != spec.action_space.n:
            raise ConfigurationError(f"{self.env_id} needs one observable per action ({spec.action_space.n})")
        if self.batch_size < 1 or self.iterations < 0:
            raise ConfigurationError("batch_size must be >= 1 and iterations >= 0")

    def to_dict(self) -> dict:
        return asdict(self)


def qbc_loss(policy, states, actions) -> float:
    """Mean ``-log pi(a|s)`` over a batch of raw (unnormalized) states."""
    return float(-np.mean(policy.log_prob(states, actions)))


def sample_batch(pool_states, pool_actions, batch_size: int, rng: np.random.Generator):
    idx = rng.integers(0, len(pool_actions), size=batch_size)
    return pool_states[idx], pool_actions[idx]


def qbc_step(policy, optimizer, states, actions) -> float:
    """One descent step on the batch NLL; returns the loss before the step."""
    n = len(actions)
    logp = policy.log_prob(states, actions)
    # grad of -(1/N) sum log pi
    grad = -policy.score_gradient(states, actions, np.full(n, 1.0 / n))
    policy.set_vector(optimizer.step(policy.params.vector(), grad))
    return float(-np.mean(logp))


@dataclass
class QbcResult:
    policy: object
    curve: list[dict]
    losses: np.ndarray
    final_returns: np.ndarray
    best_params: object


def qbc_train(config: QbcConfig, demos, out_dir=None, progress=None) -> QbcResult:
    if envs.canonical_id(demos.env_id) != config.env_id:
        raise ConfigurationError(f"demos are for {demos.env_id}, config is for {config.env_id}")
    init_rng, batch_rng = (np.random.default_rng(s) for s in np.random.SeedSequence(config.seed).spawn(2))
    policy = qgail.make_policy(config.env_id, config.n_layers, config.observables, config.beta,
                               config.state_bounds, init_rng, config.entangler, config.rotations, config.sigma_init)
    opt = make_optimizer(config.optimizer, qgail.policy_rates(policy, config.lr, config.train_lambda, config.train_nu))
    pool_s, pool_a = demos.pairs()
    if not len(pool_a):
        raise ConfigurationError("no demonstration pairs")

    curve, losses = [], []
    best = (-np.inf, policy.params.copy())
    for it in range(1, config.iterations + 1):
        s, a = sample_batch(pool_s, pool_a, config.batch_size, batch_rng)
        loss = qbc_step(policy, opt, s, a)
        losses.append(loss)
        row = {"iteration": it, "eval_return_mean": "", "eval_return_std": "", "loss": loss}
        if config.eval_interval and (it % config.eval_interval == 0 or it == config.iterations):
            ev = rollouts.evaluate(policy, config.env_id, config.eval_episodes, config.seed * 100003 + it)
            row["eval_return_mean"], row["eval_return_std"] = ev.mean(), ev.std()
            if ev.mean() > best[0]:
                best = (ev.mean(), policy.params.copy())
        curve.append(row)
        if progress is not None:
            progress(row)

    final = rollouts.evaluate(policy, config.env_id, config.final_eval_episodes, config.seed * 100003 + 99991)
    result = QbcResult(policy, curve, np.array(losses), final, best[1])
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        qgail.write_csv(out / "curve.csv", CURVE_FIELDS, curve)
        policy.save(out / "policy_final.json")
        best_policy = type(policy)(policy.arch, best[1], policy.encoding)
        best_policy.save(out / "policy_best.json")
        summary = {"final_return_mean": float(final.mean()), "final_return_std": float(final.std()),
                   "final_returns": final.tolist()}
        (out / "summary.json").write_text(json.dumps(summary, indent=1) + "\n")
    return result
