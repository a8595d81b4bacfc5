"""Adversarial imitation with a VQC generator.

Each iteration collects a batch of on-policy episodes, scores them with a
discriminator, takes one ascent step on the discriminator objective

    mean log D(agent) + mean log(1 - D(expert))

(agent pairs are the positives, so expert-like pairs get small ``D``), then
takes one REINFORCE-with-baseline step on the policy and refits the
time-varying linear baseline.  A PPO generator is available for Gaussian
policies.
"""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import envs, rollouts, vqc
from .errors import ConfigurationError
from .optim import Adam, SGD, group_rates, make_optimizer

D_CLIP = 1e-6

# ---------------------------------------------------------------------------
# virtual rewards


class RewardKind(str, enum.Enum):
    NEG_LOG_D = "neg_log_d"
    LOG_ONE_MINUS_D = "log_one_minus_d"
    DIFF = "diff"

    @classmethod
    def parse(cls, value) -> "RewardKind":
        if isinstance(value, cls):
            return value
        text = str(value).strip().lower()
        aliases = {"-log d": cls.NEG_LOG_D, "log(1-d)": cls.LOG_ONE_MINUS_D}
        if text in aliases:
            return aliases[text]
        key = text.replace("-", "_")
        for k in cls:
            if key in (k.value, k.name.lower()):
                return k
        raise ConfigurationError(f"unknown reward kind {value!r}")


def virtual_reward(d, kind) -> np.ndarray:
    """Reward from discriminator outputs ``d``; ``d`` is clipped to
    ``[1e-6, 1 - 1e-6]`` before any logarithm."""
    kind = RewardKind.parse(kind)
    d = np.clip(np.asarray(d, dtype=np.float64), D_CLIP, 1.0 - D_CLIP)
    if kind is RewardKind.NEG_LOG_D:
        return -np.log(d)
    if kind is RewardKind.LOG_ONE_MINUS_D:
        return np.log1p(-d)
    return -(np.log(d) - np.log1p(-d))


# ---------------------------------------------------------------------------
# discriminators


def discriminator_inputs(x_norm: np.ndarray, actions, action_space) -> np.ndarray:
    """Normalized states with the action appended (one-hot if discrete)."""
    x_norm = np.atleast_2d(x_norm)
    if action_space.discrete:
        onehot = np.zeros((len(x_norm), action_space.n))
        onehot[np.arange(len(x_norm)), np.asarray(actions, dtype=int)] = 1.0
        return np.hstack([x_norm, onehot])
    return np.hstack([x_norm, np.asarray(actions, dtype=np.float64).reshape(len(x_norm), -1)])


def power_iteration(w: np.ndarray, u: np.ndarray, n_iter: int, tol: float = 0.0,
                    max_iter: int = 500) -> tuple[float, np.ndarray]:
    """Largest singular value of ``w`` by power iteration started from the
    left vector ``u``; returns ``(sigma, u)``.

    Runs ``n_iter`` rounds, then keeps going (up to ``max_iter``) while the
    estimate still changes by more than ``tol`` relative.
    """
    sigma = 0.0
    for k in range(max(n_iter, 1) if tol <= 0 else max_iter):
        v = w.T @ u
        v /= np.linalg.norm(v) + 1e-30
        u = w @ v
        norm = np.linalg.norm(u)
        u /= norm + 1e-30
        prev, sigma = sigma, float(norm)
        if tol > 0 and k + 1 >= n_iter and abs(sigma - prev) <= tol * sigma:
            break
    return sigma, u


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


class MlpDiscriminator:
    """``in -> 64 -> 64 -> 1`` tanh network with a sigmoid output.

    With spectral normalization on, every weight matrix is divided by its
    power-iteration spectral norm after each update (and once at
    construction), with the power-iteration vectors carried over between
    updates.
    """

    kind = "mlp"

    def __init__(self, in_dim: int, rng: np.random.Generator, hidden: Sequence[int] = (64, 64),
                 spectral_norm: bool = True, power_iters: int = 5, lr: float = 3e-4, power_tol: float = 1e-9):
        sizes = [in_dim, *hidden, 1]
        self.weights, self.biases = [], []
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
            bound = math.sqrt(6.0 / (fan_in + fan_out))
            self.weights.append(rng.uniform(-bound, bound, size=(fan_out, fan_in)))
            self.biases.append(np.zeros(fan_out))
        self.spectral_norm = spectral_norm
        self.power_iters = power_iters
        self.power_tol = power_tol
        self._u = [rng.standard_normal(w.shape[0]) for w in self.weights]
        self._u = [u / np.linalg.norm(u) for u in self._u]
        self.optimizer = Adam(lr)
        if spectral_norm:
            # run to convergence once so the warm start is accurate from the first update
            self.normalize(n_iter=1000, tol=0.0)

    # -- parameters --------------------------------------------------------

    def vector(self) -> np.ndarray:
        return np.concatenate([a.ravel() for pair in zip(self.weights, self.biases) for a in pair])

    def set_vector(self, v: np.ndarray) -> None:
        pos = 0
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            self.weights[i] = v[pos:pos + w.size].reshape(w.shape).copy()
            pos += w.size
            self.biases[i] = v[pos:pos + b.size].copy()
            pos += b.size

    def spectral_norms(self) -> list[float]:
        return [float(np.linalg.svd(w, compute_uv=False)[0]) for w in self.weights]

    def normalize(self, n_iter: int | None = None, tol: float | None = None) -> list[float]:
        """Divide each weight matrix by its estimated spectral norm."""
        sigmas = []
        tol = self.power_tol if tol is None else tol
        for i, w in enumerate(self.weights):
            sigma, self._u[i] = power_iteration(w, self._u[i], n_iter or self.power_iters, tol)
            self.weights[i] = w / sigma
            sigmas.append(sigma)
        return sigmas

    # -- forward / backward ------------------------------------------------

    def _forward(self, x):
        acts = [x]
        h = x
        for w, b in zip(self.weights[:-1], self.biases[:-1]):
            h = np.tanh(h @ w.T + b)
            acts.append(h)
        z = (h @ self.weights[-1].T + self.biases[-1])[:, 0]
        return z, acts

    def logits(self, x) -> np.ndarray:
        return self._forward(np.atleast_2d(x))[0]

    def __call__(self, x) -> np.ndarray:
        return _sigmoid(self.logits(x))

    def _backward(self, acts, g_z):
        """Gradient of ``sum_b g_z[b] * z_b`` as a flat vector."""
        grads = []
        g = g_z[:, None]
        for layer in range(len(self.weights) - 1, -1, -1):
            h = acts[layer]
            grads.append((g.T @ h, g.sum(axis=0)))
            if layer > 0:
                g = (g @ self.weights[layer]) * (1.0 - h * h)
        grads.reverse()
        return np.concatenate([a.ravel() for pair in grads for a in pair])

    def objective_and_grad(self, agent_x, expert_x) -> tuple[float, np.ndarray]:
        """``mean log D(agent) + mean log(1 - D(expert))`` and its gradient."""
        na, ne = len(agent_x), len(expert_x)
        x = np.vstack([agent_x, expert_x])
        z, acts = self._forward(x)
        d = _sigmoid(z)
        # log D = -softplus(-z), log(1-D) = -softplus(z)
        obj = -np.logaddexp(0, -z[:na]).mean() - np.logaddexp(0, z[na:]).mean()
        g_z = np.concatenate([(1.0 - d[:na]) / na, -d[na:] / ne])
        return float(obj), self._backward(acts, g_z)

    def update(self, agent_x, expert_x) -> float:
        obj, g = self.objective_and_grad(agent_x, expert_x)
        self.set_vector(self.optimizer.step(self.vector(), g, ascend=True))
        if self.spectral_norm:
            self.normalize()
        return obj

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "weights": [w.tolist() for w in self.weights],
            "biases": [b.tolist() for b in self.biases],
            "spectral_norm": self.spectral_norm,
        }


class VqcDiscriminator:
    """Discriminator read out from a VQC: one observable per discrete action.

    The readout ``r = nu_a <H_a>`` lies in ``[-M, M]`` with ``M = max_k |nu_k|``
    and is mapped affinely to ``(r + M) / (2M)``, clipped to ``(1e-6, 1 - 1e-6)``.
    """

    kind = "vqc"

    def __init__(self, arch: vqc.CircuitArchitecture, rng: np.random.Generator,
                 lr: Sequence[float] = (0.1, 0.01, 0.1), clamp: bool = True):
        self.arch = arch
        self.params = vqc.PolicyParameters.initial(arch, rng)
        self.circuit = vqc.Circuit(arch, clamp)
        rates = dict(zip(("lam", "phi", "nu"), lr))
        self.optimizer = SGD(group_rates(self.params.group_slices(), rates, self.params.size))

    def vector(self) -> np.ndarray:
        return self.params.vector()

    def set_vector(self, v) -> None:
        self.params = self.params.with_vector(v)

    def _split(self, x):
        x = np.atleast_2d(x)
        k = self.arch.n_observables
        return x[:, :-k], np.argmax(x[:, -k:], axis=1)

    def __call__(self, x) -> np.ndarray:
        states, actions = self._split(x)
        raw = self.circuit.expectations(self.params, states)
        nu = self.params.nu
        m = np.max(np.abs(nu))
        r = nu[actions] * raw[np.arange(len(actions)), actions]
        return np.clip((r + m) / (2 * m), D_CLIP, 1 - D_CLIP)

    def objective_and_grad(self, agent_x, expert_x) -> tuple[float, np.ndarray]:
        na, ne = len(agent_x), len(expert_x)
        states, actions = self._split(np.vstack([agent_x, expert_x]))
        rows = np.arange(len(actions))
        raw = self.circuit.expectations(self.params, states)
        nu = self.params.nu
        kmax = int(np.argmax(np.abs(nu)))
        m = abs(nu[kmax])
        r = nu[actions] * raw[rows, actions]
        d_unclipped = (r + m) / (2 * m)
        d = np.clip(d_unclipped, D_CLIP, 1 - D_CLIP)
        obj = np.log(d[:na]).mean() + np.log1p(-d[na:]).mean()
        g_d = np.concatenate([1.0 / (na * d[:na]), -1.0 / (ne * (1.0 - d[na:]))])
        g_d = np.where(d == d_unclipped, g_d, 0.0)
        g_r = g_d / (2 * m)
        g_m = np.sum(g_d * (-r / (2 * m * m)))
        w = np.zeros_like(raw)
        w[rows, actions] = g_r * nu[actions]
        _, d_lam, d_phi = self.circuit.gradient(self.params, states, w)
        d_nu = np.zeros_like(nu)
        np.add.at(d_nu, actions, g_r * raw[rows, actions])
        d_nu[kmax] += g_m * np.sign(nu[kmax])
        return float(obj), np.concatenate([d_lam.ravel(), d_phi.ravel(), d_nu])

    def update(self, agent_x, expert_x) -> float:
        obj, g = self.objective_and_grad(agent_x, expert_x)
        self.set_vector(self.optimizer.step(self.vector(), g, ascend=True))
        return obj

    def spectral_norms(self) -> list[float]:
        return []

    def to_dict(self) -> dict:
        return {"kind": self.kind, "architecture": self.arch.to_dict(), "params": self.params.to_dict()}


def discriminator_forward(d, x_norm, actions, action_space) -> np.ndarray:
    return d(discriminator_inputs(x_norm, actions, action_space))


def discriminator_update(d, agent_x, expert_x) -> float:
    """One ascent step; returns the objective before the step."""
    if len(agent_x) == 0 or len(expert_x) == 0:
        raise ValueError("discriminator update needs agent and expert pairs")
    return d.update(agent_x, expert_x)


# ---------------------------------------------------------------------------
# baseline and policy gradients


def returns_to_go(rewards, gamma: float = 1.0) -> np.ndarray:
    rewards = np.asarray(rewards, dtype=np.float64)
    out = np.empty_like(rewards)
    acc = 0.0
    for t in range(len(rewards) - 1, -1, -1):
        acc = rewards[t] + gamma * acc
        out[t] = acc
    return out


def baseline_features(states, horizon: int, t=None) -> np.ndarray:
    """Rows ``[s, s*s, t/T, (t/T)^2, (t/T)^3, 1]`` for one trajectory."""
    s = np.atleast_2d(np.asarray(states, dtype=np.float64))
    t = np.arange(len(s)) if t is None else np.asarray(t, dtype=np.float64)
    tt = (t / horizon)[:, None]
    return np.hstack([s, s * s, tt, tt**2, tt**3, np.ones((len(s), 1))])


@dataclass
class LinearBaseline:
    """Value predictor linear in :func:`baseline_features`.

    Fitted by least squares; ``ridge > 0`` adds a penalty on all but the
    bias coefficient.  An unfitted baseline predicts zero.
    """

    horizon: int
    ridge: float = 0.0
    coef: np.ndarray | None = None

    def predict(self, states, t=None) -> np.ndarray:
        if self.coef is None:
            return np.zeros(len(np.atleast_2d(states)))
        return baseline_features(states, self.horizon, t) @ self.coef

    def fit(self, states_list, returns_list) -> "LinearBaseline":
        x = np.vstack([baseline_features(s, self.horizon) for s in states_list])
        y = np.concatenate([np.asarray(r, dtype=np.float64) for r in returns_list])
        if self.ridge > 0:
            penalty = self.ridge * np.eye(x.shape[1])
            penalty[-1, -1] = 0.0
            self.coef = np.linalg.solve(x.T @ x + penalty, x.T @ y)
        else:
            self.coef = np.linalg.lstsq(x, y, rcond=None)[0]
        return self


def baseline_fit(states_list, returns_list, horizon: int, ridge: float = 0.0) -> LinearBaseline:
    if len(states_list) == 0:
        raise ValueError("baseline_fit needs at least one trajectory")
    return LinearBaseline(horizon, ridge).fit(states_list, returns_list)


def advantages(trajectories, rewards, baseline: LinearBaseline | None, x_norm_list, gamma: float = 1.0):
    """Returns-to-go and ``R_t - b(s_t)`` per trajectory."""
    rtg = [returns_to_go(r, gamma) for r in rewards]
    if baseline is None:
        adv = [g.copy() for g in rtg]
    else:
        adv = [g - baseline.predict(x) for g, x in zip(rtg, x_norm_list)]
    return rtg, adv


def reinforce_gradient(policy, trajectories, rewards, baseline: LinearBaseline | None = None,
                       gamma: float = 1.0) -> np.ndarray:
    """``(1/|D|) sum_tau sum_t grad log pi(a_t|s_t) (R_t - b(s_t))``.

    ``rewards[i]`` are the (virtual) rewards of ``trajectories[i]``; the
    baseline sees normalized states.
    """
    if len(trajectories) == 0:
        raise ValueError("reinforce_gradient needs at least one trajectory")
    x_norm = [policy.normalize(t.states) for t in trajectories]
    _, adv = advantages(trajectories, rewards, baseline, x_norm, gamma)
    states = np.vstack([t.states for t in trajectories])
    actions = np.concatenate([t.actions for t in trajectories])
    weights = np.concatenate(adv) / len(trajectories)
    return policy.score_gradient(states, actions, weights)


def ppo_surrogate(logp, old_logp, adv, clip: float = 0.2) -> float:
    ratio = np.exp(np.asarray(logp) - np.asarray(old_logp))
    adv = np.asarray(adv)
    return float(np.mean(np.minimum(ratio * adv, np.clip(ratio, 1 - clip, 1 + clip) * adv)))


def ppo_surrogate_gradient(policy, states, actions, adv, old_logp, clip: float = 0.2) -> tuple[np.ndarray, np.ndarray]:
    """Gradient of :func:`ppo_surrogate` and the current log-probabilities."""
    logp = policy.log_prob(states, actions)
    ratio = np.exp(logp - old_logp)
    active = ((adv >= 0) & (ratio < 1 + clip)) | ((adv < 0) & (ratio > 1 - clip))
    w = np.where(active, ratio * adv, 0.0) / len(adv)
    return policy.score_gradient(states, actions, w), logp


def ppo_update(policy, trajectories, rewards, baseline: LinearBaseline | None, optimizer, gamma: float = 1.0,
               clip: float = 0.2, target_kl: float = 0.01, max_iters: int = 80) -> dict:
    """Clipped-surrogate ascent; stops early once the sample KL estimate
    exceeds ``1.5 * target_kl``."""
    x_norm = [policy.normalize(t.states) for t in trajectories]
    _, adv = advantages(trajectories, rewards, baseline, x_norm, gamma)
    adv = np.concatenate(adv)
    states = np.vstack([t.states for t in trajectories])
    actions = np.concatenate([t.actions for t in trajectories])
    old_logp = policy.log_prob(states, actions)
    iters, kl = 0, 0.0
    for iters in range(1, max_iters + 1):
        g, logp = ppo_surrogate_gradient(policy, states, actions, adv, old_logp, clip)
        kl = float(np.mean(old_logp - logp))
        if kl > 1.5 * target_kl:
            iters -= 1
            break
        policy.set_vector(optimizer.step(policy.params.vector(), g, ascend=True))
    return {"iterations": iters, "kl": kl}


def policy_entropy(policy, states) -> float:
    return float(np.mean(policy.entropy(states)))


# ---------------------------------------------------------------------------
# training loop


@dataclass
class QgailConfig:
    env_id: str
    n_layers: int
    observables: list[str]
    beta: float
    lr: list[float]  # lam, phi, nu (, log_sigma)
    state_bounds: list[float]
    reward_kind: str
    iterations: int = 300
    n_trajectories: int = 10
    gamma: float = 1.0
    optimizer: str = "adam"
    entangler: str = "cnot"
    rotations: list[str] = field(default_factory=lambda: ["X", "Y", "Z"])
    generator: str = "reinforce"
    ppo_clip: float = 0.2
    ppo_target_kl: float = 0.01
    ppo_max_iters: int = 80
    disc: str = "mlp"
    disc_lr: float = 3e-4
    disc_hidden: list[int] = field(default_factory=lambda: [64, 64])
    spectral_norm: bool = True
    power_iters: int = 5
    disc_vqc_lr: list[float] = field(default_factory=lambda: [0.1, 0.01, 0.1])
    disc_vqc_layers: int | None = None
    baseline_ridge: float = 0.0
    train_lambda: bool = True
    train_nu: bool = True
    sigma_init: float = 0.5
    eval_interval: int = 0
    eval_episodes: int = 20
    final_eval_episodes: int = 20
    seed: int = 0

    def __post_init__(self):
        self.env_id = envs.canonical_id(self.env_id)
        self.reward_kind = RewardKind.parse(self.reward_kind).value
        spec = envs.spec(self.env_id)
        if len(self.state_bounds) != spec.state_dim:
            raise ConfigurationError(f"{self.env_id} needs {spec.state_dim} state bounds")
        if self.generator not in ("reinforce", "ppo"):
            raise ConfigurationError("generator must be 'reinforce' or 'ppo'")
        if self.disc not in ("mlp", "vqc"):
            raise ConfigurationError("disc must be 'mlp' or 'vqc'")
        if self.disc == "vqc" and not spec.action_space.discrete:
            raise ConfigurationError("the VQC discriminator needs a discrete action space")
        if spec.action_space.discrete and len(self.observables) != spec.action_space.n:
            raise ConfigurationError(f"{self.env_id} needs one observable per action ({spec.action_space.n})")
        if self.n_trajectories < 1 or self.iterations < 0:
            raise ConfigurationError("n_trajectories must be >= 1 and iterations >= 0")

    def to_dict(self) -> dict:
        return asdict(self)


def make_policy(env_id: str, n_layers: int, observables, beta: float, state_bounds, rng,
                entangler: str = "cnot", rotations=("X", "Y", "Z"), sigma: float = 0.5) -> vqc.VQCPolicy:
    spec = envs.spec(env_id)
    arch = vqc.CircuitArchitecture(spec.state_dim, n_layers, tuple(observables), entangler, tuple(rotations))
    encoding = vqc.EncodingSpec(tuple(state_bounds))
    if spec.action_space.discrete:
        params = vqc.PolicyParameters.initial(arch, rng, beta=beta)
        return vqc.SoftmaxVQCPolicy(arch, params, encoding)
    params = vqc.PolicyParameters.initial(arch, rng, gaussian=True, sigma=sigma)
    return vqc.GaussianVQCPolicy(arch, params, encoding)


def policy_rates(policy, lr: Sequence[float], train_lambda: bool = True, train_nu: bool = True) -> np.ndarray:
    names = ["lam", "phi", "nu", "log_sigma"]
    rates = dict(zip(names, lr))
    if not train_lambda:
        rates["lam"] = 0.0
    if not train_nu:
        rates["nu"] = 0.0
    rates.setdefault("log_sigma", 0.0)
    return group_rates(policy.params.group_slices(), rates, policy.params.size)


@dataclass
class QgailResult:
    policy: vqc.VQCPolicy
    discriminator: object
    curve: list[dict]
    entropy: list[dict]
    final_returns: np.ndarray
    sn_deviation: list[float]
    env_steps: int


CURVE_FIELDS = ["iteration", "episodes", "return_mean", "return_std", "eval_return_mean", "eval_return_std",
                "disc_objective", "d_agent", "d_expert", "virtual_return_mean"]
ENTROPY_FIELDS = ["iteration", "entropy"]


def _pool(demos) -> tuple[np.ndarray, np.ndarray]:
    states = np.vstack([t.states for t in demos.trajectories])
    actions = np.concatenate([np.asarray(t.actions) for t in demos.trajectories])
    return states, actions


def qgail_train(config: QgailConfig, demos, out_dir=None, progress=None) -> QgailResult:
    spec = envs.spec(config.env_id)
    if envs.canonical_id(demos.env_id) != config.env_id:
        raise ConfigurationError(f"demos are for {demos.env_id}, config is for {config.env_id}")
    seeds = np.random.SeedSequence(config.seed).spawn(4)
    init_rng, env_seed_rng, act_rng, disc_rng = (np.random.default_rng(s) for s in seeds)

    policy = make_policy(config.env_id, config.n_layers, config.observables, config.beta, config.state_bounds,
                         init_rng, config.entangler, config.rotations, config.sigma_init)
    opt = make_optimizer(config.optimizer, policy_rates(policy, config.lr, config.train_lambda, config.train_nu))
    in_dim = spec.state_dim + (spec.action_space.n if spec.action_space.discrete else spec.action_space.dim)
    if config.disc == "mlp":
        disc = MlpDiscriminator(in_dim, disc_rng, config.disc_hidden, config.spectral_norm, config.power_iters,
                                config.disc_lr)
    else:
        darch = vqc.CircuitArchitecture(spec.state_dim, config.disc_vqc_layers or config.n_layers,
                                        tuple(config.observables), config.entangler, tuple(config.rotations))
        disc = VqcDiscriminator(darch, disc_rng, config.disc_vqc_lr)
    baseline = LinearBaseline(spec.max_steps, config.baseline_ridge)

    expert_states, expert_actions = _pool(demos)
    expert_x_all = policy.normalize(expert_states)

    curve, entropy_rows, sn_dev = [], [], []
    episodes = 0
    env_steps = 0
    for it in range(1, config.iterations + 1):
        ep_seeds = env_seed_rng.integers(0, 2**31 - 1, size=config.n_trajectories)
        trajs = rollouts.collect(policy, config.env_id, ep_seeds.tolist(), act_rng)
        episodes += len(trajs)
        env_steps += sum(len(t) for t in trajs)
        x_list = [policy.normalize(t.states) for t in trajs]
        agent_x = discriminator_inputs(np.vstack(x_list), np.concatenate([t.actions for t in trajs]),
                                       spec.action_space)
        idx = disc_rng.integers(0, len(expert_x_all), size=len(agent_x))
        expert_x = discriminator_inputs(expert_x_all[idx], expert_actions[idx], spec.action_space)

        # rewards come from the discriminator as it stood when the batch was collected
        bounds = np.cumsum([0] + [len(t) for t in trajs])
        d_agent = disc(agent_x)
        rewards = [virtual_reward(d_agent[a:b], config.reward_kind) for a, b in zip(bounds[:-1], bounds[1:])]

        d_obj = discriminator_update(disc, agent_x, expert_x)
        if config.disc == "mlp":
            sn_dev.append(max(abs(s - 1.0) for s in disc.spectral_norms()))

        if config.generator == "reinforce":
            grad = reinforce_gradient(policy, trajs, rewards, baseline, config.gamma)
            policy.set_vector(opt.step(policy.params.vector(), grad, ascend=True))
        else:
            ppo_update(policy, trajs, rewards, baseline, opt, config.gamma, config.ppo_clip,
                       config.ppo_target_kl, config.ppo_max_iters)
        baseline.fit(x_list, [returns_to_go(r, config.gamma) for r in rewards])

        rets = np.array([t.ret for t in trajs])
        row = {
            "iteration": it, "episodes": episodes, "return_mean": rets.mean(), "return_std": rets.std(),
            "eval_return_mean": "", "eval_return_std": "", "disc_objective": d_obj,
            "d_agent": float(d_agent.mean()), "d_expert": float(disc(expert_x).mean()),
            "virtual_return_mean": float(np.mean([r.sum() for r in rewards])),
        }
        if config.eval_interval and it % config.eval_interval == 0:
            ev = rollouts.evaluate(policy, config.env_id, config.eval_episodes, config.seed * 100003 + it)
            row["eval_return_mean"], row["eval_return_std"] = ev.mean(), ev.std()
        curve.append(row)
        if spec.action_space.discrete:
            entropy_rows.append({"iteration": it, "entropy": policy_entropy(policy, np.vstack([t.states for t in trajs]))})
        if progress is not None:
            progress(row)

    final = rollouts.evaluate(policy, config.env_id, config.final_eval_episodes, config.seed * 100003 + 99991)
    result = QgailResult(policy, disc, curve, entropy_rows, final, sn_dev, env_steps)
    if out_dir is not None:
        write_outputs(result, config, out_dir)
    return result


def write_csv(path, fields, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=fields, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: (f"{v:.10g}" if isinstance(v, float) else v) for k, v in r.items()})


def write_outputs(result: QgailResult, config: QgailConfig, out_dir) -> None:
    import json

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_csv(out / "curve.csv", CURVE_FIELDS, result.curve)
    if result.entropy:
        write_csv(out / "entropy.csv", ENTROPY_FIELDS, result.entropy)
    result.policy.save(out / "policy_final.json")
    (out / "discriminator.json").write_text(json.dumps(result.discriminator.to_dict()) + "\n")
    summary = {
        "final_return_mean": float(result.final_returns.mean()),
        "final_return_std": float(result.final_returns.std()),
        "final_returns": result.final_returns.tolist(),
        "env_steps": result.env_steps,
        "max_spectral_norm_deviation": max(result.sn_deviation) if result.sn_deviation else None,
    }
    (out / "summary.json").write_text(json.dumps(summary, indent=1) + "\n")
