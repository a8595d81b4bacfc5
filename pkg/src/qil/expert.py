"""Expert policies and demonstration datasets.

Experts are softmax-VQC policies trained by REINFORCE with the linear
time-varying baseline on the true (or, for MountainCar, height-shaped)
reward.  Demonstrations are stored as JSON Lines, one episode per line:

    {"env_id": ..., "seed": ..., "states": [[...], ...], "actions": [...], "returns": ...}

States are stored unnormalized.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import envs, qgail, rollouts, vqc
from .errors import ConfigurationError
from .optim import make_optimizer

EXPERT_THRESHOLDS = {"CartPole-v1": 475.0, "Acrobot-v1": -110.0, "MountainCar-v0": -110.0}


@dataclass
class DemoTrajectory:
    env_id: str
    seed: int
    states: np.ndarray
    actions: np.ndarray
    returns: float

    def __len__(self) -> int:
        return len(self.actions)

    @classmethod
    def from_trajectory(cls, t: envs.Trajectory) -> "DemoTrajectory":
        return cls(t.env_id, t.seed, np.asarray(t.states), np.asarray(t.actions), t.ret)

    def to_json(self) -> str:
        return json.dumps({
            "env_id": self.env_id,
            "seed": int(self.seed),
            "states": np.asarray(self.states, dtype=np.float64).tolist(),
            "actions": np.asarray(self.actions).tolist(),
            "returns": float(self.returns),
        }, separators=(",", ":"))

    @classmethod
    def from_json(cls, line: str) -> "DemoTrajectory":
        d = json.loads(line)
        actions = np.asarray(d["actions"])
        actions = actions.astype(np.int64) if actions.dtype.kind in "iu" else actions.astype(np.float64)
        states = np.asarray(d["states"], dtype=np.float64)
        return cls(d["env_id"], int(d["seed"]), states.reshape(len(actions), -1), actions, float(d["returns"]))


@dataclass
class DemoDataset:
    env_id: str
    trajectories: list[DemoTrajectory]
    source: str = "trained_expert"

    def __post_init__(self):
        self.env_id = envs.canonical_id(self.env_id)
        for t in self.trajectories:
            if envs.canonical_id(t.env_id) != self.env_id:
                raise ConfigurationError(f"trajectory for {t.env_id} in a {self.env_id} dataset")

    @property
    def returns(self) -> np.ndarray:
        return np.array([t.returns for t in self.trajectories])

    @property
    def mean_return(self) -> float:
        return float(self.returns.mean())

    @property
    def std_return(self) -> float:
        return float(self.returns.std())

    @property
    def n_pairs(self) -> int:
        return sum(len(t) for t in self.trajectories)

    def subset(self, n: int) -> "DemoDataset":
        return DemoDataset(self.env_id, self.trajectories[:n], self.source)

    def pairs(self) -> tuple[np.ndarray, np.ndarray]:
        states = np.vstack([t.states for t in self.trajectories])
        actions = np.concatenate([np.asarray(t.actions) for t in self.trajectories])
        return states, actions

    def dumps(self) -> str:
        return "".join(t.to_json() + "\n" for t in self.trajectories)

    def save(self, path) -> None:
        Path(path).write_text(self.dumps())

    @classmethod
    def loads(cls, text: str, source: str = "external_file") -> "DemoDataset":
        trajs = [DemoTrajectory.from_json(line) for line in text.splitlines() if line.strip()]
        if not trajs:
            raise ConfigurationError("demonstration file is empty")
        return cls(trajs[0].env_id, trajs, source)

    @classmethod
    def load(cls, path, source: str = "external_file") -> "DemoDataset":
        return cls.loads(Path(path).read_text(), source)


def replay_returns(dataset: DemoDataset) -> np.ndarray:
    """Returns obtained by replaying each stored action sequence from its seed."""
    env = envs.make(dataset.env_id)
    return np.array([envs.replay(env, t.seed, t.actions).ret for t in dataset.trajectories])


def collect_demos(policy, env_id: str, n_trajectories: int, seed: int, greedy: bool = False) -> DemoDataset:
    """Run ``n_trajectories`` expert episodes.  Episode seeds and action noise
    are derived from ``seed`` so the dataset is reproducible."""
    ss = np.random.SeedSequence([int(seed), 0xDE305])
    ep_seeds = ss.generate_state(n_trajectories).tolist()
    rng = np.random.default_rng(ss.spawn(1)[0])
    trajs = rollouts.collect(policy, env_id, ep_seeds, rng, greedy)
    return DemoDataset(env_id, [DemoTrajectory.from_trajectory(t) for t in trajs])


# ---------------------------------------------------------------------------
# expert training


@dataclass
class ExpertConfig:
    env_id: str
    n_layers: int
    observables: list[str]
    beta: float
    lr: list[float]
    state_bounds: list[float]
    iterations: int = 300
    n_trajectories: int = 10
    gamma: float = 0.99
    optimizer: str = "adam"
    normalize_advantages: bool = True
    shaping: bool = True
    entangler: str = "cnot"
    rotations: list[str] = field(default_factory=lambda: ["X", "Y", "Z"])
    threshold: float | None = None
    eval_interval: int = 10
    eval_episodes: int = 20
    eval_greedy: bool = True
    confirm_episodes: int = 100
    seed: int = 0

    def __post_init__(self):
        self.env_id = envs.canonical_id(self.env_id)
        if not envs.spec(self.env_id).action_space.discrete:
            raise ConfigurationError("expert training needs a discrete-action env")
        if self.threshold is None:
            self.threshold = EXPERT_THRESHOLDS.get(self.env_id)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class ExpertReport:
    reached: bool
    best_eval: float
    best_iteration: int
    curve: list[dict]


EXPERT_CURVE_FIELDS = ["iteration", "episodes", "return_mean", "return_std", "eval_return_mean"]


def train_expert(config: ExpertConfig, out_dir=None, progress=None) -> tuple[vqc.VQCPolicy, ExpertReport]:
    """REINFORCE with baseline on the environment reward.

    Evaluations use argmax actions by default, matching demo collection.  A
    periodic evaluation that reaches the threshold is re-checked on
    ``confirm_episodes`` fresh episodes; training stops once that confirmation
    also passes.  The returned policy is the best evaluated one.
    """
    spec = envs.spec(config.env_id)
    init_rng, seed_rng, act_rng = (np.random.default_rng(s) for s in np.random.SeedSequence(config.seed).spawn(3))
    policy = qgail.make_policy(config.env_id, config.n_layers, config.observables, config.beta,
                               config.state_bounds, init_rng, config.entangler, config.rotations)
    opt = make_optimizer(config.optimizer, qgail.policy_rates(policy, config.lr))
    baseline = qgail.LinearBaseline(spec.max_steps)
    best = (-np.inf, 0, policy.params.copy())
    curve = []
    reached = False
    episodes = 0
    for it in range(1, config.iterations + 1):
        trajs = rollouts.collect(policy, config.env_id, seed_rng.integers(0, 2**31 - 1, config.n_trajectories).tolist(),
                                 act_rng)
        episodes += len(trajs)
        rewards = [envs.shaped_rewards(config.env_id, t.next_states, t.rewards, config.shaping) for t in trajs]
        x_list = [policy.normalize(t.states) for t in trajs]
        rtg, adv = qgail.advantages(trajs, rewards, baseline, x_list, config.gamma)
        adv = np.concatenate(adv)
        if config.normalize_advantages:
            adv = (adv - adv.mean()) / (adv.std() + 1e-8)
        grad = policy.score_gradient(np.vstack([t.states for t in trajs]),
                                     np.concatenate([t.actions for t in trajs]), adv / len(trajs))
        policy.set_vector(opt.step(policy.params.vector(), grad, ascend=True))
        baseline.fit(x_list, rtg)

        rets = np.array([t.ret for t in trajs])
        row = {"iteration": it, "episodes": episodes, "return_mean": rets.mean(), "return_std": rets.std(),
               "eval_return_mean": ""}
        if it % config.eval_interval == 0 or it == config.iterations:
            ev = rollouts.evaluate(policy, config.env_id, config.eval_episodes, config.seed * 7919 + it,
                                   config.eval_greedy).mean()
            row["eval_return_mean"] = ev
            if config.threshold is not None and ev >= config.threshold and config.confirm_episodes:
                ev = rollouts.evaluate(policy, config.env_id, config.confirm_episodes,
                                       config.seed * 7919 + it + 0x7FFF, config.eval_greedy).mean()
                reached = ev >= config.threshold
            if ev > best[0]:
                best = (ev, it, policy.params.copy())
        curve.append(row)
        if progress is not None:
            progress(row)
        if reached:
            break
    policy.params = best[2]
    report = ExpertReport(reached, float(best[0]), best[1], curve)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        qgail.write_csv(out / "curve.csv", EXPERT_CURVE_FIELDS, curve)
        policy.save(out / "expert.json")
    return policy, report


def pointmass_demos(n_trajectories: int, seed: int) -> DemoDataset:
    """Demonstrations from the PD controller on the point-mass task."""
    ss = np.random.SeedSequence([int(seed), 0xDE305])
    trajs = envs.rollout(lambda: envs.make("PointMass1D"), envs.pd_controller, ss.generate_state(n_trajectories).tolist())
    return DemoDataset("PointMass1D", [DemoTrajectory.from_trajectory(t) for t in trajs])


def data_path(name: str) -> Path:
    return Path(__file__).parent / "data" / name


def shipped_expert(env_id: str) -> vqc.VQCPolicy:
    """Load the expert checkpoint bundled with the package."""
    env_id = envs.canonical_id(env_id)
    path = data_path(f"expert_{env_id}.json")
    if not path.exists():
        raise ConfigurationError(f"no bundled expert for {env_id}")
    return vqc.load_policy(path)
