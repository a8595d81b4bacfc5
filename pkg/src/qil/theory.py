"""Exact tabular MDP evaluation and a numerical audit of the behavioural
cloning error bound under bounded measurement noise.

The bound chains

* occupancy TV bounds (state and state-action) by the expected per-state
  policy TV under the expert's state occupancy,
* the value gap by the state-action occupancy TV,
* the TV between a softmax policy and the same policy computed from
  expectations perturbed by at most ``eps`` (``|sinh(2 beta eps)|``),
* Pinsker's inequality for the imitation error ``delta``,

into ``|J(pi_E) - J(pi)| <= 2 R_MAX / (1 - gamma)^2 (|sinh(2 beta eps)| + sqrt(2 delta))``.
:func:`check_bounds` evaluates both sides of every link exactly.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

NORM_TOL = 1e-12
SLACK_TOL = -1e-9


@dataclass(frozen=True)
class TabularMdp:
    """``T[s, a, s']`` transition probabilities, ``r[s, a]`` rewards."""

    T: np.ndarray
    r: np.ndarray
    gamma: float
    rho0: np.ndarray
    r_max: float | None = None

    def __post_init__(self):
        T = np.asarray(self.T, dtype=np.float64)
        r = np.asarray(self.r, dtype=np.float64)
        rho0 = np.asarray(self.rho0, dtype=np.float64)
        object.__setattr__(self, "T", T)
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "rho0", rho0)
        S, A = r.shape
        if T.shape != (S, A, S) or rho0.shape != (S,):
            raise ValueError("inconsistent MDP shapes")
        if np.any(T < 0) or np.max(np.abs(T.sum(axis=2) - 1)) > NORM_TOL:
            raise ValueError("transition rows must be probability distributions")
        if np.any(rho0 < 0) or abs(rho0.sum() - 1) > NORM_TOL:
            raise ValueError("initial distribution must sum to 1")
        if not 0 <= self.gamma < 1:
            raise ValueError("gamma must lie in [0, 1)")
        rmax = float(np.max(np.abs(r))) if self.r_max is None else float(self.r_max)
        if np.max(np.abs(r)) > rmax + 1e-15:
            raise ValueError("rewards exceed r_max")
        object.__setattr__(self, "r_max", rmax)

    @property
    def n_states(self) -> int:
        return self.r.shape[0]

    @property
    def n_actions(self) -> int:
        return self.r.shape[1]


@dataclass(frozen=True)
class TabularPolicy:
    probs: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=np.float64)
        if p.ndim != 2 or np.any(p < 0) or np.max(np.abs(p.sum(axis=1) - 1)) > NORM_TOL:
            raise ValueError("policy rows must be probability distributions")
        object.__setattr__(self, "probs", p)


def softmax_rows(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def softmax_policy(expectations, beta: float) -> TabularPolicy:
    return TabularPolicy(softmax_rows(beta * np.asarray(expectations, dtype=np.float64)))


# ---------------------------------------------------------------------------
# exact evaluation


def state_transition_matrix(mdp: TabularMdp, pi: TabularPolicy) -> np.ndarray:
    return np.einsum("sa,sat->st", pi.probs, mdp.T)


def occupancy(mdp: TabularMdp, pi: TabularPolicy) -> tuple[np.ndarray, np.ndarray]:
    """Normalized discounted occupancies ``d(s)`` and ``rho(s, a)``.

    ``d`` solves ``d = (1 - gamma) rho0 + gamma P_pi^T d``.
    """
    P = state_transition_matrix(mdp, pi)
    S = mdp.n_states
    d = np.linalg.solve(np.eye(S) - mdp.gamma * P.T, (1 - mdp.gamma) * mdp.rho0)
    d = np.clip(d, 0.0, None)
    d /= d.sum()
    return d, d[:, None] * pi.probs


def exact_return(mdp: TabularMdp, pi: TabularPolicy) -> float:
    """``J = E[sum_t gamma^t r] = sum rho(s, a) r(s, a) / (1 - gamma)``."""
    _, rho = occupancy(mdp, pi)
    return float(np.sum(rho * mdp.r) / (1 - mdp.gamma))


def tv(p, q) -> np.ndarray:
    """Total variation ``0.5 * sum |p - q|`` along the last axis."""
    return 0.5 * np.sum(np.abs(np.asarray(p) - np.asarray(q)), axis=-1)


def kl(p, q) -> np.ndarray:
    """``sum p log(p / q)`` along the last axis, with ``0 log 0 = 0``."""
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(p > 0, p * (np.log(p) - np.log(q)), 0.0)
    return np.sum(terms, axis=-1)


# ---------------------------------------------------------------------------
# measurement perturbations


def perturb_policy(expectations, beta: float, eps: float, mode: str = "uniform",
                   rng: np.random.Generator | None = None) -> TabularPolicy:
    """Softmax of ``beta * (expectations + u)`` with every ``|u| <= eps``.

    ``mode="uniform"`` draws ``u`` uniformly; ``mode="adversarial"`` picks,
    per state, the corner of ``{-eps, +eps}^A`` maximizing the TV distance to
    the unperturbed policy.
    """
    if eps < 0:
        raise ValueError("eps must be non-negative")
    o = np.asarray(expectations, dtype=np.float64)
    if eps == 0:
        return softmax_policy(o, beta)
    if mode == "uniform":
        rng = rng or np.random.default_rng()
        return softmax_policy(o + rng.uniform(-eps, eps, size=o.shape), beta)
    if mode != "adversarial":
        raise ValueError(f"unknown perturbation mode {mode!r}")
    base = softmax_rows(beta * o)
    corners = np.array(list(itertools.product((-eps, eps), repeat=o.shape[1])))
    out = np.empty_like(base)
    for s in range(o.shape[0]):
        cand = softmax_rows(beta * (o[s][None, :] + corners))
        out[s] = cand[np.argmax(tv(cand, base[s][None, :]))]
    return TabularPolicy(out)


# ---------------------------------------------------------------------------
# bound audit


@dataclass(frozen=True)
class BoundCheck:
    name: str
    lhs: float
    rhs: float

    @property
    def slack(self) -> float:
        return self.rhs - self.lhs

    @property
    def holds(self) -> bool:
        return self.slack >= SLACK_TOL

    def to_dict(self) -> dict:
        return {"name": self.name, "lhs": self.lhs, "rhs": self.rhs, "slack": self.slack, "holds": self.holds}


@dataclass(frozen=True)
class BoundReport:
    checks: tuple[BoundCheck, ...]
    delta: float
    beta: float
    eps: float

    @property
    def ok(self) -> bool:
        return all(c.holds for c in self.checks)

    @property
    def min_slack(self) -> float:
        return min(c.slack for c in self.checks)

    def __getitem__(self, name: str) -> BoundCheck:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {"delta": self.delta, "beta": self.beta, "eps": self.eps, "ok": self.ok,
                "checks": [c.to_dict() for c in self.checks]}


def check_bounds(mdp: TabularMdp, pi_expert: TabularPolicy, pi_true: TabularPolicy, pi_noisy: TabularPolicy,
                 beta: float, eps: float) -> BoundReport:
    """Both sides of every inequality in the error-bound chain.

    ``pi_true`` is the learner computed from exact expectations and
    ``pi_noisy`` the one computed from expectations off by at most ``eps``.
    ``delta`` is computed as ``E_{d_E}[KL(pi_E || pi_noisy)]``.
    """
    g = mdp.gamma
    d_e, rho_e = occupancy(mdp, pi_expert)
    d_t, rho_t = occupancy(mdp, pi_true)

    tv_true_expert = float(d_e @ tv(pi_true.probs, pi_expert.probs))
    tv_noisy_true = float(d_e @ tv(pi_noisy.probs, pi_true.probs))
    tv_noisy_expert = float(d_e @ tv(pi_noisy.probs, pi_expert.probs))
    delta = float(d_e @ kl(pi_expert.probs, pi_noisy.probs))
    gap = abs(exact_return(mdp, pi_expert) - exact_return(mdp, pi_true))
    sh = abs(math.sinh(2 * beta * eps))
    ratio = np.exp(2 * beta * eps)
    ratio_slack = float(np.min(np.minimum(pi_noisy.probs - pi_true.probs / ratio, ratio * pi_true.probs - pi_noisy.probs)))

    checks = (
        BoundCheck("state_occupancy_tv", float(tv(d_t, d_e)), g / (1 - g) * tv_true_expert),
        BoundCheck("state_action_occupancy_tv", float(tv(rho_t.ravel(), rho_e.ravel())), tv_true_expert / (1 - g)),
        BoundCheck("value_gap", gap, 2 * mdp.r_max / (1 - g) * float(tv(rho_t.ravel(), rho_e.ravel()))),
        BoundCheck("measurement_ratio", 0.0, ratio_slack),
        BoundCheck("measurement_error_tv", tv_noisy_true, sh),
        BoundCheck("triangle", tv_true_expert, tv_noisy_true + tv_noisy_expert),
        BoundCheck("pinsker", tv_noisy_expert, math.sqrt(2 * delta)),
        BoundCheck("pinsker_tight", tv_noisy_expert, math.sqrt(delta / 2)),
        BoundCheck("error_bound", gap, 2 * mdp.r_max / (1 - g) ** 2 * (sh + math.sqrt(2) * math.sqrt(delta))),
    )
    return BoundReport(checks, delta, beta, eps)


# ---------------------------------------------------------------------------
# random instances


def random_mdp(rng: np.random.Generator, n_states: int, n_actions: int, gamma: float, r_max: float = 1.0) -> TabularMdp:
    T = rng.dirichlet(np.full(n_states, 0.5), size=(n_states, n_actions))
    r = rng.uniform(-r_max, r_max, size=(n_states, n_actions))
    rho0 = rng.dirichlet(np.ones(n_states))
    return TabularMdp(T, r, gamma, rho0, r_max)


def random_expectations(rng: np.random.Generator, n_states: int, n_actions: int) -> np.ndarray:
    """Stand-in for per-state observable readouts, which lie in ``[-1, 1]``."""
    return rng.uniform(-1.0, 1.0, size=(n_states, n_actions))


def audit(n_instances: int, seed: int, betas=(0.5, 1.0, 2.0), epsilons=(0.0, 0.01, 0.1),
          gammas=(0.9, 0.99), max_states: int = 5, max_actions: int = 3) -> dict:
    """Randomized audit over MDPs, expert/learner policies and perturbations.

    Each instance is checked at every ``(beta, eps)`` pair with both uniform
    and adversarial perturbations.
    """
    rng = np.random.default_rng(seed)
    instances = []
    violations = 0
    worst = math.inf
    for i in range(n_instances):
        S = int(rng.integers(1, max_states + 1))
        A = int(rng.integers(2, max_actions + 1))
        gamma = float(gammas[i % len(gammas)])
        mdp = random_mdp(rng, S, A, gamma)
        expert_logits = random_expectations(rng, S, A)
        learner_o = random_expectations(rng, S, A)
        rows = []
        for beta in betas:
            pi_e = softmax_policy(expert_logits, beta)
            pi_t = softmax_policy(learner_o, beta)
            for eps in epsilons:
                for mode in ("uniform", "adversarial"):
                    pi_n = perturb_policy(learner_o, beta, eps, mode, rng)
                    rep = check_bounds(mdp, pi_e, pi_t, pi_n, beta, eps)
                    bad = [c.name for c in rep.checks if not c.holds]
                    violations += len(bad)
                    worst = min(worst, rep.min_slack)
                    rows.append({"beta": beta, "eps": eps, "mode": mode, "delta": rep.delta,
                                 "slacks": {c.name: c.slack for c in rep.checks}, "violations": bad})
        instances.append({"index": i, "n_states": S, "n_actions": A, "gamma": gamma, "checks": rows})
    return {"n_instances": n_instances, "seed": seed, "violations": violations, "min_slack": worst,
            "instances": instances}
