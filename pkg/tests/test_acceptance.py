"""Acceptance criteria, each at its stated tolerance.

Every test records one ``criterion N ...: PASS|FAIL (detail)`` line; the lines
are printed as the test runs and again in the pytest terminal summary.  Run
``python tests/test_acceptance.py`` to get only the lines.  Criteria 4 to 10
train five seeds each and take a while on one core.
"""

import sys
import time

import numpy as np

from qil import cli, qbc, qgail, qsim, rollouts, runconfig, theory, vqc
from qil.vqc import CircuitArchitecture, PolicyParameters, SoftmaxVQCPolicy

from oracles import central_difference

SEEDS = [0, 1, 2, 3, 4]
RESULTS: dict[int, str] = {}


def record(n: int, name: str, passed: bool, detail: str) -> None:
    line = f"criterion {n:2d} {name}: {'PASS' if passed else 'FAIL'} ({detail})"
    RESULTS[n] = line
    print(line, flush=True)
    assert passed, line


def run_config(env: str, algorithm: str, n_demos: int | None = None, **settings) -> runconfig.RunConfig:
    demos = {} if n_demos is None else {"n_trajectories": n_demos}
    return runconfig.resolve(env, algorithm, overrides=settings, seeds=SEEDS, demo_overrides=demos)


def train_all(rc: runconfig.RunConfig) -> list:
    demos = cli.load_demos(rc.env_id, rc.demos)
    train = qbc.qbc_train if rc.algorithm == "qbc" else qgail.qgail_train
    return [train(rc.algorithm_config(s), demos) for s in rc.seeds]


def finals(results) -> np.ndarray:
    return np.array([r.final_returns.mean() for r in results])


def fmt(values) -> str:
    return "[" + ", ".join(f"{v:.1f}" for v in values) + "]"


_CACHE: dict = {}


def cached(key, make):
    if key not in _CACHE:
        _CACHE[key] = make()
    return _CACHE[key]


def qbc_cartpole(n_demos: int):
    return cached(("qbc", n_demos), lambda: train_all(run_config("cartpole", "qbc", n_demos)))


def qgail_cartpole(n_demos: int):
    return cached(("qgail", n_demos), lambda: (run_config("cartpole", "qgail", n_demos),
                                               train_all(run_config("cartpole", "qgail", n_demos))))


# -- property suites ------------------------------------------------------


def test_criterion_01_gradient_audit():
    t0 = time.time()
    rng = np.random.default_rng(2024)
    fd_err = shift_err = 0.0
    for _ in range(50):
        n = int(rng.integers(2, 5))
        arch = CircuitArchitecture(n, int(rng.integers(1, 5)), tuple(f"Z{q}" for q in range(n)))
        params = PolicyParameters.initial(arch, rng, beta=float(rng.uniform(0.5, 2.0)))
        params.lam = rng.normal(size=arch.lam_shape)
        params.nu = rng.normal(size=arch.n_observables)
        x = rng.uniform(-1, 1, size=n)
        a = int(rng.integers(n))
        g = vqc.log_prob_gradient(params, arch, x, a)

        def logp(v):
            return SoftmaxVQCPolicy(arch, params.with_vector(v), None).log_prob(x[None, :], [a])[0]

        fd_err = max(fd_err, float(np.max(np.abs(g - central_difference(logp, params.vector(), 1e-5)))))
        al, ap = vqc.expectation_gradient(params, arch, x, "adjoint")
        sl, sp = vqc.expectation_gradient(params, arch, x, "shift")
        shift_err = max(shift_err, float(np.max(np.abs(al - sl))), float(np.max(np.abs(ap - sp))))
    dt = time.time() - t0
    record(1, "gradient audit", fd_err < 1e-4 and shift_err < 1e-8 and dt < 60,
           f"finite-difference max err {fd_err:.2e}, shift vs exact {shift_err:.2e}, {dt:.1f}s")


def test_criterion_02_normalization():
    rng = np.random.default_rng(7)
    kinds = ["H", "X", "Y", "Z", "RX", "RY", "RZ", "CNOT", "CZ"]
    worst_norm = 0.0
    for _ in range(1000):
        n = int(rng.integers(1, 7))
        v = rng.normal(size=2**n) + 1j * rng.normal(size=2**n)
        state = qsim.Statevector(n, v / np.linalg.norm(v))
        gates = []
        for _ in range(int(rng.integers(1, 41))):
            kind = kinds[int(rng.integers(9 if n > 1 else 7))]
            if kind in ("CNOT", "CZ"):
                a, b = rng.choice(n, size=2, replace=False)
                gates.append(qsim.Gate(kind, (int(a), int(b))))
            else:
                angle = float(rng.uniform(-7, 7)) if kind.startswith("R") else None
                gates.append(qsim.Gate(kind, (int(rng.integers(n)),), angle))
        worst_norm = max(worst_norm, abs(qsim.apply_circuit(state, gates).norm - 1.0))
    worst_sum = 0.0
    for _ in range(200):
        n = int(rng.integers(2, 5))
        arch = CircuitArchitecture(n, int(rng.integers(1, 4)), tuple(f"Z{q}" for q in range(n)))
        params = PolicyParameters.initial(arch, rng, beta=float(rng.uniform(0.1, 5.0)))
        params.nu = rng.normal(scale=20.0, size=n)
        probs = SoftmaxVQCPolicy(arch, params, None).probs(rng.uniform(-1, 1, size=(16, n)))
        worst_sum = max(worst_sum, float(np.max(np.abs(probs.sum(axis=1) - 1.0))))
    record(2, "unitarity and normalization", worst_norm < 1e-9 and worst_sum < 1e-10,
           f"max norm drift {worst_norm:.1e} over 1000 circuits, max softmax sum error {worst_sum:.1e}")


def test_criterion_03_bound_audit():
    t0 = time.time()
    report = theory.audit(100, seed=0, betas=(0.5, 1.0, 2.0), epsilons=(0.0, 0.01, 0.1))
    dt = time.time() - t0
    modes = {row["mode"] for inst in report["instances"] for row in inst["checks"]}
    ok = report["violations"] == 0 and report["min_slack"] >= -1e-9 and "adversarial" in modes and dt < 60
    record(3, "bound audit", ok, f"{report['violations']} violations, min slack {report['min_slack']:.2e}, {dt:.1f}s")


# -- training criteria ----------------------------------------------------


def test_criterion_04_qbc_cartpole():
    f = finals(qbc_cartpole(50))
    k = int(np.sum(f >= 475))
    record(4, "Q-BC CartPole, 50 trajectories", k >= 4, f"{k}/5 seeds >= 475, returns {fmt(f)}")


def test_criterion_05_qbc_acrobot():
    f = cached(("qbc-acrobot",), lambda: finals(train_all(run_config("acrobot", "qbc"))))
    k = int(np.sum(f >= -130))
    record(5, "Q-BC Acrobot", k >= 4, f"{k}/5 seeds >= -130, returns {fmt(f)}")


def gail_check(n_demos: int):
    rc, results = qgail_cartpole(n_demos)
    f = finals(results)
    budget = max(r.curve[-1]["episodes"] for r in results)
    return f, int(np.sum(f >= 400)), budget


def test_criterion_06_qgail_cartpole():
    f, k, budget = gail_check(200)
    record(6, "Q-GAIL CartPole, 200 trajectories", k >= 3 and budget <= 3000,
           f"{k}/5 seeds >= 400 within {budget} episodes, returns {fmt(f)}")


def test_criterion_07_qgail_single_demo():
    f, k, budget = gail_check(1)
    record(7, "Q-GAIL CartPole, 1 trajectory", k >= 3 and budget <= 3000,
           f"{k}/5 seeds >= 400 within {budget} episodes, returns {fmt(f)}")


def test_criterion_08_qbc_demo_count_trend():
    one, fifty = finals(qbc_cartpole(1)).mean(), finals(qbc_cartpole(50)).mean()
    record(8, "Q-BC demo-count trend", one <= 0.7 * fifty,
           f"1 trajectory {one:.1f} vs 50 trajectories {fifty:.1f}, ratio {one / fifty:.2f}")


def test_criterion_09_spectral_norm():
    _, results = qgail_cartpole(200)
    with_sn = max(max(r.sn_deviation) for r in results)
    n_updates = sum(len(r.sn_deviation) for r in results)
    rc = run_config("cartpole", "qgail", 200, iterations=30, spectral_norm=False, final_eval_episodes=2)
    demos = cli.load_demos(rc.env_id, rc.demos)
    free = qgail.qgail_train(rc.algorithm_config(0), demos)
    without = max(free.sn_deviation)
    two_curves = len(free.curve) == 30 and all(len(r.curve) > 0 for r in results)
    record(9, "spectral norm", with_sn < 1e-3 and without > 1e-3 and two_curves,
           f"max |sigma-1| {with_sn:.1e} over {n_updates} updates with SN, {without:.2f} without")


def test_criterion_10_entropy_trend():
    checked, bad = 0, []
    for n_demos in (200, 1):
        _, results = qgail_cartpole(n_demos)
        for seed, r in zip(SEEDS, results):
            if r.final_returns.mean() < 400:
                continue
            ent = np.array([row["entropy"] for row in r.entropy])
            k = max(1, len(ent) // 10)
            checked += 1
            if not ent[-k:].mean() < ent[:k].mean():
                bad.append(f"{n_demos} demos seed {seed}: {ent[:k].mean():.3f} -> {ent[-k:].mean():.3f}")
    record(10, "entropy trend", checked > 0 and not bad,
           f"{checked} passing runs checked" + (f", rising: {'; '.join(bad)}" if bad else ", all decreasing"))


def test_criterion_11_beta_ordering():
    rng = np.random.default_rng(11)
    rc = run_config("cartpole", "qgail")
    low = qgail.make_policy(rc.env_id, rc.settings["n_layers"], rc.settings["observables"], 0.5,
                            rc.settings["state_bounds"], rng)
    low.params.lam = rng.normal(size=low.arch.lam_shape)
    high_params = low.params.copy()
    high_params.beta = 1.2
    high = type(low)(low.arch, high_params, low.encoding)
    bounds = np.array(rc.settings["state_bounds"])
    states = rng.uniform(-bounds, bounds, size=(100, len(bounds)))
    e_low, e_high = low.entropy(states), high.entropy(states)
    k = int(np.sum(e_low > e_high))
    record(11, "beta ordering", k == 100,
           f"entropy higher at beta 0.5 on {k}/100 states, means {e_low.mean():.4f} vs {e_high.mean():.4f}")


def test_criterion_12_pointmass_smoke():
    rc = runconfig.resolve("pointmass", "qbc", seeds=[0])
    res = qbc.qbc_train(rc.algorithm_config(0), cli.load_demos(rc.env_id, rc.demos))
    k = max(1, len(res.losses) // 10)
    first, last = res.losses[:k].mean(), res.losses[-k:].mean()
    trajs = rollouts.collect(res.policy, rc.env_id, range(10**6, 10**6 + 20), np.random.default_rng(12))
    pos = float(np.mean([abs(t.final_state[0]) for t in trajs]))
    record(12, "PointMass Gaussian smoke test", last < first and pos < 0.2,
           f"loss {first:.3f} -> {last:.3f}, final mean |position| {pos:.3f}")


if __name__ == "__main__":
    for name, fn in sorted(globals().items()):
        if name.startswith("test_criterion_"):
            try:
                fn()
            except AssertionError:
                pass
    sys.exit(0 if all(": PASS" in line for line in RESULTS.values()) else 1)
