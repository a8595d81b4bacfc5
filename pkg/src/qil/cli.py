"""Command-line entry point.

Exit codes: 0 success, 1 runtime failure (including an expert that misses
its threshold or a violated bound), 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import json
import os
import re
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import envs, expert, plotting, qbc, qgail, rollouts, runconfig, theory, vqc
from .errors import ConfigurationError
from .runconfig import RunConfig

EXIT_OK, EXIT_FAILURE, EXIT_USAGE = 0, 1, 2


class RunFailure(RuntimeError):
    """Training raised for at least one seed; partial artifacts are on disk."""


# ---------------------------------------------------------------------------
# run directories


def run_root() -> Path:
    return Path(os.environ.get("QIL_RUN_DIR", "runs"))


def make_run_dir(label: str, root: Path | None = None) -> Path:
    root = run_root() if root is None else Path(root)
    stamp = time.strftime("%Y%m%d-%H%M%S")
    slug = re.sub(r"[^A-Za-z0-9._-]+", "-", label).strip("-")
    path = root / f"{stamp}-{slug}"
    k = 1
    while path.exists():
        k += 1
        path = root / f"{stamp}-{slug}-{k}"
    path.mkdir(parents=True)
    return path


# ---------------------------------------------------------------------------
# demonstrations


_DEMO_CACHE: dict[tuple, expert.DemoDataset] = {}


def load_demos(env_id: str, demos: dict) -> expert.DemoDataset:
    """Demos from ``demos['path']``, or freshly collected from the bundled
    expert (PD controller for the point mass)."""
    env_id = envs.canonical_id(env_id)
    n = demos.get("n_trajectories")
    if demos.get("path"):
        data = expert.DemoDataset.load(demos["path"])
        if data.env_id != env_id:
            raise ConfigurationError(f"{demos['path']} holds {data.env_id} demos, not {env_id}")
        if n is not None:
            if n > len(data.trajectories):
                raise ConfigurationError(f"asked for {n} demo trajectories, file has {len(data.trajectories)}")
            data = data.subset(n)
        return data
    n = 200 if n is None else int(n)
    seed, greedy = int(demos.get("seed", 0)), bool(demos.get("greedy", True))
    key = (env_id, n, seed, greedy)
    if key not in _DEMO_CACHE:
        if env_id == "PointMass1D":
            _DEMO_CACHE[key] = expert.pointmass_demos(n, seed)
        else:
            _DEMO_CACHE[key] = expert.collect_demos(expert.shipped_expert(env_id), env_id, n, seed, greedy)
    return _DEMO_CACHE[key]


# ---------------------------------------------------------------------------
# training runs


def curve_fields(algorithm: str) -> list[str]:
    return ["seed"] + (qbc.CURVE_FIELDS if algorithm == "qbc" else qgail.CURVE_FIELDS)


def train_seed(config_dict: dict, seed: int, demos: expert.DemoDataset, out_dir: str) -> dict:
    """One seed's pipeline; runs in a worker process."""
    rc = RunConfig.from_dict(config_dict)
    cfg = rc.algorithm_config(seed)
    if rc.algorithm == "qbc":
        res = qbc.qbc_train(cfg, demos, out_dir)
        extra = {}
    else:
        res = qgail.qgail_train(cfg, demos, out_dir)
        extra = {"max_spectral_norm_deviation": max(res.sn_deviation) if res.sn_deviation else None}
    return {"seed": seed, "curve": res.curve, "final_returns": res.final_returns.tolist(), **extra}


def execute(rc: RunConfig, run_dir, jobs: int = 1, log=print) -> dict:
    """Train every seed of ``rc`` into ``run_dir``.

    Writes ``config.toml``, ``demos.jsonl`` (when collected here),
    ``seed_<s>/`` checkpoints, the combined ``curve.csv`` with a leading seed
    column, ``curve.svg`` and ``summary.json``.  Raises :class:`RunFailure`
    after writing whatever finished if any seed fails.
    """
    run_dir = Path(run_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    rc.save(run_dir / "config.toml")
    demos = load_demos(rc.env_id, rc.demos)
    if not rc.demos.get("path"):
        demos.save(run_dir / "demos.jsonl")
    log(f"{rc.algorithm} on {rc.env_id}: {len(demos.trajectories)} demo trajectories, "
        f"{demos.n_pairs} pairs, seeds {rc.seeds}")

    cfg_dict = rc.to_dict()
    results, errors = {}, {}
    args = [(cfg_dict, s, demos, str(run_dir / f"seed_{s}")) for s in rc.seeds]
    if jobs > 1 and len(rc.seeds) > 1:
        with ProcessPoolExecutor(max_workers=min(jobs, len(rc.seeds))) as pool:
            futures = {s: pool.submit(train_seed, *a) for s, a in zip(rc.seeds, args)}
            for s, fut in futures.items():
                try:
                    results[s] = fut.result()
                except Exception as exc:  # noqa: BLE001 - reported per seed
                    errors[s] = repr(exc)
    else:
        for s, a in zip(rc.seeds, args):
            try:
                results[s] = train_seed(*a)
            except Exception as exc:  # noqa: BLE001
                errors[s] = repr(exc)
    for s in rc.seeds:
        if s in results:
            fr = np.array(results[s]["final_returns"])
            log(f"  seed {s}: final return {fr.mean():.2f} +/- {fr.std():.2f}")
        else:
            log(f"  seed {s}: FAILED {errors[s]}")

    rows = [{"seed": s, **r} for s in rc.seeds if s in results for r in results[s]["curve"]]
    qgail.write_csv(run_dir / "curve.csv", curve_fields(rc.algorithm), rows)
    if rows:
        plotting.plot_csvs([run_dir / "curve.csv"], run_dir / "curve.svg", labels=[rc.algorithm],
                           title=f"{rc.algorithm} {rc.env_id} ({len(results)} seeds)")
    per_seed = {str(s): results[s]["final_returns"] for s in rc.seeds if s in results}
    means = [float(np.mean(v)) for v in per_seed.values()]
    summary = {
        "env": rc.env_id, "algorithm": rc.algorithm, "seeds": rc.seeds,
        "n_demo_trajectories": len(demos.trajectories), "n_demo_pairs": demos.n_pairs,
        "demo_return_mean": demos.mean_return,
        "final_return_mean": float(np.mean(means)) if means else None,
        "final_return_std": float(np.std(means)) if means else None,
        "per_seed_final_return_mean": dict(zip(per_seed, means)),
        "per_seed_final_returns": per_seed,
        "errors": {str(k): v for k, v in errors.items()},
    }
    if rc.algorithm == "qgail":
        summary["max_spectral_norm_deviation"] = {str(s): results[s]["max_spectral_norm_deviation"]
                                                  for s in rc.seeds if s in results}
    (run_dir / "summary.json").write_text(json.dumps(summary, indent=1) + "\n")
    if errors:
        raise RunFailure(f"{len(errors)} of {len(rc.seeds)} seeds failed; see {run_dir / 'summary.json'}")
    return summary


# ---------------------------------------------------------------------------
# ablation suites


def _label(algorithm: str) -> str:
    return "Q-BC" if algorithm == "qbc" else "Q-GAIL"


def suite_variants(suite: str, base: RunConfig) -> list[tuple[str, dict, dict]]:
    """``(label, setting overrides, demo overrides)`` for each grid point."""
    a = _label(base.algorithm)
    if suite == "demo-count":
        return [(f"{n} trajectories", {}, {"n_trajectories": n}) for n in (1, 5, 10, 50, 100)]
    if suite == "scaling":
        return [(a, {}, {}), (f"{a}/(λ)", {"train_lambda": False}, {}), (f"{a}/(ν)", {"train_nu": False}, {})]
    if suite == "layers":
        top = int(base.settings["n_layers"])
        return [(f"{n} layers", {"n_layers": n}, {}) for n in sorted({1, max(1, top // 2), top})]
    if suite == "beta":
        betas = sorted({0.5, 1.0, 1.2, float(base.settings["beta"])})
        return [(f"beta={b:g}", {"beta": b}, {}) for b in betas]
    if suite == "spectral-norm":
        if base.algorithm != "qgail":
            raise ConfigurationError("the spectral-norm suite needs --algorithm qgail")
        return [(a, {"spectral_norm": True}, {}), (f"{a}/SN", {"spectral_norm": False}, {})]
    if suite == "quantum-disc":
        if base.algorithm != "qgail":
            raise ConfigurationError("the quantum-disc suite needs --algorithm qgail")
        return [(f"{a} (DNN discriminator)", {"disc": "mlp"}, {}),
                (f"{a} (VQC discriminator)", {"disc": "vqc", "disc_vqc_lr": [0.1, 0.01, 0.1]}, {})]
    raise ConfigurationError(f"unknown suite {suite!r}; choose from {SUITES}")


SUITES = ["demo-count", "scaling", "layers", "beta", "spectral-norm", "quantum-disc"]
SUITE_ALGORITHM = {"demo-count": "qbc", "scaling": "qbc", "layers": "qbc", "beta": "qbc",
                   "spectral-norm": "qgail", "quantum-disc": "qgail"}
TABLE_FIELDS = ["variant", "n_demo_trajectories", "n_demo_pairs", "final_return_mean", "final_return_std", "run_dir"]


def ablate(suite: str, base: RunConfig, out_dir, jobs: int = 1, log=print) -> list[dict]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    table, curves, labels = [], [], []
    for k, (label, overrides, demo_overrides) in enumerate(suite_variants(suite, base)):
        rc = RunConfig(base.env_id, base.algorithm, base.seeds, {**base.settings, **overrides},
                       {**base.demos, **demo_overrides})
        vdir = out_dir / f"{k:02d}-{re.sub(r'[^A-Za-z0-9.=]+', '-', label).strip('-')}"
        log(f"[{suite}] {label}")
        s = execute(rc, vdir, jobs, log)
        table.append({"variant": label, "n_demo_trajectories": s["n_demo_trajectories"],
                      "n_demo_pairs": s["n_demo_pairs"], "final_return_mean": s["final_return_mean"],
                      "final_return_std": s["final_return_std"], "run_dir": vdir.name})
        curves.append(vdir / "curve.csv")
        labels.append(label)
    qgail.write_csv(out_dir / "comparison.csv", TABLE_FIELDS, table)
    lines = ["| variant | demo trajectories | demo pairs | final return |", "|---|---|---|---|"]
    lines += [f"| {r['variant']} | {r['n_demo_trajectories']} | {r['n_demo_pairs']} | "
              f"{r['final_return_mean']:.2f} +/- {r['final_return_std']:.2f} |" for r in table]
    (out_dir / "comparison.md").write_text("\n".join(lines) + "\n")
    plotting.plot_csvs(curves, out_dir / "comparison.svg", labels=labels, title=f"{suite} ({base.env_id})")
    return table


# ---------------------------------------------------------------------------
# argument handling


def _overrides(args) -> dict:
    out = {}
    for text in getattr(args, "set", None) or []:
        k, v = runconfig.parse_assignment(text)
        out[k] = v
    for attr, key in (("iterations", "iterations"), ("layers", "n_layers"), ("beta", "beta"),
                      ("reward_kind", "reward_kind"), ("batch_size", "batch_size")):
        v = getattr(args, attr, None)
        if v is not None:
            out[key] = v
    if getattr(args, "quantum_disc", False):
        out["disc"] = "vqc"
    if getattr(args, "no_spectral_norm", False):
        out["spectral_norm"] = False
    if getattr(args, "no_lambda", False):
        out["train_lambda"] = False
    if getattr(args, "no_nu", False):
        out["train_nu"] = False
    return out


def build_run_config(args, algorithm: str) -> RunConfig:
    user = runconfig.load_toml(args.config) if args.config else {}
    if user.get("algorithm") not in (None, algorithm):
        raise ConfigurationError(f"config file is a {user['algorithm']} run, not {algorithm}")
    demo = {"path": args.demos, "n_trajectories": args.n_demos, "seed": args.demo_seed}
    if args.stochastic_demos:
        demo["greedy"] = False
    return runconfig.resolve(args.env, algorithm, user, _overrides(args), args.seeds, demo)


def _add_training_args(p: argparse.ArgumentParser, algorithm: str | None) -> None:
    p.add_argument("--env", help="environment id or alias (cartpole, acrobot, mountaincar, pointmass)")
    p.add_argument("--config", help="TOML file with [policy]/[qbc]/[qgail]/[demos] sections or a run snapshot")
    p.add_argument("--demos", help="demonstration JSONL; default collects from the bundled expert")
    p.add_argument("--n-demos", type=int, help="number of demo trajectories to use")
    p.add_argument("--demo-seed", type=int)
    p.add_argument("--stochastic-demos", action="store_true", help="sample expert actions instead of argmax")
    p.add_argument("--seeds", type=int, nargs="+", help="training seeds (default 0)")
    p.add_argument("--jobs", type=int, default=1, help="seeds trained concurrently")
    p.add_argument("--out-dir", help="output directory (default: timestamped under $QIL_RUN_DIR or ./runs)")
    p.add_argument("--iterations", type=int)
    p.add_argument("--layers", type=int)
    p.add_argument("--beta", type=float)
    p.add_argument("--no-lambda", action="store_true", help="freeze the input scaling parameters")
    p.add_argument("--no-nu", action="store_true", help="freeze the output scaling parameters")
    if algorithm in (None, "qbc"):
        p.add_argument("--batch-size", type=int)
    if algorithm in (None, "qgail"):
        p.add_argument("--reward-kind", choices=[k.value for k in qgail.RewardKind])
        p.add_argument("--quantum-disc", action="store_true", help="VQC discriminator instead of the MLP")
        p.add_argument("--no-spectral-norm", action="store_true")
    p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override any setting (TOML value)")


def cmd_train(args, algorithm: str) -> int:
    rc = build_run_config(args, algorithm)
    out = Path(args.out_dir) if args.out_dir else make_run_dir(f"{algorithm}-{rc.env_id}")
    execute(rc, out, args.jobs)
    print(out)
    return EXIT_OK


def cmd_run(args) -> int:
    return cmd_train(args, args.algorithm)


def cmd_ablate(args) -> int:
    if args.suite not in SUITES:
        raise ConfigurationError(f"unknown suite {args.suite!r}; choose from {SUITES}")
    algorithm = args.algorithm or SUITE_ALGORITHM[args.suite]
    base = build_run_config(args, algorithm)
    out = Path(args.out_dir) if args.out_dir else make_run_dir(f"ablate-{args.suite}-{base.env_id}")
    table = ablate(args.suite, base, out, args.jobs)
    for r in table:
        print(f"{r['variant']:32s} pairs={r['n_demo_pairs']:6d} "
              f"return={r['final_return_mean']:.2f} +/- {r['final_return_std']:.2f}")
    print(out)
    return EXIT_OK


def expert_config(args) -> expert.ExpertConfig:
    base = runconfig.defaults(args.env).get("expert")
    if base is None:
        raise ConfigurationError(f"no expert settings for {args.env}")
    settings = dict(base)
    if args.config:
        settings.update(runconfig.load_toml(args.config).get("expert", {}))
    for text in args.set or []:
        k, v = runconfig.parse_assignment(text)
        settings[k] = v
    if args.iterations is not None:
        settings["iterations"] = args.iterations
    if args.seed is not None:
        settings["seed"] = args.seed
    try:
        return expert.ExpertConfig(env_id=args.env, **settings)
    except TypeError as exc:
        raise ConfigurationError(str(exc)) from None


def cmd_train_expert(args) -> int:
    cfg = expert_config(args)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)

    def progress(row):
        if row["eval_return_mean"] != "":
            print(f"iter {row['iteration']:4d}  train {row['return_mean']:8.2f}  eval {row['eval_return_mean']:8.2f}")

    policy, report = expert.train_expert(cfg, None, progress)
    policy.save(out)
    qgail.write_csv(out.with_suffix(".curve.csv"), expert.EXPERT_CURVE_FIELDS, report.curve)
    print(f"best eval {report.best_eval:.2f} at iteration {report.best_iteration}; saved {out}")
    if not report.reached:
        print(f"expert did not reach the threshold {cfg.threshold}", file=sys.stderr)
        return EXIT_FAILURE
    return EXIT_OK


def cmd_collect(args) -> int:
    if args.ckpt is None and args.env is None:
        raise ConfigurationError("collect needs --ckpt or --env")
    greedy = not args.stochastic
    if args.ckpt is None:
        data = load_demos(args.env, {"n_trajectories": args.n, "seed": args.seed, "greedy": greedy})
    else:
        if args.env is None:
            raise ConfigurationError("--env is required with --ckpt")
        policy = _load_policy(args.ckpt)
        data = expert.collect_demos(policy, args.env, args.n, args.seed, greedy)
    data.save(args.out)
    print(f"{len(data.trajectories)} trajectories, {data.n_pairs} pairs, "
          f"return {data.mean_return:.2f} +/- {data.std_return:.2f}; saved {args.out}")
    return EXIT_OK


def _load_policy(path):
    try:
        return vqc.load_policy(path)
    except (OSError, ValueError, KeyError) as exc:
        raise ConfigurationError(f"cannot load checkpoint {path}: {exc}") from None


def cmd_eval(args) -> int:
    policy = expert.shipped_expert(args.env) if args.ckpt is None else _load_policy(args.ckpt)
    rets = rollouts.evaluate(policy, args.env, args.episodes, args.seed, args.greedy)
    result = {"env": envs.canonical_id(args.env), "episodes": args.episodes, "greedy": args.greedy,
              "return_mean": float(rets.mean()), "return_std": float(rets.std()), "returns": rets.tolist()}
    print(f"return {result['return_mean']:.2f} +/- {result['return_std']:.2f} over {args.episodes} episodes")
    if args.out:
        Path(args.out).write_text(json.dumps(result, indent=1) + "\n")
    return EXIT_OK


def cmd_verify_bounds(args) -> int:
    report = theory.audit(args.instances, args.seed)
    if args.report:
        Path(args.report).write_text(json.dumps(report, indent=1) + "\n")
    print(f"{args.instances} instances, {report['violations']} violations, min slack {report['min_slack']:.3g}")
    return EXIT_OK if report["violations"] == 0 else EXIT_FAILURE


def cmd_plot(args) -> int:
    paths = []
    for p in args.inputs:
        p = Path(p)
        paths.append(p / "curve.csv" if p.is_dir() else p)
    for p in paths:
        if not p.exists():
            raise ConfigurationError(f"no curve CSV at {p}")
    try:
        plotting.plot_csvs(paths, args.out, args.metric, args.labels, args.title or "")
    except (ValueError, KeyError) as exc:
        raise ConfigurationError(str(exc)) from None
    print(args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qil", description="Quantum imitation learning with VQC policies.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train-expert", help="train a softmax-VQC expert with REINFORCE")
    p.add_argument("--env", required=True)
    p.add_argument("--out", required=True, help="checkpoint path (JSON)")
    p.add_argument("--config")
    p.add_argument("--iterations", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--set", action="append", metavar="KEY=VALUE")
    p.set_defaults(func=cmd_train_expert)

    p = sub.add_parser("collect", help="roll out an expert and write demonstrations as JSONL")
    p.add_argument("--ckpt", help="policy checkpoint; default is the bundled expert for --env")
    p.add_argument("--env")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--stochastic", action="store_true", help="sample actions instead of argmax")
    p.set_defaults(func=cmd_collect)

    for algorithm in ("qbc", "qgail"):
        p = sub.add_parser(algorithm, help=f"train {_label(algorithm)} on demonstrations")
        _add_training_args(p, algorithm)
        p.set_defaults(func=lambda a, alg=algorithm: cmd_train(a, alg))

    p = sub.add_parser("run", help="train qbc or qgail with the per-env defaults")
    p.add_argument("algorithm", choices=sorted(runconfig.ALGORITHMS))
    _add_training_args(p, None)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("eval", help="evaluate a checkpoint on the true reward")
    p.add_argument("--env", required=True)
    p.add_argument("--ckpt", help="policy checkpoint; default is the bundled expert")
    p.add_argument("--episodes", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--greedy", action="store_true")
    p.add_argument("--out", help="write a JSON result")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("verify-bounds", help="randomized audit of the imitation error bounds")
    p.add_argument("--instances", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--report", help="JSON report with per-instance slacks")
    p.set_defaults(func=cmd_verify_bounds)

    p = sub.add_parser("ablate", help="run an ablation grid and write a comparison table and plot")
    p.add_argument("suite", help=", ".join(SUITES))
    p.add_argument("--algorithm", choices=sorted(runconfig.ALGORITHMS))
    _add_training_args(p, None)
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("plot", help="SVG learning curves (mean +/- std over seeds) from curve CSVs")
    p.add_argument("inputs", nargs="+", help="curve.csv files or run directories")
    p.add_argument("--out", required=True)
    p.add_argument("--metric")
    p.add_argument("--labels", nargs="+")
    p.add_argument("--title")
    p.set_defaults(func=cmd_plot)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except ConfigurationError as exc:
        print(f"qil: configuration error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except RunFailure as exc:
        print(f"qil: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    except Exception as exc:  # noqa: BLE001 - any training crash is a runtime failure
        print(f"qil: error: {exc!r}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
