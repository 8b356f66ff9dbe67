"""Command-line interface.

Verbs: generate-data, train, evaluate, report, run. Exit codes: 0 on
success, 1 when some grid cells failed, 2 on invalid configuration.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from ..core.io import load_dataset, save_dataset, save_history
from ..core.rng import derive_seed
from ..envs.generate import generate_dataset
from ..nets.checkpoint import load_policy, save_policy
from .evaluate import evaluate_policy
from .experiment import ExperimentConfig, make_behavior, make_env, run_experiment, collect_report
from .registry import ALGORITHM_IDS, make_config, train_algorithm
from .report import REPORT_FORMATS, emit_table

EXIT_OK = 0
EXIT_PARTIAL_FAILURE = 1
EXIT_INVALID_CONFIG = 2


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="offrlbench",
                                     description="Offline RL benchmark suite")
    sub = parser.add_subparsers(dest="verb", required=True)

    g = sub.add_parser("generate-data", help="generate a behavior-policy dataset")
    g.add_argument("--env", default="surrogate")
    g.add_argument("--baseline", default="mediocre",
                   help="bad | mediocre | optimized | uniform")
    g.add_argument("--epsilon", type=float, default=0.2)
    g.add_argument("--trajectories", type=int, default=40)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)

    t = sub.add_parser("train", help="train one algorithm on one dataset")
    t.add_argument("--algorithm", required=True, choices=sorted(ALGORITHM_IDS))
    t.add_argument("--dataset", required=True)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--scale", default="desk", choices=("desk", "full"))
    t.add_argument("--config", help="JSON file with config field overrides")
    t.add_argument("--env", default="surrogate", help="evaluation environment")
    t.add_argument("--rollouts", type=int, default=10)
    t.add_argument("--out", required=True, help="output directory")

    e = sub.add_parser("evaluate", help="evaluate a checkpoint")
    e.add_argument("--checkpoint", required=True)
    e.add_argument("--env", default="surrogate")
    e.add_argument("--rollouts", type=int, default=10)
    e.add_argument("--seed", type=int, default=0)

    r = sub.add_parser("report", help="aggregate persisted runs into a table")
    r.add_argument("--results", required=True)
    r.add_argument("--format", default="text", choices=REPORT_FORMATS)

    x = sub.add_parser("run", help="run a full experiment grid")
    x.add_argument("--config", required=True, help="experiment config JSON")
    return parser


def _cmd_generate(args) -> int:
    env = make_env(args.env)
    behavior = make_behavior(env, args.baseline, args.epsilon)
    ds = generate_dataset(env, behavior, args.trajectories, args.seed)
    path = save_dataset(ds, Path(args.out))
    print(f"wrote {len(ds)} transitions to {path}")
    return EXIT_OK


def _cmd_train(args) -> int:
    dataset = load_dataset(args.dataset)
    overrides = json.loads(Path(args.config).read_text()) if args.config else {}
    config = make_config(args.algorithm, seed=args.seed, scale=args.scale, overrides=overrides)
    env = make_env(args.env)

    def eval_hook(step, policy):
        return evaluate_policy(env, policy, args.rollouts,
                               derive_seed(args.seed, args.algorithm, dataset.meta.dataset_id, "eval", step))

    policy, history = train_algorithm(args.algorithm, dataset, config, eval_hook)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if hasattr(policy, "to_checkpoint"):
        save_policy(out / "policy.npz", policy)
    save_history(history, out / "history.csv")
    last = history.records[-1].mean_return if history.records else float("nan")
    print(f"trained {args.algorithm} on {dataset.meta.dataset_id}: "
          f"{len(history)} evals, last mean return {last:.4f}")
    return EXIT_OK


def _cmd_evaluate(args) -> int:
    policy = load_policy(args.checkpoint)
    env = make_env(args.env)
    score = evaluate_policy(env, policy, args.rollouts, args.seed)
    print(f"mean return over {args.rollouts} rollouts: {score:.6f}")
    return EXIT_OK


def _cmd_report(args) -> int:
    report = collect_report(args.results)
    print(emit_table(report, args.format), end="")
    return EXIT_OK


def _cmd_run(args) -> int:
    config = ExperimentConfig.from_json(Path(args.config).read_text())
    report, results = run_experiment(config)
    print(emit_table(report, "text"), end="")
    failures = [r for r in results if not r.ok]
    if failures:
        print(f"{len(failures)} cell(s) failed:", file=sys.stderr)
        for r in failures:
            print(f"  ({r.algorithm}, {r.dataset_id}, seed {r.seed}): {r.error}", file=sys.stderr)
        return EXIT_PARTIAL_FAILURE
    return EXIT_OK


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "generate-data": _cmd_generate,
        "train": _cmd_train,
        "evaluate": _cmd_evaluate,
        "report": _cmd_report,
        "run": _cmd_run,
    }
    try:
        return handlers[args.verb](args)
    except (ValueError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID_CONFIG


if __name__ == "__main__":
    sys.exit(main())
