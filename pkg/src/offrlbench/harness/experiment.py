"""Experiment orchestration: dataset grid, cell work queue, resume,
and score aggregation."""

from __future__ import annotations

import json
import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
from pathlib import Path

import torch

from ..core.io import load_dataset, load_history, save_dataset, save_history
from ..core.rng import derive_seed
from ..core.types import Dataset, RunHistory
from ..envs.baselines import BaselinePolicy, MixedBehaviorPolicy, UniformRandomPolicy
from ..envs.chain import make_deterministic_chain
from ..envs.generate import generate_dataset
from ..envs.surrogate import SurrogateEnv
from ..nets.checkpoint import save_policy
from .evaluate import evaluate_policy
from .protocol import protocol_score
from .registry import ALGORITHM_FAMILIES, make_config, train_algorithm
from .report import CellScore, ScoreReport

WORKERS_ENV_VAR = "OFFRLBENCH_WORKERS"


def make_env(name: str):
    if name == "surrogate":
        return SurrogateEnv()
    if name == "chain":
        return make_deterministic_chain()
    raise ValueError(f"unknown environment {name!r} (pluggable envs: surrogate, chain)")


def make_behavior(env, baseline_id: str, epsilon: float):
    spec = env.spec
    if baseline_id == "uniform":
        base = UniformRandomPolicy(spec.action_low, spec.action_high)
    else:
        base = BaselinePolicy(baseline_id, spec.action_low, spec.action_high)
    return MixedBehaviorPolicy(base, epsilon, spec.action_low, spec.action_high)


@dataclass
class ExperimentConfig:
    algorithms: list[str] = field(default_factory=lambda: ["td3bc"])
    baselines: list[str] = field(default_factory=lambda: ["mediocre"])
    epsilons: list[float] = field(default_factory=lambda: [0.2])
    seeds: list[int] = field(default_factory=lambda: [0, 1, 2, 3, 4])
    env: str = "surrogate"
    n_trajectories: int = 40
    dataset_seed: int = 1234
    rollouts_per_eval: int = 10
    output_dir: str = "results"
    workers: int = 1
    scale: str = "desk"
    overrides: dict = field(default_factory=dict)  # per-algorithm config overrides

    def __post_init__(self):
        if not self.seeds:
            raise ValueError("need at least one seed")
        if self.rollouts_per_eval < 1:
            raise ValueError("rollouts_per_eval must be >= 1")
        unknown = [a for a in self.algorithms if a not in ALGORITHM_FAMILIES]
        if unknown:
            raise ValueError(f"unknown algorithms {unknown}")

    def to_json(self) -> str:
        return json.dumps({f.name: getattr(self, f.name) for f in fields(self)}, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        data = json.loads(text)
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown experiment config fields: {sorted(unknown)}")
        return cls(**data)


def dataset_path(out_dir: Path, env: str, baseline: str, epsilon: float) -> Path:
    return out_dir / "datasets" / f"{env}-{baseline}-eps{epsilon:g}.csv"


def ensure_dataset(out_dir: Path, env_name: str, baseline: str, epsilon: float,
                   n_trajectories: int, seed: int) -> Path:
    path = dataset_path(out_dir, env_name, baseline, epsilon)
    if path.exists():
        return path
    env = make_env(env_name)
    behavior = make_behavior(env, baseline, epsilon)
    ds = generate_dataset(env, behavior, n_trajectories, derive_seed(seed, baseline, f"{epsilon:g}"))
    save_dataset(ds, path)
    return path


def cell_dir(out_dir: Path, dataset_id: str, algorithm: str, seed: int) -> Path:
    return out_dir / "runs" / dataset_id / algorithm / f"seed{seed}"


@dataclass
class CellTask:
    out_dir: str
    env_name: str
    dataset_file: str
    algorithm: str
    seed: int
    scale: str
    overrides: dict
    rollouts_per_eval: int


@dataclass
class CellResult:
    algorithm: str
    dataset_id: str
    seed: int
    ok: bool
    error: str = ""
    history_file: str = ""


def run_cell(task: CellTask) -> CellResult:
    """Execute one (algorithm, dataset, seed) training cell.

    Fully self-seeding, so results are identical whatever worker runs it.
    """
    torch.set_num_threads(1)
    dataset = load_dataset(task.dataset_file)
    ds_id = dataset.meta.dataset_id
    target = cell_dir(Path(task.out_dir), ds_id, task.algorithm, task.seed)
    history_file = target / "history.csv"
    if history_file.exists():
        return CellResult(task.algorithm, ds_id, task.seed, ok=True, history_file=str(history_file))

    env = make_env(task.env_name)

    def eval_hook(step: int, policy) -> float:
        return evaluate_policy(
            env, policy, task.rollouts_per_eval,
            derive_seed(task.seed, task.algorithm, ds_id, "eval", step),
        )

    try:
        config = make_config(task.algorithm, seed=task.seed, scale=task.scale,
                             overrides=task.overrides.get(task.algorithm, {}))
        policy, history = train_algorithm(task.algorithm, dataset, config, eval_hook)
    except Exception as exc:  # cell failures must not sink the grid
        partial = getattr(exc, "history", None)
        if isinstance(partial, RunHistory) and len(partial):
            target.mkdir(parents=True, exist_ok=True)
            save_history(partial, target / "history.partial.csv")
        return CellResult(task.algorithm, ds_id, task.seed, ok=False, error=f"{type(exc).__name__}: {exc}")

    target.mkdir(parents=True, exist_ok=True)
    if hasattr(policy, "to_checkpoint"):
        save_policy(target / "policy.npz", policy)
    save_history(history, history_file)
    return CellResult(task.algorithm, ds_id, task.seed, ok=True, history_file=str(history_file))


def run_experiment(config: ExperimentConfig) -> tuple[ScoreReport, list[CellResult]]:
    """Run the full grid, skipping completed cells, then aggregate.

    Completed cells are detected by their persisted history files, so a
    second invocation on a finished grid performs no training.
    """
    out_dir = Path(config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "experiment.json").write_text(config.to_json() + "\n")

    datasets: list[Path] = []
    for baseline in config.baselines:
        for epsilon in config.epsilons:
            datasets.append(
                ensure_dataset(out_dir, config.env, baseline, epsilon,
                               config.n_trajectories, config.dataset_seed)
            )

    tasks = [
        CellTask(
            out_dir=str(out_dir), env_name=config.env, dataset_file=str(ds),
            algorithm=algo, seed=seed, scale=config.scale,
            overrides=config.overrides, rollouts_per_eval=config.rollouts_per_eval,
        )
        for ds in datasets
        for algo in config.algorithms
        for seed in config.seeds
    ]

    workers = int(os.environ.get(WORKERS_ENV_VAR, config.workers))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run_cell, tasks))
    else:
        results = [run_cell(t) for t in tasks]

    for r in results:
        if not r.ok:
            warnings.warn(f"cell ({r.algorithm}, {r.dataset_id}, seed {r.seed}) failed: {r.error}")

    report = aggregate_results(out_dir, results)
    (out_dir / "report.csv").write_text(_report_csv(report))
    return report, results


def aggregate_results(out_dir: Path, results: list[CellResult]) -> ScoreReport:
    by_cell: dict[tuple[str, str], list[CellResult]] = {}
    for r in results:
        by_cell.setdefault((r.algorithm, r.dataset_id), []).append(r)

    report = ScoreReport()
    for (algo, ds_id), cell_results in by_cell.items():
        histories = []
        for r in cell_results:
            if r.ok:
                histories.append(load_history(Path(r.history_file), algorithm_id=algo, dataset_id=ds_id, seed=r.seed))
        failed = any(not r.ok for r in cell_results)
        if not histories:
            report.cells[(algo, ds_id)] = CellScore(float("nan"), float("nan"), 0, 0, failed=True)
            continue
        score, se = protocol_score(histories)
        from .protocol import history_tail

        n_values = sum(len(history_tail(h)) for h in histories)
        report.cells[(algo, ds_id)] = CellScore(score, se, n_values, len(histories), failed=failed)
    return report


def _report_csv(report: ScoreReport) -> str:
    from .report import emit_table

    return emit_table(report, "csv")


def collect_report(out_dir: Path | str) -> ScoreReport:
    """Rebuild a report from persisted run histories (audit path)."""
    out_dir = Path(out_dir)
    runs = out_dir / "runs"
    if not runs.exists():
        raise FileNotFoundError(f"no runs directory under {out_dir}")
    results: list[CellResult] = []
    for history_file in sorted(runs.glob("*/*/seed*/history.csv")):
        seed = int(history_file.parent.name.removeprefix("seed"))
        algo = history_file.parent.parent.name
        ds_id = history_file.parent.parent.parent.name
        results.append(CellResult(algo, ds_id, seed, ok=True, history_file=str(history_file)))
    if not results:
        raise FileNotFoundError(f"no completed runs under {runs}")
    return aggregate_results(out_dir, results)
