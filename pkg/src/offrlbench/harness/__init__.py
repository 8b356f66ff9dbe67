"""Experiment orchestration, the evaluation protocol, and reporting."""

from .evaluate import evaluate_policy, rollout_seed
from .experiment import (
    CellResult,
    CellTask,
    ExperimentConfig,
    collect_report,
    ensure_dataset,
    make_behavior,
    make_env,
    run_cell,
    run_experiment,
)
from .protocol import SCORE_PERCENTILE, TAIL_FRACTION, history_tail, protocol_score
from .registry import (
    ALGORITHM_FAMILIES,
    ALGORITHM_IDS,
    DESK_PRESETS,
    ReferenceConfig,
    make_config,
    train_algorithm,
)
from .report import CellScore, ScoreReport, emit_table, format_score_cell

__all__ = [
    "ALGORITHM_FAMILIES",
    "ALGORITHM_IDS",
    "CellResult",
    "CellScore",
    "CellTask",
    "DESK_PRESETS",
    "ExperimentConfig",
    "ReferenceConfig",
    "SCORE_PERCENTILE",
    "ScoreReport",
    "TAIL_FRACTION",
    "collect_report",
    "emit_table",
    "ensure_dataset",
    "evaluate_policy",
    "format_score_cell",
    "history_tail",
    "make_behavior",
    "make_config",
    "make_env",
    "protocol_score",
    "rollout_seed",
    "run_cell",
    "run_experiment",
    "train_algorithm",
]
