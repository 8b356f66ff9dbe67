"""Shared data model, rollout machinery, returns, and seeded randomness."""

from .io import (
    DatasetParseError,
    load_dataset,
    load_history,
    save_dataset,
    save_history,
)
from .rng import derive_seed, np_rng, seed_everything, torch_gen
from .rollout import Environment, discounted_return, rollout
from .stats import SIGMA_FLOOR, DeltaStats, dataset_delta_stats
from .types import (
    Dataset,
    DatasetMeta,
    EnvironmentSpec,
    EvalRecord,
    PolicyHandle,
    RunHistory,
    Transition,
)

__all__ = [
    "Dataset",
    "DatasetMeta",
    "DatasetParseError",
    "DeltaStats",
    "Environment",
    "EnvironmentSpec",
    "EvalRecord",
    "PolicyHandle",
    "RunHistory",
    "SIGMA_FLOOR",
    "Transition",
    "dataset_delta_stats",
    "derive_seed",
    "discounted_return",
    "load_dataset",
    "load_history",
    "np_rng",
    "rollout",
    "save_dataset",
    "save_history",
    "seed_everything",
    "torch_gen",
]
