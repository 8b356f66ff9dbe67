"""Environments, baseline controllers, dataset generation and import."""

from .baselines import (
    BASELINE_IDS,
    BASELINE_NORM_MEANS,
    BASELINE_NORM_STDS,
    OPTIMIZED_HISTORY,
    BaselinePolicy,
    MixedBehaviorPolicy,
    UniformRandomPolicy,
    baseline_action,
    mixed_action,
)
from .chain import (
    ChainMDP,
    finite_horizon_optimal_return,
    make_deterministic_chain,
    value_iteration,
)
from .generate import generate_dataset
from .importer import import_ib_dataset
from .surrogate import SurrogateEnv

__all__ = [
    "BASELINE_IDS",
    "BASELINE_NORM_MEANS",
    "BASELINE_NORM_STDS",
    "BaselinePolicy",
    "ChainMDP",
    "MixedBehaviorPolicy",
    "OPTIMIZED_HISTORY",
    "SurrogateEnv",
    "UniformRandomPolicy",
    "baseline_action",
    "finite_horizon_optimal_return",
    "generate_dataset",
    "import_ib_dataset",
    "make_deterministic_chain",
    "mixed_action",
    "value_iteration",
]
