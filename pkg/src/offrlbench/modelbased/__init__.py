"""Purely model-based policy optimization: rollout-gradient search and
weight-constrained population search."""

from .bc import action_mse, behavior_clone
from .moose import MooseConfig, moose_objective, moose_train
from .rollout import RolloutPlan, UnrollResult, unroll, virtual_rollout_return
from .wsbc import WeightConstraint, WsbcConfig, WsbcSearchLog, wsbc_search

__all__ = [
    "MooseConfig",
    "RolloutPlan",
    "UnrollResult",
    "WeightConstraint",
    "WsbcConfig",
    "WsbcSearchLog",
    "action_mse",
    "behavior_clone",
    "moose_objective",
    "moose_train",
    "unroll",
    "virtual_rollout_return",
    "wsbc_search",
]
