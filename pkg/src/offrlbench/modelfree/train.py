"""Entry point for the model-free algorithms."""

from __future__ import annotations

from ..core.types import Dataset, PolicyHandle, RunHistory
from .bcq import BCQTrainer
from .bear import BEARTrainer
from .brac import BRACTrainer
from .common import run_training_loop
from .config import AlgoConfig
from .cql import CQLTrainer
from .td3bc import TD3BCTrainer

MODELFREE_TRAINERS = {
    "bcq": BCQTrainer,
    "bear": BEARTrainer,
    "brac_v": BRACTrainer,
    "cql": CQLTrainer,
    "td3bc": TD3BCTrainer,
}


def train_modelfree(
    algorithm_id: str,
    dataset: Dataset,
    config: AlgoConfig,
    eval_hook=None,
) -> tuple[PolicyHandle, RunHistory]:
    """Run one model-free training job.

    eval_hook(step, policy) -> mean return is invoked every
    config.eval_interval steps; its values populate the run history.
    """
    if algorithm_id not in MODELFREE_TRAINERS:
        raise ValueError(f"unknown model-free algorithm {algorithm_id!r}, "
                         f"expected one of {sorted(MODELFREE_TRAINERS)}")
    if config.algorithm_id != algorithm_id:
        raise ValueError(f"config.algorithm_id {config.algorithm_id!r} != requested {algorithm_id!r}")
    trainer = MODELFREE_TRAINERS[algorithm_id](dataset, config)
    return run_training_loop(trainer, dataset, config, eval_hook)
