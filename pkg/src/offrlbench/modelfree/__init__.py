"""Model-free offline RL: shared TD machinery plus five algorithms."""

from .bcq import BCQPolicy, BCQTrainer, bcq_select_action
from .bear import BEARTrainer, bear_policy_loss
from .brac import BRACTrainer, brac_v_losses, gaussian_kl_closed_form, kl_estimate
from .common import (
    Batch,
    DatasetTensors,
    ModelFreeTrainer,
    critic_loss,
    plain_deterministic_actor_loss,
    plain_gaussian_actor_loss,
    plain_td_q_loss,
    run_training_loop,
    sample_policy_actions,
    td_target,
)
from .config import AlgoConfig
from .cql import CQLTrainer, cql_q_loss
from .mmd import mmd, mmd_batched
from .td3bc import TD3BCTrainer, td3bc_policy_loss
from .train import MODELFREE_TRAINERS, train_modelfree

__all__ = [
    "AlgoConfig",
    "BCQPolicy",
    "BCQTrainer",
    "BEARTrainer",
    "BRACTrainer",
    "Batch",
    "CQLTrainer",
    "DatasetTensors",
    "MODELFREE_TRAINERS",
    "ModelFreeTrainer",
    "TD3BCTrainer",
    "bcq_select_action",
    "bear_policy_loss",
    "brac_v_losses",
    "cql_q_loss",
    "critic_loss",
    "gaussian_kl_closed_form",
    "kl_estimate",
    "mmd",
    "mmd_batched",
    "plain_deterministic_actor_loss",
    "plain_gaussian_actor_loss",
    "plain_td_q_loss",
    "run_training_loop",
    "sample_policy_actions",
    "td3bc_policy_loss",
    "td_target",
    "train_modelfree",
]
