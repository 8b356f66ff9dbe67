"""Shared actor-critic backup machinery and the training-loop driver.

Every model-free algorithm is an adjustment of the same two updates: a
temporal-difference critic regression and a value-maximizing policy
step. The plain versions live here so each algorithm's zero-coefficient
limit can be checked against them exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch

from ..core.rng import derive_seed, seed_everything, torch_gen
from ..core.types import Dataset, PolicyHandle, RunHistory
from ..errors import DivergenceError
from ..nets.modules import as_tensor, norm_from_dataset
from ..nets.policies import DeterministicPolicyNet, GaussianPolicyNet
from ..nets.qensemble import QEnsemble
from .config import AlgoConfig


@dataclass
class Batch:
    states: torch.Tensor
    actions: torch.Tensor
    rewards: torch.Tensor
    next_states: torch.Tensor


class DatasetTensors:
    """Dataset columns as tensors with seeded minibatch sampling."""

    def __init__(self, dataset: Dataset, dtype=torch.float32):
        self.states = torch.as_tensor(dataset.states.copy(), dtype=dtype)
        self.actions = torch.as_tensor(dataset.actions.copy(), dtype=dtype)
        self.rewards = torch.as_tensor(dataset.rewards.copy(), dtype=dtype)
        self.next_states = torch.as_tensor(dataset.next_states.copy(), dtype=dtype)
        self.n = self.states.shape[0]

    def sample(self, batch_size: int, gen: torch.Generator) -> Batch:
        idx = torch.randint(0, self.n, (min(batch_size, self.n),), generator=gen)
        return Batch(self.states[idx], self.actions[idx], self.rewards[idx], self.next_states[idx])


def td_target(qe: QEnsemble, rewards: torch.Tensor, next_states: torch.Tensor,
              next_actions: torch.Tensor, gamma: float) -> torch.Tensor:
    """r + gamma * W(Q_target(s', a')); no gradient flows into targets."""
    with torch.no_grad():
        w = qe.weighted_target_values(next_states, next_actions)
        target = rewards + gamma * w
    if not torch.isfinite(target).all():
        raise DivergenceError(
            f"non-finite TD target (reward range [{rewards.min()}, {rewards.max()}], "
            f"Q range [{w.min()}, {w.max()}])"
        )
    return target


def critic_loss(qe: QEnsemble, states, actions, targets) -> torch.Tensor:
    """Half mean-squared TD error, averaged over ensemble members."""
    values = qe.values(states, actions)
    return 0.5 * ((values - targets.unsqueeze(0)) ** 2).mean()


def plain_deterministic_actor_loss(qe: QEnsemble, policy: DeterministicPolicyNet,
                                   states: torch.Tensor) -> torch.Tensor:
    return -qe.weighted_values(states, policy(states)).mean()


def sample_policy_actions(policy: GaussianPolicyNet, states: torch.Tensor, n_samples: int,
                          generator: torch.Generator | None = None,
                          noise: torch.Tensor | None = None):
    """Reparameterized samples: returns (flat_states, flat_actions) with
    n_samples rows per state, ready for Q evaluation."""
    b = states.shape[0]
    if noise is None:
        noise = torch.randn(b, n_samples, policy.action_dim, dtype=states.dtype, generator=generator)
    rep = states.unsqueeze(1).expand(b, n_samples, states.shape[1]).reshape(b * n_samples, -1)
    actions, _ = policy.rsample(rep, noise=noise.reshape(b * n_samples, -1))
    return rep, actions


def plain_gaussian_actor_loss(qe: QEnsemble, policy: GaussianPolicyNet, states: torch.Tensor,
                              n_samples: int = 1, generator: torch.Generator | None = None,
                              noise: torch.Tensor | None = None) -> torch.Tensor:
    rep, actions = sample_policy_actions(policy, states, n_samples, generator, noise)
    return -qe.weighted_values(rep, actions).mean()


def plain_td_q_loss(qe: QEnsemble, policy, batch: Batch, gamma: float,
                    generator: torch.Generator | None = None) -> torch.Tensor:
    """Unregularized critic update: bootstrap at the policy's next action."""
    if isinstance(policy, GaussianPolicyNet):
        with torch.no_grad():
            noise = torch.randn(batch.next_states.shape[0], policy.action_dim,
                                dtype=batch.next_states.dtype, generator=generator)
            next_actions, _ = policy.rsample(batch.next_states, noise=noise)
    else:
        with torch.no_grad():
            next_actions = policy(batch.next_states)
    targets = td_target(qe, batch.rewards, batch.next_states, next_actions, gamma)
    return critic_loss(qe, batch.states, batch.actions, targets)


class ModelFreeTrainer:
    """Interface each algorithm implements for the shared loop."""

    def __init__(self, dataset: Dataset, config: AlgoConfig):
        self.dataset = dataset
        self.config = config
        self.spec = dataset.spec
        self.gamma = config.gamma if config.gamma is not None else dataset.spec.discount
        self.state_norm = norm_from_dataset(dataset)

    def pretrain(self) -> None:
        """Fit auxiliary behavior models before the main loop."""

    def update(self, batch: Batch, gen: torch.Generator, step: int) -> dict[str, float]:
        raise NotImplementedError

    def policy_handle(self) -> PolicyHandle:
        raise NotImplementedError

    def make_q_ensemble(self) -> QEnsemble:
        from ..nets.qensemble import TargetWeighting

        return QEnsemble(
            self.spec.state_dim,
            self.spec.action_dim,
            n_members=self.config.n_q_members,
            hidden=self.config.hidden,
            weighting=TargetWeighting(self.config.weighting, self.config.weighting_lam),
            seed=derive_seed(self.config.seed, "q_ensemble"),
            state_norm=self.state_norm,
        )


def run_training_loop(
    trainer: ModelFreeTrainer,
    dataset: Dataset,
    config: AlgoConfig,
    eval_hook=None,
    run_label: str | None = None,
) -> tuple[PolicyHandle, RunHistory]:
    """Alternate update steps with periodic evaluations.

    Deterministic given config.seed. On a non-finite loss the partial
    history is attached to the raised DivergenceError.
    """
    seed_everything(derive_seed(config.seed, config.algorithm_id, "global"))
    history = RunHistory(
        run_id=run_label or f"{config.algorithm_id}-{dataset.meta.dataset_id}-seed{config.seed}",
        algorithm_id=config.algorithm_id,
        dataset_id=dataset.meta.dataset_id,
        seed=config.seed,
    )
    trainer.pretrain()
    tensors = DatasetTensors(dataset)
    gen = torch_gen(derive_seed(config.seed, "batches"))
    for step in range(1, config.total_steps + 1):
        batch = tensors.sample(config.batch_size, gen)
        try:
            losses = trainer.update(batch, gen, step)
        except DivergenceError as exc:
            exc.history = history
            raise
        bad = {k: v for k, v in losses.items() if not np.isfinite(v)}
        if bad:
            exc = DivergenceError(f"{config.algorithm_id} diverged at step {step}: {bad}")
            exc.history = history
            raise exc
        if eval_hook is not None and step % config.eval_interval == 0:
            history.append(step, float(eval_hook(step, trainer.policy_handle())))
    return trainer.policy_handle(), history
