"""Off-policy stochastic actor-critic improvement over a mixed buffer.

The same machinery serves both hybrid modes: with a positive entropy
weight it is a soft actor-critic step; with entropy weight zero it
degenerates to the plain actor-critic updates shared with the model-free
module, and matches them loss-for-loss on identical batches.
"""

from __future__ import annotations

import numpy as np
import torch

from ..modelfree.common import (
    Batch,
    critic_loss,
    plain_gaussian_actor_loss,
    plain_td_q_loss,
    td_target,
)
from ..nets.policies import GaussianPolicyNet
from ..nets.qensemble import QEnsemble
from .buffer import ReplayBuffer


def soft_losses(
    qe: QEnsemble,
    policy: GaussianPolicyNet,
    batch: Batch,
    gamma: float,
    entropy_weight: float,
    generator: torch.Generator | None = None,
) -> tuple[torch.Tensor, torch.Tensor]:
    """Entropy-regularized critic and actor losses.

    entropy_weight == 0 routes through the shared plain losses exactly.
    """
    if entropy_weight == 0.0:
        q_loss = plain_td_q_loss(qe, policy, batch, gamma, generator=generator)
        pi_loss = plain_gaussian_actor_loss(qe, policy, batch.states, 1, generator=generator)
        return q_loss, pi_loss

    b = batch.next_states.shape[0]
    with torch.no_grad():
        noise = torch.randn(b, policy.action_dim, dtype=batch.next_states.dtype, generator=generator)
        next_actions, pre_tanh = policy.rsample(batch.next_states, noise=noise)
        log_pi_next = policy.log_prob(batch.next_states, pre_tanh)
        soft_rewards = batch.rewards - gamma * entropy_weight * log_pi_next
    targets = td_target(qe, soft_rewards, batch.next_states, next_actions, gamma)
    q_loss = critic_loss(qe, batch.states, batch.actions, targets)

    noise = torch.randn(b, policy.action_dim, dtype=batch.states.dtype, generator=generator)
    actions, pre_tanh = policy.rsample(batch.states, noise=noise)
    log_pi = policy.log_prob(batch.states, pre_tanh)
    pi_loss = (entropy_weight * log_pi - qe.weighting.combine(qe.values(batch.states, actions))).mean()
    return q_loss, pi_loss


def offpolicy_improve(
    buffer: ReplayBuffer,
    policy: GaussianPolicyNet,
    qe: QEnsemble,
    pi_opt: torch.optim.Optimizer,
    q_opt: torch.optim.Optimizer,
    n_steps: int,
    batch_size: int,
    rho_real: float,
    gamma: float,
    entropy_weight: float,
    polyak: float,
    rng: np.random.Generator,
    gen: torch.Generator,
) -> dict[str, float]:
    """Run n improvement steps on mixed real/synthetic batches."""
    if len(buffer) == 0:
        raise ValueError("buffer is empty")
    last = {"q_loss": 0.0, "policy_loss": 0.0}
    for _ in range(n_steps):
        batch = buffer.sample(batch_size, rho_real, rng)
        q_loss, pi_loss = soft_losses(qe, policy, batch, gamma, entropy_weight, generator=gen)
        # Policy first: its graph reads the pre-step critic weights.
        pi_opt.zero_grad(set_to_none=True)
        q_opt.zero_grad(set_to_none=True)
        pi_loss.backward()
        pi_opt.step()

        q_opt.zero_grad(set_to_none=True)
        q_loss.backward()
        q_opt.step()

        qe.polyak_update(polyak)
        last = {"q_loss": q_loss.item(), "policy_loss": pi_loss.item()}
    return last
