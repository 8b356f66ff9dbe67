"""Conservative Q-learning: the critic loss pushes values down on
policy-chosen actions and up on dataset actions, on top of the TD term."""

from __future__ import annotations

import torch

from ..core.rng import derive_seed
from ..nets.policies import GaussianPolicyNet, TorchGaussianPolicy, make_gaussian_policy
from ..nets.qensemble import QEnsemble
from .common import (
    Batch,
    ModelFreeTrainer,
    critic_loss,
    plain_gaussian_actor_loss,
    td_target,
)


def cql_q_loss(
    qe: QEnsemble,
    policy: GaussianPolicyNet,
    batch: Batch,
    alpha: float,
    gamma: float,
    n_action_samples: int = 4,
    generator: torch.Generator | None = None,
) -> torch.Tensor:
    """alpha * (E_{a~pi}[Q] - E_{a~D}[Q]) + half mean-squared TD error.

    The conservative gap is averaged over ensemble members, so each
    member is pushed down on policy actions and up on dataset actions.
    """
    b = batch.states.shape[0]
    with torch.no_grad():
        noise = torch.randn(b, policy.action_dim, dtype=batch.states.dtype, generator=generator)
        next_actions, _ = policy.rsample(batch.next_states, noise=noise)
    targets = td_target(qe, batch.rewards, batch.next_states, next_actions, gamma)
    loss = critic_loss(qe, batch.states, batch.actions, targets)
    if alpha == 0.0:
        return loss

    sample_noise = torch.randn(b, n_action_samples, policy.action_dim,
                               dtype=batch.states.dtype, generator=generator)
    rep = batch.states.unsqueeze(1).expand(b, n_action_samples, -1).reshape(b * n_action_samples, -1)
    with torch.no_grad():
        pi_actions, _ = policy.rsample(rep, noise=sample_noise.reshape(-1, policy.action_dim))
    q_pi = qe.values(rep, pi_actions).mean()
    q_data = qe.values(batch.states, batch.actions).mean()
    return loss + alpha * (q_pi - q_data)


class CQLTrainer(ModelFreeTrainer):
    def __init__(self, dataset, config):
        super().__init__(dataset, config)
        self.qe = self.make_q_ensemble()
        self.policy = make_gaussian_policy(
            self.spec, hidden=config.hidden, seed=derive_seed(config.seed, "policy"),
            state_norm=self.state_norm,
        ).net
        self.q_opt = torch.optim.Adam(self.qe.trainable_parameters(), lr=config.q_lr)
        self.pi_opt = torch.optim.Adam(self.policy.parameters(), lr=config.policy_lr)

    def update(self, batch: Batch, gen: torch.Generator, step: int) -> dict[str, float]:
        cfg = self.config
        q_loss = cql_q_loss(
            self.qe, self.policy, batch, cfg.cql_alpha, self.gamma,
            n_action_samples=cfg.cql_n_action_samples, generator=gen,
        )
        self.q_opt.zero_grad(set_to_none=True)
        q_loss.backward()
        self.q_opt.step()

        pi_loss = plain_gaussian_actor_loss(self.qe, self.policy, batch.states, 1, generator=gen)
        self.pi_opt.zero_grad(set_to_none=True)
        self.q_opt.zero_grad(set_to_none=True)
        pi_loss.backward()
        self.pi_opt.step()

        self.qe.polyak_update(cfg.polyak)
        return {"q_loss": q_loss.item(), "policy_loss": pi_loss.item()}

    def policy_handle(self) -> TorchGaussianPolicy:
        return TorchGaussianPolicy(self.policy)
