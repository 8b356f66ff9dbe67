"""Twin-delayed deterministic actor-critic with a direct behavior-cloning
penalty on the policy."""

from __future__ import annotations

import copy

import torch

from ..core.rng import derive_seed
from ..nets.modules import as_tensor
from ..nets.policies import DeterministicPolicyNet, TorchPolicy, make_deterministic_policy
from ..nets.qensemble import QEnsemble
from .common import Batch, ModelFreeTrainer, critic_loss, td_target


def td3bc_policy_loss(
    qe: QEnsemble,
    policy: DeterministicPolicyNet,
    states: torch.Tensor,
    dataset_actions: torch.Tensor,
    lam: float,
    bc_weight: float = 1.0,
    adaptive_scale: bool = False,
) -> torch.Tensor:
    """-lam * Q(s, pi(s)) + bc_weight * ||pi(s) - a||^2, batch-averaged.

    With adaptive_scale the value term is divided by the batch's mean
    |Q| (detached), making lam unitless; off by default."""
    actions = policy(states)
    q = qe.weighted_values(states, actions)
    scale = q.abs().mean().detach() if adaptive_scale else 1.0
    bc = ((actions - dataset_actions) ** 2).sum(dim=-1).mean()
    return -lam * (q / scale).mean() + bc_weight * bc


class TD3BCTrainer(ModelFreeTrainer):
    """Twin critics, delayed policy updates, and target-policy smoothing."""

    def __init__(self, dataset, config):
        super().__init__(dataset, config)
        self.qe = self.make_q_ensemble()
        self.policy = make_deterministic_policy(
            self.spec, hidden=config.hidden, seed=derive_seed(config.seed, "policy"),
            state_norm=self.state_norm,
        ).net
        self.target_policy = copy.deepcopy(self.policy)
        for p in self.target_policy.parameters():
            p.requires_grad_(False)
        self.q_opt = torch.optim.Adam(self.qe.trainable_parameters(), lr=config.q_lr)
        self.pi_opt = torch.optim.Adam(self.policy.parameters(), lr=config.policy_lr)
        self._last_pi_loss = 0.0

    def _smoothed_target_actions(self, next_states: torch.Tensor, gen: torch.Generator) -> torch.Tensor:
        with torch.no_grad():
            actions = self.target_policy(next_states)
            if self.config.td3bc_smoothing_std > 0.0:
                noise = torch.randn(actions.shape, dtype=actions.dtype, generator=gen)
                noise = (noise * self.config.td3bc_smoothing_std).clamp(
                    -self.config.td3bc_noise_clip, self.config.td3bc_noise_clip
                )
                lo = as_tensor(self.spec.action_low, actions)
                hi = as_tensor(self.spec.action_high, actions)
                actions = (actions + noise * (hi - lo) / 2.0).clamp(lo, hi)
        return actions

    def update(self, batch: Batch, gen: torch.Generator, step: int) -> dict[str, float]:
        cfg = self.config
        next_actions = self._smoothed_target_actions(batch.next_states, gen)
        targets = td_target(self.qe, batch.rewards, batch.next_states, next_actions, self.gamma)
        q_loss = critic_loss(self.qe, batch.states, batch.actions, targets)
        self.q_opt.zero_grad(set_to_none=True)
        q_loss.backward()
        self.q_opt.step()

        if step % cfg.td3bc_policy_delay == 0:
            pi_loss = td3bc_policy_loss(
                self.qe, self.policy, batch.states, batch.actions,
                cfg.td3bc_lambda, cfg.td3bc_bc_weight, cfg.td3bc_adaptive_scale,
            )
            self.pi_opt.zero_grad(set_to_none=True)
            self.q_opt.zero_grad(set_to_none=True)
            pi_loss.backward()
            self.pi_opt.step()
            self._last_pi_loss = pi_loss.item()
            self.qe.polyak_update(cfg.polyak)
            with torch.no_grad():
                for t, m in zip(self.target_policy.parameters(), self.policy.parameters()):
                    t.mul_(1.0 - cfg.polyak).add_(m, alpha=cfg.polyak)
        return {"q_loss": q_loss.item(), "policy_loss": self._last_pi_loss}

    def policy_handle(self) -> TorchPolicy:
        return TorchPolicy(self.policy)
