"""Behavior-regularized actor-critic (value-penalty variant): a KL term
against a learned Gaussian behavior model enters both the Q target and
the policy objective."""

from __future__ import annotations

import math

import torch

from ..core.rng import derive_seed
from ..nets.policies import GaussianPolicyNet, TorchGaussianPolicy, fit_gaussian_behavior, make_gaussian_policy
from ..nets.qensemble import QEnsemble
from .common import Batch, ModelFreeTrainer, critic_loss, sample_policy_actions
from ..errors import DivergenceError


def _gaussian_log_density(u: torch.Tensor, mu: torch.Tensor, log_std: torch.Tensor) -> torch.Tensor:
    var = torch.exp(2.0 * log_std)
    return (-0.5 * ((u - mu) ** 2 / var + 2.0 * log_std + math.log(2.0 * math.pi))).sum(dim=-1)


def kl_estimate(
    p_net: GaussianPolicyNet,
    q_net: GaussianPolicyNet,
    states: torch.Tensor,
    n_samples: int,
    generator: torch.Generator | None = None,
    noise: torch.Tensor | None = None,
) -> torch.Tensor:
    """Monte-Carlo KL(p || q) per state from n_samples draws of p.

    Densities are evaluated on the pre-squash Gaussians; the squashing is
    an invertible map shared by both policies, so the divergence between
    the squashed action distributions is unchanged.
    """
    b = states.shape[0]
    if noise is None:
        noise = torch.randn(b, n_samples, p_net.action_dim, dtype=states.dtype, generator=generator)
    rep = states.unsqueeze(1).expand(b, n_samples, states.shape[1]).reshape(-1, states.shape[1])
    mu_p, log_std_p = p_net(rep)
    u = mu_p + log_std_p.exp() * noise.reshape(-1, p_net.action_dim)
    mu_q, log_std_q = q_net(rep)
    logp = _gaussian_log_density(u, mu_p, log_std_p)
    logq = _gaussian_log_density(u, mu_q, log_std_q)
    return (logp - logq).reshape(b, n_samples).mean(dim=1)


def gaussian_kl_closed_form(mu_p, sigma_p, mu_q, sigma_q) -> torch.Tensor:
    """Exact diagonal-Gaussian KL(p || q), the oracle for kl_estimate."""
    var_p, var_q = sigma_p**2, sigma_q**2
    return (
        torch.log(sigma_q / sigma_p) + (var_p + (mu_p - mu_q) ** 2) / (2.0 * var_q) - 0.5
    ).sum(dim=-1)


def brac_v_losses(
    qe: QEnsemble,
    policy: GaussianPolicyNet,
    behavior: GaussianPolicyNet,
    batch: Batch,
    alpha: float,
    gamma: float,
    n_kl_samples: int = 4,
    kl_direction: str = "behavior_policy",
    generator: torch.Generator | None = None,
) -> tuple[torch.Tensor, torch.Tensor]:
    """Q and policy losses with the KL penalty in both places.

    Q target: r + gamma * (W(Q_t(s', a'~pi)) - alpha * KL(s')).
    Policy objective: W(Q(s, a~pi)) - alpha * KL(s), maximized.
    """
    if kl_direction not in ("behavior_policy", "policy_behavior"):
        raise ValueError(f"unknown kl_direction {kl_direction!r}")

    def kl(states, differentiable: bool):
        p, q = (behavior, policy) if kl_direction == "behavior_policy" else (policy, behavior)
        if differentiable:
            return kl_estimate(p, q, states, n_kl_samples, generator=generator)
        with torch.no_grad():
            return kl_estimate(p, q, states, n_kl_samples, generator=generator)

    b = batch.next_states.shape[0]
    with torch.no_grad():
        noise = torch.randn(b, policy.action_dim, dtype=batch.next_states.dtype, generator=generator)
        next_actions, _ = policy.rsample(batch.next_states, noise=noise)
        kl_next = kl(batch.next_states, differentiable=False) if alpha != 0.0 else 0.0
        target_q = qe.weighted_target_values(batch.next_states, next_actions)
        targets = batch.rewards + gamma * (target_q - alpha * kl_next)
    if not torch.isfinite(targets).all():
        raise DivergenceError("non-finite regularized TD target")
    q_loss = critic_loss(qe, batch.states, batch.actions, targets)

    rep, pi_actions = sample_policy_actions(policy, batch.states, 1, generator=generator)
    value_term = qe.weighted_values(rep, pi_actions).mean()
    kl_term = kl(batch.states, differentiable=True).mean() if alpha != 0.0 else 0.0
    policy_loss = -(value_term - alpha * kl_term)
    return q_loss, policy_loss


class BRACTrainer(ModelFreeTrainer):
    def __init__(self, dataset, config):
        super().__init__(dataset, config)
        self.qe = self.make_q_ensemble()
        self.policy = make_gaussian_policy(
            self.spec, hidden=config.hidden, seed=derive_seed(config.seed, "policy"),
            state_norm=self.state_norm,
        ).net
        self.behavior: GaussianPolicyNet | None = None
        self.q_opt = torch.optim.Adam(self.qe.trainable_parameters(), lr=config.q_lr)
        self.pi_opt = torch.optim.Adam(self.policy.parameters(), lr=config.policy_lr)

    def pretrain(self):
        cfg = self.config
        self.behavior = fit_gaussian_behavior(
            self.dataset, hidden=cfg.hidden, steps=cfg.behavior_steps,
            batch_size=cfg.batch_size, lr=cfg.behavior_lr, seed=derive_seed(cfg.seed, "behavior"),
        ).net
        for p in self.behavior.parameters():
            p.requires_grad_(False)

    def update(self, batch: Batch, gen: torch.Generator, step: int) -> dict[str, float]:
        cfg = self.config
        q_loss, policy_loss = brac_v_losses(
            self.qe, self.policy, self.behavior, batch, cfg.brac_alpha, self.gamma,
            n_kl_samples=cfg.brac_n_kl_samples, kl_direction=cfg.brac_kl_direction, generator=gen,
        )
        # Policy first: its graph reads the pre-step critic weights.
        self.pi_opt.zero_grad(set_to_none=True)
        self.q_opt.zero_grad(set_to_none=True)
        policy_loss.backward()
        self.pi_opt.step()

        self.q_opt.zero_grad(set_to_none=True)
        q_loss.backward()
        self.q_opt.step()

        self.qe.polyak_update(cfg.polyak)
        return {"q_loss": q_loss.item(), "policy_loss": policy_loss.item()}

    def policy_handle(self) -> TorchGaussianPolicy:
        return TorchGaussianPolicy(self.policy)
