"""Actor-critic with an MMD penalty keeping the policy's action
distribution near the behavior model's."""

from __future__ import annotations

import torch

from ..core.rng import derive_seed
from ..nets.policies import GaussianPolicyNet, TorchGaussianPolicy, make_gaussian_policy
from ..nets.qensemble import QEnsemble
from ..nets.vae import BehaviorVAE, VAEConfig, fit_behavior_vae
from .common import Batch, ModelFreeTrainer, critic_loss, plain_td_q_loss, td_target
from .mmd import mmd_batched


def bear_policy_loss(
    qe: QEnsemble,
    policy: GaussianPolicyNet,
    vae: BehaviorVAE,
    states: torch.Tensor,
    lam: float,
    n_policy_samples: int = 20,
    n_vae_samples: int = 20,
    kernel: str = "gaussian",
    bandwidth: float = 1.0,
    generator: torch.Generator | None = None,
) -> torch.Tensor:
    """-E[W(Q(s, a~pi))] + lam * MMD^2(pi samples, VAE samples).

    Policy samples are reparameterized, so the penalty and the value term
    both carry gradients into the policy.
    """
    b = states.shape[0]
    noise = torch.randn(b, n_policy_samples, policy.action_dim, dtype=states.dtype, generator=generator)
    rep = states.unsqueeze(1).expand(b, n_policy_samples, states.shape[1]).reshape(-1, states.shape[1])
    pi_actions, _ = policy.rsample(rep, noise=noise.reshape(-1, policy.action_dim))
    value_term = qe.weighted_values(rep, pi_actions).mean()
    if lam == 0.0:
        return -value_term

    z = torch.randn(b, n_vae_samples, vae.latent_dim, dtype=states.dtype, generator=generator)
    rep_v = states.unsqueeze(1).expand(b, n_vae_samples, states.shape[1]).reshape(-1, states.shape[1])
    with torch.no_grad():
        vae_actions = vae.sample_actions(rep_v, noise=z.reshape(-1, vae.latent_dim))
    penalty = mmd_batched(
        pi_actions.reshape(b, n_policy_samples, -1),
        vae_actions.reshape(b, n_vae_samples, -1),
        kernel=kernel,
        bandwidth=bandwidth,
    ).mean()
    return -value_term + lam * penalty


class BEARTrainer(ModelFreeTrainer):
    def __init__(self, dataset, config):
        super().__init__(dataset, config)
        self.qe = self.make_q_ensemble()
        self.policy = make_gaussian_policy(
            self.spec, hidden=config.hidden, seed=derive_seed(config.seed, "policy"),
            state_norm=self.state_norm,
        ).net
        self.vae: BehaviorVAE | None = None
        self.q_opt = torch.optim.Adam(self.qe.trainable_parameters(), lr=config.q_lr)
        self.pi_opt = torch.optim.Adam(self.policy.parameters(), lr=config.policy_lr)

    def pretrain(self):
        cfg = self.config
        self.vae = fit_behavior_vae(
            self.dataset,
            VAEConfig(
                latent_dim=cfg.vae_latent_dim, hidden=cfg.vae_hidden, kl_weight=cfg.vae_kl_weight,
                steps=cfg.vae_steps, batch_size=cfg.batch_size, lr=cfg.vae_lr,
                seed=derive_seed(cfg.seed, "vae"),
            ),
        )

    def update(self, batch: Batch, gen: torch.Generator, step: int) -> dict[str, float]:
        cfg = self.config
        q_loss = plain_td_q_loss(self.qe, self.policy, batch, self.gamma, generator=gen)
        self.q_opt.zero_grad(set_to_none=True)
        q_loss.backward()
        self.q_opt.step()

        pi_loss = bear_policy_loss(
            self.qe, self.policy, self.vae, batch.states, cfg.bear_lambda,
            n_policy_samples=cfg.bear_n_policy_samples, n_vae_samples=cfg.bear_n_vae_samples,
            kernel=cfg.bear_kernel, bandwidth=cfg.bear_bandwidth, generator=gen,
        )
        self.pi_opt.zero_grad(set_to_none=True)
        self.q_opt.zero_grad(set_to_none=True)
        pi_loss.backward()
        self.pi_opt.step()

        self.qe.polyak_update(cfg.polyak)
        return {"q_loss": q_loss.item(), "policy_loss": pi_loss.item()}

    def policy_handle(self) -> TorchGaussianPolicy:
        return TorchGaussianPolicy(self.policy)
