"""Batch-constrained Q-learning: a behavior VAE proposes candidate
actions, a bounded perturbation network adjusts them, and the critic
picks the best candidate."""

from __future__ import annotations

import numpy as np
import torch

from ..core.rng import derive_seed, np_rng, torch_gen
from ..core.types import PolicyHandle
from ..nets.checkpoint import register_policy_loader
from ..nets.modules import as_tensor, flat_params, np_noise, seeded_init_, set_flat_params
from ..nets.policies import PerturbationNet
from ..nets.qensemble import QEnsemble, TargetWeighting
from ..nets.vae import BehaviorVAE, VAEConfig, fit_behavior_vae
from .common import Batch, ModelFreeTrainer, critic_loss, td_target


def bcq_select_action(
    vae: BehaviorVAE,
    xi: PerturbationNet,
    qe: QEnsemble,
    states: torch.Tensor,
    n_samples: int,
    generator: torch.Generator | None = None,
    noise: torch.Tensor | None = None,
    action_low=None,
    action_high=None,
    use_target: bool = False,
) -> torch.Tensor:
    """Sample candidates from the VAE, perturb, and pick the Q-argmax.

    Ties break toward the lowest sample index so replays with the same
    noise are exact. `noise` has shape (batch, n_samples, latent_dim).
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    b = states.shape[0]
    if noise is None:
        noise = torch.randn(b, n_samples, vae.latent_dim, dtype=states.dtype, generator=generator)
    rep = states.unsqueeze(1).expand(b, n_samples, states.shape[1]).reshape(b * n_samples, -1)
    candidates = vae.sample_actions(rep, noise=noise.reshape(b * n_samples, -1))
    perturbed = candidates + xi(rep, candidates)
    if action_low is not None:
        lo = as_tensor(action_low, states)
        hi = as_tensor(action_high, states)
        perturbed = torch.clamp(perturbed, lo, hi)
    values = qe.weighted_target_values(rep, perturbed) if use_target else qe.weighted_values(rep, perturbed)
    values = values.reshape(b, n_samples)
    top = values.max(dim=1, keepdim=True).values
    idx_grid = torch.arange(n_samples).unsqueeze(0).expand(b, n_samples)
    pick = torch.where(values >= top, idx_grid, n_samples).min(dim=1).values
    return perturbed.reshape(b, n_samples, -1)[torch.arange(b), pick]


class BCQPolicy(PolicyHandle):
    """Deployment policy: per-step VAE sampling + perturbation + argmax.

    Stochastic through the candidate draw, so `act` consumes the rollout
    generator."""

    kind = "stochastic"

    def __init__(self, vae: BehaviorVAE, xi: PerturbationNet, qe: QEnsemble,
                 n_samples: int, action_low, action_high):
        self.vae = vae
        self.xi = xi
        self.qe = qe
        self.n_samples = n_samples
        self.action_low = np.asarray(action_low, dtype=np.float64)
        self.action_high = np.asarray(action_high, dtype=np.float64)

    def act(self, obs, rng: np.random.Generator | None = None) -> np.ndarray:
        obs = np.asarray(obs, dtype=np.float64)
        if obs.ndim == 2:
            obs = obs[-1]
        states = as_tensor(obs, self.vae).unsqueeze(0)
        rng = rng if rng is not None else np_rng(0)
        noise = np_noise(rng, (1, self.n_samples, self.vae.latent_dim), self.vae)
        with torch.no_grad():
            action = bcq_select_action(
                self.vae, self.xi, self.qe, states, self.n_samples,
                noise=noise, action_low=self.action_low, action_high=self.action_high,
            )
        return action.squeeze(0).numpy().astype(np.float64)

    def get_params(self) -> np.ndarray:
        return np.concatenate([flat_params(self.vae), flat_params(self.xi), flat_params(self.qe)])

    def to_checkpoint(self):
        arch = {
            "state_dim": self.vae.state_dim,
            "action_dim": self.vae.action_dim,
            "latent_dim": self.vae.latent_dim,
            "vae_hidden": list(self.vae.hidden),
            "latent_clip": self.vae.latent_clip,
            "n_samples": self.n_samples,
            "phi": self.xi.phi,
            "xi_hidden": [m.out_features for m in self.xi.body if hasattr(m, "out_features")][:-1],
            "q_members": self.qe.n_members,
            "q_hidden": [m.out_features for m in self.qe.members[0] if hasattr(m, "out_features")][:-1],
            "weighting": self.qe.weighting.kind,
            "weighting_lam": self.qe.weighting.lam,
            "action_low": self.action_low.tolist(),
            "action_high": self.action_high.tolist(),
        }
        mean, std = self.vae.norm.to_arrays()
        arrays = {
            "vae_params": flat_params(self.vae),
            "xi_params": flat_params(self.xi),
            "q_params": flat_params(self.qe),
            "norm_mean": mean,
            "norm_std": std,
        }
        return "bcq", arch, arrays

    @classmethod
    def from_checkpoint(cls, arch: dict, arrays: dict) -> "BCQPolicy":
        norm = (arrays["norm_mean"], arrays["norm_std"])
        vae = BehaviorVAE(
            arch["state_dim"], arch["action_dim"], arch["latent_dim"],
            tuple(arch["vae_hidden"]), arch["action_low"], arch["action_high"],
            latent_clip=arch["latent_clip"], state_norm=norm,
        )
        xi = PerturbationNet(arch["state_dim"], arch["action_dim"], tuple(arch["xi_hidden"]),
                             arch["phi"], state_norm=norm)
        qe = QEnsemble(
            arch["state_dim"], arch["action_dim"], arch["q_members"], tuple(arch["q_hidden"]),
            TargetWeighting(arch["weighting"], arch["weighting_lam"]), state_norm=norm,
        )
        set_flat_params(vae, arrays["vae_params"])
        set_flat_params(xi, arrays["xi_params"])
        set_flat_params(qe, arrays["q_params"])
        return cls(vae, xi, qe, arch["n_samples"], arch["action_low"], arch["action_high"])


register_policy_loader("bcq", BCQPolicy.from_checkpoint)


class BCQTrainer(ModelFreeTrainer):
    def __init__(self, dataset, config):
        super().__init__(dataset, config)
        self.qe = self.make_q_ensemble()
        self.xi = PerturbationNet(
            self.spec.state_dim, self.spec.action_dim, config.hidden, config.bcq_phi,
            state_norm=self.state_norm,
        )
        seeded_init_(self.xi, torch_gen(derive_seed(config.seed, "xi")))
        self.vae: BehaviorVAE | None = None
        self.q_opt = torch.optim.Adam(self.qe.trainable_parameters(), lr=config.q_lr)
        self.xi_opt = torch.optim.Adam(self.xi.parameters(), lr=config.policy_lr)

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
        with torch.no_grad():
            next_actions = bcq_select_action(
                self.vae, self.xi, self.qe, batch.next_states, cfg.bcq_n_samples,
                generator=gen, action_low=self.spec.action_low, action_high=self.spec.action_high,
                use_target=True,
            )
        targets = td_target(self.qe, batch.rewards, batch.next_states, next_actions, self.gamma)
        q_loss = critic_loss(self.qe, batch.states, batch.actions, targets)
        self.q_opt.zero_grad(set_to_none=True)
        q_loss.backward()
        self.q_opt.step()

        noise = torch.randn(batch.states.shape[0], self.vae.latent_dim,
                            dtype=batch.states.dtype, generator=gen)
        with torch.no_grad():
            sampled = self.vae.sample_actions(batch.states, noise=noise)
        perturbed = sampled + self.xi(batch.states, sampled)
        perturbed = torch.clamp(
            perturbed, as_tensor(self.spec.action_low, perturbed), as_tensor(self.spec.action_high, perturbed)
        )
        xi_loss = -self.qe.weighted_values(batch.states, perturbed).mean()
        self.xi_opt.zero_grad(set_to_none=True)
        self.q_opt.zero_grad(set_to_none=True)
        xi_loss.backward()
        self.xi_opt.step()

        self.qe.polyak_update(self.config.polyak)
        return {"q_loss": q_loss.item(), "xi_loss": xi_loss.item()}

    def policy_handle(self) -> BCQPolicy:
        return BCQPolicy(
            self.vae, self.xi, self.qe, self.config.bcq_n_samples,
            self.spec.action_low, self.spec.action_high,
        )
