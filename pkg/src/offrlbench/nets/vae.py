"""Variational autoencoder model of the behavior policy.

Encodes (state, action) pairs into a diagonal-Gaussian latent and
decodes actions conditioned on the state, so it can both sample likely
actions for a state and score how reconstructable a candidate action is.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch
import torch.nn as nn

from ..core.rng import torch_gen
from ..core.types import Dataset
from ..errors import DivergenceError
from .modules import StateNorm, as_tensor, mlp, norm_from_dataset, seeded_init_


@dataclass
class VAEConfig:
    latent_dim: int | None = None  # default: 2 * action_dim
    hidden: tuple[int, ...] = (256, 256)
    kl_weight: float = 0.5
    latent_clip: float = 2.5
    steps: int = 3000
    batch_size: int = 256
    lr: float = 1e-3
    seed: int = 0

    def __post_init__(self):
        self.hidden = tuple(self.hidden)


class BehaviorVAE(nn.Module):
    def __init__(self, state_dim, action_dim, latent_dim, hidden, action_low, action_high,
                 kl_weight=0.5, latent_clip=2.5, state_norm=None, dtype=torch.float32):
        super().__init__()
        self.state_dim = state_dim
        self.action_dim = action_dim
        self.latent_dim = latent_dim
        self.hidden = tuple(hidden)
        self.kl_weight = kl_weight
        self.latent_clip = latent_clip
        self.norm = StateNorm(state_dim, *(state_norm or (None, None)), dtype=dtype)
        self.encoder = mlp(state_dim + action_dim, self.hidden, 2 * latent_dim)
        self.decoder = mlp(state_dim + latent_dim, self.hidden, action_dim)
        low = torch.as_tensor(np.array(action_low, dtype=np.float64), dtype=dtype)
        high = torch.as_tensor(np.array(action_high, dtype=np.float64), dtype=dtype)
        self.register_buffer("action_scale", (high - low) / 2.0)
        self.register_buffer("action_center", (high + low) / 2.0)
        self.to(dtype)

    def encode(self, states, actions):
        out = self.encoder(torch.cat([self.norm(states), actions], dim=-1))
        mu, log_var = out.chunk(2, dim=-1)
        return mu, torch.clamp(log_var, -20.0, 10.0)

    def decode(self, states, latents):
        raw = self.decoder(torch.cat([self.norm(states), latents], dim=-1))
        return torch.tanh(raw) * self.action_scale + self.action_center

    def reconstruct(self, states, actions) -> torch.Tensor:
        """Deterministic reconstruction through the latent mean, so the
        result is a pure function of (s, a) given fixed weights."""
        mu, _ = self.encode(states, actions)
        return self.decode(states, mu)

    def sample_actions(self, states, noise: torch.Tensor | None = None,
                       generator: torch.Generator | None = None) -> torch.Tensor:
        """Decode prior samples (clipped standard normal latents)."""
        if noise is None:
            noise = torch.randn(states.shape[0], self.latent_dim,
                                dtype=states.dtype, generator=generator)
        z = noise.clamp(-self.latent_clip, self.latent_clip)
        return self.decode(states, z)

    def elbo_terms(self, states, actions, noise=None, generator=None):
        """Per-sample (reconstruction MSE, KL to the unit-Gaussian prior)."""
        mu, log_var = self.encode(states, actions)
        if noise is None:
            noise = torch.randn(mu.shape, dtype=mu.dtype, generator=generator)
        z = mu + torch.exp(0.5 * log_var) * noise
        recon = self.decode(states, z)
        recon_err = ((recon - actions) ** 2).sum(dim=-1)
        kl = 0.5 * (mu ** 2 + log_var.exp() - log_var - 1.0).sum(dim=-1)
        return recon_err, kl


def fit_behavior_vae(dataset: Dataset, config: VAEConfig | None = None) -> BehaviorVAE:
    config = config or VAEConfig()
    latent = config.latent_dim or 2 * dataset.spec.action_dim
    gen = torch_gen(config.seed)
    vae = BehaviorVAE(
        dataset.spec.state_dim,
        dataset.spec.action_dim,
        latent,
        config.hidden,
        dataset.spec.action_low,
        dataset.spec.action_high,
        kl_weight=config.kl_weight,
        latent_clip=config.latent_clip,
        state_norm=norm_from_dataset(dataset),
    )
    seeded_init_(vae, gen)
    states = as_tensor(dataset.states, vae)
    actions = as_tensor(dataset.actions, vae)
    opt = torch.optim.Adam(vae.parameters(), lr=config.lr)
    n = states.shape[0]
    for step in range(config.steps):
        idx = torch.randint(0, n, (min(config.batch_size, n),), generator=gen)
        recon, kl = vae.elbo_terms(states[idx], actions[idx], generator=gen)
        loss = recon.mean() + config.kl_weight * kl.mean()
        if not torch.isfinite(loss):
            raise DivergenceError(
                f"behavior VAE diverged at step {step}: recon={recon.mean().item()}, kl={kl.mean().item()}"
            )
        opt.zero_grad(set_to_none=True)
        loss.backward()
        opt.step()
    return vae


def vae_penalty(vae: BehaviorVAE, states, actions):
    """Squared distance between actions and their reconstructions.

    Accepts tensors (returns per-sample tensor, differentiable) or numpy
    arrays / single pairs (returns numpy / float).
    """
    if isinstance(states, torch.Tensor):
        return ((actions - vae.reconstruct(states, actions)) ** 2).sum(dim=-1)
    s = np.atleast_2d(np.asarray(states, dtype=np.float64))
    a = np.atleast_2d(np.asarray(actions, dtype=np.float64))
    with torch.no_grad():
        pen = vae_penalty(vae, as_tensor(s, vae), as_tensor(a, vae)).numpy()
    if np.asarray(states).ndim == 1:
        return float(pen[0])
    return pen.astype(np.float64)
