"""Policy networks (deterministic and tanh-Gaussian), their handles, and
the bounded perturbation network used for constrained action selection."""

from __future__ import annotations

import math

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as tf

from ..core.rng import torch_gen
from ..core.types import PolicyHandle
from ..errors import DivergenceError
from .modules import StateNorm, as_tensor, flat_params, mlp, np_noise, seeded_init_, set_flat_params

LOG_STD_MIN = -10.0
LOG_STD_MAX = 2.0


class _BoundedActionMixin:
    def _register_bounds(self, action_low, action_high, dtype):
        low = torch.as_tensor(np.array(action_low, dtype=np.float64), dtype=dtype)
        high = torch.as_tensor(np.array(action_high, dtype=np.float64), dtype=dtype)
        self.register_buffer("action_scale", (high - low) / 2.0)
        self.register_buffer("action_center", (high + low) / 2.0)

    def squash(self, pre_tanh: torch.Tensor) -> torch.Tensor:
        return torch.tanh(pre_tanh) * self.action_scale + self.action_center


class DeterministicPolicyNet(nn.Module, _BoundedActionMixin):
    """tanh-squashed feedforward policy, outputs inside the action box."""

    def __init__(self, state_dim, action_dim, hidden, action_low, action_high,
                 state_norm=None, dtype=torch.float32):
        super().__init__()
        self.state_dim = state_dim
        self.action_dim = action_dim
        self.hidden = tuple(hidden)
        self.norm = StateNorm(state_dim, *(state_norm or (None, None)), dtype=dtype)
        self.body = mlp(state_dim, self.hidden, action_dim)
        self._register_bounds(action_low, action_high, dtype)
        self.to(dtype)

    def forward(self, states: torch.Tensor) -> torch.Tensor:
        return self.squash(self.body(self.norm(states)))


class GaussianPolicyNet(nn.Module, _BoundedActionMixin):
    """tanh-squashed diagonal Gaussian policy.

    The network parameterizes the pre-squash mean and log-std; samples
    are reparameterized so gradients flow through the noise path.
    """

    def __init__(self, state_dim, action_dim, hidden, action_low, action_high,
                 state_norm=None, dtype=torch.float32):
        super().__init__()
        self.state_dim = state_dim
        self.action_dim = action_dim
        self.hidden = tuple(hidden)
        self.norm = StateNorm(state_dim, *(state_norm or (None, None)), dtype=dtype)
        self.body = mlp(state_dim, self.hidden, 2 * action_dim)
        self._register_bounds(action_low, action_high, dtype)
        self.to(dtype)

    def forward(self, states: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        out = self.body(self.norm(states))
        mu, log_std = out.chunk(2, dim=-1)
        return mu, torch.clamp(log_std, LOG_STD_MIN, LOG_STD_MAX)

    def rsample(self, states: torch.Tensor, noise: torch.Tensor | None = None,
                generator: torch.Generator | None = None):
        """Returns (action, pre_tanh); pass `noise` or `generator`."""
        mu, log_std = self.forward(states)
        if noise is None:
            noise = torch.randn(mu.shape, dtype=mu.dtype, generator=generator)
        pre_tanh = mu + log_std.exp() * noise
        return self.squash(pre_tanh), pre_tanh

    def log_prob(self, states: torch.Tensor, pre_tanh: torch.Tensor) -> torch.Tensor:
        """log-density of the squashed action identified by its pre-tanh value."""
        mu, log_std = self.forward(states)
        var = torch.exp(2.0 * log_std)
        gauss = -0.5 * ((pre_tanh - mu) ** 2 / var + 2.0 * log_std + math.log(2.0 * math.pi))
        # log|d tanh(u)/du| = 2(log 2 - u - softplus(-2u)), stable for large |u|
        squash_corr = 2.0 * (math.log(2.0) - pre_tanh - tf.softplus(-2.0 * pre_tanh))
        scale_corr = torch.log(self.action_scale)
        return (gauss - squash_corr - scale_corr).sum(dim=-1)

    def deterministic(self, states: torch.Tensor) -> torch.Tensor:
        mu, _ = self.forward(states)
        return self.squash(mu)


class PerturbationNet(nn.Module):
    """Bounded action correction: outputs lie in [-phi, +phi] elementwise."""

    def __init__(self, state_dim, action_dim, hidden, phi: float,
                 state_norm=None, dtype=torch.float32):
        super().__init__()
        if phi < 0:
            raise ValueError("phi must be >= 0")
        self.phi = float(phi)
        self.norm = StateNorm(state_dim, *(state_norm or (None, None)), dtype=dtype)
        self.body = mlp(state_dim + action_dim, tuple(hidden), action_dim)
        self.to(dtype)

    def forward(self, states: torch.Tensor, actions: torch.Tensor) -> torch.Tensor:
        return self.phi * torch.tanh(self.body(torch.cat([self.norm(states), actions], dim=-1)))


class _TorchHandleBase(PolicyHandle):
    def __init__(self, net: nn.Module):
        self.net = net

    def get_params(self) -> np.ndarray:
        return flat_params(self.net)

    def set_params(self, params: np.ndarray) -> None:
        set_flat_params(self.net, params)

    def _obs_tensor(self, obs) -> torch.Tensor:
        obs = np.asarray(obs, dtype=np.float64)
        if obs.ndim == 2:  # history window: memoryless nets read the newest state
            obs = obs[-1]
        return as_tensor(obs, self.net).unsqueeze(0)


class TorchPolicy(_TorchHandleBase):
    """Handle around a DeterministicPolicyNet."""

    kind = "deterministic"

    def act(self, obs, rng=None) -> np.ndarray:
        with torch.no_grad():
            return self.net(self._obs_tensor(obs)).squeeze(0).numpy().astype(np.float64)

    def to_checkpoint(self):
        net = self.net
        arch = {
            "state_dim": net.state_dim,
            "action_dim": net.action_dim,
            "hidden": list(net.hidden),
            "action_low": (net.action_center - net.action_scale).tolist(),
            "action_high": (net.action_center + net.action_scale).tolist(),
        }
        mean, std = net.norm.to_arrays()
        arrays = {"params": self.get_params(), "norm_mean": mean, "norm_std": std}
        return "deterministic_mlp", arch, arrays

    @classmethod
    def from_checkpoint(cls, arch: dict, arrays: dict) -> "TorchPolicy":
        net = DeterministicPolicyNet(
            arch["state_dim"], arch["action_dim"], tuple(arch["hidden"]),
            arch["action_low"], arch["action_high"],
            state_norm=(arrays["norm_mean"], arrays["norm_std"]),
        )
        handle = cls(net)
        handle.set_params(arrays["params"])
        return handle


class TorchGaussianPolicy(_TorchHandleBase):
    """Handle around a GaussianPolicyNet.

    `act` returns the deployment action (squashed mean); use
    `sample_action` for an explicit stochastic draw.
    """

    kind = "gaussian"

    def act(self, obs, rng=None) -> np.ndarray:
        with torch.no_grad():
            return self.net.deterministic(self._obs_tensor(obs)).squeeze(0).numpy().astype(np.float64)

    def sample_action(self, obs, rng: np.random.Generator) -> np.ndarray:
        t = self._obs_tensor(obs)
        with torch.no_grad():
            noise = np_noise(rng, (1, self.net.action_dim), self.net)
            action, _ = self.net.rsample(t, noise=noise)
        return action.squeeze(0).numpy().astype(np.float64)

    def action_stats(self, obs) -> tuple[np.ndarray, np.ndarray]:
        """Per-dimension pre-squash mean and sigma."""
        with torch.no_grad():
            mu, log_std = self.net(self._obs_tensor(obs))
        return mu.squeeze(0).numpy(), log_std.exp().squeeze(0).numpy()

    def to_checkpoint(self):
        net = self.net
        arch = {
            "state_dim": net.state_dim,
            "action_dim": net.action_dim,
            "hidden": list(net.hidden),
            "action_low": (net.action_center - net.action_scale).tolist(),
            "action_high": (net.action_center + net.action_scale).tolist(),
        }
        mean, std = net.norm.to_arrays()
        arrays = {"params": self.get_params(), "norm_mean": mean, "norm_std": std}
        return "gaussian_mlp", arch, arrays

    @classmethod
    def from_checkpoint(cls, arch: dict, arrays: dict) -> "TorchGaussianPolicy":
        net = GaussianPolicyNet(
            arch["state_dim"], arch["action_dim"], tuple(arch["hidden"]),
            arch["action_low"], arch["action_high"],
            state_norm=(arrays["norm_mean"], arrays["norm_std"]),
        )
        handle = cls(net)
        handle.set_params(arrays["params"])
        return handle


def make_deterministic_policy(spec, hidden=(256, 256), seed: int = 0, state_norm=None,
                              dtype=torch.float32) -> TorchPolicy:
    net = DeterministicPolicyNet(spec.state_dim, spec.action_dim, hidden,
                                 spec.action_low, spec.action_high,
                                 state_norm=state_norm, dtype=dtype)
    seeded_init_(net, torch_gen(seed))
    return TorchPolicy(net)


def make_gaussian_policy(spec, hidden=(256, 256), seed: int = 0, state_norm=None,
                         dtype=torch.float32) -> TorchGaussianPolicy:
    net = GaussianPolicyNet(spec.state_dim, spec.action_dim, hidden,
                            spec.action_low, spec.action_high,
                            state_norm=state_norm, dtype=dtype)
    seeded_init_(net, torch_gen(seed))
    return TorchGaussianPolicy(net)


def fit_gaussian_behavior(
    dataset,
    hidden=(256, 256),
    steps: int = 2000,
    batch_size: int = 256,
    lr: float = 1e-3,
    seed: int = 0,
) -> TorchGaussianPolicy:
    """Maximum-likelihood Gaussian model of the behavior policy.

    Fit by minimizing the negative log-density of dataset actions under a
    tanh-Gaussian conditioned on the state.
    """
    from .modules import norm_from_dataset

    gen = torch_gen(seed)
    net = GaussianPolicyNet(
        dataset.spec.state_dim, dataset.spec.action_dim, hidden,
        dataset.spec.action_low, dataset.spec.action_high,
        state_norm=norm_from_dataset(dataset),
    )
    seeded_init_(net, gen)
    states = as_tensor(dataset.states, net)
    actions = as_tensor(dataset.actions, net)
    # Invert the squashing once so log-densities can be evaluated pre-tanh.
    centered = (actions - net.action_center) / net.action_scale
    pre_tanh = torch.atanh(centered.clamp(-1.0 + 1e-6, 1.0 - 1e-6))

    opt = torch.optim.Adam(net.parameters(), lr=lr)
    n = states.shape[0]
    for step in range(steps):
        idx = torch.randint(0, n, (min(batch_size, n),), generator=gen)
        loss = -net.log_prob(states[idx], pre_tanh[idx]).mean()
        if not torch.isfinite(loss):
            raise DivergenceError(f"behavior model NLL non-finite at step {step}")
        opt.zero_grad(set_to_none=True)
        loss.backward()
        opt.step()
    return TorchGaussianPolicy(net)
