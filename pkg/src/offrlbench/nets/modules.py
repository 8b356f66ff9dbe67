"""Shared network building blocks with generator-seeded initialization.

All parameter initialization goes through an explicit torch.Generator so
training runs are reproducible regardless of what else has touched the
global RNG state.
"""

from __future__ import annotations

import numpy as np
import torch
import torch.nn as nn


def mlp(in_dim: int, hidden: tuple[int, ...], out_dim: int, activation=nn.ReLU) -> nn.Sequential:
    layers: list[nn.Module] = []
    prev = in_dim
    for width in hidden:
        layers.append(nn.Linear(prev, width))
        layers.append(activation())
        prev = width
    layers.append(nn.Linear(prev, out_dim))
    return nn.Sequential(*layers)


def seeded_init_(module: nn.Module, gen: torch.Generator) -> nn.Module:
    """Re-initialize Linear and GRUCell parameters from a generator.

    Mirrors the default torch scheme (uniform +-1/sqrt(fan_in)), but with
    all draws taken from `gen` in a fixed iteration order.
    """
    with torch.no_grad():
        for sub in module.modules():
            if isinstance(sub, nn.Linear):
                bound = 1.0 / np.sqrt(sub.in_features)
                sub.weight.uniform_(-bound, bound, generator=gen)
                if sub.bias is not None:
                    sub.bias.uniform_(-bound, bound, generator=gen)
            elif isinstance(sub, nn.GRUCell):
                bound = 1.0 / np.sqrt(sub.hidden_size)
                for param in sub.parameters():
                    param.uniform_(-bound, bound, generator=gen)
    return module


def flat_params(module: nn.Module) -> np.ndarray:
    with torch.no_grad():
        return nn.utils.parameters_to_vector(module.parameters()).detach().cpu().numpy().copy()


def set_flat_params(module: nn.Module, values: np.ndarray) -> None:
    expected = sum(p.numel() for p in module.parameters())
    values = np.asarray(values).reshape(-1)
    if values.size != expected:
        raise ValueError(f"parameter vector has {values.size} entries, module needs {expected}")
    ref = next(module.parameters())
    with torch.no_grad():
        nn.utils.vector_to_parameters(
            torch.as_tensor(values, dtype=ref.dtype, device=ref.device), module.parameters()
        )


def as_tensor(x, like: nn.Module | torch.Tensor) -> torch.Tensor:
    dtype = like.dtype if isinstance(like, torch.Tensor) else next(like.parameters()).dtype
    arr = np.asarray(x)
    if not arr.flags.writeable:  # frozen container arrays: torch needs a copy
        arr = arr.copy()
    return torch.as_tensor(arr, dtype=dtype)


def np_noise(rng: np.random.Generator, shape, like: nn.Module | torch.Tensor) -> torch.Tensor:
    """Standard-normal noise drawn from a numpy generator as a tensor.

    Used at evaluation time so the torch training stream is never
    consumed outside training steps.
    """
    return as_tensor(rng.standard_normal(shape), like)


class StateNorm(nn.Module):
    """Fixed affine input standardization: (s - mean) / std.

    Raw industrial observables live on wildly different scales; every
    state-consuming network standardizes with dataset statistics frozen
    at construction time (identity by default).
    """

    def __init__(self, state_dim: int, mean=None, std=None, dtype=torch.float32):
        super().__init__()
        mean = np.zeros(state_dim) if mean is None else np.array(mean, dtype=np.float64)
        std = np.ones(state_dim) if std is None else np.array(std, dtype=np.float64)
        if mean.shape != (state_dim,) or std.shape != (state_dim,):
            raise ValueError("state normalizer shape mismatch")
        if np.any(std <= 0):
            raise ValueError("state normalizer std must be positive")
        self.register_buffer("mean", torch.as_tensor(mean, dtype=dtype))
        self.register_buffer("std", torch.as_tensor(std, dtype=dtype))

    def forward(self, states: torch.Tensor) -> torch.Tensor:
        return (states - self.mean) / self.std

    def to_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        return self.mean.numpy().astype(np.float64), self.std.numpy().astype(np.float64)


def norm_from_dataset(dataset) -> tuple[np.ndarray, np.ndarray]:
    """State mean/std (floored) of a dataset, for net constructors."""
    from ..core.stats import SIGMA_FLOOR

    mean = dataset.states.mean(axis=0)
    std = np.maximum(dataset.states.std(axis=0), SIGMA_FLOOR)
    return mean, std
