"""Replay store mixing real and synthetic transitions."""

from __future__ import annotations

import numpy as np
import torch

from ..modelfree.common import Batch


class _Ring:
    def __init__(self, capacity: int, state_dim: int, action_dim: int):
        self.capacity = capacity
        self.states = np.zeros((capacity, state_dim))
        self.actions = np.zeros((capacity, action_dim))
        self.rewards = np.zeros(capacity)
        self.next_states = np.zeros((capacity, state_dim))
        self.size = 0
        self.head = 0

    def add(self, s, a, r, sp):
        i = self.head
        self.states[i] = s
        self.actions[i] = a
        self.rewards[i] = r
        self.next_states[i] = sp
        self.head = (self.head + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)


class ReplayBuffer:
    """Bounded FIFO transition store with a real/synthetic provenance tag.

    Real and synthetic transitions live in separate rings so fresh
    synthetic data ages out without evicting the original dataset.
    Sampling draws each row from the real ring with probability rho_real.
    """

    def __init__(self, state_dim: int, action_dim: int,
                 capacity_real: int = 200_000, capacity_synthetic: int = 50_000):
        if capacity_real < 1 or capacity_synthetic < 1:
            raise ValueError("capacities must be >= 1")
        self._real = _Ring(capacity_real, state_dim, action_dim)
        self._synth = _Ring(capacity_synthetic, state_dim, action_dim)

    @property
    def n_real(self) -> int:
        return self._real.size

    @property
    def n_synthetic(self) -> int:
        return self._synth.size

    def __len__(self) -> int:
        return self.n_real + self.n_synthetic

    def add(self, state, action, reward, next_state, real: bool) -> None:
        ring = self._real if real else self._synth
        ring.add(state, action, reward, next_state)

    def add_batch(self, states, actions, rewards, next_states, real: bool) -> None:
        for s, a, r, sp in zip(states, actions, rewards, next_states):
            self.add(s, a, r, sp, real)

    def sample(self, batch_size: int, rho_real: float, rng: np.random.Generator,
               dtype=torch.float32) -> Batch:
        """Mixed batch honoring rho_real in expectation.

        Falls back to the other ring when one is empty."""
        if not (0.0 <= rho_real <= 1.0):
            raise ValueError("rho_real must be in [0, 1]")
        if len(self) == 0:
            raise ValueError("buffer is empty")
        take_real = rng.random(batch_size) < rho_real
        if self._synth.size == 0:
            take_real[:] = True
        if self._real.size == 0:
            take_real[:] = False

        idx_real = rng.integers(0, max(self._real.size, 1), size=batch_size)
        idx_synth = rng.integers(0, max(self._synth.size, 1), size=batch_size)

        def gather(field: str) -> np.ndarray:
            real_rows = getattr(self._real, field)[idx_real]
            synth_rows = getattr(self._synth, field)[idx_synth]
            mask = take_real if real_rows.ndim == 1 else take_real[:, None]
            return np.where(mask, real_rows, synth_rows)

        return Batch(
            torch.as_tensor(gather("states"), dtype=dtype),
            torch.as_tensor(gather("actions"), dtype=dtype),
            torch.as_tensor(gather("rewards"), dtype=dtype),
            torch.as_tensor(gather("next_states"), dtype=dtype),
        )
