"""Discounted returns and the single-rollout primitive."""

from __future__ import annotations

import numpy as np

from .rng import np_rng
from .types import PolicyHandle, Transition


def discounted_return(rewards, gamma: float) -> float:
    """Sum of gamma^t * r_t with t starting at 0.

    Computed in double precision regardless of where the rewards came
    from, so hundred-step sums do not drift.
    """
    if not (0.0 < gamma <= 1.0):
        raise ValueError(f"gamma must be in (0, 1], got {gamma}")
    rewards = np.asarray(rewards, dtype=np.float64)
    if rewards.size == 0:
        return 0.0
    if not np.all(np.isfinite(rewards)):
        raise ValueError("rewards must be finite")
    total = 0.0
    factor = 1.0
    for r in rewards:
        total += factor * float(r)
        factor *= gamma
    return total


class Environment:
    """Minimal environment protocol.

    Stateful in the current state only; all stochasticity comes from the
    generator passed to `reset` and `step`, so instances carry no hidden
    RNG state.
    """

    spec = None  # EnvironmentSpec

    def reset(self, rng: np.random.Generator) -> np.ndarray:
        raise NotImplementedError

    def step(self, action: np.ndarray, rng: np.random.Generator):
        """Returns (next_state, reward, done)."""
        raise NotImplementedError


def rollout(
    env: Environment,
    policy: PolicyHandle,
    horizon: int,
    rng_seed: int,
) -> tuple[list[Transition], float]:
    """Run one trajectory and return its transitions and discounted return.

    Exactly `horizon` transitions unless the environment signals terminal.
    The same seed produces a bit-identical trajectory on the same build.
    History-dependent policies receive a window of the most recent
    `history_length + 1` states (most recent last), padded with the first
    state while the trajectory is still warming up.
    """
    spec = env.spec
    rng = np_rng(rng_seed)
    state = np.asarray(env.reset(rng), dtype=np.float64)
    if state.shape != (spec.state_dim,):
        raise ValueError(
            f"environment produced state of shape {state.shape}, spec says ({spec.state_dim},)"
        )
    need = getattr(policy, "history_length", 0)
    history = [state.copy() for _ in range(need + 1)]

    transitions: list[Transition] = []
    rewards: list[float] = []
    for _ in range(horizon):
        obs = np.stack(history) if need > 0 else history[-1]
        action = np.asarray(policy.act(obs, rng), dtype=np.float64)
        if action.shape != (spec.action_dim,):
            raise ValueError(
                f"policy produced action of shape {action.shape}, spec says ({spec.action_dim},)"
            )
        next_state, reward, done = env.step(action, rng)
        next_state = np.asarray(next_state, dtype=np.float64)
        transitions.append(Transition(state, action, float(reward), next_state))
        rewards.append(float(reward))
        state = next_state
        history.append(state.copy())
        history = history[-(need + 1):]
        if done:
            break
    return transitions, discounted_return(rewards, spec.discount)
