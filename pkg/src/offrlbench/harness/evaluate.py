"""Policy evaluation on a live environment."""

from __future__ import annotations

from ..core.rng import derive_seed
from ..core.rollout import Environment, rollout
from ..core.types import PolicyHandle


def rollout_seed(seed: int, index: int) -> int:
    """Seed of the index-th evaluation rollout; public so oracle tests
    can replay the exact rollout sequence."""
    return derive_seed(seed, "rollout", index)


def evaluate_policy(env: Environment, policy: PolicyHandle, n_rollouts: int, seed: int) -> float:
    """Arithmetic mean of n independent rollout returns."""
    if n_rollouts < 1:
        raise ValueError("n_rollouts must be >= 1")
    total = 0.0
    for i in range(n_rollouts):
        try:
            _, ret = rollout(env, policy, env.spec.horizon, rollout_seed(seed, i))
        except Exception as exc:
            raise RuntimeError(f"environment failed during evaluation rollout {i}: {exc}") from exc
        total += ret
    return total / n_rollouts
