"""An exactly solvable tabular chain MDP used as a correctness oracle.

States are one-hot encoded; the single continuous action dimension is
thresholded at zero into two discrete actions, so continuous-action
policies can act on it directly.
"""

from __future__ import annotations

import numpy as np

from ..core.rollout import Environment
from ..core.types import EnvironmentSpec


class ChainMDP(Environment):
    """Tabular MDP with known transition and reward matrices.

    transitions: (n_states, 2, n_states) row-stochastic
    rewards: (n_states, 2)
    """

    def __init__(
        self,
        transitions: np.ndarray,
        rewards: np.ndarray,
        discount: float = 0.9,
        horizon: int = 60,
        start_state: int = 0,
        env_name: str = "chain",
    ):
        transitions = np.asarray(transitions, dtype=np.float64)
        rewards = np.asarray(rewards, dtype=np.float64)
        n = transitions.shape[0]
        if n > 10:
            raise ValueError("chain oracle limited to 10 states")
        if transitions.shape != (n, 2, n) or rewards.shape != (n, 2):
            raise ValueError("transitions must be (n, 2, n) and rewards (n, 2)")
        if not np.allclose(transitions.sum(axis=2), 1.0, atol=1e-12):
            raise ValueError("transition rows must sum to 1")
        self.transitions = transitions
        self.rewards = rewards
        self.n_states = n
        self.start_state = start_state
        self.spec = EnvironmentSpec(
            state_dim=n,
            action_dim=1,
            action_low=np.array([-1.0]),
            action_high=np.array([1.0]),
            horizon=horizon,
            discount=discount,
            start_state_sampler_id=f"fixed:{start_state}",
            env_name=env_name,
        )
        self._state_idx: int | None = None

    def one_hot(self, idx: int) -> np.ndarray:
        v = np.zeros(self.n_states)
        v[idx] = 1.0
        return v

    @staticmethod
    def state_index(state: np.ndarray) -> int:
        return int(np.argmax(state))

    @staticmethod
    def discrete_action(action) -> int:
        a = float(np.asarray(action).reshape(-1)[0])
        return 1 if a > 0.0 else 0

    @staticmethod
    def continuous_action(discrete: int) -> np.ndarray:
        return np.array([1.0 if discrete == 1 else -1.0])

    def reset(self, rng: np.random.Generator) -> np.ndarray:
        self._state_idx = self.start_state
        return self.one_hot(self._state_idx)

    def set_state(self, idx: int) -> np.ndarray:
        """Force the current state (used by Monte-Carlo Q oracles)."""
        self._state_idx = int(idx)
        return self.one_hot(self._state_idx)

    def step(self, action, rng: np.random.Generator):
        if self._state_idx is None:
            raise RuntimeError("step called before reset")
        d = self.discrete_action(action)
        s = self._state_idx
        reward = float(self.rewards[s, d])
        probs = self.transitions[s, d]
        nxt = int(rng.choice(self.n_states, p=probs))
        self._state_idx = nxt
        return self.one_hot(nxt), reward, False


def value_iteration(chain: ChainMDP, tol: float = 1e-10, max_iter: int = 1_000_000) -> np.ndarray:
    """Exact optimal Q table; sup-norm Bellman residual below tol."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    gamma = chain.spec.discount
    q = np.zeros((chain.n_states, 2))
    for _ in range(max_iter):
        backed_up = chain.rewards + gamma * chain.transitions @ q.max(axis=1)
        if np.max(np.abs(backed_up - q)) < tol:
            return backed_up
        q = backed_up
    raise RuntimeError("value iteration did not converge")


def finite_horizon_optimal_return(chain: ChainMDP, horizon: int) -> float:
    """Optimal discounted return over exactly `horizon` steps from the
    start state, by backward induction."""
    gamma = chain.spec.discount
    v = np.zeros(chain.n_states)
    for _ in range(horizon):
        v = (chain.rewards + gamma * chain.transitions @ v).max(axis=1)
    return float(v[chain.start_state])


def make_deterministic_chain(
    n_states: int = 5,
    discount: float = 0.9,
    horizon: int = 60,
    start_state: int = 0,
) -> ChainMDP:
    """Walk-right-to-earn chain: action 1 moves right (capped), action 0
    moves left (floored). Reward grows with position under action 1; a
    small decoy reward favors action 0 near the left edge."""
    t = np.zeros((n_states, 2, n_states))
    r = np.zeros((n_states, 2))
    for s in range(n_states):
        t[s, 0, max(s - 1, 0)] = 1.0
        t[s, 1, min(s + 1, n_states - 1)] = 1.0
        r[s, 1] = s / (n_states - 1)
        r[s, 0] = 0.2 * (1.0 - s / (n_states - 1))
    return ChainMDP(t, r, discount=discount, horizon=horizon, start_state=start_state)
