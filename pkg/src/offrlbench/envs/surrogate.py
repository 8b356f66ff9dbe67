"""A seedable stochastic stand-in environment.

Six observables (p, v, g, h, f, c), three bounded steering deltas,
state-dependent (heteroscedastic) transition noise, and a smooth
negative-cost reward whose optimum sits at low set points. Tuned so that
mediocre-style set points score clearly better than bad-style ones while
leaving improvement headroom below the mediocre target.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from ..core.rollout import Environment
from ..core.types import EnvironmentSpec
from .baselines import C, F, G, H, P, V

DEFAULT_HORIZON = 100
DEFAULT_DISCOUNT = 0.97


class SurrogateEnv(Environment):
    """Stochastic steering environment with IB-like observable layout."""

    def __init__(
        self,
        steering_scale: float = 2.0,
        noise_base: float = 0.1,
        noise_slope: float = 0.4,
        cost_target: float = 20.0,
        cost_scale: float = 3000.0,
        action_cost: float = 0.05,
        horizon: int = DEFAULT_HORIZON,
        discount: float = DEFAULT_DISCOUNT,
        reward_fn: Callable[[np.ndarray, np.ndarray], float] | None = None,
    ):
        self.steering_scale = steering_scale
        self.noise_base = noise_base
        self.noise_slope = noise_slope
        self.cost_target = cost_target
        self.cost_scale = cost_scale
        self.action_cost = action_cost
        self.reward_fn = reward_fn
        self.spec = EnvironmentSpec(
            state_dim=6,
            action_dim=3,
            action_low=np.full(3, -1.0),
            action_high=np.full(3, 1.0),
            horizon=horizon,
            discount=discount,
            start_state_sampler_id="surrogate_default",
            env_name="surrogate",
        )
        self._state: np.ndarray | None = None

    def reward(self, state: np.ndarray, action: np.ndarray) -> float:
        """Deterministic reward of a state-action pair (exposed for
        known-reward injection in model-based oracle tests)."""
        if self.reward_fn is not None:
            return float(self.reward_fn(state, action))
        dev = state[[V, G, H]] - self.cost_target
        cost = float(dev @ dev) / self.cost_scale + self.action_cost * float(action @ action)
        return -cost

    def reset(self, rng: np.random.Generator) -> np.ndarray:
        state = np.empty(6)
        state[P] = rng.uniform(45.0, 65.0)
        state[V] = rng.uniform(40.0, 60.0)
        state[G] = rng.uniform(40.0, 60.0)
        state[H] = rng.uniform(40.0, 60.0)
        state[F] = rng.uniform(30.0, 45.0)
        state[C] = rng.uniform(100.0, 200.0)
        self._state = state
        return state.copy()

    def step(self, action: np.ndarray, rng: np.random.Generator):
        if self._state is None:
            raise RuntimeError("step called before reset")
        action = np.clip(np.asarray(action, dtype=np.float64), -1.0, 1.0)
        s = self._state
        reward = self.reward(s, action)

        noise = rng.standard_normal(6)
        nxt = np.empty(6)
        for i, var in enumerate((V, G, H)):
            sigma = self.noise_base + self.noise_slope * (s[var] / 100.0)
            nxt[var] = np.clip(s[var] + self.steering_scale * action[i] + sigma * noise[i], 0.0, 100.0)
        nxt[P] = np.clip(s[P] + 0.1 * (55.0 - s[P]) + 0.5 * noise[3], 0.0, 100.0)
        fatigue_noise = (0.2 + 0.3 * s[H] / 100.0) * noise[4]
        nxt[F] = np.clip(0.9 * s[F] + 0.1 * (s[G] + s[H]) / 2.0 + fatigue_noise, 0.0, 100.0)
        nxt[C] = np.clip(0.9 * s[C] + 0.1 * (s[V] + s[G] + s[H]) + 1.0 * noise[5], 0.0, 500.0)

        self._state = nxt
        return nxt.copy(), reward, False
