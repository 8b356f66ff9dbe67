"""The three data-generating baseline controllers and exploration mixing.

State layout convention used throughout the suite: the observable vector
is (p, v, g, h, f, c) — an external set-point, three steerable set
points, and two derived load variables. Actions are the three steering
deltas.
"""

from __future__ import annotations

import numpy as np

from ..core.types import PolicyHandle

# Index of each named variable in the observable vector.
P, V, G, H, F, C = range(6)

# Normalization constants for (p, v, g, h, f, c), fixed by convention for
# the optimized controller's inputs.
BASELINE_NORM_MEANS = (55.0, 48.75, 50.53, 49.45, 37.51, 166.33)
BASELINE_NORM_STDS = (28.72, 12.31, 29.91, 29.22, 31.17, 139.44)

BASELINE_IDS = ("bad", "mediocre", "optimized")

# Past states the optimized controller needs (it reads values at t-3,
# t-4 and t-5).
OPTIMIZED_HISTORY = 5


def _normalize(state: np.ndarray) -> np.ndarray:
    means = np.asarray(BASELINE_NORM_MEANS)
    stds = np.asarray(BASELINE_NORM_STDS)
    return (state - means) / stds


def baseline_action(
    baseline_id: str,
    state_or_history: np.ndarray,
    pad_short_history: bool = True,
) -> np.ndarray:
    """Raw action of one of the three baseline controllers.

    The bad and mediocre controllers output unnormalized set-point deltas
    from the current state; the optimized controller consumes normalized
    inputs from a 6-state history window (most recent last). Outputs are
    the bare formula values; deployment-side clipping to an action box is
    the policy handle's job.
    """
    arr = np.asarray(state_or_history, dtype=np.float64)
    if baseline_id == "bad" or baseline_id == "mediocre":
        state = arr[-1] if arr.ndim == 2 else arr
        if state.shape[0] < 6:
            raise ValueError(f"baseline needs a 6-dim observable vector, got {state.shape}")
        target = 100.0 if baseline_id == "bad" else 25.0
        return np.array([target - state[V], target - state[G], target - state[H]])
    if baseline_id != "optimized":
        raise ValueError(f"unknown baseline_id {baseline_id!r}")

    if arr.ndim != 2:
        raise ValueError("optimized baseline needs a state history, not a single state")
    if arr.shape[0] < OPTIMIZED_HISTORY + 1:
        if not pad_short_history:
            raise ValueError(
                f"optimized baseline needs {OPTIMIZED_HISTORY + 1} states, got {arr.shape[0]}"
            )
        pad = np.repeat(arr[:1], OPTIMIZED_HISTORY + 1 - arr.shape[0], axis=0)
        arr = np.concatenate([pad, arr], axis=0)
    now = _normalize(arr[-1])
    back3 = _normalize(arr[-4])
    back4 = _normalize(arr[-5])
    back5 = _normalize(arr[-6])
    return np.array(
        [
            -back5[V] - 0.91,
            2.0 * back3[F] - now[P] + 1.43,
            -3.48 * back3[H] - back4[H] + 2.0 * now[P] + 0.81,
        ]
    )


class BaselinePolicy(PolicyHandle):
    """Policy handle for one baseline controller, clipped to an action box."""

    def __init__(
        self,
        baseline_id: str,
        action_low=(-1.0, -1.0, -1.0),
        action_high=(1.0, 1.0, 1.0),
        pad_short_history: bool = True,
    ):
        if baseline_id not in BASELINE_IDS:
            raise ValueError(f"baseline_id must be one of {BASELINE_IDS}, got {baseline_id!r}")
        self.baseline_id = baseline_id
        self.action_low = np.asarray(action_low, dtype=np.float64)
        self.action_high = np.asarray(action_high, dtype=np.float64)
        self.pad_short_history = pad_short_history
        self.history_length = OPTIMIZED_HISTORY if baseline_id == "optimized" else 0
        self.kind = "history_dependent" if baseline_id == "optimized" else "deterministic"

    def act(self, obs, rng=None) -> np.ndarray:
        raw = baseline_action(self.baseline_id, obs, pad_short_history=self.pad_short_history)
        return np.clip(raw, self.action_low, self.action_high)


class UniformRandomPolicy(PolicyHandle):
    """Uniform actions over the action box; the weakest sensible reference."""

    kind = "stochastic"
    baseline_id = "uniform"

    def __init__(self, action_low, action_high):
        self.action_low = np.asarray(action_low, dtype=np.float64)
        self.action_high = np.asarray(action_high, dtype=np.float64)

    def act(self, obs, rng=None) -> np.ndarray:
        if rng is None:
            raise ValueError("uniform random policy needs a generator")
        return rng.uniform(self.action_low, self.action_high)


class MixedBehaviorPolicy(PolicyHandle):
    """A base policy diluted with uniform random actions.

    At each step, with probability epsilon the action is uniform over the
    action box; otherwise it is the base policy's action.
    """

    kind = "stochastic"

    def __init__(self, base: PolicyHandle, epsilon: float, action_low=None, action_high=None):
        if not (0.0 <= epsilon <= 1.0):
            raise ValueError(f"epsilon must be in [0, 1], got {epsilon}")
        self.base = base
        self.epsilon = float(epsilon)
        low = action_low if action_low is not None else getattr(base, "action_low", None)
        high = action_high if action_high is not None else getattr(base, "action_high", None)
        if low is None or high is None:
            raise ValueError("action bounds required (not derivable from the base policy)")
        self.action_low = np.asarray(low, dtype=np.float64)
        self.action_high = np.asarray(high, dtype=np.float64)
        self.history_length = getattr(base, "history_length", 0)

    @property
    def baseline_id(self) -> str:
        return getattr(self.base, "baseline_id", "custom")

    def act(self, obs, rng=None) -> np.ndarray:
        return mixed_action(self, obs, rng)


def mixed_action(policy: MixedBehaviorPolicy, state_or_history, rng: np.random.Generator) -> np.ndarray:
    """One step of epsilon-mixed behavior.

    epsilon == 0 is bit-identical to the base policy (no draws consumed);
    epsilon == 1 never queries the base policy.
    """
    if rng is None and policy.epsilon > 0.0:
        raise ValueError("mixed_action needs a generator when epsilon > 0")
    explore = policy.epsilon > 0.0 and (policy.epsilon >= 1.0 or rng.random() < policy.epsilon)
    if explore:
        return rng.uniform(policy.action_low, policy.action_high)
    return np.asarray(policy.base.act(state_or_history, rng), dtype=np.float64)
