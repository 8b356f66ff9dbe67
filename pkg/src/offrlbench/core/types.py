"""Core data model: environment specs, transitions, datasets, policies,
and per-run evaluation histories.

All containers are immutable after construction and safe to share
read-only across parallel workers.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np


def _frozen_array(values, dtype=np.float64) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class EnvironmentSpec:
    """Dimensions, bounds, horizon, and discount of an environment."""

    state_dim: int
    action_dim: int
    action_low: np.ndarray
    action_high: np.ndarray
    horizon: int
    discount: float
    start_state_sampler_id: str = "default"
    env_name: str = "unknown"

    def __post_init__(self):
        if self.state_dim < 1 or self.action_dim < 1:
            raise ValueError("state_dim and action_dim must be positive")
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if not (0.0 < self.discount <= 1.0):
            raise ValueError(f"discount must be in (0, 1], got {self.discount}")
        low = _frozen_array(self.action_low)
        high = _frozen_array(self.action_high)
        if low.shape != (self.action_dim,) or high.shape != (self.action_dim,):
            raise ValueError("action bounds must have shape (action_dim,)")
        if not np.all(low < high):
            raise ValueError("action_low must be < action_high elementwise")
        object.__setattr__(self, "action_low", low)
        object.__setattr__(self, "action_high", high)

    def clip_action(self, action: np.ndarray) -> np.ndarray:
        return np.clip(action, self.action_low, self.action_high)

    def to_dict(self) -> dict:
        return {
            "state_dim": self.state_dim,
            "action_dim": self.action_dim,
            "action_low": [float(x) for x in self.action_low],
            "action_high": [float(x) for x in self.action_high],
            "horizon": self.horizon,
            "discount": self.discount,
            "start_state_sampler_id": self.start_state_sampler_id,
            "env_name": self.env_name,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EnvironmentSpec":
        return cls(
            state_dim=int(d["state_dim"]),
            action_dim=int(d["action_dim"]),
            action_low=np.asarray(d["action_low"], dtype=np.float64),
            action_high=np.asarray(d["action_high"], dtype=np.float64),
            horizon=int(d["horizon"]),
            discount=float(d["discount"]),
            start_state_sampler_id=str(d.get("start_state_sampler_id", "default")),
            env_name=str(d.get("env_name", "unknown")),
        )


@dataclass(frozen=True)
class Transition:
    """One offline data unit: (state, action, reward, next_state)."""

    state: np.ndarray
    action: np.ndarray
    reward: float
    next_state: np.ndarray

    def __post_init__(self):
        s = _frozen_array(self.state)
        a = _frozen_array(self.action)
        sp = _frozen_array(self.next_state)
        if s.ndim != 1 or a.ndim != 1 or sp.ndim != 1:
            raise ValueError("state, action, next_state must be 1-D vectors")
        if s.shape != sp.shape:
            raise ValueError("state and next_state dimensions differ")
        if not np.isfinite(self.reward):
            raise ValueError(f"reward must be finite, got {self.reward}")
        if not (np.all(np.isfinite(s)) and np.all(np.isfinite(a)) and np.all(np.isfinite(sp))):
            raise ValueError("transition vectors must be finite")
        object.__setattr__(self, "state", s)
        object.__setattr__(self, "action", a)
        object.__setattr__(self, "reward", float(self.reward))
        object.__setattr__(self, "next_state", sp)


@dataclass(frozen=True)
class DatasetMeta:
    """Provenance of a dataset: which behavior policy produced it, and how."""

    env_name: str
    baseline_id: str
    epsilon: float
    n_trajectories: int
    seed: int

    def __post_init__(self):
        if not (0.0 <= self.epsilon <= 1.0):
            raise ValueError(f"epsilon must be in [0, 1], got {self.epsilon}")

    def to_dict(self) -> dict:
        return {
            "env_name": self.env_name,
            "baseline_id": self.baseline_id,
            "epsilon": self.epsilon,
            "n_trajectories": self.n_trajectories,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DatasetMeta":
        return cls(
            env_name=str(d["env_name"]),
            baseline_id=str(d["baseline_id"]),
            epsilon=float(d["epsilon"]),
            n_trajectories=int(d["n_trajectories"]),
            seed=int(d["seed"]),
        )

    @property
    def dataset_id(self) -> str:
        return f"{self.env_name}-{self.baseline_id}-eps{self.epsilon:g}"


class Dataset:
    """Ordered transition store with trajectory boundaries and metadata.

    Internally columnar (one matrix per field) for fast batch access;
    iteration yields `Transition` views. Immutable after construction.
    """

    def __init__(
        self,
        transitions: Sequence[Transition],
        meta: DatasetMeta,
        spec: EnvironmentSpec,
        trajectory_starts: Sequence[int],
    ):
        if len(transitions) == 0:
            raise ValueError("dataset must be nonempty")
        states = np.stack([t.state for t in transitions])
        actions = np.stack([t.action for t in transitions])
        rewards = np.array([t.reward for t in transitions], dtype=np.float64)
        next_states = np.stack([t.next_state for t in transitions])
        self._init_from_arrays(states, actions, rewards, next_states, meta, spec, trajectory_starts)

    @classmethod
    def from_arrays(
        cls,
        states: np.ndarray,
        actions: np.ndarray,
        rewards: np.ndarray,
        next_states: np.ndarray,
        meta: DatasetMeta,
        spec: EnvironmentSpec,
        trajectory_starts: Sequence[int],
    ) -> "Dataset":
        obj = cls.__new__(cls)
        obj._init_from_arrays(
            np.asarray(states, dtype=np.float64),
            np.asarray(actions, dtype=np.float64),
            np.asarray(rewards, dtype=np.float64),
            np.asarray(next_states, dtype=np.float64),
            meta,
            spec,
            trajectory_starts,
        )
        return obj

    def _init_from_arrays(self, states, actions, rewards, next_states, meta, spec, trajectory_starts):
        n = states.shape[0]
        if n == 0:
            raise ValueError("dataset must be nonempty")
        if states.shape != (n, spec.state_dim) or next_states.shape != (n, spec.state_dim):
            raise ValueError("state dimensions do not match the environment spec")
        if actions.shape != (n, spec.action_dim):
            raise ValueError("action dimensions do not match the environment spec")
        if rewards.shape != (n,):
            raise ValueError("rewards must be a flat vector")
        if not np.all(np.isfinite(rewards)):
            raise ValueError("rewards must be finite")
        starts = [int(i) for i in trajectory_starts]
        if not starts or starts[0] != 0 or sorted(set(starts)) != starts or starts[-1] >= n:
            raise ValueError("trajectory starts must begin at 0, increase strictly, and stay within range")
        for arr in (states, actions, rewards, next_states):
            arr.flags.writeable = False
        self.states = states
        self.actions = actions
        self.rewards = rewards
        self.next_states = next_states
        self.meta = meta
        self.spec = spec
        self.trajectory_starts = tuple(starts)

    def __len__(self) -> int:
        return self.states.shape[0]

    def __getitem__(self, i: int) -> Transition:
        return Transition(self.states[i], self.actions[i], float(self.rewards[i]), self.next_states[i])

    def __iter__(self) -> Iterator[Transition]:
        for i in range(len(self)):
            yield self[i]

    @property
    def n_trajectories(self) -> int:
        return len(self.trajectory_starts)

    def trajectory_slices(self) -> list[slice]:
        bounds = list(self.trajectory_starts) + [len(self)]
        return [slice(bounds[i], bounds[i + 1]) for i in range(len(self.trajectory_starts))]

    def trajectory_ids(self) -> np.ndarray:
        """Per-transition trajectory index, aligned with the transition order."""
        ids = np.zeros(len(self), dtype=np.int64)
        for k, sl in enumerate(self.trajectory_slices()):
            ids[sl] = k
        return ids


class PolicyHandle:
    """A state (or state-history) to action map with serializable parameters.

    `kind` is one of "deterministic", "gaussian", or "history_dependent";
    composite samplers built on top of these (behavior mixtures, sampled
    action selectors) implement the same `act` protocol without claiming
    one of the core kinds.
    """

    kind: str = "deterministic"
    history_length: int = 0

    def act(self, obs, rng: np.random.Generator | None = None) -> np.ndarray:
        """Deployment action for a state (or a history window, most recent
        last, when `history_length` > 0)."""
        raise NotImplementedError

    def get_params(self) -> np.ndarray:
        return np.zeros(0, dtype=np.float64)

    def set_params(self, params: np.ndarray) -> None:
        if params.size != 0:
            raise ValueError("this policy has no parameters")


@dataclass(frozen=True)
class EvalRecord:
    step: int
    mean_return: float

    def __post_init__(self):
        if not np.isfinite(self.mean_return):
            raise ValueError(f"mean_return must be finite, got {self.mean_return}")


@dataclass
class RunHistory:
    """Timestamped evaluation scores of one training run."""

    run_id: str
    algorithm_id: str
    dataset_id: str
    seed: int
    records: list[EvalRecord] = field(default_factory=list)

    def append(self, step: int, mean_return: float) -> None:
        if self.records and step <= self.records[-1].step:
            raise ValueError(f"training_step must increase strictly ({step} after {self.records[-1].step})")
        self.records.append(EvalRecord(int(step), float(mean_return)))

    def steps(self) -> np.ndarray:
        return np.array([r.step for r in self.records], dtype=np.int64)

    def returns(self) -> np.ndarray:
        return np.array([r.mean_return for r in self.records], dtype=np.float64)

    def __len__(self) -> int:
        return len(self.records)
