"""Short model rollouts that synthesize extra transitions."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import torch

from ..core.types import PolicyHandle
from ..nets.dynamics import DynamicsEnsemble
from ..nets.modules import as_tensor, np_noise
from .uncertainty import USADGate, mopo_penalized_reward, usad


@dataclass
class SynthStats:
    """Per-cadence synthesis diagnostics."""

    n_rollouts: int = 0
    n_transitions: int = 0
    rollout_lengths: list[int] = field(default_factory=list)
    gate_trips: int = 0
    dropped: int = 0
    mean_penalty: float = 0.0

    @property
    def gate_trip_rate(self) -> float:
        return self.gate_trips / self.n_rollouts if self.n_rollouts else 0.0

    @property
    def mean_length(self) -> float:
        return float(np.mean(self.rollout_lengths)) if self.rollout_lengths else 0.0


@dataclass
class SyntheticRows:
    states: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    next_states: np.ndarray

    def __len__(self) -> int:
        return self.states.shape[0]


def synthesize_rollouts(
    ens: DynamicsEnsemble,
    policy: PolicyHandle,
    start_states: np.ndarray,
    length: int,
    rng: np.random.Generator,
    mode: str,
    gate: USADGate | None = None,
    halt_reward: float | None = None,
    mopo_lambda: float = 0.0,
    action_low=None,
    action_high=None,
) -> tuple[SyntheticRows, SynthStats]:
    """Roll the policy through the model from dataset start states.

    Both modes step identically: a uniformly drawn member predicts the
    next state (a stochastic draw for Gaussian members, the mean
    otherwise), and the stored reward starts from the ensemble-mean
    prediction. They differ only in their regularizer: "mopo" subtracts
    the uncertainty penalty from every reward; "morel" tests the gate on
    (s_t, a_t) before each step and, on a trip, appends one absorbing
    halt transition (s_t, a_t, halt_reward, s_t) and ends the rollout.
    With the gate always open and a zero penalty the two modes emit
    identical transitions from identical seeds.

    Rollouts that produce non-finite outputs are dropped whole.
    """
    if length < 1:
        raise ValueError("rollout length must be >= 1")
    if mode not in ("mopo", "morel"):
        raise ValueError(f"mode must be 'mopo' or 'morel', got {mode!r}")
    if mode == "morel" and (gate is None or halt_reward is None):
        raise ValueError("morel mode needs a gate and a halt reward")

    stats = SynthStats(n_rollouts=start_states.shape[0])
    rows_s, rows_a, rows_r, rows_sp = [], [], [], []
    penalties = []

    sample_action = getattr(policy, "sample_action", None)
    for i in range(start_states.shape[0]):
        s = np.asarray(start_states[i], dtype=np.float64)
        rollout_rows = []
        tripped = False
        for t in range(length):
            if sample_action is not None:
                a = sample_action(s, rng)
            else:
                a = policy.act(s, rng)
            if action_low is not None:
                a = np.clip(a, action_low, action_high)
            if mode == "morel" and not usad(gate, s, a):
                rollout_rows.append((s, a, float(halt_reward), s))
                tripped = True
                break
            st = as_tensor(s[None, :], ens)
            at = as_tensor(a[None, :], ens)
            member = int(rng.integers(ens.n_members))
            with torch.no_grad():
                if ens.kind == "gaussian_ff":
                    noise = np_noise(rng, (1, ens.out_dim), ens)
                    nxt, _ = ens.sample_step(st, at, member, noise)
                else:
                    nxt, _, _ = ens.rollout_step(st, at, member)
                reward = float(ens.mean_reward(st, at)[0])
                if mode == "mopo":
                    penalized = float(mopo_penalized_reward(ens, st, at, mopo_lambda)[0])
                    penalties.append(reward - penalized)
                    reward = penalized
            nxt = nxt.squeeze(0).numpy().astype(np.float64)
            if not (np.all(np.isfinite(nxt)) and np.isfinite(reward)):
                rollout_rows = []
                stats.dropped += 1
                break
            rollout_rows.append((s, a, reward, nxt))
            s = nxt
        if rollout_rows:
            stats.rollout_lengths.append(len(rollout_rows))
            if tripped:
                stats.gate_trips += 1
            for row in rollout_rows:
                rows_s.append(row[0])
                rows_a.append(row[1])
                rows_r.append(row[2])
                rows_sp.append(row[3])
    stats.n_transitions = len(rows_s)
    stats.mean_penalty = float(np.mean(penalties)) if penalties else 0.0
    if not rows_s:
        empty = np.zeros((0, start_states.shape[1]))
        return SyntheticRows(empty, np.zeros((0, 0)), np.zeros(0), empty.copy()), stats
    return (
        SyntheticRows(np.array(rows_s), np.array(rows_a), np.array(rows_r), np.array(rows_sp)),
        stats,
    )
