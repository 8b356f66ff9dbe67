"""Transition/reward model ensembles and their uncertainty queries.

Members predict normalized state deltas plus a normalized reward from
normalized inputs. Three member kinds: deterministic feedforward,
Gaussian feedforward (diagonal predictive sigma), and deterministic
recurrent (a gated recurrent cell whose hidden state resets at
trajectory boundaries).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import torch
import torch.nn as nn

from ..core.rng import derive_seed, np_rng, torch_gen
from ..core.stats import SIGMA_FLOOR, DeltaStats, dataset_delta_stats
from ..core.types import Dataset
from ..errors import DivergenceError
from .modules import as_tensor, mlp, seeded_init_

DYNAMICS_KINDS = ("deterministic_ff", "gaussian_ff", "deterministic_recurrent")

LOG_STD_MIN = -10.0
LOG_STD_MAX = 2.0


@dataclass
class DynamicsConfig:
    hidden: tuple[int, ...] = (200, 200, 200)
    rnn_hidden: int = 64
    steps: int = 3000
    batch_size: int = 256
    lr: float = 1e-3
    holdout_frac: float = 0.1
    bootstrap: bool = True
    seq_len: int = 10
    seed: int = 0

    def __post_init__(self):
        self.hidden = tuple(self.hidden)


@dataclass
class DynamicsFitReport:
    kind: str
    n_requested: int
    survivors: list[int] = field(default_factory=list)
    train_loss: dict[int, float] = field(default_factory=dict)
    holdout_delta_mse: dict[int, float] = field(default_factory=dict)
    holdout_target_variance: float = 0.0


class _FFMember(nn.Module):
    def __init__(self, in_dim, out_dim, hidden):
        super().__init__()
        self.net = mlp(in_dim, hidden, out_dim)

    def forward(self, x):
        return self.net(x)


class _GaussianMember(nn.Module):
    def __init__(self, in_dim, out_dim, hidden):
        super().__init__()
        self.net = mlp(in_dim, hidden, 2 * out_dim)

    def forward(self, x):
        mu, log_std = self.net(x).chunk(2, dim=-1)
        return mu, torch.clamp(log_std, LOG_STD_MIN, LOG_STD_MAX)


class _RecurrentMember(nn.Module):
    def __init__(self, in_dim, out_dim, rnn_hidden):
        super().__init__()
        self.cell = nn.GRUCell(in_dim, rnn_hidden)
        self.head = nn.Linear(rnn_hidden, out_dim)
        self.rnn_hidden = rnn_hidden

    def forward(self, x, h):
        h_next = self.cell(x, h)
        return self.head(h_next), h_next


class DynamicsEnsemble(nn.Module):
    """Ensemble of transition models sharing one normalization frame."""

    def __init__(
        self,
        kind: str,
        state_dim: int,
        action_dim: int,
        n_members: int,
        stats: DeltaStats,
        reward_mean: float,
        reward_std: float,
        config: DynamicsConfig | None = None,
        dtype=torch.float32,
    ):
        super().__init__()
        if kind not in DYNAMICS_KINDS:
            raise ValueError(f"kind must be one of {DYNAMICS_KINDS}, got {kind!r}")
        if n_members < 1:
            raise ValueError("n_members must be >= 1")
        config = config or DynamicsConfig()
        self.kind = kind
        self.state_dim = state_dim
        self.action_dim = action_dim
        self.out_dim = state_dim + 1  # normalized delta + normalized reward
        self.config = config

        in_dim = state_dim + action_dim
        members = []
        for i in range(n_members):
            if kind == "deterministic_ff":
                m = _FFMember(in_dim, self.out_dim, tuple(config.hidden))
            elif kind == "gaussian_ff":
                m = _GaussianMember(in_dim, self.out_dim, tuple(config.hidden))
            else:
                m = _RecurrentMember(in_dim, self.out_dim, config.rnn_hidden)
            seeded_init_(m, torch_gen(derive_seed(config.seed, "dyn_member", i)))
            members.append(m)
        self.members = nn.ModuleList(members)

        def buf(name, value):
            self.register_buffer(name, torch.as_tensor(np.array(value, dtype=np.float64), dtype=dtype))

        buf("mu_s", stats.mu_state)
        buf("sig_s", stats.sigma_state)
        buf("mu_a", stats.mu_action)
        buf("sig_a", stats.sigma_action)
        buf("mu_d", stats.mu_delta)
        buf("sig_d", stats.sigma_delta)
        buf("mu_r", [reward_mean])
        buf("sig_r", [max(reward_std, SIGMA_FLOOR)])
        self.to(dtype)

    @property
    def n_members(self) -> int:
        return len(self.members)

    def _inputs(self, states: torch.Tensor, actions: torch.Tensor) -> torch.Tensor:
        s = (states - self.mu_s) / self.sig_s
        a = (actions - self.mu_a) / self.sig_a
        return torch.cat([s, a], dim=-1)

    def _denorm(self, states: torch.Tensor, outputs: torch.Tensor):
        delta = outputs[..., : self.state_dim] * self.sig_d + self.mu_d
        reward = outputs[..., self.state_dim] * self.sig_r[0] + self.mu_r[0]
        return states + delta, reward

    def member_outputs(self, states: torch.Tensor, actions: torch.Tensor) -> torch.Tensor:
        """(n_members, batch, out_dim) normalized mean predictions."""
        if self.kind == "deterministic_recurrent":
            raise ValueError("stateless member outputs undefined for recurrent members")
        x = self._inputs(states, actions)
        if self.kind == "gaussian_ff":
            return torch.stack([m(x)[0] for m in self.members])
        return torch.stack([m(x) for m in self.members])

    def member_sigmas(self, states: torch.Tensor, actions: torch.Tensor) -> torch.Tensor:
        """(n_members, batch, out_dim) predictive sigmas (normalized units)."""
        if self.kind != "gaussian_ff":
            raise ValueError(f"predictive sigma requires gaussian members, ensemble is {self.kind}")
        x = self._inputs(states, actions)
        return torch.stack([m(x)[1].exp() for m in self.members])

    # Rollout protocol shared with oracle stand-ins: hidden is None for
    # feedforward kinds, a (batch, rnn_hidden) tensor for recurrent.
    def init_hidden(self, batch: int) -> torch.Tensor | None:
        if self.kind != "deterministic_recurrent":
            return None
        ref = next(self.parameters())
        return torch.zeros(batch, self.config.rnn_hidden, dtype=ref.dtype)

    def rollout_step(self, states: torch.Tensor, actions: torch.Tensor, member: int, hidden=None):
        """One model step with the given member's mean prediction.

        Returns (next_states, rewards, hidden'). Gradients flow through.
        """
        x = self._inputs(states, actions)
        m = self.members[member]
        if self.kind == "deterministic_ff":
            out = m(x)
        elif self.kind == "gaussian_ff":
            out, _ = m(x)
        else:
            out, hidden = m(x, hidden)
        next_states, rewards = self._denorm(states, out)
        return next_states, rewards, hidden

    def sample_step(self, states: torch.Tensor, actions: torch.Tensor, member: int,
                    noise: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        """One stochastic step from a Gaussian member: draw from the
        predicted output distribution using the supplied unit noise."""
        if self.kind != "gaussian_ff":
            raise ValueError("stochastic steps require gaussian members")
        x = self._inputs(states, actions)
        mu, log_std = self.members[member](x)
        out = mu + log_std.exp() * noise
        return self._denorm(states, out)

    def mean_reward(self, states: torch.Tensor, actions: torch.Tensor) -> torch.Tensor:
        """Ensemble-mean predicted reward (raw units)."""
        outs = self.member_outputs(states, actions)
        return outs[..., self.state_dim].mean(dim=0) * self.sig_r[0] + self.mu_r[0]


def _as_batched(ens: DynamicsEnsemble, states, actions):
    s = np.atleast_2d(np.asarray(states, dtype=np.float64))
    a = np.atleast_2d(np.asarray(actions, dtype=np.float64))
    return as_tensor(s, ens), as_tensor(a, ens)


def ensemble_disagreement(ens: DynamicsEnsemble, states, actions):
    """Largest pairwise squared prediction difference, summed over output
    dimensions. Zero for a single member.

    Tensor inputs keep the model dtype (training path); numpy inputs
    reduce the member predictions in double precision.
    """
    if isinstance(states, torch.Tensor):
        outs = ens.member_outputs(states, actions)  # (m, b, D)
        m = outs.shape[0]
        best = torch.zeros(outs.shape[1], dtype=outs.dtype)
        for i in range(m):
            for j in range(i + 1, m):
                d = ((outs[i] - outs[j]) ** 2).sum(dim=-1)
                best = torch.maximum(best, d)
        return best
    single = np.asarray(states).ndim == 1
    st, at = _as_batched(ens, states, actions)
    with torch.no_grad():
        outs = ens.member_outputs(st, at).numpy().astype(np.float64)
    m = outs.shape[0]
    best = np.zeros(outs.shape[1])
    for i in range(m):
        for j in range(i + 1, m):
            np.maximum(best, ((outs[i] - outs[j]) ** 2).sum(axis=-1), out=best)
    return float(best[0]) if single else best


def max_member_uncertainty(ens: DynamicsEnsemble, states, actions):
    """Largest member Frobenius norm of the predictive sigma.

    Numpy inputs reduce in double precision, mirroring
    ensemble_disagreement."""
    if isinstance(states, torch.Tensor):
        sig = ens.member_sigmas(states, actions)  # (m, b, D)
        return torch.sqrt((sig ** 2).sum(dim=-1)).max(dim=0).values
    single = np.asarray(states).ndim == 1
    st, at = _as_batched(ens, states, actions)
    with torch.no_grad():
        sig = ens.member_sigmas(st, at).numpy().astype(np.float64)
    out = np.sqrt((sig ** 2).sum(axis=-1)).max(axis=0)
    return float(out[0]) if single else out


def _normalized_targets(ens: DynamicsEnsemble, dataset: Dataset):
    deltas = (dataset.next_states - dataset.states - ens.mu_d.numpy().astype(np.float64)) / (
        ens.sig_d.numpy().astype(np.float64)
    )
    rewards = (dataset.rewards - float(ens.mu_r[0])) / float(ens.sig_r[0])
    return np.concatenate([deltas, rewards[:, None]], axis=1)


def _fit_ff_member(ens, member_idx, states, actions, targets, train_idx, gen_seed, config):
    gen = torch_gen(gen_seed)
    member = ens.members[member_idx]
    opt = torch.optim.Adam(member.parameters(), lr=config.lr)
    n = len(train_idx)
    idx_t = torch.as_tensor(train_idx)
    last = float("nan")
    for step in range(config.steps):
        batch = idx_t[torch.randint(0, n, (min(config.batch_size, n),), generator=gen)]
        x = ens._inputs(states[batch], actions[batch])
        if ens.kind == "gaussian_ff":
            mu, log_std = member(x)
            inv_var = torch.exp(-2.0 * log_std)
            loss = (0.5 * (targets[batch] - mu) ** 2 * inv_var + log_std).sum(dim=-1).mean()
        else:
            loss = ((member(x) - targets[batch]) ** 2).sum(dim=-1).mean()
        if not torch.isfinite(loss):
            raise DivergenceError(f"dynamics member {member_idx} diverged at step {step}")
        opt.zero_grad(set_to_none=True)
        loss.backward()
        opt.step()
        last = loss.item()
    return last


def _fit_recurrent_member(ens, member_idx, dataset, targets_np, traj_train, gen_seed, config):
    gen_np = np_rng(gen_seed)
    member = ens.members[member_idx]
    opt = torch.optim.Adam(member.parameters(), lr=config.lr)
    slices = dataset.trajectory_slices()
    states = as_tensor(dataset.states, ens)
    actions = as_tensor(dataset.actions, ens)
    targets = as_tensor(targets_np, ens)
    last = float("nan")
    n_windows = max(1, config.batch_size // config.seq_len)
    for step in range(config.steps):
        # Truncated BPTT: windows sampled inside training trajectories,
        # hidden state zeroed at each window start.
        chosen = gen_np.choice(traj_train, size=n_windows, replace=True)
        rows = []
        for t in chosen:
            sl = slices[t]
            length = sl.stop - sl.start
            span = min(config.seq_len, length)
            start = sl.start + int(gen_np.integers(0, length - span + 1))
            rows.append((start, span))
        span = min(r[1] for r in rows)
        starts = torch.as_tensor([r[0] for r in rows])
        h = torch.zeros(len(rows), config.rnn_hidden, dtype=states.dtype)
        loss = torch.zeros((), dtype=states.dtype)
        for k in range(span):
            idx = starts + k
            x = ens._inputs(states[idx], actions[idx])
            out, h = member(x, h)
            loss = loss + ((out - targets[idx]) ** 2).sum(dim=-1).mean()
        loss = loss / span
        if not torch.isfinite(loss):
            raise DivergenceError(f"recurrent dynamics member {member_idx} diverged at step {step}")
        opt.zero_grad(set_to_none=True)
        loss.backward()
        opt.step()
        last = loss.item()
    return last


def fit_dynamics_ensemble(
    dataset: Dataset,
    kind: str,
    n_members: int,
    config: DynamicsConfig | None = None,
) -> tuple[DynamicsEnsemble, DynamicsFitReport]:
    """Train an ensemble on bootstrap resamples with a shared holdout.

    Members that diverge are dropped with a warning; fitting fails if
    fewer than two members survive (one suffices when only one was
    requested).
    """
    config = config or DynamicsConfig()
    stats = dataset_delta_stats(dataset)
    ens = DynamicsEnsemble(
        kind,
        dataset.spec.state_dim,
        dataset.spec.action_dim,
        n_members,
        stats,
        reward_mean=float(dataset.rewards.mean()),
        reward_std=float(dataset.rewards.std()),
        config=config,
    )
    report = DynamicsFitReport(kind=kind, n_requested=n_members)
    targets_np = _normalized_targets(ens, dataset)
    rng = np_rng(derive_seed(config.seed, "dyn_split"))

    if kind == "deterministic_recurrent":
        n_traj = dataset.n_trajectories
        perm = rng.permutation(n_traj)
        n_hold = max(1, int(config.holdout_frac * n_traj)) if n_traj > 1 else 0
        hold_traj = perm[:n_hold]
        train_traj = perm[n_hold:] if n_hold < n_traj else perm
        hold_rows = np.concatenate(
            [np.arange(sl.start, sl.stop) for k, sl in enumerate(dataset.trajectory_slices()) if k in set(hold_traj)]
        ) if n_hold else np.arange(0)
    else:
        n = len(dataset)
        perm = rng.permutation(n)
        n_hold = max(1, int(config.holdout_frac * n)) if n > 1 else 0
        hold_rows = perm[:n_hold]
        train_rows = perm[n_hold:] if n_hold < n else perm

    states = as_tensor(dataset.states, ens)
    actions = as_tensor(dataset.actions, ens)
    targets = as_tensor(targets_np, ens)

    survivors = []
    for i in range(len(ens.members)):
        member_seed = derive_seed(config.seed, "dyn_fit", i)
        try:
            if kind == "deterministic_recurrent":
                pool = train_traj
                boot = np_rng(member_seed).choice(pool, size=len(pool), replace=True) if config.bootstrap else pool
                last = _fit_recurrent_member(ens, i, dataset, targets_np, boot, member_seed, config)
            else:
                pool = train_rows
                boot = np_rng(member_seed).choice(pool, size=len(pool), replace=True) if config.bootstrap else pool
                last = _fit_ff_member(ens, i, states, actions, targets, boot, member_seed, config)
        except DivergenceError as exc:
            warnings.warn(str(exc), stacklevel=2)
            continue
        survivors.append(i)
        report.train_loss[i] = last

    required = min(2, n_members)
    if len(survivors) < required:
        raise DivergenceError(
            f"only {len(survivors)} of {n_members} dynamics members survived training"
        )
    if len(survivors) < n_members:
        ens.members = nn.ModuleList([ens.members[i] for i in survivors])

    # Holdout normalized-delta MSE per surviving member.
    if len(hold_rows):
        ht = targets[torch.as_tensor(hold_rows)]
        report.holdout_target_variance = float(ht[:, : ens.state_dim].var(unbiased=False))
        with torch.no_grad():
            if kind == "deterministic_recurrent":
                slices = dataset.trajectory_slices()
                for pos in range(len(ens.members)):
                    mses = []
                    for k in sorted(set(int(t) for t in hold_traj)):
                        sl = slices[k]
                        h = torch.zeros(1, config.rnn_hidden, dtype=states.dtype)
                        for row in range(sl.start, sl.stop):
                            x = ens._inputs(states[row : row + 1], actions[row : row + 1])
                            out, h = ens.members[pos](x, h)
                            err = (out[0, : ens.state_dim] - targets[row, : ens.state_dim]) ** 2
                            mses.append(float(err.mean()))
                    report.holdout_delta_mse[pos] = float(np.mean(mses))
            else:
                x = ens._inputs(states[torch.as_tensor(hold_rows)], actions[torch.as_tensor(hold_rows)])
                for pos, member in enumerate(ens.members):
                    out = member(x)[0] if kind == "gaussian_ff" else member(x)
                    err = (out[:, : ens.state_dim] - ht[:, : ens.state_dim]) ** 2
                    report.holdout_delta_mse[pos] = float(err.mean())
    report.survivors = list(range(len(ens.members)))
    return ens, report
