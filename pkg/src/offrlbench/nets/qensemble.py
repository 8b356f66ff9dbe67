"""State-action value ensembles with configurable target weighting."""

from __future__ import annotations

import copy
from dataclasses import dataclass

import torch
import torch.nn as nn

from ..core.rng import derive_seed, torch_gen
from .modules import StateNorm, mlp, seeded_init_

WEIGHTING_KINDS = ("min", "mean", "convex")


@dataclass(frozen=True)
class TargetWeighting:
    """How ensemble member values are combined into one target.

    convex: lam * min + (1 - lam) * max across members.
    """

    kind: str = "min"
    lam: float = 0.75

    def __post_init__(self):
        if self.kind not in WEIGHTING_KINDS:
            raise ValueError(f"weighting kind must be one of {WEIGHTING_KINDS}")
        if not (0.0 <= self.lam <= 1.0):
            raise ValueError("lam must be in [0, 1]")

    def combine(self, member_values: torch.Tensor) -> torch.Tensor:
        """(n_members, batch) -> (batch,)"""
        if self.kind == "min":
            return member_values.min(dim=0).values
        if self.kind == "mean":
            return member_values.mean(dim=0)
        return self.lam * member_values.min(dim=0).values + (1.0 - self.lam) * member_values.max(dim=0).values


class QEnsemble(nn.Module):
    """Identically shaped, independently initialized Q networks plus
    frozen target copies updated only via explicit sync/Polyak calls."""

    def __init__(
        self,
        state_dim: int,
        action_dim: int,
        n_members: int = 2,
        hidden: tuple[int, ...] = (256, 256),
        weighting: TargetWeighting = TargetWeighting(),
        seed: int = 0,
        state_norm=None,
        dtype=torch.float32,
    ):
        super().__init__()
        if n_members < 1:
            raise ValueError("n_members must be >= 1")
        self.n_members = n_members
        self.weighting = weighting
        self.norm = StateNorm(state_dim, *(state_norm or (None, None)), dtype=dtype)
        self.members = nn.ModuleList()
        for i in range(n_members):
            net = mlp(state_dim + action_dim, tuple(hidden), 1)
            seeded_init_(net, torch_gen(derive_seed(seed, "q_member", i)))
            self.members.append(net)
        self.targets = copy.deepcopy(self.members)
        for p in self.targets.parameters():
            p.requires_grad_(False)
        self.to(dtype)

    def values(self, states: torch.Tensor, actions: torch.Tensor) -> torch.Tensor:
        """(n_members, batch) member values with gradients."""
        x = torch.cat([self.norm(states), actions], dim=-1)
        return torch.stack([m(x).squeeze(-1) for m in self.members])

    def target_values(self, states: torch.Tensor, actions: torch.Tensor) -> torch.Tensor:
        """(n_members, batch) frozen-target values, no gradient."""
        with torch.no_grad():
            x = torch.cat([self.norm(states), actions], dim=-1)
            return torch.stack([m(x).squeeze(-1) for m in self.targets])

    def weighted_values(self, states, actions) -> torch.Tensor:
        return self.weighting.combine(self.values(states, actions))

    def weighted_target_values(self, states, actions) -> torch.Tensor:
        return self.weighting.combine(self.target_values(states, actions))

    def sync_targets(self) -> None:
        with torch.no_grad():
            for t, m in zip(self.targets.parameters(), self.members.parameters()):
                t.copy_(m)

    def polyak_update(self, tau: float) -> None:
        if not (0.0 < tau <= 1.0):
            raise ValueError("tau must be in (0, 1]")
        with torch.no_grad():
            for t, m in zip(self.targets.parameters(), self.members.parameters()):
                t.mul_(1.0 - tau).add_(m, alpha=tau)

    def trainable_parameters(self):
        return self.members.parameters()
