"""Gradient-free policy search constrained to a ball in weight space
around a behavior-cloned anchor, with fitness from recurrent model
rollouts."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import torch

from ..core.rng import derive_seed, np_rng, seed_everything
from ..core.types import Dataset, RunHistory
from ..nets.dynamics import DynamicsConfig, fit_dynamics_ensemble
from ..nets.modules import as_tensor, flat_params, set_flat_params
from ..nets.policies import TorchPolicy, make_deterministic_policy
from .bc import behavior_clone
from .rollout import RolloutPlan, virtual_rollout_return


@dataclass(frozen=True)
class WeightConstraint:
    """Candidate parameter vectors must stay strictly inside the
    Euclidean ball of radius `radius` around the anchor."""

    anchor: np.ndarray
    radius: float

    def __post_init__(self):
        if self.radius < 0:
            raise ValueError("radius must be >= 0")

    def distance(self, params: np.ndarray) -> float:
        return float(np.linalg.norm(params - self.anchor))

    def satisfied(self, params: np.ndarray) -> bool:
        d = self.distance(params)
        return d < self.radius or d == 0.0

    def project(self, params: np.ndarray) -> np.ndarray:
        """Radial projection onto 0.999999 * radius, keeping the
        population strictly feasible by construction."""
        if self.radius == 0.0:
            return self.anchor.copy()
        d = self.distance(params)
        limit = self.radius * (1.0 - 1e-6)
        if d <= limit:
            return params
        return self.anchor + (params - self.anchor) * (limit / d)


@dataclass
class WsbcConfig:
    algorithm_id: str = "wsbc"
    seed: int = 0
    hidden: tuple[int, ...] = (64, 64)
    mu: int = 8
    lam: int = 16
    generations: int = 30
    mutation_std: float = 0.02
    epsilon_w: float | None = None  # None: 10% of the anchor norm
    eval_interval: int = 5          # in generations
    rollout_horizon: int = 10
    gamma: float | None = None
    member_selection: str = "round_robin"
    n_members: int = 2
    n_start_states: int = 64
    bc_steps: int = 3000
    bc_lr: float = 1e-3
    dynamics: DynamicsConfig = field(default_factory=lambda: DynamicsConfig(hidden=(64, 64)))

    def __post_init__(self):
        if self.mu < 1 or self.lam < 1:
            raise ValueError("mu and lam must be >= 1")
        self.hidden = tuple(self.hidden)


@dataclass
class WsbcSearchLog:
    """Audit trail: every evaluated candidate's distance to the anchor,
    plus per-generation population statistics."""

    epsilon_w: float = 0.0
    anchor_fitness: float = 0.0
    candidate_distances: list[float] = field(default_factory=list)
    generations: list[dict] = field(default_factory=list)


def wsbc_search(
    dataset: Dataset,
    config: WsbcConfig,
    eval_hook=None,
    reward_fn=None,
    pretrained=None,
) -> tuple[TorchPolicy, RunHistory, WsbcSearchLog]:
    """(mu + lam) evolution search over policy weights.

    Candidates are projected onto the constraint ball before evaluation,
    fitness is the virtual rollout return on a fixed start-state set, and
    elites survive, so the best fitness never decreases.
    """
    seed_everything(derive_seed(config.seed, "wsbc", "global"))
    gamma = config.gamma if config.gamma is not None else dataset.spec.discount
    history = RunHistory(
        run_id=f"wsbc-{dataset.meta.dataset_id}-seed{config.seed}",
        algorithm_id="wsbc",
        dataset_id=dataset.meta.dataset_id,
        seed=config.seed,
    )
    anchor_policy = behavior_clone(
        dataset, hidden=config.hidden, steps=config.bc_steps, lr=config.bc_lr,
        seed=derive_seed(config.seed, "anchor"),
    )
    if pretrained is not None:
        ensemble = pretrained
    else:
        dyn_cfg = DynamicsConfig(**{**config.dynamics.__dict__, "seed": derive_seed(config.seed, "dyn")})
        ensemble, _ = fit_dynamics_ensemble(dataset, "deterministic_recurrent", config.n_members, dyn_cfg)

    anchor = flat_params(anchor_policy.net)
    radius = config.epsilon_w if config.epsilon_w is not None else 0.1 * max(1.0, float(np.linalg.norm(anchor)))
    constraint = WeightConstraint(anchor=anchor, radius=radius)
    log = WsbcSearchLog(epsilon_w=radius)

    rng = np_rng(derive_seed(config.seed, "es"))
    start_idx = rng.choice(len(dataset), size=min(config.n_start_states, len(dataset)), replace=False)
    start_states = as_tensor(dataset.states[start_idx], anchor_policy.net)
    plan = RolloutPlan(horizon=config.rollout_horizon, gamma=gamma,
                       member_selection=config.member_selection)

    def fitness(params: np.ndarray) -> float:
        log.candidate_distances.append(constraint.distance(params))
        set_flat_params(anchor_policy.net, params)
        with torch.no_grad():
            value = virtual_rollout_return(ensemble, anchor_policy.net, plan, start_states,
                                           rng=rng, reward_fn=reward_fn)
        return float(value)

    anchor_fitness = fitness(anchor)
    log.anchor_fitness = anchor_fitness
    if radius == 0.0:
        set_flat_params(anchor_policy.net, anchor)
        warnings.warn("weight constraint radius is 0; returning the anchor policy")
        return anchor_policy, history, log

    population = [(anchor.copy(), anchor_fitness)]
    for _ in range(config.mu - 1):
        cand = constraint.project(anchor + rng.normal(0.0, config.mutation_std, size=anchor.shape))
        population.append((cand, fitness(cand)))
    population.sort(key=lambda cf: -cf[1])

    for gen in range(1, config.generations + 1):
        offspring = []
        for _ in range(config.lam):
            parent = population[int(rng.integers(len(population)))][0]
            cand = constraint.project(parent + rng.normal(0.0, config.mutation_std, size=anchor.shape))
            offspring.append((cand, fitness(cand)))
        population = sorted(population + offspring, key=lambda cf: -cf[1])[: config.mu]
        best = population[0]
        log.generations.append({
            "generation": gen,
            "best_fitness": best[1],
            "mean_fitness": float(np.mean([f for _, f in population])),
            "worst_fitness": population[-1][1],
            "mean_distance": float(np.mean([constraint.distance(p) for p, _ in population])),
        })
        if eval_hook is not None and gen % config.eval_interval == 0:
            set_flat_params(anchor_policy.net, best[0])
            history.append(gen, float(eval_hook(gen, anchor_policy)))

    best_params, best_fitness = population[0]
    if best_fitness <= anchor_fitness:
        warnings.warn(
            f"no candidate beat the anchor (best {best_fitness:.6g} <= anchor "
            f"{anchor_fitness:.6g}); returning the anchor policy"
        )
        best_params = anchor
    set_flat_params(anchor_policy.net, best_params)
    return anchor_policy, history, log
