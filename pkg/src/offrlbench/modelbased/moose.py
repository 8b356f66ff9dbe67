"""Gradient-based policy search through deterministic model rollouts with
a reconstruction penalty tying actions to the behavior distribution."""

from __future__ import annotations

from dataclasses import dataclass, field

import torch

from ..core.rng import derive_seed, seed_everything, torch_gen
from ..core.types import Dataset, RunHistory
from ..errors import DivergenceError
from ..nets.dynamics import DynamicsConfig, fit_dynamics_ensemble
from ..nets.modules import as_tensor
from ..nets.policies import TorchPolicy, make_deterministic_policy
from ..nets.vae import VAEConfig, fit_behavior_vae, vae_penalty
from .rollout import RolloutPlan, unroll


@dataclass
class MooseConfig:
    algorithm_id: str = "moose"
    seed: int = 0
    hidden: tuple[int, ...] = (256, 256)
    policy_lr: float = 3e-4
    total_steps: int = 3000
    eval_interval: int = 300
    start_state_batch: int = 128
    rollout_horizon: int = 10
    gamma: float | None = None
    penalty_weight: float = 1.0
    member_selection: str = "round_robin"
    n_members: int = 4
    max_lr_backoffs: int = 3
    dynamics: DynamicsConfig = field(default_factory=DynamicsConfig)
    vae: VAEConfig = field(default_factory=VAEConfig)

    def __post_init__(self):
        if self.penalty_weight < 0:
            raise ValueError("penalty_weight must be >= 0")
        self.hidden = tuple(self.hidden)


def moose_objective(model, policy_net, vae, plan: RolloutPlan, start_states,
                    rng=None, reward_fn=None) -> torch.Tensor:
    """Discounted model return minus the per-step reconstruction penalty,
    both summed along the same unrolled trajectories."""
    result = unroll(model, policy_net, plan, start_states, rng=rng, reward_fn=reward_fn)
    if result.steps == 0:
        raise DivergenceError("model rollout produced no finite steps")
    total = torch.zeros((), dtype=start_states.dtype)
    factor = 1.0
    for s, a, r in zip(result.states, result.actions, result.rewards):
        step_value = factor * r
        if plan.penalty_weight > 0.0:
            step_value = step_value - plan.penalty_weight * vae_penalty(vae, s, a)
        total = total + step_value.mean()
        factor *= plan.gamma
    return total


def moose_train(
    dataset: Dataset,
    config: MooseConfig,
    eval_hook=None,
    reward_fn=None,
    pretrained=None,
) -> tuple[TorchPolicy, RunHistory]:
    """Fit the dynamics ensemble and behavior VAE, then ascend the
    penalized virtual return.

    `pretrained` optionally supplies (ensemble, vae) to skip refitting;
    `reward_fn` injects a known reward for oracle runs. On exploding
    rollouts the learning rate is halved up to max_lr_backoffs times
    before aborting.
    """
    seed_everything(derive_seed(config.seed, "moose", "global"))
    gamma = config.gamma if config.gamma is not None else dataset.spec.discount
    history = RunHistory(
        run_id=f"moose-{dataset.meta.dataset_id}-seed{config.seed}",
        algorithm_id="moose",
        dataset_id=dataset.meta.dataset_id,
        seed=config.seed,
    )
    if pretrained is not None:
        ensemble, vae = pretrained
    else:
        dyn_cfg = DynamicsConfig(**{**config.dynamics.__dict__, "seed": derive_seed(config.seed, "dyn")})
        ensemble, _ = fit_dynamics_ensemble(dataset, "deterministic_ff", config.n_members, dyn_cfg)
        vae_cfg = VAEConfig(**{**config.vae.__dict__, "seed": derive_seed(config.seed, "vae")})
        vae = fit_behavior_vae(dataset, vae_cfg)

    from ..nets.modules import norm_from_dataset

    policy = make_deterministic_policy(dataset.spec, hidden=config.hidden,
                                       seed=derive_seed(config.seed, "policy"),
                                       state_norm=norm_from_dataset(dataset))
    plan = RolloutPlan(
        horizon=config.rollout_horizon, gamma=gamma,
        member_selection=config.member_selection, penalty_weight=config.penalty_weight,
    )
    states = as_tensor(dataset.states, policy.net)
    gen = torch_gen(derive_seed(config.seed, "starts"))
    lr = config.policy_lr
    opt = torch.optim.Adam(policy.net.parameters(), lr=lr)
    backoffs = 0
    step = 1
    while step <= config.total_steps:
        idx = torch.randint(0, states.shape[0], (min(config.start_state_batch, states.shape[0]),),
                            generator=gen)
        objective = moose_objective(ensemble, policy.net, vae, plan, states[idx], reward_fn=reward_fn)
        loss = -objective
        if not torch.isfinite(loss):
            backoffs += 1
            if backoffs > config.max_lr_backoffs:
                exc = DivergenceError(f"rollout objective non-finite at step {step} after {backoffs - 1} backoffs")
                exc.history = history
                raise exc
            lr *= 0.5
            opt = torch.optim.Adam(policy.net.parameters(), lr=lr)
            continue
        opt.zero_grad(set_to_none=True)
        loss.backward()
        opt.step()
        if eval_hook is not None and step % config.eval_interval == 0:
            history.append(step, float(eval_hook(step, policy)))
        step += 1
    return policy, history
