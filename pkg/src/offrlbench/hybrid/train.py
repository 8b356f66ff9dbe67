"""Dyna-style training loops: model rollouts feed a model-free improver."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import torch

from ..core.rng import derive_seed, np_rng, seed_everything, torch_gen
from ..core.types import Dataset, RunHistory
from ..errors import DivergenceError
from ..nets.dynamics import DynamicsConfig, DynamicsEnsemble, fit_dynamics_ensemble
from ..nets.policies import TorchGaussianPolicy, make_gaussian_policy
from ..nets.qensemble import QEnsemble, TargetWeighting
from .buffer import ReplayBuffer
from .improve import offpolicy_improve
from .synth import SynthStats, synthesize_rollouts
from .uncertainty import calibrate_usad

HYBRID_IDS = ("morel", "mopo")


@dataclass
class HybridConfig:
    algorithm_id: str = "mopo"
    seed: int = 0
    batch_size: int = 256
    q_lr: float = 3e-4
    policy_lr: float = 3e-4
    gamma: float | None = None
    polyak: float = 0.005
    n_q_members: int = 2
    weighting: str = "min"
    weighting_lam: float = 0.75
    hidden: tuple[int, ...] = (256, 256)
    total_steps: int = 10_000
    eval_interval: int = 1_000

    rollout_length: int = 5
    rollout_batch: int = 100        # start states per synthesis cadence
    synth_cadence: int = 250        # improvement steps between syntheses; 0 disables synthesis
    rho_real: float = 0.05
    buffer_capacity: int = 50_000

    mopo_lambda: float = 1.0
    entropy_weight: float | None = None  # None: 0.05 for mopo, 0.0 for morel
    usad_percentile: float = 95.0
    halt_margin: float = 1.0        # halt reward = min reward - margin * reward std

    n_members: int = 4
    dynamics: DynamicsConfig = field(default_factory=DynamicsConfig)

    def __post_init__(self):
        if self.algorithm_id not in HYBRID_IDS:
            raise ValueError(f"algorithm_id must be one of {HYBRID_IDS}")
        if not (0.0 <= self.rho_real <= 1.0):
            raise ValueError("rho_real must be in [0, 1]")
        if self.mopo_lambda < 0:
            raise ValueError("mopo_lambda must be >= 0")
        self.hidden = tuple(self.hidden)

    def resolved_entropy_weight(self) -> float:
        if self.entropy_weight is not None:
            return self.entropy_weight
        return 0.05 if self.algorithm_id == "mopo" else 0.0


def train_hybrid(
    algorithm_id: str,
    dataset: Dataset,
    config: HybridConfig,
    eval_hook=None,
    pretrained: DynamicsEnsemble | None = None,
) -> tuple[TorchGaussianPolicy, RunHistory, list[SynthStats]]:
    """Alternate model-rollout synthesis with off-policy improvement.

    Returns the final policy, the evaluation history, and per-cadence
    synthesis statistics.
    """
    if algorithm_id not in HYBRID_IDS:
        raise ValueError(f"unknown hybrid algorithm {algorithm_id!r}")
    if config.algorithm_id != algorithm_id:
        raise ValueError(f"config.algorithm_id {config.algorithm_id!r} != requested {algorithm_id!r}")
    seed_everything(derive_seed(config.seed, algorithm_id, "global"))
    spec = dataset.spec
    gamma = config.gamma if config.gamma is not None else spec.discount
    history = RunHistory(
        run_id=f"{algorithm_id}-{dataset.meta.dataset_id}-seed{config.seed}",
        algorithm_id=algorithm_id,
        dataset_id=dataset.meta.dataset_id,
        seed=config.seed,
    )

    kind = "gaussian_ff" if algorithm_id == "mopo" else "deterministic_ff"
    if pretrained is not None:
        if algorithm_id == "mopo" and pretrained.kind != "gaussian_ff":
            raise ValueError("mopo needs a gaussian dynamics ensemble")
        ensemble = pretrained
    else:
        dyn_cfg = DynamicsConfig(**{**config.dynamics.__dict__, "seed": derive_seed(config.seed, "dyn")})
        ensemble, _ = fit_dynamics_ensemble(dataset, kind, config.n_members, dyn_cfg)

    gate = None
    halt_reward = None
    if algorithm_id == "morel":
        gate = calibrate_usad(ensemble, dataset, config.usad_percentile)
        halt_reward = float(dataset.rewards.min() - config.halt_margin * max(dataset.rewards.std(), 1e-12))

    from ..nets.modules import norm_from_dataset

    state_norm = norm_from_dataset(dataset)
    policy = make_gaussian_policy(spec, hidden=config.hidden, seed=derive_seed(config.seed, "policy"),
                                  state_norm=state_norm)
    qe = QEnsemble(
        spec.state_dim, spec.action_dim, config.n_q_members, config.hidden,
        TargetWeighting(config.weighting, config.weighting_lam),
        seed=derive_seed(config.seed, "q_ensemble"),
        state_norm=state_norm,
    )
    pi_opt = torch.optim.Adam(policy.net.parameters(), lr=config.policy_lr)
    q_opt = torch.optim.Adam(qe.trainable_parameters(), lr=config.q_lr)

    buffer = ReplayBuffer(
        spec.state_dim, spec.action_dim,
        capacity_real=max(len(dataset), 1), capacity_synthetic=config.buffer_capacity,
    )
    buffer.add_batch(dataset.states, dataset.actions, dataset.rewards, dataset.next_states, real=True)

    sample_rng = np_rng(derive_seed(config.seed, "buffer"))
    gen = torch_gen(derive_seed(config.seed, "improve"))
    ent = config.resolved_entropy_weight()
    rho = config.rho_real if config.synth_cadence > 0 else 1.0
    synth_log: list[SynthStats] = []
    cadence = 0
    step = 0
    while step < config.total_steps:
        if config.synth_cadence > 0 and step % config.synth_cadence == 0:
            synth_rng = np_rng(derive_seed(config.seed, "synth", cadence))
            starts = dataset.states[synth_rng.choice(len(dataset), size=min(config.rollout_batch, len(dataset)),
                                                     replace=False)]
            rows, stats = synthesize_rollouts(
                ensemble, policy, starts, config.rollout_length, synth_rng,
                mode=algorithm_id, gate=gate, halt_reward=halt_reward,
                mopo_lambda=config.mopo_lambda,
                action_low=spec.action_low, action_high=spec.action_high,
            )
            if len(rows):
                buffer.add_batch(rows.states, rows.actions, rows.rewards, rows.next_states, real=False)
            synth_log.append(stats)
            cadence += 1
        losses = offpolicy_improve(
            buffer, policy.net, qe, pi_opt, q_opt, 1, config.batch_size, rho,
            gamma, ent, config.polyak, sample_rng, gen,
        )
        if not all(np.isfinite(v) for v in losses.values()):
            exc = DivergenceError(f"{algorithm_id} diverged at step {step + 1}: {losses}")
            exc.history = history
            raise exc
        step += 1
        if eval_hook is not None and step % config.eval_interval == 0:
            history.append(step, float(eval_hook(step, policy)))
    return policy, history, synth_log
