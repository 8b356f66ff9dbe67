"""Algorithm registry: uniform training interface over all families,
config construction from plain dicts, and scale presets.

The "desk" scale uses small networks and short budgets sized for CI-like
machines; "full" uses the library defaults. Benchmark-fidelity runs
against the external industrial system are out of scope either way.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields, is_dataclass

from ..core.rng import derive_seed
from ..core.types import Dataset, PolicyHandle, RunHistory
from ..envs.baselines import UniformRandomPolicy
from ..hybrid.train import HybridConfig, train_hybrid
from ..modelbased.bc import behavior_clone
from ..modelbased.moose import MooseConfig, moose_train
from ..modelbased.wsbc import WsbcConfig, wsbc_search
from ..modelfree.config import AlgoConfig
from ..modelfree.train import train_modelfree
from ..nets.dynamics import DynamicsConfig
from ..nets.vae import VAEConfig

ALGORITHM_FAMILIES = {
    "bcq": "modelfree",
    "bear": "modelfree",
    "brac_v": "modelfree",
    "cql": "modelfree",
    "td3bc": "modelfree",
    "moose": "modelbased",
    "wsbc": "modelbased",
    "morel": "hybrid",
    "mopo": "hybrid",
    "bc": "reference",
    "random": "reference",
}

ALGORITHM_IDS = tuple(ALGORITHM_FAMILIES)


@dataclass
class ReferenceConfig:
    """Budget for the non-learning reference policies (uniform random and
    plain behavior cloning) so their histories share the evaluation grid."""

    algorithm_id: str = "random"
    seed: int = 0
    total_steps: int = 3000
    eval_interval: int = 250
    hidden: tuple[int, ...] = (64, 64)
    bc_steps: int = 2000
    bc_lr: float = 1e-3

    def __post_init__(self):
        self.hidden = tuple(self.hidden)


_CONFIG_CLASSES = {
    "modelfree": AlgoConfig,
    "moose": MooseConfig,
    "wsbc": WsbcConfig,
    "hybrid": HybridConfig,
    "reference": ReferenceConfig,
}

_NESTED = {"dynamics": DynamicsConfig, "vae": VAEConfig}

# Desk-scale overrides per algorithm; anything not listed keeps the
# config class default.
DESK_PRESETS: dict[str, dict] = {
    "bcq": dict(hidden=(64, 64), total_steps=3000, eval_interval=250, vae_steps=1500,
                vae_hidden=(64, 64), q_lr=1e-3, policy_lr=1e-3, vae_lr=1e-3),
    "bear": dict(hidden=(64, 64), total_steps=3000, eval_interval=250, vae_steps=1500,
                 vae_hidden=(64, 64), q_lr=1e-3, policy_lr=1e-3, bear_lambda=50.0),
    "brac_v": dict(hidden=(64, 64), total_steps=3000, eval_interval=250, behavior_steps=1500,
                   q_lr=1e-3, policy_lr=1e-3, brac_alpha=0.3),
    "cql": dict(hidden=(64, 64), total_steps=3000, eval_interval=250,
                q_lr=1e-3, policy_lr=1e-3, cql_alpha=1.0),
    "td3bc": dict(hidden=(64, 64), total_steps=3000, eval_interval=250,
                  q_lr=1e-3, policy_lr=1e-3),
    "moose": dict(hidden=(64, 64), total_steps=1200, eval_interval=100, rollout_horizon=10,
                  n_members=3, policy_lr=1e-3,
                  dynamics=dict(hidden=(64, 64), steps=1500, lr=1e-3),
                  vae=dict(hidden=(64, 64), steps=1500)),
    "wsbc": dict(hidden=(32, 32), generations=30, eval_interval=3, rollout_horizon=10,
                 n_members=2, bc_steps=1500,
                 dynamics=dict(rnn_hidden=32, steps=1200, lr=1e-3, seq_len=10)),
    "morel": dict(hidden=(64, 64), total_steps=3000, eval_interval=250, rollout_length=5,
                  synth_cadence=250, rollout_batch=100, n_members=3,
                  q_lr=1e-3, policy_lr=1e-3,
                  dynamics=dict(hidden=(64, 64), steps=1500, lr=1e-3)),
    "mopo": dict(hidden=(64, 64), total_steps=3000, eval_interval=250, rollout_length=5,
                 synth_cadence=250, rollout_batch=100, n_members=3,
                 q_lr=1e-3, policy_lr=1e-3,
                 dynamics=dict(hidden=(64, 64), steps=1500, lr=1e-3)),
    "bc": dict(total_steps=3000, eval_interval=250, hidden=(64, 64), bc_steps=2000),
    "random": dict(total_steps=3000, eval_interval=250),
}

SCALES = ("desk", "full")


def config_class_for(algorithm_id: str):
    family = ALGORITHM_FAMILIES.get(algorithm_id)
    if family is None:
        raise ValueError(f"unknown algorithm {algorithm_id!r}, expected one of {ALGORITHM_IDS}")
    if family == "modelbased":
        return _CONFIG_CLASSES[algorithm_id]
    return _CONFIG_CLASSES[family]


def make_config(algorithm_id: str, seed: int = 0, scale: str = "desk", overrides: dict | None = None):
    """Build the algorithm's config dataclass from preset + overrides.

    Nested dynamics/vae sections may be given as plain dicts.
    """
    if scale not in SCALES:
        raise ValueError(f"scale must be one of {SCALES}")
    cls = config_class_for(algorithm_id)
    merged: dict = {}
    if scale == "desk":
        merged.update(DESK_PRESETS.get(algorithm_id, {}))
    merged.update(overrides or {})
    merged["algorithm_id"] = algorithm_id
    merged["seed"] = seed

    known = {f.name for f in fields(cls)}
    unknown = set(merged) - known
    if unknown:
        raise ValueError(f"unknown config fields for {algorithm_id}: {sorted(unknown)}")
    for key, sub_cls in _NESTED.items():
        if key in merged and isinstance(merged[key], dict):
            sub = dict(merged[key])
            sub.setdefault("seed", derive_seed(seed, algorithm_id, key))
            merged[key] = sub_cls(**sub)
    return cls(**merged)


def _train_reference(dataset: Dataset, config: ReferenceConfig, eval_hook):
    history = RunHistory(
        run_id=f"{config.algorithm_id}-{dataset.meta.dataset_id}-seed{config.seed}",
        algorithm_id=config.algorithm_id,
        dataset_id=dataset.meta.dataset_id,
        seed=config.seed,
    )
    if config.algorithm_id == "random":
        policy: PolicyHandle = UniformRandomPolicy(dataset.spec.action_low, dataset.spec.action_high)
    else:
        policy = behavior_clone(
            dataset, hidden=config.hidden, steps=config.bc_steps, lr=config.bc_lr,
            seed=derive_seed(config.seed, "bc"),
        )
    if eval_hook is not None:
        for step in range(config.eval_interval, config.total_steps + 1, config.eval_interval):
            history.append(step, float(eval_hook(step, policy)))
    return policy, history


def train_algorithm(
    algorithm_id: str,
    dataset: Dataset,
    config,
    eval_hook=None,
) -> tuple[PolicyHandle, RunHistory]:
    """Dispatch one training job to its family's entry point."""
    family = ALGORITHM_FAMILIES.get(algorithm_id)
    if family is None:
        raise ValueError(f"unknown algorithm {algorithm_id!r}, expected one of {ALGORITHM_IDS}")
    if family == "modelfree":
        return train_modelfree(algorithm_id, dataset, config, eval_hook)
    if algorithm_id == "moose":
        return moose_train(dataset, config, eval_hook)
    if algorithm_id == "wsbc":
        policy, history, _ = wsbc_search(dataset, config, eval_hook)
        return policy, history
    if family == "hybrid":
        policy, history, _ = train_hybrid(algorithm_id, dataset, config, eval_hook)
        return policy, history
    return _train_reference(dataset, config, eval_hook)


def config_to_dict(config) -> dict:
    out = {}
    for f in fields(config):
        value = getattr(config, f.name)
        if is_dataclass(value):
            value = {sf.name: getattr(value, sf.name) for sf in fields(value)}
        if isinstance(value, tuple):
            value = list(value)
        out[f.name] = value
    return out
