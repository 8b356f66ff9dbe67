"""Shared fixtures: small environments and datasets reused across tests."""

from __future__ import annotations

import numpy as np
import pytest
import torch

from offrlbench.core import Dataset, DatasetMeta, EnvironmentSpec, Transition
from offrlbench.envs import (
    BaselinePolicy,
    MixedBehaviorPolicy,
    SurrogateEnv,
    UniformRandomPolicy,
    generate_dataset,
    make_deterministic_chain,
)


@pytest.fixture(scope="session", autouse=True)
def _single_thread_torch():
    torch.set_num_threads(1)


@pytest.fixture(scope="session")
def surrogate_env():
    return SurrogateEnv()


@pytest.fixture(scope="session")
def surrogate_dataset(surrogate_env):
    """Mediocre-baseline dataset with 20% exploration, desk sized."""
    behavior = MixedBehaviorPolicy(BaselinePolicy("mediocre"), 0.2)
    return generate_dataset(surrogate_env, behavior, n_trajectories=30, seed=101)


@pytest.fixture(scope="session")
def surrogate_dataset_pure(surrogate_env):
    """Pure mediocre-baseline dataset (no exploration), for imitation
    probes where the behavior is exactly reconstructable."""
    behavior = MixedBehaviorPolicy(BaselinePolicy("mediocre"), 0.0)
    return generate_dataset(surrogate_env, behavior, n_trajectories=30, seed=101)


@pytest.fixture(scope="session")
def chain_env():
    return make_deterministic_chain(n_states=5, discount=0.9, horizon=60)


@pytest.fixture(scope="session")
def chain_dataset(chain_env):
    """Full-coverage chain data from a uniform-random behavior policy."""
    behavior = UniformRandomPolicy(chain_env.spec.action_low, chain_env.spec.action_high)
    return generate_dataset(chain_env, behavior, n_trajectories=60, seed=202)


def tiny_dataset(transition_rows, action_dim=1, epsilon=0.0):
    """Dataset literal helper for hand-computed examples."""
    transitions = [Transition(*row) for row in transition_rows]
    state_dim = transitions[0].state.shape[0]
    spec = EnvironmentSpec(
        state_dim=state_dim,
        action_dim=action_dim,
        action_low=-np.ones(action_dim),
        action_high=np.ones(action_dim),
        horizon=10,
        discount=0.97,
        env_name="literal",
    )
    meta = DatasetMeta(env_name="literal", baseline_id="custom", epsilon=epsilon,
                       n_trajectories=1, seed=0)
    return Dataset(transitions, meta, spec, [0])
