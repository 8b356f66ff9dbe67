"""Offline dataset generation by running a behavior policy."""

from __future__ import annotations

from ..core.rng import derive_seed
from ..core.rollout import Environment, rollout
from ..core.types import Dataset, DatasetMeta, PolicyHandle, Transition


def generate_dataset(
    env: Environment,
    behavior: PolicyHandle,
    n_trajectories: int,
    seed: int,
) -> Dataset:
    """Roll the behavior policy for n_trajectories episodes.

    Deterministic given the seed: trajectory i uses its own derived
    stream, so the result does not depend on generation order.
    """
    if n_trajectories < 1:
        raise ValueError("n_trajectories must be >= 1")
    transitions: list[Transition] = []
    starts: list[int] = []
    for i in range(n_trajectories):
        starts.append(len(transitions))
        try:
            traj, _ = rollout(env, behavior, env.spec.horizon, derive_seed(seed, "traj", i))
        except Exception as exc:
            raise RuntimeError(f"environment failed during trajectory {i}: {exc}") from exc
        if not traj:
            raise RuntimeError(f"trajectory {i} produced no transitions")
        transitions.extend(traj)
    meta = DatasetMeta(
        env_name=env.spec.env_name,
        baseline_id=getattr(behavior, "baseline_id", "custom"),
        epsilon=float(getattr(behavior, "epsilon", 0.0)),
        n_trajectories=n_trajectories,
        seed=seed,
    )
    return Dataset(transitions, meta, env.spec, starts)
