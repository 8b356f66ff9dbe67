"""Behavior cloning: the anchor policy for weight-space search and the
imitation reference for the harness."""

from __future__ import annotations

import torch

from ..core.rng import derive_seed, torch_gen
from ..core.types import Dataset
from ..errors import DivergenceError
from ..nets.modules import as_tensor
from ..nets.policies import TorchPolicy, make_deterministic_policy


def behavior_clone(
    dataset: Dataset,
    hidden: tuple[int, ...] = (256, 256),
    steps: int = 3000,
    batch_size: int = 256,
    lr: float = 1e-3,
    seed: int = 0,
) -> TorchPolicy:
    """Deterministic policy minimizing mean squared action error."""
    from ..nets.modules import norm_from_dataset

    handle = make_deterministic_policy(dataset.spec, hidden=hidden, seed=derive_seed(seed, "bc_init"),
                                       state_norm=norm_from_dataset(dataset))
    net = handle.net
    gen = torch_gen(derive_seed(seed, "bc_batches"))
    states = as_tensor(dataset.states, net)
    actions = as_tensor(dataset.actions, net)
    opt = torch.optim.Adam(net.parameters(), lr=lr)
    n = states.shape[0]
    for step in range(steps):
        idx = torch.randint(0, n, (min(batch_size, n),), generator=gen)
        loss = ((net(states[idx]) - actions[idx]) ** 2).sum(dim=-1).mean()
        if not torch.isfinite(loss):
            raise DivergenceError(f"behavior cloning diverged at step {step}")
        opt.zero_grad(set_to_none=True)
        loss.backward()
        opt.step()
    return handle


def action_mse(policy_net, dataset: Dataset) -> float:
    """Mean squared action error of a policy over a dataset."""
    net = policy_net.net if isinstance(policy_net, TorchPolicy) else policy_net
    with torch.no_grad():
        pred = net(as_tensor(dataset.states, net))
        err = ((pred - as_tensor(dataset.actions, net)) ** 2).sum(dim=-1)
    return float(err.mean())
