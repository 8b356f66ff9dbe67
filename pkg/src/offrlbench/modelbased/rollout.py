"""Virtual rollouts through a learned model.

The unroll works against a minimal model protocol (`n_members`,
`init_hidden`, `rollout_step`), so an exact hand-coded model can stand
in for a trained ensemble in oracle tests. Gradients flow through the
whole unrolled graph when the model and policy are differentiable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch

MEMBER_SELECTION = ("round_robin", "random", "mean")


@dataclass
class RolloutPlan:
    """Length, discount, member schedule, and penalty weight for virtual
    rollouts. Start states are always drawn from the dataset."""

    horizon: int = 10
    gamma: float = 0.97
    member_selection: str = "round_robin"
    penalty_weight: float = 1.0

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError("rollout horizon must be >= 1")
        if not (0.0 < self.gamma <= 1.0):
            raise ValueError("gamma must be in (0, 1]")
        if self.member_selection not in MEMBER_SELECTION:
            raise ValueError(f"member_selection must be one of {MEMBER_SELECTION}")
        if self.penalty_weight < 0:
            raise ValueError("penalty_weight must be >= 0")


@dataclass
class UnrollResult:
    states: list[torch.Tensor]   # length = steps, each (batch, state_dim)
    actions: list[torch.Tensor]
    rewards: list[torch.Tensor]  # each (batch,)
    truncated: bool

    @property
    def steps(self) -> int:
        return len(self.rewards)


def unroll(
    model,
    policy_net,
    plan: RolloutPlan,
    start_states: torch.Tensor,
    rng: np.random.Generator | None = None,
    reward_fn=None,
) -> UnrollResult:
    """Closed-loop model rollout of `plan.horizon` steps.

    Recurrent members all observe the shared trajectory (each keeps its
    own hidden state); the schedule picks whose prediction drives the
    next state. `reward_fn(states, actions) -> (batch,)` overrides the
    model's reward head when a known reward is injected.

    A non-finite model output truncates the rollout and sets the flag.
    """
    n = model.n_members
    if plan.member_selection == "random" and rng is None:
        raise ValueError("random member selection needs a generator")
    recurrent = model.init_hidden(start_states.shape[0]) is not None
    hiddens = [model.init_hidden(start_states.shape[0]) for _ in range(n)]

    s = start_states
    states, actions, rewards = [], [], []
    truncated = False
    for t in range(plan.horizon):
        a = policy_net(s)
        if plan.member_selection == "mean" or recurrent:
            stepped = [model.rollout_step(s, a, m, hiddens[m]) for m in range(n)]
            hiddens = [h for (_, _, h) in stepped]
            if plan.member_selection == "mean":
                nxt = torch.stack([ns for (ns, _, _) in stepped]).mean(dim=0)
                r = torch.stack([rw for (_, rw, _) in stepped]).mean(dim=0)
            else:
                pick = t % n if plan.member_selection == "round_robin" else int(rng.integers(n))
                nxt, r = stepped[pick][0], stepped[pick][1]
        else:
            pick = t % n if plan.member_selection == "round_robin" else int(rng.integers(n))
            nxt, r, hiddens[pick] = model.rollout_step(s, a, pick, hiddens[pick])
        if reward_fn is not None:
            r = reward_fn(s, a)
        if not (torch.isfinite(nxt).all() and torch.isfinite(r).all()):
            truncated = True
            break
        states.append(s)
        actions.append(a)
        rewards.append(r)
        s = nxt
    return UnrollResult(states, actions, rewards, truncated)


def virtual_rollout_return(
    model,
    policy_net,
    plan: RolloutPlan,
    start_states: torch.Tensor,
    rng: np.random.Generator | None = None,
    reward_fn=None,
) -> torch.Tensor:
    """Mean discounted return of model rollouts from the given starts.

    Differentiable with respect to the policy parameters when the policy
    and the selected members are feedforward and deterministic.
    """
    result = unroll(model, policy_net, plan, start_states, rng=rng, reward_fn=reward_fn)
    if result.steps == 0:
        raise RuntimeError("virtual rollout produced no finite steps")
    total = torch.zeros((), dtype=start_states.dtype)
    factor = 1.0
    for r in result.rewards:
        total = total + factor * r.mean()
        factor *= plan.gamma
    return total
