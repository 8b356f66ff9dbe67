"""Rollout-gradient search, behavior cloning, and weight-space search."""

from __future__ import annotations

import numpy as np
import pytest
import torch

from offrlbench.core import (
    Dataset,
    DatasetMeta,
    EnvironmentSpec,
    discounted_return,
    np_rng,
    rollout,
    torch_gen,
)
from offrlbench.core.rollout import Environment
from offrlbench.modelbased import (
    MooseConfig,
    RolloutPlan,
    WeightConstraint,
    WsbcConfig,
    action_mse,
    behavior_clone,
    moose_objective,
    moose_train,
    unroll,
    virtual_rollout_return,
    wsbc_search,
)
from offrlbench.nets import (
    VAEConfig,
    DynamicsConfig,
    as_tensor,
    fit_behavior_vae,
    make_deterministic_policy,
    seeded_init_,
    vae_penalty,
)
from offrlbench.nets.policies import DeterministicPolicyNet


class ScalarLQEnv(Environment):
    """Deterministic scalar linear system with quadratic cost.

    s' = A s + B u, reward = -(q s^2 + r u^2); exactly solvable by a
    Riccati recursion, so it anchors the model-based optimizers."""

    A, B, Q, R = 0.9, 0.5, 1.0, 0.1

    def __init__(self, horizon=20, discount=0.97):
        self.spec = EnvironmentSpec(1, 1, [-1.0], [1.0], horizon, discount, env_name="lq")
        self._s = np.zeros(1)

    def reset(self, rng):
        self._s = np.array([rng.uniform(-0.5, 0.5)])
        return self._s.copy()

    def reward(self, state, action):
        return -(self.Q * float(state[0]) ** 2 + self.R * float(action[0]) ** 2)

    def step(self, action, rng):
        r = self.reward(self._s, action)
        self._s = self.A * self._s + self.B * np.asarray(action)
        return self._s.copy(), r, False


class LQOracleModel:
    """The LQ dynamics as a differentiable rollout-protocol model."""

    n_members = 1

    def __init__(self, dtype=torch.float64):
        self.dtype = dtype

    def init_hidden(self, batch):
        return None

    def rollout_step(self, states, actions, member, hidden=None):
        next_states = ScalarLQEnv.A * states + ScalarLQEnv.B * actions
        rewards = -(ScalarLQEnv.Q * states[:, 0] ** 2 + ScalarLQEnv.R * actions[:, 0] ** 2)
        return next_states, rewards, hidden


def lq_optimal_return(start_states: np.ndarray, horizon: int, gamma: float) -> float:
    """Backward Riccati recursion for the discounted finite-horizon LQ
    optimum; returns the mean optimal return over the given starts."""
    a, b, q, r = ScalarLQEnv.A, ScalarLQEnv.B, ScalarLQEnv.Q, ScalarLQEnv.R
    p = 0.0
    for _ in range(horizon):
        p = q + gamma * p * a**2 - (gamma * p * a * b) ** 2 / (r + gamma * p * b**2)
    return float(-p * np.mean(start_states[:, 0] ** 2))


def lq_dataset(n=1200, seed=0):
    rng = np_rng(seed)
    states = rng.uniform(-1.0, 1.0, (n, 1))
    actions = np.clip(-0.8 * states + 0.1 * rng.standard_normal((n, 1)), -1, 1)
    next_states = ScalarLQEnv.A * states + ScalarLQEnv.B * actions
    rewards = -(ScalarLQEnv.Q * states[:, 0] ** 2 + ScalarLQEnv.R * actions[:, 0] ** 2)
    spec = EnvironmentSpec(1, 1, [-1.0], [1.0], 20, 0.97, env_name="lq")
    meta = DatasetMeta("lq", "custom", 0.0, 1, seed)
    return Dataset.from_arrays(states, actions, rewards, next_states, meta, spec, [0])


class TestBehaviorClone:
    def test_linear_policy_recovered(self):
        rng = np_rng(1)
        states = rng.uniform(-1, 1, (1500, 2))
        weights = np.array([[0.6], [-0.4]])
        actions = np.tanh(states @ weights)
        spec = EnvironmentSpec(2, 1, [-1.0], [1.0], 10, 0.97, env_name="toy")
        ds = Dataset.from_arrays(states, actions, np.zeros(1500), states,
                                 DatasetMeta("toy", "custom", 0.0, 1, 0), spec, [0])
        policy = behavior_clone(ds, hidden=(32, 32), steps=2500, seed=2)
        holdout = rng.uniform(-1, 1, (300, 2))
        pred = np.stack([policy.act(s) for s in holdout])
        target = np.tanh(holdout @ weights)
        assert np.mean((pred - target) ** 2) < 1e-3

    def test_memorizes_single_pair(self):
        from conftest import tiny_dataset

        ds = tiny_dataset([([0.2, -0.7], [0.3], 0.0, [0.2, -0.7])] * 32)
        policy = behavior_clone(ds, hidden=(16, 16), steps=600, seed=3)
        assert np.allclose(policy.act(np.array([0.2, -0.7])), [0.3], atol=5e-3)

    def test_deterministic_given_seed(self, surrogate_dataset):
        p1 = behavior_clone(surrogate_dataset, hidden=(16, 16), steps=200, seed=4)
        p2 = behavior_clone(surrogate_dataset, hidden=(16, 16), steps=200, seed=4)
        assert np.array_equal(p1.get_params(), p2.get_params())

    def test_beats_random_initialization(self, surrogate_dataset):
        trained = behavior_clone(surrogate_dataset, hidden=(16, 16), steps=800, seed=5)
        random_policy = make_deterministic_policy(surrogate_dataset.spec, hidden=(16, 16), seed=6)
        assert action_mse(trained, surrogate_dataset) < action_mse(random_policy, surrogate_dataset)


class TestVirtualRollout:
    def _policy(self, dtype=torch.float64, seed=10):
        net = DeterministicPolicyNet(1, 1, (8,), [-1.0], [1.0], dtype=dtype)
        seeded_init_(net, torch_gen(seed))
        return net

    def test_single_step_is_mean_first_reward(self):
        model = LQOracleModel()
        net = self._policy()
        starts = torch.linspace(-0.5, 0.5, 16, dtype=torch.float64).unsqueeze(1)
        plan = RolloutPlan(horizon=1, gamma=0.97)
        value = virtual_rollout_return(model, net, plan, starts)
        with torch.no_grad():
            a = net(starts)
            expected = -(ScalarLQEnv.Q * starts[:, 0] ** 2 + ScalarLQEnv.R * a[:, 0] ** 2).mean()
        assert value.item() == pytest.approx(expected.item(), abs=1e-12)

    def test_perfect_model_matches_real_env(self):
        env = ScalarLQEnv(horizon=12)
        net = self._policy(seed=11)

        class Handle:
            kind = "deterministic"
            history_length = 0

            def act(self, obs, rng=None):
                with torch.no_grad():
                    return net(torch.as_tensor(obs, dtype=torch.float64).unsqueeze(0)).squeeze(0).numpy()

        returns, starts = [], []
        for seed in range(8):
            transitions, ret = rollout(env, Handle(), 12, rng_seed=seed)
            returns.append(ret)
            starts.append(transitions[0].state)
        value = virtual_rollout_return(
            LQOracleModel(), net, RolloutPlan(horizon=12, gamma=env.spec.discount),
            torch.as_tensor(np.stack(starts), dtype=torch.float64),
        )
        assert value.item() == pytest.approx(float(np.mean(returns)), abs=1e-6)

    def test_gradient_matches_finite_differences_h3(self):
        from offrlbench.nets import assert_gradients_match

        net = self._policy(seed=12)
        starts = torch.linspace(-0.4, 0.4, 8, dtype=torch.float64).unsqueeze(1)
        plan = RolloutPlan(horizon=3, gamma=0.97)
        report = assert_gradients_match(
            net,
            lambda: -virtual_rollout_return(LQOracleModel(), net, plan, starts),
            tol=1e-3,
        )
        assert report.max_rel_error < 1e-3

    def test_truncates_on_nonfinite_model_output(self):
        class ExplodingModel:
            n_members = 1

            def init_hidden(self, batch):
                return None

            def rollout_step(self, states, actions, member, hidden=None):
                if self.calls >= 2:
                    return states * float("nan"), torch.zeros(states.shape[0]), hidden
                self.calls += 1
                return states, torch.ones(states.shape[0], dtype=states.dtype), hidden

            calls = 0

        net = self._policy(seed=13)
        starts = torch.zeros(4, 1, dtype=torch.float64)
        result = unroll(ExplodingModel(), net, RolloutPlan(horizon=10, gamma=0.97), starts)
        assert result.truncated
        assert result.steps == 2

    def test_member_selection_round_robin_vs_mean(self):
        class TwoConstModel:
            n_members = 2

            def init_hidden(self, batch):
                return None

            def rollout_step(self, states, actions, member, hidden=None):
                reward = torch.full((states.shape[0],), 1.0 if member == 0 else 3.0,
                                    dtype=states.dtype)
                return states, reward, hidden

        net = self._policy(seed=14)
        starts = torch.zeros(3, 1, dtype=torch.float64)
        rr = virtual_rollout_return(TwoConstModel(), net, RolloutPlan(horizon=2, gamma=1.0), starts)
        assert rr.item() == pytest.approx(1.0 + 3.0)  # members alternate
        mean = virtual_rollout_return(TwoConstModel(), net,
                                      RolloutPlan(horizon=2, gamma=1.0, member_selection="mean"), starts)
        assert mean.item() == pytest.approx(2.0 + 2.0)


class TestMoose:
    def test_imitation_limit_reward_weight_zero(self, surrogate_dataset_pure):
        ds = surrogate_dataset_pure
        cfg = MooseConfig(
            seed=0, hidden=(32, 32), policy_lr=1e-3, total_steps=800, eval_interval=10_000,
            rollout_horizon=5, n_members=2,
            dynamics=DynamicsConfig(hidden=(32, 32), steps=600),
            vae=VAEConfig(hidden=(32, 32), steps=1200),
        )

        # reward weight 0: zero out model rewards, keep the penalty
        def zero_reward(states, actions):
            return torch.zeros(states.shape[0], dtype=states.dtype)

        policy, _ = moose_train(ds, cfg, reward_fn=zero_reward)
        random_policy = make_deterministic_policy(ds.spec, hidden=(32, 32), seed=123)
        trained_mse = action_mse(policy, ds)
        random_mse = action_mse(random_policy, ds)
        assert trained_mse < 0.1 * random_mse

    def test_reaches_lq_analytic_optimum_with_perfect_model(self):
        ds = lq_dataset()
        horizon, gamma = 20, 0.97
        cfg = MooseConfig(seed=1, hidden=(16, 16), policy_lr=1e-2, total_steps=500,
                          eval_interval=10_000, rollout_horizon=horizon, gamma=gamma,
                          penalty_weight=0.0)
        oracle = LQOracleModel(dtype=torch.float32)
        policy, _ = moose_train(ds, cfg, reward_fn=None, pretrained=(oracle, None))
        starts = np.linspace(-0.5, 0.5, 64)[:, None]
        achieved = virtual_rollout_return(
            oracle, policy.net, RolloutPlan(horizon=horizon, gamma=gamma),
            as_tensor(starts, policy.net),
        ).item()
        optimal = lq_optimal_return(starts, horizon, gamma)
        assert achieved >= optimal - 0.05 * abs(optimal)

    def test_deterministic_given_seed(self, surrogate_dataset):
        cfg = MooseConfig(seed=2, hidden=(16, 16), total_steps=50, eval_interval=10_000,
                          rollout_horizon=3, n_members=2,
                          dynamics=DynamicsConfig(hidden=(16, 16), steps=100),
                          vae=VAEConfig(hidden=(16, 16), steps=100))
        p1, _ = moose_train(surrogate_dataset, cfg)
        p2, _ = moose_train(surrogate_dataset, cfg)
        assert np.array_equal(p1.get_params(), p2.get_params())

    def test_penalty_gradient_vanishes_at_reconstruction_fixed_point(self, surrogate_dataset):
        vae = fit_behavior_vae(surrogate_dataset, VAEConfig(hidden=(32, 32), steps=500, seed=3))
        s = as_tensor(surrogate_dataset.states[:1], vae)
        a = as_tensor(surrogate_dataset.actions[:1], vae)
        with torch.no_grad():
            for _ in range(200):  # iterate to a reconstruction fixed point
                a = vae.reconstruct(s, a)
            gap = (a - vae.reconstruct(s, a)).abs().max().item()
        assert gap < 1e-5
        a_var = a.clone().requires_grad_(True)
        pen = vae_penalty(vae, s, a_var).sum()
        pen.backward()
        assert a_var.grad.abs().max().item() < 1e-4


class TestWsbc:
    def test_weight_constraint_projection(self):
        anchor = np.zeros(4)
        c = WeightConstraint(anchor=anchor, radius=1.0)
        inside = np.array([0.1, 0.0, 0.0, 0.0])
        assert np.array_equal(c.project(inside), inside)
        outside = np.array([3.0, 0.0, 0.0, 4.0])
        proj = c.project(outside)
        assert c.satisfied(proj)
        assert np.linalg.norm(proj) == pytest.approx(1.0 - 1e-6, rel=1e-9)
        # direction preserved
        assert np.allclose(proj / np.linalg.norm(proj), outside / 5.0)

    def test_zero_radius_returns_anchor(self):
        ds = lq_dataset(n=400)
        cfg = WsbcConfig(seed=0, hidden=(8, 8), generations=3, epsilon_w=0.0,
                         bc_steps=300, n_members=1, rollout_horizon=3,
                         dynamics=DynamicsConfig(rnn_hidden=8, steps=100))
        with pytest.warns(UserWarning, match="radius is 0"):
            policy, history, log = wsbc_search(ds, cfg)
        anchor = behavior_clone(ds, hidden=(8, 8), steps=300,
                                seed=__import__("offrlbench.core.rng", fromlist=["derive_seed"]).derive_seed(0, "anchor"))
        assert np.array_equal(policy.get_params(), anchor.get_params())
        assert len(log.generations) == 0

    def test_constraint_audit_and_monotone_fitness(self):
        ds = lq_dataset(n=600)
        cfg = WsbcConfig(seed=1, hidden=(8, 8), mu=4, lam=8, generations=8,
                         epsilon_w=0.5, mutation_std=0.05, bc_steps=400,
                         n_members=1, rollout_horizon=5, n_start_states=16,
                         dynamics=DynamicsConfig(rnn_hidden=8, steps=300))
        policy, _, log = wsbc_search(ds, cfg)
        assert log.candidate_distances  # every evaluation audited
        assert all(d < cfg.epsilon_w or d == 0.0 for d in log.candidate_distances)
        best = [g["best_fitness"] for g in log.generations]
        assert all(b2 >= b1 - 1e-12 for b1, b2 in zip(best, best[1:]))
        final = np.asarray(policy.get_params())
        anchor_dist = log.candidate_distances[0]
        assert anchor_dist == 0.0

    def test_improves_over_anchor_with_generous_radius(self):
        ds = lq_dataset(n=800)
        cfg = WsbcConfig(seed=2, hidden=(8, 8), mu=6, lam=12, generations=12,
                         epsilon_w=5.0, mutation_std=0.1, bc_steps=400,
                         n_members=1, rollout_horizon=10, n_start_states=32,
                         gamma=0.97)
        oracle = LQOracleModel(dtype=torch.float32)
        policy, _, log = wsbc_search(ds, cfg, pretrained=oracle)
        best = log.generations[-1]["best_fitness"]
        assert best >= log.anchor_fitness

    def test_start_states_are_dataset_rows(self):
        ds = lq_dataset(n=300)
        cfg = WsbcConfig(seed=3, hidden=(8, 8), mu=2, lam=4, generations=2,
                         epsilon_w=0.5, bc_steps=100, n_members=1,
                         rollout_horizon=3, n_start_states=8)
        captured = {}
        import offrlbench.modelbased.wsbc as wsbc_mod

        original = wsbc_mod.virtual_rollout_return

        def spy(model, policy_net, plan, start_states, **kw):
            captured["starts"] = start_states.numpy()
            return original(model, policy_net, plan, start_states, **kw)

        wsbc_mod.virtual_rollout_return = spy
        try:
            wsbc_search(ds, cfg, pretrained=LQOracleModel(dtype=torch.float32))
        finally:
            wsbc_mod.virtual_rollout_return = original
        for start in captured["starts"]:
            nearest = np.abs(ds.states - start[None, :]).max(axis=1).min()
            assert nearest < 1e-5  # float32 cast of an exact dataset row


class TestSharedPrimitive:
    def test_moose_and_wsbc_share_the_model_return(self):
        # With zero penalty weight the two objectives are the same
        # virtual-return computation on identical inputs.
        net = DeterministicPolicyNet(1, 1, (8,), [-1.0], [1.0], dtype=torch.float64)
        seeded_init_(net, torch_gen(20))
        starts = torch.linspace(-0.5, 0.5, 16, dtype=torch.float64).unsqueeze(1)
        plan = RolloutPlan(horizon=7, gamma=0.97, penalty_weight=0.0)
        model = LQOracleModel()
        moose_value = moose_objective(model, net, None, plan, starts)
        wsbc_value = virtual_rollout_return(model, net, plan, starts)
        assert moose_value.item() == pytest.approx(wsbc_value.item(), abs=1e-12)
