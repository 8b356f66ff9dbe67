"""Core data model, returns, rollouts, stats, and serialization."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from offrlbench.core import (
    Dataset,
    DatasetMeta,
    EnvironmentSpec,
    RunHistory,
    Transition,
    dataset_delta_stats,
    discounted_return,
    load_dataset,
    load_history,
    rollout,
    save_dataset,
    save_history,
)
from offrlbench.core.rollout import Environment
from offrlbench.core.stats import SIGMA_FLOOR
from offrlbench.envs import make_deterministic_chain

from conftest import tiny_dataset


class ZeroRewardEnv(Environment):
    def __init__(self, state_dim=2):
        self.spec = EnvironmentSpec(
            state_dim=state_dim, action_dim=1,
            action_low=[-1.0], action_high=[1.0],
            horizon=10, discount=0.97, env_name="zero",
        )
        self._s = np.zeros(state_dim)

    def reset(self, rng):
        self._s = np.zeros(self.spec.state_dim)
        return self._s.copy()

    def step(self, action, rng):
        self._s = self._s + 1.0
        return self._s.copy(), 0.0, False


class ConstantPolicy:
    kind = "deterministic"
    history_length = 0

    def __init__(self, action):
        self.action = np.asarray(action, dtype=np.float64)

    def act(self, obs, rng=None):
        return self.action


class TestDiscountedReturn:
    def test_undiscounted_sum(self):
        assert discounted_return([1, 1, 1], 1.0) == 3.0

    def test_empty_trajectory(self):
        assert discounted_return([], 0.97) == 0.0

    def test_loop_accumulation_oracle(self):
        # oracle: explicit loop over gamma powers
        rewards, gamma = [2.0, -1.0, 4.0], 0.5
        expected = sum(gamma**t * r for t, r in enumerate(rewards))
        assert expected == 2.5
        assert discounted_return(rewards, gamma) == pytest.approx(expected, abs=1e-15)

    def test_nonfinite_reward_rejected(self):
        with pytest.raises(ValueError):
            discounted_return([1.0, np.inf], 0.9)

    def test_invalid_gamma(self):
        with pytest.raises(ValueError):
            discounted_return([1.0], 0.0)
        with pytest.raises(ValueError):
            discounted_return([1.0], 1.5)

    @given(
        rewards=st.lists(st.floats(-100, 100), min_size=1, max_size=20),
        scale=st.floats(-10, 10),
        gamma=st.floats(0.01, 1.0),
    )
    @settings(max_examples=100, deadline=None)
    def test_linearity(self, rewards, scale, gamma):
        lhs = discounted_return([scale * r for r in rewards], gamma)
        rhs = scale * discounted_return(rewards, gamma)
        assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-9)


class TestRollout:
    def test_zero_reward_env(self):
        transitions, ret = rollout(ZeroRewardEnv(), ConstantPolicy([0.5]), 10, rng_seed=3)
        assert len(transitions) == 10
        assert ret == 0.0

    def test_chain_matches_hand_enumeration(self):
        # Always-right on the 5-state chain: positions 0,1,2,3,4,4,...
        chain = make_deterministic_chain(n_states=5, discount=0.9)
        transitions, ret = rollout(chain, ConstantPolicy([1.0]), 6, rng_seed=0)
        visited = [chain.state_index(t.state) for t in transitions]
        assert visited == [0, 1, 2, 3, 4, 4]
        rewards = [s / 4.0 for s in visited]
        assert [t.reward for t in transitions] == rewards
        assert ret == pytest.approx(sum(0.9**t * r for t, r in enumerate(rewards)), abs=1e-12)

    def test_same_seed_identical(self):
        env = make_deterministic_chain()
        t1, r1 = rollout(env, ConstantPolicy([1.0]), 20, rng_seed=77)
        t2, r2 = rollout(env, ConstantPolicy([1.0]), 20, rng_seed=77)
        assert r1 == r2
        for a, b in zip(t1, t2):
            assert np.array_equal(a.state, b.state)
            assert np.array_equal(a.action, b.action)
            assert a.reward == b.reward

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="action"):
            rollout(ZeroRewardEnv(), ConstantPolicy([0.5, 0.5]), 5, rng_seed=0)


class TestDeltaStats:
    def test_constant_next_state_hits_floor(self):
        rows = [([1.0, 2.0], [0.0], 0.5, [1.0, 2.0])] * 3
        with pytest.warns(UserWarning):
            stats = dataset_delta_stats(tiny_dataset(rows))
        assert np.allclose(stats.mu_delta, 0.0)
        assert np.allclose(stats.sigma_delta, SIGMA_FLOOR)

    def test_population_convention_hand_computed(self):
        rows = [
            ([0.0], [0.0], 0.0, [0.0]),  # delta 0
            ([0.0], [0.0], 0.0, [2.0]),  # delta 2
        ]
        with pytest.warns(UserWarning):  # states/actions are constant
            stats = dataset_delta_stats(tiny_dataset(rows))
        assert stats.mu_delta[0] == pytest.approx(1.0)
        assert stats.sigma_delta[0] == pytest.approx(1.0)  # population, not sample

    def test_permutation_invariance(self, surrogate_dataset):
        stats = dataset_delta_stats(surrogate_dataset)
        rng = np.random.default_rng(5)
        perm = rng.permutation(len(surrogate_dataset))
        shuffled = Dataset.from_arrays(
            surrogate_dataset.states[perm],
            surrogate_dataset.actions[perm],
            surrogate_dataset.rewards[perm],
            surrogate_dataset.next_states[perm],
            surrogate_dataset.meta,
            surrogate_dataset.spec,
            [0],
        )
        shuffled_stats = dataset_delta_stats(shuffled)
        assert np.allclose(stats.mu_delta, shuffled_stats.mu_delta, atol=1e-12)
        assert np.allclose(stats.sigma_delta, shuffled_stats.sigma_delta, atol=1e-12)


class TestTypes:
    def test_spec_invariants(self):
        with pytest.raises(ValueError):
            EnvironmentSpec(2, 1, [1.0], [0.5], 10, 0.9)  # low >= high
        with pytest.raises(ValueError):
            EnvironmentSpec(2, 1, [-1.0], [1.0], 0, 0.9)  # horizon
        with pytest.raises(ValueError):
            EnvironmentSpec(2, 1, [-1.0], [1.0], 10, 1.5)  # discount

    def test_transition_rejects_nonfinite(self):
        with pytest.raises(ValueError):
            Transition([0.0], [0.0], np.nan, [0.0])

    def test_dataset_boundary_validation(self):
        rows = [([0.0], [0.0], 0.0, [1.0])] * 4
        transitions = [Transition(*r) for r in rows]
        spec = EnvironmentSpec(1, 1, [-1.0], [1.0], 10, 0.9)
        meta = DatasetMeta("x", "bad", 0.0, 2, 0)
        ds = Dataset(transitions, meta, spec, [0, 2])
        assert ds.n_trajectories == 2
        assert [s.start for s in ds.trajectory_slices()] == [0, 2]
        with pytest.raises(ValueError):
            Dataset(transitions, meta, spec, [1, 2])  # must start at 0
        with pytest.raises(ValueError):
            Dataset(transitions, meta, spec, [0, 4])  # out of range

    def test_epsilon_bounds(self):
        with pytest.raises(ValueError):
            DatasetMeta("x", "bad", 1.5, 1, 0)

    def test_run_history_strictly_increasing(self):
        h = RunHistory("r", "a", "d", 0)
        h.append(10, 1.0)
        with pytest.raises(ValueError):
            h.append(10, 2.0)
        with pytest.raises(ValueError):
            h.append(20, np.inf)


class TestSerialization:
    def test_dataset_round_trip_bit_exact(self, surrogate_dataset, tmp_path):
        path = save_dataset(surrogate_dataset, tmp_path / "ds.csv")
        loaded = load_dataset(path)
        assert np.array_equal(loaded.states, surrogate_dataset.states)
        assert np.array_equal(loaded.actions, surrogate_dataset.actions)
        assert np.array_equal(loaded.rewards, surrogate_dataset.rewards)
        assert np.array_equal(loaded.next_states, surrogate_dataset.next_states)
        assert loaded.trajectory_starts == surrogate_dataset.trajectory_starts
        assert loaded.meta == surrogate_dataset.meta
        assert loaded.spec.to_dict() == surrogate_dataset.spec.to_dict()

    def test_awkward_floats_round_trip(self, tmp_path):
        awkward = [np.pi, 1e-300, -1e300, 0.1, np.nextafter(0.0, 1.0)]
        rows = [([v], [0.5], v, [v * 2 if abs(v) < 1e299 else v]) for v in awkward]
        ds = tiny_dataset(rows)
        loaded = load_dataset(save_dataset(ds, tmp_path / "awkward.csv"))
        assert np.array_equal(loaded.states, ds.states)
        assert np.array_equal(loaded.rewards, ds.rewards)

    def test_history_round_trip(self, tmp_path):
        h = RunHistory("run", "algo", "ds", 3)
        h.append(100, -1.23456789012345678)
        h.append(200, 0.1)
        path = save_history(h, tmp_path / "h.csv")
        loaded = load_history(path, algorithm_id="algo", dataset_id="ds", seed=3)
        assert loaded.steps().tolist() == [100, 200]
        assert np.array_equal(loaded.returns(), h.returns())
