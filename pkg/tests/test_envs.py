"""Baselines, exploration mixing, dataset generation, import, and the
tabular oracle."""

from __future__ import annotations

import json

import numpy as np
import pytest

from offrlbench.core import load_dataset, np_rng, rollout, save_dataset
from offrlbench.core.io import DatasetParseError
from offrlbench.envs import (
    BASELINE_NORM_MEANS,
    BASELINE_NORM_STDS,
    BaselinePolicy,
    ChainMDP,
    MixedBehaviorPolicy,
    SurrogateEnv,
    UniformRandomPolicy,
    baseline_action,
    generate_dataset,
    import_ib_dataset,
    make_deterministic_chain,
    mixed_action,
    value_iteration,
)
from offrlbench.envs.baselines import G, H, V


def state_with(v=50.0, g=50.0, h=50.0, p=55.0, f=37.51, c=166.33):
    return np.array([p, v, g, h, f, c])


class TestBaselines:
    def test_normalization_constants_are_the_twelve_literals(self):
        assert BASELINE_NORM_MEANS == (55.0, 48.75, 50.53, 49.45, 37.51, 166.33)
        assert BASELINE_NORM_STDS == (28.72, 12.31, 29.91, 29.22, 31.17, 139.44)

    def test_bad_at_100_is_zero(self):
        out = baseline_action("bad", state_with(v=100, g=100, h=100))
        assert np.array_equal(out, np.zeros(3))

    def test_mediocre_at_25_is_zero(self):
        out = baseline_action("mediocre", state_with(v=25, g=25, h=25))
        assert np.array_equal(out, np.zeros(3))

    def test_optimized_at_all_means(self):
        history = np.tile(np.array(BASELINE_NORM_MEANS), (6, 1))
        out = baseline_action("optimized", history)
        assert np.allclose(out, [-0.91, 1.43, 0.81], atol=1e-12)

    def test_optimized_formula_hand_computed(self):
        history = np.tile(np.array(BASELINE_NORM_MEANS), (6, 1))
        history[0, V] = 48.75 + 12.31      # v at t-5 one std above mean
        history[2, 4] = 37.51 + 2 * 31.17  # f at t-3 two stds above mean
        history[2, H] = 49.45 - 29.22      # h at t-3 one std below
        history[1, H] = 49.45 + 29.22      # h at t-4 one std above
        history[5, 0] = 55.0 + 28.72       # current p one std above
        out = baseline_action("optimized", history)
        assert out[0] == pytest.approx(-1.0 - 0.91)
        assert out[1] == pytest.approx(2 * 2.0 - 1.0 + 1.43)
        assert out[2] == pytest.approx(-3.48 * (-1.0) - 1.0 + 2.0 + 0.81)

    def test_optimized_short_history_errors_without_padding(self):
        history = np.tile(state_with(), (3, 1))
        with pytest.raises(ValueError, match="needs 6 states"):
            baseline_action("optimized", history, pad_short_history=False)
        padded = baseline_action("optimized", history, pad_short_history=True)
        assert padded.shape == (3,)

    def test_handle_clips_to_action_box(self):
        policy = BaselinePolicy("bad")
        action = policy.act(state_with(v=0, g=0, h=0))  # raw 100s
        assert np.array_equal(action, np.ones(3))

    def test_unknown_baseline_rejected(self):
        with pytest.raises(ValueError):
            baseline_action("great", state_with())


class TestMixedBehavior:
    def test_epsilon_zero_bit_identical(self):
        base = BaselinePolicy("mediocre")
        mixed = MixedBehaviorPolicy(base, 0.0)
        rng = np_rng(1)
        for _ in range(50):
            s = state_with(v=rng.uniform(0, 100), g=rng.uniform(0, 100), h=rng.uniform(0, 100))
            assert np.array_equal(mixed_action(mixed, s, rng), base.act(s))

    def test_epsilon_one_uniform_over_box(self):
        mixed = MixedBehaviorPolicy(BaselinePolicy("mediocre"), 1.0)
        rng = np_rng(2)
        draws = np.array([mixed_action(mixed, state_with(), rng) for _ in range(4000)])
        assert draws.min() >= -1.0 and draws.max() <= 1.0
        # coarse uniformity: each quarter of the box holds ~25% of draws
        for dim in range(3):
            hist, _ = np.histogram(draws[:, dim], bins=4, range=(-1, 1))
            assert np.all(hist > 4000 * 0.25 * 0.8)

    def test_epsilon_fraction_monte_carlo(self):
        # Baseline pinned at 0 output; random actions are almost surely nonzero.
        base = BaselinePolicy("mediocre")
        mixed = MixedBehaviorPolicy(base, 0.2)
        rng = np_rng(3)
        s = state_with(v=25, g=25, h=25)
        n = 100_000
        random_count = sum(
            1 for _ in range(n) if not np.array_equal(mixed_action(mixed, s, rng), np.zeros(3))
        )
        assert 0.19 <= random_count / n <= 0.21

    def test_invalid_epsilon(self):
        with pytest.raises(ValueError):
            MixedBehaviorPolicy(BaselinePolicy("bad"), 1.2)


class TestGenerateDataset:
    def test_shapes_and_boundaries(self):
        env = SurrogateEnv(horizon=10)
        behavior = MixedBehaviorPolicy(BaselinePolicy("mediocre"), 0.0)
        ds = generate_dataset(env, behavior, n_trajectories=2, seed=5)
        assert len(ds) == 20
        assert ds.trajectory_starts == (0, 10)
        assert ds.meta.baseline_id == "mediocre"
        assert ds.meta.epsilon == 0.0
        assert ds.meta.seed == 5

    def test_same_seed_byte_identical_csv(self, tmp_path):
        env = SurrogateEnv(horizon=10)
        behavior = MixedBehaviorPolicy(BaselinePolicy("bad"), 0.3)
        p1 = save_dataset(generate_dataset(env, behavior, 3, seed=9), tmp_path / "a.csv")
        p2 = save_dataset(generate_dataset(env, behavior, 3, seed=9), tmp_path / "b.csv")
        assert p1.read_bytes() == p2.read_bytes()

    def test_epsilon_zero_actions_replay_baseline(self):
        env = SurrogateEnv(horizon=20)
        base = BaselinePolicy("bad")
        ds = generate_dataset(env, MixedBehaviorPolicy(base, 0.0), 2, seed=11)
        for i in range(len(ds)):
            replayed = base.act(ds.states[i])
            assert np.array_equal(ds.actions[i], replayed)


class TestImporter:
    def _write_fixture(self, tmp_path, rows, manifest):
        data = tmp_path / "bad_0.4.csv"
        header = manifest["columns"]["state"] + manifest["columns"]["action"] + [
            manifest["columns"]["reward"]
        ] + (manifest["columns"].get("next_state") or []) + (
            [manifest["columns"]["trajectory"]] if manifest["columns"].get("trajectory") else []
        )
        lines = [",".join(header)] + [",".join(str(x) for x in row) for row in rows]
        data.write_text("\n".join(lines) + "\n")
        (tmp_path / (data.name + ".manifest.json")).write_text(json.dumps(manifest))
        return data

    def _manifest(self):
        return {
            "columns": {
                "state": ["x0", "x1"],
                "action": ["u0"],
                "reward": "r",
                "next_state": ["y0", "y1"],
                "trajectory": "traj",
            },
            "env_spec": {"horizon": 10, "discount": 0.9},
        }

    def test_three_row_fixture(self, tmp_path):
        rows = [
            [0.0, 1.0, 0.5, -1.0, 0.1, 1.1, 0],
            [0.1, 1.1, -0.5, -0.9, 0.2, 1.2, 0],
            [9.0, 9.0, 0.0, 1.0, 9.1, 9.1, 1],
        ]
        ds = import_ib_dataset(self._write_fixture(tmp_path, rows, self._manifest()))
        assert len(ds) == 3
        assert ds.trajectory_starts == (0, 2)
        assert ds.meta.baseline_id == "bad"       # from filename
        assert ds.meta.epsilon == 0.4             # from filename
        assert np.array_equal(ds.states[1], [0.1, 1.1])
        assert np.array_equal(ds.next_states[1], [0.2, 1.2])

    def test_truncated_row_names_row_number(self, tmp_path):
        rows = [
            [0.0, 1.0, 0.5, -1.0, 0.1, 1.1, 0],
            [0.1, 1.1, -0.5],  # truncated
        ]
        with pytest.raises(DatasetParseError, match="row 3"):
            import_ib_dataset(self._write_fixture(tmp_path, rows, self._manifest()))

    def test_missing_manifest(self, tmp_path):
        data = tmp_path / "orphan.csv"
        data.write_text("a,b\n1,2\n")
        with pytest.raises(DatasetParseError, match="manifest"):
            import_ib_dataset(data)

    def test_consecutive_row_pairing(self, tmp_path):
        manifest = self._manifest()
        manifest["columns"]["next_state"] = None
        rows = [
            [0.0, 1.0, 0.5, -1.0, 0],
            [0.1, 1.1, -0.5, -0.9, 0],
            [0.2, 1.2, 0.5, -0.8, 0],
        ]
        ds = import_ib_dataset(self._write_fixture(tmp_path, rows, manifest))
        assert len(ds) == 2  # last row only closes the trajectory
        assert np.array_equal(ds.next_states[0], [0.1, 1.1])
        assert np.array_equal(ds.next_states[1], [0.2, 1.2])

    def test_round_trip_through_native_format(self, tmp_path):
        rows = [
            [0.0, 1.0, 0.5, -1.0, 0.1, 1.1, 0],
            [0.1, 1.1, -0.5, -0.9, 0.2, 1.2, 0],
            [9.0, 9.0, 0.0, 1.0, 9.1, 9.1, 1],
        ]
        imported = import_ib_dataset(self._write_fixture(tmp_path, rows, self._manifest()))
        reloaded = load_dataset(save_dataset(imported, tmp_path / "native.csv"))
        assert np.array_equal(reloaded.states, imported.states)
        assert np.array_equal(reloaded.actions, imported.actions)
        assert np.array_equal(reloaded.rewards, imported.rewards)
        assert np.array_equal(reloaded.next_states, imported.next_states)
        assert reloaded.trajectory_starts == imported.trajectory_starts
        assert reloaded.meta == imported.meta


class TestValueIteration:
    def test_single_state_geometric_series(self):
        t = np.ones((1, 2, 1))
        r = np.ones((1, 2))
        chain = ChainMDP(t, r, discount=0.5)
        q = value_iteration(chain, tol=1e-12)
        assert np.allclose(q, 2.0, atol=1e-10)

    def test_two_state_hand_solved(self):
        t = np.zeros((2, 2, 2))
        t[0, 0, 0] = 1.0
        t[0, 1, 1] = 1.0
        t[1, 0, 0] = 1.0
        t[1, 1, 1] = 1.0
        r = np.array([[0.0, 0.0], [0.0, 1.0]])
        chain = ChainMDP(t, r, discount=0.5)
        q = value_iteration(chain, tol=1e-12)
        assert np.allclose(q, [[0.5, 1.0], [0.5, 2.0]], atol=1e-10)

    def test_fixed_point_property(self, chain_env):
        tol = 1e-10
        q = value_iteration(chain_env, tol=tol)
        backup = chain_env.rewards + chain_env.spec.discount * chain_env.transitions @ q.max(axis=1)
        assert np.max(np.abs(backup - q)) < tol

    def test_bellman_identity_per_entry(self, chain_env):
        q = value_iteration(chain_env, tol=1e-12)
        gamma = chain_env.spec.discount
        for s in range(chain_env.n_states):
            for a in range(2):
                expected = chain_env.rewards[s, a] + gamma * (
                    chain_env.transitions[s, a] @ q.max(axis=1)
                )
                assert q[s, a] == pytest.approx(expected, abs=1e-10)

    def test_invalid_tol(self, chain_env):
        with pytest.raises(ValueError):
            value_iteration(chain_env, tol=0.0)


class TestSurrogate:
    def test_seedable_and_stochastic(self):
        env = SurrogateEnv()
        pol = BaselinePolicy("mediocre")
        t1, r1 = rollout(env, pol, 30, rng_seed=4)
        t2, r2 = rollout(env, pol, 30, rng_seed=4)
        t3, r3 = rollout(env, pol, 30, rng_seed=5)
        assert r1 == r2
        assert r1 != r3  # different seed, stochastic transitions

    def test_heteroscedastic_noise(self):
        # Steering noise grows with the operating level.
        env = SurrogateEnv()
        rng = np_rng(0)
        lows, highs = [], []
        for _ in range(400):
            env._state = np.array([55.0, 10.0, 50.0, 50.0, 35.0, 150.0])
            s_next, _, _ = env.step(np.zeros(3), rng)
            lows.append(s_next[V] - 10.0)
            env._state = np.array([55.0, 90.0, 50.0, 50.0, 35.0, 150.0])
            s_next, _, _ = env.step(np.zeros(3), rng)
            highs.append(s_next[V] - 90.0)
        assert np.std(highs) > 2.0 * np.std(lows)

    def test_ordinal_structure_mediocre_beats_bad(self):
        # The design contract: mediocre-style set points must clearly
        # outscore bad-style ones, with uniform random in between.
        env = SurrogateEnv()
        med = np.mean([rollout(env, BaselinePolicy("mediocre"), 100, s)[1] for s in range(5)])
        bad = np.mean([rollout(env, BaselinePolicy("bad"), 100, s)[1] for s in range(5)])
        rnd = np.mean([
            rollout(env, UniformRandomPolicy(env.spec.action_low, env.spec.action_high), 100, s)[1]
            for s in range(5)
        ])
        assert med > rnd > bad

    def test_known_reward_exposed(self):
        env = SurrogateEnv()
        s = state_with(v=20, g=20, h=20)
        assert env.reward(s, np.zeros(3)) == pytest.approx(0.0)
        assert env.reward(state_with(v=100, g=100, h=100), np.zeros(3)) < -5.0
