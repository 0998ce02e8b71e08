import csv

import numpy as np
import pytest

import flipmax as fm
from flipmax.env import FlipEnv, rollout, write_trace_csv
from flipmax.graphs import Graph, RatingsMatrix, WeightScheme, gen_er
from flipmax.rng import make_rng


def triangle_env(k=2):
    g = Graph(3, [(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)])
    return FlipEnv(fm.make_maxcut(g), k=k)


def modular_env(k, n_items=10, episode_len=None):
    """lam=0 similarity oracle: every add gain equals the item's column sum."""
    ratings = np.zeros((n_items, 1))
    ratings[0, 0] = 0.5
    ratings[1, 0] = 0.5
    o = fm.make_movrec(RatingsMatrix(ratings), lam=0.0)
    return FlipEnv(o, k=k, episode_len=episode_len)


def random_env(app, seed, n=15, k=4):
    if app == "maxcut":
        o = fm.make_maxcut(gen_er(n, 0.3, WeightScheme.SIGNED_UNIT, seed))
    elif app == "maxcov":
        o = fm.make_maxcov(gen_er(n, 0.3, WeightScheme.UNIT, seed).to_directed())
    elif app == "movrec":
        o = fm.make_movrec(fm.gen_ratings(n, 6, 0.4, seed))
    else:
        o = fm.make_infexp(fm.gen_ba(n, 3, WeightScheme.UNIFORM_REAL, seed), seed=seed + 1)
    return FlipEnv(o, k=k)


class TestReset:
    def test_initial_feature_columns(self):
        env = triangle_env()
        f = env.features()
        assert np.all(f[:, 0] == 0.0)
        assert np.all(f[:, 2] == 0.0)
        assert np.all(f[:, 3] == 1.0)
        assert np.all(f[:, 4] == 0.0)

    def test_sigma_on_unit_triangle(self):
        assert triangle_env().sigma == 2.0

    def test_sigma_floors_at_one(self):
        env = modular_env(k=2)  # largest initial gain is 0.5
        assert env.sigma == 1.0

    def test_reset_deterministic(self):
        a = triangle_env().features()
        b = triangle_env().features()
        assert np.array_equal(a, b)

    def test_bad_k_rejected(self):
        g = Graph(3, [(0, 1, 1.0)])
        with pytest.raises(ValueError):
            FlipEnv(fm.make_maxcut(g), k=0)
        with pytest.raises(ValueError):
            FlipEnv(fm.make_maxcut(g), k=4)

    def test_default_episode_length_is_two_k(self):
        assert triangle_env(k=2).episode_len == 4


class TestFeatures:
    def test_feasibility_column_when_over_budget(self):
        env = modular_env(k=1)
        env.step(0)
        env.step(1)  # pre-size == k, add pushes size to 2
        f = env.features()
        assert env.size == 2
        assert f[0, 3] == 1.0 and f[1, 3] == 1.0
        assert np.all(f[2:, 3] == 0.0)

    def test_age_of_last_action_is_zero(self):
        env = triangle_env()
        env.step(1)
        f = env.features()
        assert f[1, 2] == 0.0
        assert np.all(f[[0, 2], 2] == 1.0 / env.episode_len)

    def test_gain_column_tracks_oracle(self):
        env = random_env("maxcut", 7)
        env.step(3)
        fresh = env.oracle.clone()
        fresh.set_state(env.oracle.current_set())
        assert np.allclose(env.features()[:, 1] * env.sigma, fresh.gains(),
                           rtol=1e-9, atol=1e-12)


class TestStepReward:
    def test_improvement_below_budget(self):
        env = modular_env(k=2)
        reward, done = env.step(0)  # add gain exactly 0.5, |N| = 10
        assert reward == 0.05
        assert not done

    def test_penalized_add_at_capacity_is_zero(self):
        env = modular_env(k=1)
        env.step(0)
        reward, _ = env.step(1)  # improves value but adds at |V| >= k
        assert env.f_cur > env.f_best  # improvement was real but unrewarded
        assert reward == 0.0

    def test_no_improvement_means_zero_reward(self):
        env = triangle_env(k=2)
        env.step(0)
        reward, _ = env.step(0)  # undo: value drops to 0
        assert reward == 0.0

    def test_rewards_nonnegative_on_random_rollouts(self):
        rng = make_rng(0)
        for app in ["maxcut", "maxcov", "movrec", "infexp"]:
            for seed in range(3):
                env = random_env(app, 10 + seed)
                while not env.done:
                    reward, _ = env.step(int(rng.integers(env.n)))
                    assert reward >= 0.0

    def test_removal_at_capacity_uses_plain_reward(self):
        env = modular_env(k=1, episode_len=6)
        env.step(0)
        env.step(1)          # over budget now
        reward, _ = env.step(1)  # removal while |V| > k: plain branch
        assert reward == 0.0     # value falls back, no improvement

    def test_telescoping_bound_and_equality_on_monotone_trace(self):
        ratings = np.arange(1, 9, dtype=float).reshape(8, 1)
        o = fm.make_movrec(RatingsMatrix(ratings), lam=0.0)
        env = FlipEnv(o, k=8, episode_len=8)
        total = 0.0
        for e in range(8):
            reward, _ = env.step(e)
            total += reward
        expected = (env.f_best - 0.0) / env.n
        assert total == pytest.approx(expected, rel=1e-12)
        assert total >= expected - 1e-12

    def test_finished_episode_raises(self):
        env = triangle_env(k=1)
        for _ in range(env.episode_len):
            env.step(0)
        with pytest.raises(RuntimeError):
            env.step(0)

    def test_bad_action_rejected(self):
        with pytest.raises(ValueError):
            triangle_env().step(5)


class TestBestTracking:
    def test_before_any_step(self):
        env = triangle_env()
        assert env.best() == ((), 0.0)

    def test_monotone_trajectory_keeps_final_set(self):
        ratings = np.arange(1, 7, dtype=float).reshape(6, 1)
        env = FlipEnv(fm.make_movrec(RatingsMatrix(ratings), lam=0.0), k=6)
        for e in range(6):
            env.step(e)
        best_set, best_f = env.best()
        assert set(best_set) == set(range(6))
        assert best_f == pytest.approx(env.f_cur, rel=1e-12)

    def test_best_is_max_over_feasible_visited(self):
        rng = make_rng(3)
        for app in ["maxcut", "movrec"]:
            env = random_env(app, 20)
            fresh = env.oracle.clone()
            visited = [((), fresh.value(()))]
            while not env.done:
                env.step(int(rng.integers(env.n)))
                members = tuple(int(e) for e in env.oracle.current_set())
                visited.append((members, fresh.value(members)))
            feasible_best = max(f for v, f in visited if len(v) <= env.k)
            best_set, best_f = env.best()
            assert len(best_set) <= env.k
            assert best_f == pytest.approx(feasible_best, rel=1e-9, abs=1e-9)

    def test_infeasible_improvement_not_recorded(self):
        env = modular_env(k=1)
        env.step(0)
        env.step(1)  # higher value but |V| = 2 > k
        best_set, best_f = env.best()
        assert best_set == (0,)
        assert best_f == 0.5


class TestDynamics:
    def test_double_step_restores_membership(self):
        env = random_env("maxcut", 30)
        env.step(2)
        before = env.oracle.in_set()
        f_before = env.f_cur
        env.step(5)
        env.step(5)
        assert np.array_equal(env.oracle.in_set(), before)
        assert env.f_cur == pytest.approx(f_before, rel=1e-12, abs=1e-12)

    def test_cache_coherence_after_rollout(self):
        rng = make_rng(9)
        for app in ["maxcut", "maxcov", "movrec", "infexp"]:
            env = random_env(app, 40, n=12, k=5)
            while not env.done:
                env.step(int(rng.integers(env.n)))
            fresh = env.oracle.clone()
            members = env.oracle.current_set()
            assert env.f_cur == pytest.approx(fresh.value(members), rel=1e-9, abs=1e-9)
            fresh.set_state(members)
            assert np.allclose(env.deltas, fresh.gains(), rtol=1e-9, atol=1e-9)


class TestTrace:
    def test_rollout_and_csv(self, tmp_path):
        env = random_env("maxcut", 55)
        rng = make_rng(1)
        rows = rollout(env, lambda e: int(rng.integers(e.n)))
        assert len(rows) == env.episode_len
        path = tmp_path / "trace.csv"
        write_trace_csv(rows, path)
        with open(path) as f:
            parsed = list(csv.reader(f))
        assert parsed[0] == ["t", "action", "reward", "f_cur", "f_best", "|V|"]
        assert len(parsed) == len(rows) + 1
        f_best_col = [float(r[4]) for r in parsed[1:]]
        assert all(b >= a for a, b in zip(f_best_col, f_best_col[1:]))
