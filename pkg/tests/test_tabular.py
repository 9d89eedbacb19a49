"""Tabular lookahead operator: contraction, fixed points, geometric decay."""

import numpy as np
import pytest

from aoisim.tabular import (TabularMDP, bellman_apply, contraction_ratio,
                            random_mdp, value_iteration)


class TestOperator:
    def test_zero_discount_returns_rewards(self):
        rng = np.random.default_rng(0)
        mdp = random_mdp(6, 3, 0.0, rng)
        q = rng.normal(size=(6, 3))
        np.testing.assert_allclose(bellman_apply(mdp, q), mdp.rewards,
                                   rtol=1e-15)

    def test_single_state_geometric_fixed_point(self):
        mdp = TabularMDP(np.ones((1, 1, 1)), np.ones((1, 1)), 0.9)
        q_star, _ = value_iteration(mdp, tol=1e-13)
        np.testing.assert_allclose(q_star, [[10.0]], rtol=1e-10)

    def test_shape_mismatch_rejected(self):
        mdp = random_mdp(4, 2, 0.9, np.random.default_rng(1))
        with pytest.raises(ValueError):
            bellman_apply(mdp, np.zeros((4, 3)))

    def test_literal_sum_evaluation(self):
        # Oracle: triple loop over the defining sum.
        rng = np.random.default_rng(2)
        mdp = random_mdp(5, 2, 0.8, rng)
        q = rng.normal(size=(5, 2))
        out = bellman_apply(mdp, q)
        for o in range(5):
            for a in range(2):
                acc = 0.0
                for o2 in range(5):
                    acc += mdp.transitions[o, a, o2] * (
                        mdp.rewards[o, a] + 0.8 * q[o2].max())
                assert out[o, a] == pytest.approx(acc, rel=1e-12)


class TestContraction:
    def test_random_instances(self):
        rng = np.random.default_rng(3)
        for _ in range(200):
            mdp = random_mdp(int(rng.integers(2, 12)),
                             int(rng.integers(1, 5)), 0.9, rng)
            q1 = rng.normal(scale=5, size=(mdp.n_states, mdp.n_actions))
            q2 = rng.normal(scale=5, size=(mdp.n_states, mdp.n_actions))
            assert contraction_ratio(mdp, q1, q2) <= 0.9 + 1e-12

    def test_identical_tables_ratio_zero(self):
        mdp = random_mdp(4, 2, 0.9, np.random.default_rng(4))
        q = np.ones((4, 2))
        assert contraction_ratio(mdp, q, q) == 0.0


class TestValueIteration:
    def test_geometric_error_decay(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            mdp = random_mdp(int(rng.integers(2, 10)),
                             int(rng.integers(1, 4)), 0.9, rng)
            q0 = rng.normal(scale=3, size=(mdp.n_states, mdp.n_actions))
            _, errors = value_iteration(mdp, q0, tol=1e-13)
            for k in range(min(len(errors), 60)):
                assert errors[k] <= 0.9 ** k * errors[0] + 1e-9

    def test_fixed_point_invariance(self):
        mdp = random_mdp(8, 3, 0.9, np.random.default_rng(6))
        q_star, _ = value_iteration(mdp, tol=1e-14)
        np.testing.assert_allclose(bellman_apply(mdp, q_star), q_star,
                                   atol=1e-12)


class TestValidation:
    def test_bad_transition_rows(self):
        good = np.ones((2, 1, 2)) * 0.5
        TabularMDP(good, np.zeros((2, 1)), 0.9)
        with pytest.raises(ValueError):
            TabularMDP(good * 2, np.zeros((2, 1)), 0.9)
        with pytest.raises(ValueError):
            TabularMDP(-good, np.zeros((2, 1)), 0.9)
        with pytest.raises(ValueError):
            TabularMDP(good, np.zeros((2, 1)), 1.0)
