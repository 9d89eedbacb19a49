"""Device-selection rule against hand values, structural properties, and
the exhaustive oracle."""

import numpy as np
import pytest

from aoisim.selector import (SelectionProblem, brute_force_select,
                             coefficients, objective, select)


def random_problem(rng, n_max=8, budget_max=4, packet_prob=0.8):
    n = int(rng.integers(1, n_max + 1))
    return SelectionProblem(
        c1=rng.normal(size=n), c2=rng.normal(size=n),
        rb_budget=int(rng.integers(1, budget_max + 1)),
        has_packet=rng.random(n) < packet_prob)


class TestCoefficients:
    def test_plugin_value(self):
        c1, c2 = coefficients(device_aoi=0.0, bs_aoi_prev=4.0, sampled=0,
                              expected_delay=0.0, gamma_a=0.5, gamma_e=0.5,
                              tx_power_w=0.5, sampling_cost_j=5e-4,
                              slot_duration=1.0)
        assert c1 == pytest.approx(-2.5)
        assert c2 == pytest.approx(0.5 * 5.0)

    def test_indifference_boundary(self):
        c1, _ = coefficients(device_aoi=3.0, bs_aoi_prev=2.0, sampled=1,
                             expected_delay=0.0, gamma_a=0.5, gamma_e=0.5,
                             tx_power_w=0.5, sampling_cost_j=5e-4,
                             slot_duration=1.0)
        assert c1 == 0.0

    def test_matches_hand_formula_on_random_inputs(self):
        rng = np.random.default_rng(2)
        for _ in range(100):
            phi = float(rng.uniform(0, 5))
            bs_prev = float(rng.uniform(0, 5))
            s = int(rng.integers(0, 2))
            el = float(rng.uniform(0, 1e-3))
            ga, ge = 0.5, 0.5
            pt, cs, tau = 0.5, 5e-4, 1.0
            c1, c2 = coefficients(phi, bs_prev, s, el, ga, ge, pt, cs, tau)
            assert c1 == pytest.approx(ga * (el + phi - bs_prev - tau)
                                       + ge * pt * el, rel=1e-15)
            assert c2 == pytest.approx(ge * s * cs + ga * (bs_prev + tau),
                                       rel=1e-15)


class TestSelect:
    def test_all_nonnegative_selects_nobody(self):
        p = SelectionProblem(c1=[0.0, 1.0, 2.0], c2=np.zeros(3), rb_budget=2,
                             has_packet=[True, True, True])
        np.testing.assert_array_equal(select(p), [0, 0, 0])

    def test_budget_overflow_takes_most_negative(self):
        p = SelectionProblem(c1=[-3.0, -1.0, -2.0], c2=np.zeros(3),
                             rb_budget=2, has_packet=[True, True, True])
        np.testing.assert_array_equal(select(p), [1, 0, 1])

    def test_sign_rule_when_budget_suffices(self):
        rng = np.random.default_rng(4)
        for _ in range(100):
            n = int(rng.integers(1, 7))
            p = SelectionProblem(c1=rng.normal(size=n), c2=rng.normal(size=n),
                                 rb_budget=n, has_packet=np.ones(n, bool))
            u = select(p)
            np.testing.assert_array_equal(u, (p.c1 < 0).astype(int))

    def test_no_packet_never_selected(self):
        p = SelectionProblem(c1=[-5.0, -4.0], c2=np.zeros(2), rb_budget=2,
                             has_packet=[False, True])
        np.testing.assert_array_equal(select(p), [0, 1])

    def test_zero_coefficient_not_selected(self):
        p = SelectionProblem(c1=[0.0], c2=[0.0], rb_budget=1, has_packet=[True])
        np.testing.assert_array_equal(select(p), [0])

    def test_feasibility_always(self):
        rng = np.random.default_rng(5)
        for _ in range(300):
            p = random_problem(rng)
            assert select(p).sum() <= p.rb_budget

    def test_scaling_invariance(self):
        rng = np.random.default_rng(6)
        for _ in range(100):
            p = random_problem(rng)
            scaled = SelectionProblem(c1=3.7 * p.c1, c2=p.c2,
                                      rb_budget=p.rb_budget,
                                      has_packet=p.has_packet)
            np.testing.assert_array_equal(select(p), select(scaled))

    def test_equal_tie_breaks_to_lowest_index(self):
        p = SelectionProblem(c1=[-1.0, -1.0, -1.0], c2=np.zeros(3),
                             rb_budget=2, has_packet=[True, True, True])
        np.testing.assert_array_equal(select(p), [1, 1, 0])


class TestBruteForce:
    def test_single_negative_device(self):
        p = SelectionProblem(c1=[-1.0], c2=[0.0], rb_budget=1,
                             has_packet=[True])
        np.testing.assert_array_equal(brute_force_select(p), [1])

    def test_equal_ties_take_first_indices(self):
        p = SelectionProblem(c1=[-1.0, -1.0, -1.0, -1.0], c2=np.zeros(4),
                             rb_budget=2, has_packet=np.ones(4, bool))
        np.testing.assert_array_equal(brute_force_select(p), [1, 1, 0, 0])

    def test_beats_random_feasible_vectors(self):
        rng = np.random.default_rng(7)
        p = random_problem(rng)
        best = objective(p, brute_force_select(p))
        for _ in range(100):
            u = (rng.random(p.n_devices) < 0.5) & p.has_packet
            while u.sum() > p.rb_budget:
                u[np.flatnonzero(u)[-1]] = False
            assert best <= objective(p, u.astype(int)) + 1e-15

    def test_refuses_large_instances(self):
        n = 21
        p = SelectionProblem(c1=np.ones(n) * -1, c2=np.zeros(n), rb_budget=2,
                             has_packet=np.ones(n, bool))
        with pytest.raises(ValueError, match="refused"):
            brute_force_select(p)


class TestAgreement:
    def test_rule_matches_oracle_on_random_instances(self):
        rng = np.random.default_rng(8)
        for _ in range(300):
            p = random_problem(rng)
            assert objective(p, select(p)) == objective(p, brute_force_select(p))

    def test_validation(self):
        with pytest.raises(ValueError):
            SelectionProblem(c1=[np.inf], c2=[0.0], rb_budget=1,
                             has_packet=[True])
        with pytest.raises(ValueError):
            SelectionProblem(c1=[1.0], c2=[0.0], rb_budget=0,
                             has_packet=[True])
        with pytest.raises(ValueError):
            SelectionProblem(c1=[1.0, 2.0], c2=[0.0], rb_budget=1,
                             has_packet=[True])
