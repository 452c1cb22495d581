import dataclasses
import random
import time

import numpy as np
import pytest

from mcfcnf import (GAP_DEFAULT, Infeasible, Instance, Organism, brute_force,
                    build_expanded_network, lp_relaxation_bound, polish, score,
                    solve_exact, solve_min_cost_flow, verify_flow)
from conftest import integral_score_optimum, make_small_instance


def _scored_relaxation(instance, scale):
    org = Organism(scale=np.asarray(scale, dtype=float))
    return score(instance, solve_min_cost_flow(build_expanded_network(instance, org)))


class TestBruteForce:
    def test_diamond(self, fig1):
        result = brute_force(fig1)
        assert result.best.true_cost == pytest.approx(20.0, abs=1e-9)
        assert result.proven_optimal

    def test_minimal(self, minimal):
        assert brute_force(minimal).best.true_cost == pytest.approx(4.0, abs=1e-9)

    def test_infeasible(self, minimal):
        bad = dataclasses.replace(minimal, target=10.0)
        with pytest.raises(Infeasible):
            brute_force(bad)

    def test_size_guard(self):
        inst = Instance(
            n_vertices=2, source=0, sink=1, edges=tuple((0, 1) for _ in range(21)),
            capacities=np.array([2.0]), fixed_cost=np.ones((21, 1)),
            variable_cost=np.ones((21, 1)), target=1.0,
        )
        with pytest.raises(ValueError, match="brute force"):
            brute_force(inst)

    def test_matches_independent_enumeration(self):
        # cross-check against indicator-charged integral-flow enumeration,
        # which is exact for integer capacities and targets
        rng = random.Random(404)
        for _ in range(30):
            inst = make_small_instance(
                rng, max_vertices=5, max_edges=6, n_capacities=rng.choice((1, 2)),
                cap_choices=(1, 2, 3), target_cap=4)
            expected = integral_score_optimum(inst)
            assert expected is not None
            result = brute_force(inst)
            assert result.best.true_cost == pytest.approx(expected, abs=1e-9)
            assert verify_flow(inst, result.best.flow) == []


class TestSolveExact:
    def test_diamond(self, fig1):
        result = solve_exact(fig1, budget=10)
        assert result.best.true_cost == pytest.approx(20.0, abs=1e-9)
        assert result.proven_optimal
        assert result.best.flow.flow.ravel().tolist() == [2.0, 1.0, 2.0, 1.0]

    def test_minimal(self, minimal):
        result = solve_exact(minimal, budget=10)
        assert result.best.true_cost == pytest.approx(4.0, abs=1e-9)
        assert result.proven_optimal

    def test_budget_must_be_positive(self, minimal):
        with pytest.raises(ValueError, match="budget"):
            solve_exact(minimal, budget=0)

    def test_infeasible(self, minimal):
        bad = dataclasses.replace(minimal, target=10.0)
        with pytest.raises(Infeasible):
            solve_exact(bad, budget=10)

    def test_tiny_budget_returns_unproven_incumbent(self, fig1):
        result = solve_exact(fig1, budget=1e-9)
        assert not result.proven_optimal
        assert result.best.true_cost == pytest.approx(21.0, abs=1e-9)  # root score
        assert result.bound == pytest.approx(15.0, abs=1e-9)           # root bound

    def test_matches_brute_force(self):
        rng = random.Random(777)
        for _ in range(40):
            n_caps = rng.choice((1, 2))
            inst = make_small_instance(
                rng, max_vertices=6, max_edges=16 // n_caps, n_capacities=n_caps,
                cap_choices=(1, 2, 3, 4))
            expected = brute_force(inst).best.true_cost
            result = solve_exact(inst, budget=30)
            assert result.proven_optimal
            assert result.best.true_cost == pytest.approx(expected, rel=1e-9)
            assert verify_flow(inst, result.best.flow) == []

    def test_root_bound_equals_relaxation_bound(self):
        rng = random.Random(111)
        for _ in range(10):
            inst = make_small_instance(rng, n_capacities=rng.choice((1, 2)))
            log = []
            solve_exact(inst, budget=30, node_log=log)
            root_bound = lp_relaxation_bound(inst)
            if log:
                # the first logged children hang off the root
                assert log[0][0] == root_bound

    def test_node_bounds_monotone_down_the_tree(self):
        rng = random.Random(222)
        for _ in range(20):
            inst = make_small_instance(rng, n_capacities=rng.choice((1, 2)))
            log = []
            solve_exact(inst, budget=30, node_log=log)
            for parent_bound, child_bound in log:
                assert child_bound >= parent_bound - 1e-9

    def test_proven_flag_matches_gap(self):
        rng = random.Random(333)
        for _ in range(10):
            inst = make_small_instance(rng, n_capacities=1)
            result = solve_exact(inst, budget=30)
            if result.proven_optimal:
                gap = result.best.true_cost - result.bound
                assert gap <= GAP_DEFAULT * max(1.0, abs(result.best.true_cost)) + 1e-15


class TestPolish:
    def test_already_optimal_returned_unchanged(self, fig1):
        warm = solve_exact(fig1, budget=10).best
        out = polish(fig1, warm, budget=1.0)
        assert out is warm

    def test_improves_suboptimal_warm(self, fig1):
        warm = _scored_relaxation(fig1, [[2.0], [1.0], [2.0], [1.0]])
        assert warm.true_cost == pytest.approx(21.0, abs=1e-9)
        out = polish(fig1, warm, budget=1.0)
        assert out.true_cost == pytest.approx(20.0, abs=1e-9)

    def test_vanishing_budget_returns_warm(self, fig1):
        warm = _scored_relaxation(fig1, [[2.0], [1.0], [2.0], [1.0]])
        out = polish(fig1, warm, budget=0.0)
        assert out is warm

    def test_invalid_warm_rejected(self, fig1):
        from mcfcnf import FlowSolution
        bogus = score(fig1, FlowSolution(flow=np.full((4, 1), 9.0), lp_cost=0.0))
        with pytest.raises(ValueError, match="valid flow"):
            polish(fig1, bogus, budget=1.0)

    def test_never_regresses(self):
        rng = random.Random(555)
        for _ in range(15):
            inst = make_small_instance(rng, n_capacities=rng.choice((1, 2)))
            warm = _scored_relaxation(
                inst, np.full((inst.n_edges, inst.n_capacities), rng.uniform(0.5, 5.0)))
            out = polish(inst, warm, budget=0.5)
            assert out.true_cost <= warm.true_cost + 1e-12
            assert verify_flow(inst, out.flow) == []


def test_exact_runtime_stays_small_on_diamond(fig1):
    started = time.perf_counter()
    solve_exact(fig1, budget=10)
    assert time.perf_counter() - started < 1.0
