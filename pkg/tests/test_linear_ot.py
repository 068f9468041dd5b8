import itertools

import numpy as np
import pytest

from gwselect.errors import ParameterError, ShapeError, ValidationError
from gwselect.linear_ot import (
    Coupling,
    Permutation,
    brute_force_lap,
    coupling_from_permutation,
    product_coupling,
    solve_linear_ot,
)

from conftest import random_doubly_stochastic


def exhaustive_min(cost):
    """Independent factorial enumeration (objective on the <C, pi> scale)."""
    n = cost.shape[0]
    best = min(sum(cost[i, p[i]] for i in range(n)) for p in itertools.permutations(range(n)))
    return best / n


class TestTypes:
    def test_permutation_bijection(self):
        with pytest.raises(ValidationError):
            Permutation((0, 0, 1))
        assert Permutation((2, 0, 1)).inverse().map == (1, 2, 0)

    def test_identity_coupling(self):
        c = coupling_from_permutation(Permutation((0, 1)))
        assert np.array_equal(c.weights, np.array([[0.5, 0.0], [0.0, 0.5]]))

    def test_swap_coupling(self):
        c = coupling_from_permutation(Permutation((1, 0)))
        assert np.array_equal(c.weights, np.array([[0.0, 0.5], [0.5, 0.0]]))

    def test_permutation_coupling_marginals(self, rng):
        p = Permutation(tuple(rng.permutation(9).tolist()))
        c = coupling_from_permutation(p)
        assert np.allclose(c.weights.sum(axis=0), 1 / 9, atol=0)
        assert np.allclose(c.weights.sum(axis=1), 1 / 9, atol=0)

    @pytest.mark.parametrize("n", [1, 2, 3, 7])
    def test_product_coupling(self, n):
        c = product_coupling(n)
        assert np.array_equal(c.weights, np.full((n, n), 1.0 / n**2))

    def test_coupling_rejects_bad_marginals(self):
        with pytest.raises(ValidationError, match="marginals"):
            Coupling(weights=np.array([[0.6, 0.0], [0.0, 0.4]]))

    def test_coupling_rejects_negative(self):
        with pytest.raises(ValidationError, match="negative"):
            Coupling(weights=np.array([[0.75, -0.25], [-0.25, 0.75]]))


class TestSolve:
    def test_zero_diagonal(self):
        p, obj = solve_linear_ot(np.array([[0.0, 1.0], [1.0, 0.0]]))
        assert p.map == (0, 1)
        assert obj == 0.0

    def test_two_by_two_derived(self):
        cost = np.array([[1.0, 2.0], [3.0, 0.0]])
        # exhaustive: identity = (1+0)/2 = 0.5, swap = (2+3)/2 = 2.5
        p, obj = solve_linear_ot(cost)
        assert p.map == (0, 1)
        assert obj == pytest.approx(0.5)

    def test_random_7x7_vs_factorial(self, rng):
        for _ in range(5):
            cost = rng.uniform(0, 5, size=(7, 7))
            _, obj = solve_linear_ot(cost)
            assert obj == pytest.approx(exhaustive_min(cost), abs=1e-12)

    def test_non_square(self):
        with pytest.raises(ShapeError):
            solve_linear_ot(np.ones((2, 3)))

    def test_non_finite(self):
        with pytest.raises(ValidationError):
            solve_linear_ot(np.array([[np.inf, 0.0], [0.0, 1.0]]))

    def test_deterministic(self, rng):
        cost = rng.uniform(size=(12, 12))
        p1, o1 = solve_linear_ot(cost)
        p2, o2 = solve_linear_ot(cost.copy())
        assert p1.map == p2.map and o1 == o2


class TestBruteForce:
    def test_singleton(self):
        p, obj = brute_force_lap(np.array([[0.0]]))
        assert p.map == (0,) and obj == 0.0

    def test_tie_lexicographic(self):
        # all assignments cost the same; identity is lexicographically first
        p, _ = brute_force_lap(np.ones((3, 3)))
        assert p.map == (0, 1, 2)

    def test_guard(self):
        with pytest.raises(ParameterError):
            brute_force_lap(np.zeros((10, 10)))

    def test_agreement_with_solver_100x(self, rng):
        for _ in range(100):
            cost = rng.uniform(0, 3, size=(6, 6))
            _, o_fast = solve_linear_ot(cost)
            _, o_slow = brute_force_lap(cost)
            assert abs(o_fast - o_slow) <= 1e-12


class TestPolytopeProperties:
    def test_vertex_beats_random_couplings(self, rng):
        n = 6
        cost = rng.uniform(0, 2, size=(n, n))
        p, obj = solve_linear_ot(cost)
        vertex_value = float((coupling_from_permutation(p).weights * cost).sum())
        assert vertex_value == pytest.approx(obj, rel=1e-12)
        for _ in range(25):
            other = random_doubly_stochastic(n, rng)
            assert vertex_value <= float((other.weights * cost).sum()) + 1e-12

    def test_row_permutation_invariance(self, rng):
        n = 5
        cost = rng.uniform(size=(n, n))
        q = list(rng.permutation(n))
        _, obj = solve_linear_ot(cost)
        _, obj_q = solve_linear_ot(cost[q, :])
        assert obj_q == pytest.approx(obj, rel=1e-12)

    def test_constant_shift(self, rng):
        n = 6
        cost = rng.uniform(size=(n, n))
        shift = 3.25
        p0, obj = solve_linear_ot(cost)
        p1, obj_shift = solve_linear_ot(cost + shift)
        assert obj_shift == pytest.approx(obj + shift, rel=1e-12)
        # an optimal assignment for one is optimal for the other
        base = float(cost[np.arange(n), list(p1.map)].sum() / n)
        assert base == pytest.approx(obj, abs=1e-12)
