"""Exact linear OT over the transport polytope with equal uniform marginals.

With both marginals uniform 1/n, every vertex of the polytope is a scaled
permutation matrix (Birkhoff-von Neumann), so min <C, pi> is a linear
assignment problem and is solved exactly by a shortest-augmenting-path
solver rather than a general LP.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import ParameterError, ShapeError, ValidationError

MARGINAL_TOL = 1e-12


@dataclass(frozen=True)
class Permutation:
    """Bijection on [0, n); map[i] is the column assigned to row i."""

    map: tuple[int, ...]

    def __post_init__(self):
        m = tuple(int(i) for i in self.map)
        n = len(m)
        if sorted(m) != list(range(n)):
            raise ValidationError("map is not a bijection on [0, n)")
        object.__setattr__(self, "map", m)

    @property
    def n(self) -> int:
        return len(self.map)

    def inverse(self) -> "Permutation":
        inv = [0] * self.n
        for i, j in enumerate(self.map):
            inv[j] = i
        return Permutation(tuple(inv))


@dataclass(frozen=True)
class Coupling:
    """Transport plan with uniform 1/n marginals on both sides."""

    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise ShapeError(f"coupling must be square, got {w.shape}")
        if not np.isfinite(w).all():
            raise ValidationError("coupling has non-finite entries")
        if (w < 0).any():
            raise ValidationError("coupling has negative entries")
        n = w.shape[0]
        target = 1.0 / n
        if np.abs(w.sum(axis=1) - target).max() > MARGINAL_TOL:
            raise ValidationError("row marginals deviate from 1/n")
        if np.abs(w.sum(axis=0) - target).max() > MARGINAL_TOL:
            raise ValidationError("column marginals deviate from 1/n")
        w = w.copy()
        w.flags.writeable = False
        object.__setattr__(self, "weights", w)

    @property
    def n(self) -> int:
        return self.weights.shape[0]


def coupling_from_permutation(p: Permutation) -> Coupling:
    n = p.n
    w = np.zeros((n, n))
    w[np.arange(n), list(p.map)] = 1.0 / n
    return Coupling(weights=w)


def product_coupling(n: int) -> Coupling:
    """Independence coupling of two uniform marginals: all entries 1/n^2."""
    if n < 1:
        raise ParameterError("n must be >= 1")
    return Coupling(weights=np.full((n, n), 1.0 / (n * n)))


def _check_cost(cost: np.ndarray) -> np.ndarray:
    c = np.asarray(cost, dtype=np.float64)
    if c.ndim != 2 or c.shape[0] != c.shape[1]:
        raise ShapeError(f"cost matrix must be square, got {c.shape}")
    if not np.isfinite(c).all():
        raise ValidationError("cost matrix has non-finite entries")
    return c


def solve_linear_ot(cost: np.ndarray) -> tuple[Permutation, float]:
    """Exact argmin of <C, pi> over the polytope; objective = min sum / n.

    The permutation returned induces the optimal coupling (mass 1/n on each
    assigned pair). Ties may resolve to any optimal assignment but the
    result is a pure function of the input bytes.
    """
    c = _check_cost(cost)
    rows, cols = linear_sum_assignment(c)
    p = Permutation(tuple(int(j) for j in cols))
    objective = float(c[rows, cols].sum() / c.shape[0])
    return p, objective


def brute_force_lap(cost: np.ndarray, max_n: int = 9) -> tuple[Permutation, float]:
    """Exhaustive assignment oracle; ties go to the lexicographically
    smallest permutation. Guarded to n <= 9."""
    c = _check_cost(cost)
    n = c.shape[0]
    if n > max_n:
        raise ParameterError(f"brute force limited to n <= {max_n}, got {n}")
    best_perm: tuple[int, ...] | None = None
    best_sum = np.inf
    rows = np.arange(n)
    for perm in itertools.permutations(range(n)):
        s = float(c[rows, perm].sum())
        if s < best_sum:
            best_sum = s
            best_perm = perm
    assert best_perm is not None
    return Permutation(best_perm), best_sum / n
