"""Gromov-Wasserstein discrepancy, its gradient, a conditional-gradient
solver over the transport polytope, and the bottleneck (sup-norm) variant.

The discrepancy for a coupling pi between spaces with distance matrices
A and B is

    E(pi) = sum_{i,j,k,l} L(A[i,k], B[j,l]) * pi[i,j] * pi[k,l]

with L either |a-b| or (a-b)^2. E is a quadratic form in pi for any fixed
penalty, which the solver exploits: along a segment toward a polytope
vertex the objective is an exact parabola, so the line search is exact and
traces are non-increasing by construction.
"""

from __future__ import annotations

import enum
import itertools
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .detrng import DetRng
from .errors import FormatError, ParameterError, ShapeError
from .linear_ot import (
    Coupling,
    Permutation,
    coupling_from_permutation,
    product_coupling,
    solve_linear_ot,
)
from .mmspace import DistanceMatrix

# memory caps (array elements) for the chunked pair-sum engines
_OBJ_BLOCK_ELEMS = 25_000_000
_GRAD_BLOCK_ELEMS = 4_000_000


class PenaltyKind(enum.Enum):
    """Pairwise-distance penalty; absolute difference is the default."""

    ABS_L1 = "l1"
    SQUARED_L2 = "l2"

    @classmethod
    def parse(cls, name: str) -> "PenaltyKind":
        for kind in cls:
            if kind.value == name:
                return kind
        raise ParameterError(f"unknown penalty {name!r} (expected 'l1' or 'l2')")


@dataclass(frozen=True)
class GwConfig:
    max_iters: int = 1000
    tolerance: float = 1e-9
    restarts: int = 1
    seed: int = 42
    penalty: PenaltyKind = PenaltyKind.ABS_L1

    def __post_init__(self):
        if self.max_iters < 1:
            raise ParameterError("max_iters must be >= 1")
        if self.restarts < 1:
            raise ParameterError("restarts must be >= 1")
        if not self.tolerance > 0:
            raise ParameterError("tolerance must be positive")


@dataclass(frozen=True)
class GwSolveResult:
    """Best coupling found, its objective, and the winning restart's trace."""

    value: float
    coupling: Coupling
    trace: tuple[tuple[int, float, float], ...]
    iterations_run: int
    converged: bool
    restart_index: int = 0

    def __post_init__(self):
        objs = [obj for _, obj, _ in self.trace]
        if any(objs[i + 1] > objs[i] for i in range(len(objs) - 1)):
            raise ParameterError("trace objectives must be non-increasing")

    def to_report(self) -> dict:
        return {
            "value": self.value,
            "iterations": self.iterations_run,
            "converged": self.converged,
            "restart_index": self.restart_index,
            "trace": [[t, obj, eta] for t, obj, eta in self.trace],
        }


def _check_triple(pi: Coupling, a: DistanceMatrix, b: DistanceMatrix) -> None:
    if a.n != b.n:
        raise ShapeError(f"distance matrices differ in size: {a.n} vs {b.n}")
    if pi.n != a.n:
        raise ShapeError(f"coupling is {pi.n}x{pi.n} but spaces are {a.n}x{a.n}")


def _pair_sum_objective(w: np.ndarray, A: np.ndarray, B: np.ndarray, penalty: PenaltyKind) -> float:
    """E(pi) summing only over nonzero coupling entries; O(nnz^2) work."""
    idx_i, idx_j = np.nonzero(w)
    vals = w[idx_i, idx_j]
    m = vals.size
    if m == 0:
        return 0.0
    block = max(1, _OBJ_BLOCK_ELEMS // m)
    total = 0.0
    for s in range(0, m, block):
        e = min(s + block, m)
        diff = A[np.ix_(idx_i[s:e], idx_i)] - B[np.ix_(idx_j[s:e], idx_j)]
        if penalty is PenaltyKind.ABS_L1:
            np.abs(diff, out=diff)
        else:
            np.square(diff, out=diff)
        total += float(vals[s:e] @ (diff @ vals))
    return total


def _pair_sum_gradient(w: np.ndarray, A: np.ndarray, B: np.ndarray, penalty: PenaltyKind) -> np.ndarray:
    """C[i,j] = 2 sum_{k,l} L(A[i,k], B[j,l]) pi[k,l], summed over nonzeros."""
    n = A.shape[0]
    idx_k, idx_l = np.nonzero(w)
    vals = w[idx_k, idx_l]
    m = vals.size
    out = np.zeros((n, n))
    if m == 0:
        return out
    block = max(1, _GRAD_BLOCK_ELEMS // (n * n))
    for s in range(0, m, block):
        e = min(s + block, m)
        diff = A[:, idx_k[s:e]][:, None, :] - B[:, idx_l[s:e]][None, :, :]
        if penalty is PenaltyKind.ABS_L1:
            np.abs(diff, out=diff)
        else:
            np.square(diff, out=diff)
        out += np.tensordot(diff, vals[s:e], axes=([2], [0]))
    return 2.0 * out


def _factored_objective_l2(w: np.ndarray, A: np.ndarray, B: np.ndarray) -> float:
    """Squared-penalty objective via the standard low-rank decomposition:
    (a-b)^2 = a^2 + b^2 - 2ab, so E = <A^2 p, p> + <B^2 q, q> - 2<A pi B, pi>."""
    p = w.sum(axis=1)
    q = w.sum(axis=0)
    cross = A @ w @ B.T
    return float((A * A) @ p @ p + (B * B) @ q @ q - 2.0 * np.vdot(cross, w))


def _factored_gradient_l2(w: np.ndarray, A: np.ndarray, B: np.ndarray) -> np.ndarray:
    p = w.sum(axis=1)
    q = w.sum(axis=0)
    const = ((A * A) @ p)[:, None] + ((B * B) @ q)[None, :]
    return 2.0 * (const - 2.0 * (A @ w @ B.T))


def _objective(w: np.ndarray, A: np.ndarray, B: np.ndarray, penalty: PenaltyKind) -> float:
    if penalty is PenaltyKind.SQUARED_L2:
        return _factored_objective_l2(w, A, B)
    return _pair_sum_objective(w, A, B, penalty)


def gw_discrepancy(
    pi: Coupling,
    a: DistanceMatrix,
    b: DistanceMatrix,
    penalty: PenaltyKind = PenaltyKind.ABS_L1,
) -> float:
    """Distortion of coupling `pi` between spaces `a` and `b` (>= 0)."""
    _check_triple(pi, a, b)
    return _pair_sum_objective(pi.weights, a.values, b.values, penalty)


def gw_gradient(
    pi: Coupling,
    a: DistanceMatrix,
    b: DistanceMatrix,
    penalty: PenaltyKind = PenaltyKind.ABS_L1,
) -> np.ndarray:
    """Gradient of the discrepancy at `pi` (factor 2 from the symmetric
    quadratic form). The squared penalty takes the factorized O(n^3) route;
    the absolute penalty has no such factorization and sums over nonzeros.
    """
    _check_triple(pi, a, b)
    if penalty is PenaltyKind.SQUARED_L2:
        return _factored_gradient_l2(pi.weights, a.values, b.values)
    return _pair_sum_gradient(pi.weights, a.values, b.values, penalty)


def mix_couplings(pi: Coupling, vertex: Coupling, eta: float) -> Coupling:
    return Coupling(weights=(1.0 - eta) * pi.weights + eta * vertex.weights)


def line_search_step(
    pi: Coupling,
    direction_vertex: Coupling,
    a: DistanceMatrix,
    b: DistanceMatrix,
    penalty: PenaltyKind = PenaltyKind.ABS_L1,
    objective_at_zero: float | None = None,
) -> tuple[float, float]:
    """Exact line search along pi + eta*(vertex - pi), eta in [0, 1].

    E is an exact quadratic in eta, so it is recovered from evaluations at
    eta in {0, 1/2, 1}; the minimizer is the clamped parabola vertex, with
    the concave/linear case decided by endpoint comparison. Never increases
    the objective. `objective_at_zero` is an optional cached E(pi).
    """
    _check_triple(pi, a, b)
    if direction_vertex.n != pi.n:
        raise ShapeError("direction has wrong size")
    A, B = a.values, b.values
    w0, w1 = pi.weights, direction_vertex.weights
    e0 = _objective(w0, A, B, penalty) if objective_at_zero is None else objective_at_zero
    if np.array_equal(w0, w1):
        return 0.0, e0
    e_half = _objective(0.5 * w0 + 0.5 * w1, A, B, penalty)
    e1 = _objective(w1, A, B, penalty)
    u = e1 - e0
    v = e_half - e0
    c2 = 2.0 * u - 4.0 * v
    c1 = 4.0 * v - u
    if c2 > 0.0:
        eta = min(1.0, max(0.0, -c1 / (2.0 * c2)))
    else:
        eta = 1.0 if e1 < e0 else 0.0
    if eta == 0.0:
        new_obj = e0
    elif eta == 1.0:
        new_obj = e1
    elif eta == 0.5:
        new_obj = e_half
    else:
        new_obj = _objective((1.0 - eta) * w0 + eta * w1, A, B, penalty)
    if new_obj > e0:
        # rounding pushed the fit past the true minimum; stay put
        return 0.0, e0
    return eta, new_obj


def _solve_single(
    a: DistanceMatrix,
    b: DistanceMatrix,
    start: Coupling,
    config: GwConfig,
    restart_index: int,
) -> GwSolveResult:
    pi = start
    obj = _objective(pi.weights, a.values, b.values, config.penalty)
    trace: list[tuple[int, float, float]] = [(0, obj, 0.0)]
    converged = False
    iterations = 0
    for t in range(1, config.max_iters + 1):
        iterations = t
        cost = gw_gradient(pi, a, b, config.penalty)
        perm, _ = solve_linear_ot(cost)
        vertex = coupling_from_permutation(perm)
        eta, new_obj = line_search_step(
            pi, vertex, a, b, config.penalty, objective_at_zero=obj
        )
        trace.append((t, new_obj, eta))
        if eta == 0.0:
            converged = True
            break
        pi = mix_couplings(pi, vertex, eta)
        drop = obj - new_obj
        rel = drop / max(abs(obj), 1e-300)
        obj = new_obj
        if rel < config.tolerance:
            converged = True
            break
    return GwSolveResult(
        value=obj,
        coupling=pi,
        trace=tuple(trace),
        iterations_run=iterations,
        converged=converged,
        restart_index=restart_index,
    )


def solve_gw(
    a: DistanceMatrix,
    b: DistanceMatrix,
    config: GwConfig = GwConfig(),
    initial_couplings: list[Coupling] | None = None,
) -> GwSolveResult:
    """Frank-Wolfe minimization of the discrepancy over the polytope.

    Restart 0 starts from the product coupling; further restarts start from
    random permutation vertices drawn deterministically from config.seed.
    `initial_couplings` overrides that schedule (used for exhaustive-start
    diagnostics). Returns the best objective seen across restarts together
    with that restart's full trace.
    """
    if a.n != b.n:
        raise ShapeError(f"spaces differ in size: {a.n} vs {b.n}")
    n = a.n
    if initial_couplings is not None:
        starts = list(initial_couplings)
        if not starts:
            raise ParameterError("initial_couplings must be non-empty")
        for c in starts:
            if c.n != n:
                raise ShapeError("initial coupling has wrong size")
    else:
        starts = [product_coupling(n)]
        rng = DetRng(config.seed)
        for _ in range(config.restarts - 1):
            starts.append(coupling_from_permutation(Permutation(tuple(rng.permutation(n)))))
    best: GwSolveResult | None = None
    for r_idx, start in enumerate(starts):
        result = _solve_single(a, b, start, config, r_idx)
        if best is None or result.value < best.value:
            best = result
    assert best is not None
    return best


def gw_infinity(a: DistanceMatrix, b: DistanceMatrix, max_n: int = 9) -> tuple[float, Permutation]:
    """Bottleneck GW: min over permutations of max |A[i,k] - B[p(i),p(k)]|.

    Permutations suffice: with uniform marginals the support of any feasible
    coupling contains a perfect matching (Birkhoff / Hall), and the sup of
    distortions over the support dominates the max over that matching, so
    the permutation optimum equals the coupling optimum. Ties resolve to the
    lexicographically smallest permutation. Exhaustive, guarded to n <= 9.
    """
    if a.n != b.n:
        raise ShapeError(f"spaces differ in size: {a.n} vs {b.n}")
    n = a.n
    if n > max_n:
        raise ParameterError(f"bottleneck search limited to n <= {max_n}, got {n}")
    A, B = a.values, b.values
    best_val = np.inf
    best_perm: tuple[int, ...] | None = None
    chunk: list[tuple[int, ...]] = []
    chunk_cap = max(1, 16_000_000 // (n * n))

    def flush() -> None:
        nonlocal best_val, best_perm
        if not chunk:
            return
        P = np.asarray(chunk)
        Bp = B[P[:, :, None], P[:, None, :]]
        worst = np.abs(A[None, :, :] - Bp).reshape(len(chunk), -1).max(axis=1)
        i = int(np.argmin(worst))
        if worst[i] < best_val:
            best_val = float(worst[i])
            best_perm = chunk[i]
        chunk.clear()

    for perm in itertools.permutations(range(n)):
        chunk.append(perm)
        if len(chunk) >= chunk_cap:
            flush()
    flush()
    assert best_perm is not None
    return best_val, Permutation(best_perm)


def write_coupling(c: Coupling, path: str | Path) -> None:
    """Debug dump in the DST1 byte layout (magic, version, n, n*n binary64)."""
    path = Path(path)
    header = b"DST1" + struct.pack("<II", 1, c.n)
    path.write_bytes(header + np.ascontiguousarray(c.weights, dtype="<f8").tobytes())


def read_coupling(path: str | Path) -> Coupling:
    raw = Path(path).read_bytes()
    if len(raw) < 12 or raw[:4] != b"DST1":
        raise FormatError(f"{path}: not a DST1 coupling dump")
    version, n = struct.unpack("<II", raw[4:12])
    if version != 1:
        raise FormatError(f"{path}: unsupported version {version}")
    body = raw[12:]
    if len(body) != 8 * n * n:
        raise FormatError(f"{path}: payload is {len(body)} bytes, expected {8 * n * n}")
    return Coupling(weights=np.frombuffer(body, dtype="<f8").reshape(n, n))
