"""Executable verification of the distortion and Lipschitz bounds on
synthetic paired spaces.

Each instance carries a known cross-modal reference map g (applied to every
x point), plus observed y points that sit within a declared angular noise
radius of g's images. At n <= 9 the bottleneck distance, the worst map
error over a coupling support, and the empirical Lipschitz constant of g
are all computable exactly, so the bounds

    |d_Y(g(x_i), g(x_k)) - d_X(x_i, x_k)|  <=  GW_inf + 2 * rho      (pairs in the support)
    L_g  <=  1 + (2 * rho + GW_inf) / r_min

are checked by direct enumeration. Both are proven statements, so any
violation flags an implementation defect in the quantities involved.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .detrng import DetRng
from .errors import DegenerateError, ParameterError, ValidationError
from .gw_core import gw_infinity
from .mmspace import DistanceMatrix, angular_distance, pairwise_angular

_SLACK = 1e-9


@dataclass(frozen=True)
class SynthInstance:
    """Paired synthetic spaces with an exactly-known reference map.

    mapped_images[i] is g(x_points[i]); y_points[i] lies within
    `noise_bound` angular distance of mapped_images[i] by construction.
    """

    x_points: np.ndarray
    y_points: np.ndarray
    mapped_images: np.ndarray
    noise_bound: float
    seed: int = 0

    def __post_init__(self):
        x = np.asarray(self.x_points, dtype=np.float64)
        y = np.asarray(self.y_points, dtype=np.float64)
        g = np.asarray(self.mapped_images, dtype=np.float64)
        n = x.shape[0]
        if not (2 <= n <= 9):
            raise ParameterError(f"instance size must be in [2, 9], got {n}")
        if y.shape != g.shape or y.shape[0] != n:
            raise ValidationError("y_points and mapped_images must align with x_points")
        for name, arr in (("x_points", x), ("y_points", y), ("mapped_images", g)):
            if (np.linalg.norm(arr, axis=1) == 0.0).any():
                raise ValidationError(f"{name} contains a zero-norm row")
        for i in range(n):
            err = angular_distance(g[i], y[i])
            if err > self.noise_bound + _SLACK:
                raise ValidationError(
                    f"row {i}: observed error {err} exceeds declared bound {self.noise_bound}"
                )
        object.__setattr__(self, "x_points", x)
        object.__setattr__(self, "y_points", y)
        object.__setattr__(self, "mapped_images", g)

    @property
    def n(self) -> int:
        return self.x_points.shape[0]

    def x_space(self) -> DistanceMatrix:
        return DistanceMatrix(values=pairwise_angular(self.x_points), label="x")

    def y_space(self) -> DistanceMatrix:
        return DistanceMatrix(values=pairwise_angular(self.y_points), label="y")


@dataclass(frozen=True)
class LipschitzBoundResult:
    gw_inf: float
    worst_map_error: float
    min_separation: float
    lipschitz_empirical: float
    bound: float
    holds: bool


def _unit_rows(m: np.ndarray) -> np.ndarray:
    return m / np.linalg.norm(m, axis=1)[:, None]


def _rotate_within_sphere(u: np.ndarray, angle: float, rng: np.random.Generator) -> np.ndarray:
    """Move unit vector u along a random geodesic by exactly `angle`."""
    while True:
        r = rng.standard_normal(u.size)
        w = r - (r @ u) * u
        norm = np.linalg.norm(w)
        if norm > 1e-12:
            break
    w = w / norm
    return np.cos(angle) * u + np.sin(angle) * w


def synth_instance(n: int, d_x: int, d_y: int, noise: float, seed: int) -> SynthInstance:
    """Instance with g = (random linear map, then normalize) and y points
    rotated away from g's images by angles drawn in [0, noise]."""
    if not (2 <= n <= 9):
        raise ParameterError(f"n must be in [2, 9], got {n}")
    if noise < 0:
        raise ParameterError("noise must be >= 0")
    if d_x < 1 or d_y < 2:
        raise ParameterError("need d_x >= 1 and d_y >= 2")
    rng = np.random.default_rng(seed)
    x = _unit_rows(rng.standard_normal((n, d_x)))
    for _ in range(100):
        w_map = rng.standard_normal((d_y, d_x))
        images = x @ w_map.T
        norms = np.linalg.norm(images, axis=1)
        if norms.min() > 1e-8:
            break
    else:
        raise DegenerateError("could not draw a non-collapsing linear map")
    images = images / norms[:, None]
    y = np.empty_like(images)
    for i in range(n):
        angle = rng.uniform(0.0, noise) if noise > 0 else 0.0
        y[i] = _rotate_within_sphere(images[i], angle, rng) if noise > 0 else images[i]
    return SynthInstance(
        x_points=x, y_points=y, mapped_images=images, noise_bound=noise, seed=seed
    )


def isometric_instance(n: int, d_x: int, d_y: int, seed: int) -> SynthInstance:
    """Noise-free instance whose map has orthonormal columns, so every
    angular distance is preserved exactly (the bound's equality case)."""
    if d_y < d_x:
        raise ParameterError("isometric embedding needs d_y >= d_x")
    rng = np.random.default_rng(seed)
    x = _unit_rows(rng.standard_normal((n, d_x)))
    q, _ = np.linalg.qr(rng.standard_normal((d_y, d_x)))
    images = x @ q.T
    return SynthInstance(
        x_points=x, y_points=images.copy(), mapped_images=images, noise_bound=0.0, seed=seed
    )


def worst_pair_error(inst: SynthInstance, support: list[tuple[int, int]]) -> float:
    """Max angular error of the reference map over coupling-support pairs:
    max over (i, j) of d_Y(g(x_i), y_j)."""
    if not support:
        raise ParameterError("support must be non-empty")
    return max(angular_distance(inst.mapped_images[i], inst.y_points[j]) for i, j in support)


def _bound_ingredients(inst: SynthInstance):
    gw_inf, perm = gw_infinity(inst.x_space(), inst.y_space())
    support = [(i, perm.map[i]) for i in range(inst.n)]
    rho = worst_pair_error(inst, support)
    d_x = pairwise_angular(inst.x_points)
    d_map = pairwise_angular(inst.mapped_images)
    iu = np.triu_indices(inst.n, k=1)
    return gw_inf, rho, d_x[iu], d_map[iu]


def check_distortion_bound(inst: SynthInstance) -> tuple[bool, float]:
    """Verify |d_Y(g(x_i), g(x_k)) - d_X(x_i, x_k)| <= GW_inf + 2*rho on
    every pair of the bottleneck support. Returns (holds, minimal slack)."""
    gw_inf, rho, dx_pairs, dmap_pairs = _bound_ingredients(inst)
    distortion = np.abs(dmap_pairs - dx_pairs)
    slack = (gw_inf + 2.0 * rho) - distortion
    min_slack = float(slack.min())
    return min_slack >= -_SLACK, min_slack


def check_lipschitz_bound(inst: SynthInstance) -> LipschitzBoundResult:
    """Verify the empirical Lipschitz constant of the reference map against
    1 + (2*rho + GW_inf) / r_min, where r_min is the smallest pairwise
    x-distance over the support points."""
    gw_inf, rho, dx_pairs, dmap_pairs = _bound_ingredients(inst)
    r_min = float(dx_pairs.min())
    if r_min == 0.0:
        raise DegenerateError("coincident x points: minimum separation is zero")
    lipschitz = float((dmap_pairs / dx_pairs).max())
    bound = 1.0 + (2.0 * rho + gw_inf) / r_min
    return LipschitzBoundResult(
        gw_inf=gw_inf,
        worst_map_error=rho,
        min_separation=r_min,
        lipschitz_empirical=lipschitz,
        bound=bound,
        holds=lipschitz <= bound + _SLACK,
    )


def run_sweep(
    instances: int,
    seed: int,
    n_low: int = 4,
    n_high: int = 8,
    noise_max: float = 0.3,
    d_x: int = 4,
    d_y: int = 6,
) -> list[dict]:
    """Check both bounds on a seeded batch of instances; one record each.

    Record keys: seed, n, noise, gw_inf, rho_star, r_min, lipschitz, bound,
    slack, holds — `slack` is the distortion bound's minimal slack and
    `holds` requires both inequalities.
    """
    if instances < 1:
        raise ParameterError("instances must be >= 1")
    if not (2 <= n_low <= n_high <= 9):
        raise ParameterError("sizes must satisfy 2 <= n_low <= n_high <= 9")
    meta = DetRng(seed)
    records = []
    for i in range(instances):
        inst_seed = seed + i
        n = n_low + meta.below(n_high - n_low + 1)
        noise = meta.uniform() * noise_max
        inst = synth_instance(n, d_x, d_y, noise, inst_seed)
        dist_holds, min_slack = check_distortion_bound(inst)
        lip = check_lipschitz_bound(inst)
        records.append(
            {
                "seed": inst_seed,
                "n": n,
                "noise": noise,
                "gw_inf": lip.gw_inf,
                "rho_star": lip.worst_map_error,
                "r_min": lip.min_separation,
                "lipschitz": lip.lipschitz_empirical,
                "bound": lip.bound,
                "slack": min_slack,
                "holds": bool(dist_holds and lip.holds),
            }
        )
    return records
