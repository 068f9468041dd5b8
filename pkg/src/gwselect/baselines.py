"""Comparison metrics for paired vision/text embedding sets: RSA, CCA and
mutual-nearest-neighbor overlap. All are higher-is-better, deterministic,
and need no transport solve.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .embed_io import EmbeddingSet
from .errors import DegenerateError, PairingError, ParameterError, ValidationError
from .mmspace import pairwise_angular


class Metric(enum.Enum):
    GW = "gw"
    RSA = "rsa"
    CCA = "cca"
    MUTUAL_NN = "mutualnn"
    ACCURACY_EXTERNAL = "accuracy"

    @classmethod
    def parse(cls, name: str) -> "Metric":
        for m in cls:
            if m.value == name:
                return m
        raise ParameterError(f"unknown metric {name!r}")


class Direction(enum.Enum):
    LOWER_BETTER = "lower_better"
    HIGHER_BETTER = "higher_better"


METRIC_DIRECTION = {
    Metric.GW: Direction.LOWER_BETTER,
    Metric.RSA: Direction.HIGHER_BETTER,
    Metric.CCA: Direction.HIGHER_BETTER,
    Metric.MUTUAL_NN: Direction.HIGHER_BETTER,
    Metric.ACCURACY_EXTERNAL: Direction.HIGHER_BETTER,
}

_METRIC_RANGE = {
    Metric.RSA: (-1.0, 1.0),
    Metric.CCA: (0.0, 1.0),
    Metric.MUTUAL_NN: (0.0, 1.0),
}


@dataclass(frozen=True)
class MetricScore:
    metric: Metric
    value: float
    direction: Direction

    def __post_init__(self):
        if not np.isfinite(self.value):
            raise ValidationError(f"{self.metric.value} score is not finite")
        if self.direction is not METRIC_DIRECTION[self.metric]:
            raise ValidationError(f"wrong direction for metric {self.metric.value}")
        rng = _METRIC_RANGE.get(self.metric)
        if rng is not None and not (rng[0] <= self.value <= rng[1]):
            raise ValidationError(
                f"{self.metric.value} score {self.value} outside [{rng[0]}, {rng[1]}]"
            )

    def to_report(self) -> dict:
        return {
            "metric": self.metric.value,
            "value": float(self.value),
            "direction": self.direction.value,
        }


def _score(metric: Metric, value: float) -> MetricScore:
    return MetricScore(metric=metric, value=value, direction=METRIC_DIRECTION[metric])


def _require_paired(vision: EmbeddingSet, text: EmbeddingSet) -> None:
    if vision.ids != text.ids:
        raise PairingError("vision and text sets are not id-aligned")


def _cosine_matrix(data: np.ndarray) -> np.ndarray:
    x = np.asarray(data, dtype=np.float64)
    xn = x / np.linalg.norm(x, axis=1)[:, None]
    return xn @ xn.T


def rsa_score(vision: EmbeddingSet, text: EmbeddingSet) -> MetricScore:
    """Pearson correlation of the two within-space cosine-similarity
    matrices, compared over their strict upper triangles."""
    _require_paired(vision, text)
    n = vision.n
    if n < 3:
        raise ParameterError(f"RSA needs at least 3 samples, got {n}")
    iu = np.triu_indices(n, k=1)
    x = _cosine_matrix(vision.data)[iu]
    y = _cosine_matrix(text.data)[iu]
    xc = x - x.mean()
    yc = y - y.mean()
    denom = np.sqrt((xc @ xc) * (yc @ yc))
    if denom == 0.0:
        raise DegenerateError("similarity values are constant in one modality")
    r = float(xc @ yc / denom)
    return _score(Metric.RSA, min(1.0, max(-1.0, r)))


def canonical_correlations(x: np.ndarray, y: np.ndarray, ridge: float = 1e-6) -> np.ndarray:
    """Canonical correlations via whitened SVD.

    Both matrices are centered; each within-view covariance gets a
    trace-scaled ridge (eps * tr(C)/d * I) before the symmetric inverse
    square root, then the singular values of the whitened cross-covariance
    are the correlations, in descending order.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n = x.shape[0]
    xc = x - x.mean(axis=0)
    yc = y - y.mean(axis=0)
    cxx = xc.T @ xc / (n - 1)
    cyy = yc.T @ yc / (n - 1)
    cxy = xc.T @ yc / (n - 1)
    if not (np.isfinite(cxx).all() and np.isfinite(cyy).all() and np.isfinite(cxy).all()):
        raise ValidationError("non-finite covariance")

    def inv_sqrt(c: np.ndarray) -> np.ndarray:
        d = c.shape[0]
        scale = np.trace(c) / d
        if scale <= 0.0:
            raise DegenerateError("zero-variance view in CCA")
        vals, vecs = np.linalg.eigh(c + ridge * scale * np.eye(d))
        return (vecs / np.sqrt(vals)) @ vecs.T

    m = inv_sqrt(cxx) @ cxy @ inv_sqrt(cyy)
    return np.linalg.svd(m, compute_uv=False)


def cca_score(vision: EmbeddingSet, text: EmbeddingSet, components: int = 10) -> MetricScore:
    """Mean of the top `components` canonical correlations, clamped to [0, 1]."""
    _require_paired(vision, text)
    if components < 1:
        raise ParameterError("components must be positive")
    if vision.n <= components:
        raise ParameterError(
            f"need more samples than components: n={vision.n}, components={components}"
        )
    corrs = canonical_correlations(vision.data, text.data)
    k = min(components, corrs.size)
    value = float(np.clip(corrs[:k].mean(), 0.0, 1.0))
    return _score(Metric.CCA, value)


def _neighbor_indices(data: np.ndarray, k: int) -> np.ndarray:
    """k nearest neighbors per row under angular distance, self excluded,
    distance ties broken toward the smaller index."""
    d = pairwise_angular(data)
    np.fill_diagonal(d, np.inf)
    order = np.argsort(d, axis=1, kind="stable")
    return order[:, :k]


def mutual_nn_score(vision: EmbeddingSet, text: EmbeddingSet, k: int = 10) -> MetricScore:
    """Mean fraction of shared k-nearest-neighbor indices across modalities.

    The image side is treated as the source domain for reporting purposes;
    the overlap itself is symmetric.
    """
    _require_paired(vision, text)
    n = vision.n
    if k >= n:
        raise ParameterError(f"k must be < n, got k={k}, n={n}")
    if k < 1:
        raise ParameterError("k must be positive")
    nv = _neighbor_indices(vision.data, k)
    nt = _neighbor_indices(text.data, k)
    rows = np.repeat(np.arange(n), k)
    mask_v = np.zeros((n, n), dtype=bool)
    mask_t = np.zeros((n, n), dtype=bool)
    mask_v[rows, nv.ravel()] = True
    mask_t[rows, nt.ravel()] = True
    overlap = (mask_v & mask_t).sum(axis=1)
    return _score(Metric.MUTUAL_NN, float(overlap.mean() / k))
