"""Metric-measure space construction: angular pairwise distances and
median-ratio scale matching between modalities.

Distances are kept at float64 even though embeddings are float32: the
downstream quadratic-form accumulation is precision-sensitive.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .embed_io import EmbeddingSet
from .errors import DegenerateError, FormatError, ShapeError, ValidationError

DST_MAGIC = b"DST1"
DST_VERSION = 1


@dataclass(frozen=True)
class DistanceMatrix:
    """Symmetric nonnegative pairwise-distance matrix with a zero diagonal."""

    values: np.ndarray
    label: str = ""

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise ShapeError(f"distance matrix must be square, got {v.shape}")
        if not np.isfinite(v).all():
            raise ValidationError("distance matrix has non-finite entries")
        if (v < 0).any():
            raise ValidationError("distance matrix has negative entries")
        if (np.diagonal(v) != 0).any():
            raise ValidationError("distance matrix diagonal must be exactly zero")
        if not np.array_equal(v, v.T):
            raise ValidationError("distance matrix must be exactly symmetric")
        v = v.copy()
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @property
    def n(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class ScaleMatchResult:
    """Outcome of scaling one matrix so its off-diagonal median matches another's."""

    scale: float
    scaled: DistanceMatrix
    target_median: float
    source_median: float


def angular_distance(u: np.ndarray, v: np.ndarray) -> float:
    """arccos of cosine similarity, cosine clamped to [-1, 1]; result in [0, pi]."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise ShapeError(f"vectors have shapes {u.shape} and {v.shape}")
    nu = np.linalg.norm(u)
    nv = np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        raise DegenerateError("angular distance undefined for zero-norm vector")
    if not (np.isfinite(u).all() and np.isfinite(v).all()):
        raise ValidationError("non-finite vector entries")
    cos = float(np.dot(u, v) / (nu * nv))
    return float(np.arccos(min(1.0, max(-1.0, cos))))


def pairwise_angular(points: np.ndarray) -> np.ndarray:
    """Angular distance matrix of the rows of `points` (float64, exact-symmetric)."""
    x = np.asarray(points, dtype=np.float64)
    norms = np.linalg.norm(x, axis=1)
    if (norms == 0.0).any():
        raise DegenerateError(f"zero-norm row at index {int(np.argmin(norms))}")
    xn = x / norms[:, None]
    cos = np.clip(xn @ xn.T, -1.0, 1.0)
    # mirror the strict upper triangle so symmetry is exact, diagonal exactly 0
    upper = np.triu(np.arccos(cos), k=1)
    return upper + upper.T


def pairwise_distances(emb: EmbeddingSet, label: str | None = None) -> DistanceMatrix:
    """Realize an embedding set as a metric space under angular distance."""
    return DistanceMatrix(
        values=pairwise_angular(emb.data),
        label=label if label is not None else emb.source,
    )


def offdiag_median(m: DistanceMatrix) -> float:
    """Median of the strict upper triangle (mean of middles for even counts)."""
    n = m.n
    if n < 2:
        raise ShapeError("need at least a 2x2 matrix")
    iu = np.triu_indices(n, k=1)
    return float(np.median(m.values[iu]))


def median_scale_match(source: DistanceMatrix, target: DistanceMatrix) -> ScaleMatchResult:
    """Rescale `source` so its off-diagonal median equals `target`'s.

    The scale is target_median / source_median; nothing but the unit changes
    because the map is affine on distances.
    """
    src_med = offdiag_median(source)
    tgt_med = offdiag_median(target)
    if src_med == 0.0:
        raise DegenerateError("source median is zero (all points angularly coincident)")
    s = tgt_med / src_med
    scaled = DistanceMatrix(values=s * source.values, label=source.label)
    return ScaleMatchResult(scale=s, scaled=scaled, target_median=tgt_med, source_median=src_med)


def write_distance_matrix(m: DistanceMatrix, path: str | Path) -> None:
    """Debug dump: magic 'DST1', version u32, n u32, n*n binary64 row-major."""
    path = Path(path)
    header = DST_MAGIC + struct.pack("<II", DST_VERSION, m.n)
    path.write_bytes(header + np.ascontiguousarray(m.values, dtype="<f8").tobytes())


def read_distance_matrix(path: str | Path, label: str = "") -> DistanceMatrix:
    raw = Path(path).read_bytes()
    if len(raw) < 4 or raw[:4] != DST_MAGIC:
        raise FormatError(f"{path}: bad magic (not a DST1 file)")
    if len(raw) < 12:
        raise FormatError(f"{path}: truncated header")
    version, n = struct.unpack("<II", raw[4:12])
    if version != DST_VERSION:
        raise FormatError(f"{path}: unsupported version {version}")
    body = raw[12:]
    if len(body) != 8 * n * n:
        raise FormatError(f"{path}: payload is {len(body)} bytes, expected {8 * n * n}")
    values = np.frombuffer(body, dtype="<f8").reshape(n, n)
    return DistanceMatrix(values=values, label=label)
