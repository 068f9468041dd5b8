"""Embedding interchange: the EMB1 binary format, a CSV fallback, and
deterministic paired subsampling.

EMB1 layout (little-endian throughout):

    magic "EMB1" | version u32 = 1 | n u32 | d u32 | modality u8 (0=vision,
    1=text) | source length u32 + UTF-8 | per id: length u32 + UTF-8 |
    payload: n*d IEEE-754 binary32, row-major

The payload carries no timestamps, so writing the same set twice produces
byte-identical files.
"""

from __future__ import annotations

import csv
import enum
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .detrng import DetRng
from .errors import FormatError, PairingError, ParameterError, ValidationError

MAGIC = b"EMB1"
FORMAT_VERSION = 1


class Modality(enum.Enum):
    VISION = 0
    TEXT = 1

    @classmethod
    def from_byte(cls, b: int) -> "Modality":
        try:
            return cls(b)
        except ValueError:
            raise FormatError(f"unknown modality byte {b}") from None


@dataclass(frozen=True)
class EmbeddingSet:
    """One modality's sampled representations, id-aligned row-wise.

    data is float32 with shape (n, d); row i belongs to ids[i]. Rows must be
    finite and nonzero-norm (angular distance is undefined at the origin).
    """

    ids: tuple[str, ...]
    modality: Modality
    data: np.ndarray
    source: str = ""

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float32)
        if data.ndim != 2:
            raise ValidationError(f"data must be 2-D, got ndim={data.ndim}")
        n, d = data.shape
        if n < 2:
            raise ValidationError(f"need at least 2 samples, got n={n}")
        if d < 1:
            raise ValidationError("embedding dimension must be >= 1")
        ids = tuple(self.ids)
        if len(ids) != n:
            raise ValidationError(f"{len(ids)} ids for {n} rows")
        if len(set(ids)) != n:
            seen: set[str] = set()
            for i, s in enumerate(ids):
                if s in seen:
                    raise ValidationError(f"duplicate id {s!r} at row {i}")
                seen.add(s)
        bad = ~np.isfinite(data)
        if bad.any():
            row = int(np.argwhere(bad)[0, 0])
            raise ValidationError(f"non-finite entry at row {row}")
        norms = np.linalg.norm(data.astype(np.float64), axis=1)
        if (norms == 0.0).any():
            row = int(np.argmin(norms))
            raise ValidationError(f"zero-norm embedding at row {row}")
        data = data.copy()
        data.flags.writeable = False
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "ids", ids)

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def dim(self) -> int:
        return self.data.shape[1]

    def __eq__(self, other) -> bool:
        if not isinstance(other, EmbeddingSet):
            return NotImplemented
        return (
            self.ids == other.ids
            and self.modality == other.modality
            and self.source == other.source
            and self.data.shape == other.data.shape
            and bool(np.array_equal(self.data, other.data))
        )

    def subset(self, indices: list[int]) -> "EmbeddingSet":
        return EmbeddingSet(
            ids=tuple(self.ids[i] for i in indices),
            modality=self.modality,
            data=self.data[indices],
            source=self.source,
        )


@dataclass(frozen=True)
class PairedSample:
    """Row-aligned vision/text subsets drawn with one seed."""

    vision: EmbeddingSet
    text: EmbeddingSet
    seed: int = 0

    def __post_init__(self):
        if self.vision.ids != self.text.ids:
            raise PairingError("vision and text ids differ (order matters)")

    @property
    def n(self) -> int:
        return self.vision.n


def write_embeddings(emb: EmbeddingSet, path: str | Path) -> None:
    """Write an EmbeddingSet; '.csv' suffix selects the text fallback."""
    path = Path(path)
    if path.suffix.lower() == ".csv":
        _write_csv(emb, path)
        return
    parts = [MAGIC, struct.pack("<IIIB", FORMAT_VERSION, emb.n, emb.dim, emb.modality.value)]
    src = emb.source.encode("utf-8")
    parts.append(struct.pack("<I", len(src)))
    parts.append(src)
    for s in emb.ids:
        b = s.encode("utf-8")
        parts.append(struct.pack("<I", len(b)))
        parts.append(b)
    payload = np.ascontiguousarray(emb.data, dtype="<f4")
    parts.append(payload.tobytes())
    path.write_bytes(b"".join(parts))


def read_embeddings(
    path: str | Path,
    modality: Modality = Modality.VISION,
    source: str | None = None,
) -> EmbeddingSet:
    """Read an EMB1 file, or a CSV file when the path ends in '.csv'.

    `modality`/`source` only apply to CSV, which has no metadata slots; the
    binary header always wins.
    """
    path = Path(path)
    if path.suffix.lower() == ".csv":
        return _read_csv(path, modality, source if source is not None else path.name)
    raw = path.read_bytes()
    return _decode_emb1(raw, str(path))


def _decode_emb1(raw: bytes, name: str) -> EmbeddingSet:
    if len(raw) < 4 or raw[:4] != MAGIC:
        raise FormatError(f"{name}: bad magic (not an EMB1 file)")
    off = 4

    def take(k: int) -> bytes:
        nonlocal off
        if off + k > len(raw):
            raise FormatError(f"{name}: truncated at byte {off}")
        chunk = raw[off : off + k]
        off += k
        return chunk

    version, n, d, mod_byte = struct.unpack("<IIIB", take(13))
    if version != FORMAT_VERSION:
        raise FormatError(f"{name}: unsupported format version {version}")
    modality = Modality.from_byte(mod_byte)
    (src_len,) = struct.unpack("<I", take(4))
    source = take(src_len).decode("utf-8")
    ids = []
    for _ in range(n):
        (id_len,) = struct.unpack("<I", take(4))
        ids.append(take(id_len).decode("utf-8"))
    payload = take(4 * n * d)
    if off != len(raw):
        raise FormatError(f"{name}: {len(raw) - off} trailing bytes after payload")
    data = np.frombuffer(payload, dtype="<f4").reshape(n, d)
    return EmbeddingSet(ids=tuple(ids), modality=modality, data=data, source=source)


def _write_csv(emb: EmbeddingSet, path: Path) -> None:
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["id"] + [f"v{i}" for i in range(emb.dim)])
        for s, row in zip(emb.ids, emb.data):
            # %.9g round-trips any binary32 exactly
            w.writerow([s] + [format(float(v), ".9g") for v in row])


def _read_csv(path: Path, modality: Modality, source: str) -> EmbeddingSet:
    with path.open("r", newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows or not rows[0] or rows[0][0] != "id":
        raise FormatError(f"{path}: CSV header must start with 'id'")
    d = len(rows[0]) - 1
    ids, vecs = [], []
    for r, row in enumerate(rows[1:]):
        if len(row) != d + 1:
            raise FormatError(f"{path}: row {r} has {len(row) - 1} values, expected {d}")
        ids.append(row[0])
        try:
            vecs.append([float(v) for v in row[1:]])
        except ValueError as exc:
            raise FormatError(f"{path}: row {r}: {exc}") from None
    data = np.asarray(vecs, dtype=np.float32)
    if data.size == 0:
        raise FormatError(f"{path}: no data rows")
    return EmbeddingSet(ids=tuple(ids), modality=modality, data=data, source=source)


def sample_indices(n: int, count: int, seed: int) -> list[int]:
    """Deterministic without-replacement sample of range(n), sorted ascending.

    SplitMix64-driven partial Fisher-Yates; fully pinned so any
    implementation of the same recipe reproduces the subset.
    """
    if count > n:
        raise ParameterError(f"cannot sample {count} of {n} pairs")
    if count < 1:
        raise ParameterError("count must be positive")
    picked = DetRng(seed).partial_shuffle(n, count)
    return sorted(picked)


def sample_pairs(vision: EmbeddingSet, text: EmbeddingSet, count: int, seed: int) -> PairedSample:
    """Subsample `count` aligned rows from both modalities with one seed."""
    if vision.ids != text.ids:
        raise PairingError("vision and text ids differ; cannot pair")
    idx = sample_indices(vision.n, count, seed)
    return PairedSample(vision=vision.subset(idx), text=text.subset(idx), seed=seed)
