"""Writer for the EMB1 embedding interchange format.

Byte layout (little-endian): magic "EMB1" | version u32 = 1 | n u32 |
d u32 | modality u8 (0 vision, 1 text) | source length u32 + UTF-8 |
per id: length u32 + UTF-8 | n*d IEEE-754 binary32 row-major.

Implemented here independently of the consumer package so the two sides
cross-check the format.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

MAGIC = b"EMB1"
VERSION = 1
MODALITY_BYTE = {"vision": 0, "text": 1}


class Emb1Error(ValueError):
    pass


def validate_rows(data: np.ndarray) -> None:
    """The invariants the consumer enforces at load; failing early keeps the
    job all-or-nothing."""
    if data.ndim != 2 or data.shape[0] < 2 or data.shape[1] < 1:
        raise Emb1Error(f"need an (n>=2, d>=1) matrix, got {data.shape}")
    bad = ~np.isfinite(data)
    if bad.any():
        raise Emb1Error(f"non-finite embedding at row {int(np.argwhere(bad)[0, 0])}")
    norms = np.linalg.norm(data.astype(np.float64), axis=1)
    if (norms == 0.0).any():
        raise Emb1Error(f"zero-norm embedding at row {int(np.argmin(norms))}")


def write_emb1(path: str | Path, ids: list[str], modality: str, data: np.ndarray,
               source: str = "") -> None:
    if modality not in MODALITY_BYTE:
        raise Emb1Error(f"modality must be 'vision' or 'text', got {modality!r}")
    data = np.ascontiguousarray(data, dtype="<f4")
    if len(ids) != data.shape[0]:
        raise Emb1Error(f"{len(ids)} ids for {data.shape[0]} rows")
    if len(set(ids)) != len(ids):
        raise Emb1Error("duplicate ids")
    validate_rows(data)
    n, d = data.shape
    parts = [MAGIC, struct.pack("<IIIB", VERSION, n, d, MODALITY_BYTE[modality])]
    src = source.encode("utf-8")
    parts.append(struct.pack("<I", len(src)))
    parts.append(src)
    for s in ids:
        raw = s.encode("utf-8")
        parts.append(struct.pack("<I", len(raw)))
        parts.append(raw)
    parts.append(data.tobytes())
    Path(path).write_bytes(b"".join(parts))
