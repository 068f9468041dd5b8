"""Batched feature extraction from pretrained checkpoints.

Vision jobs take the CLS (first) token of the final hidden layer; text
jobs take the second-to-last layer's hidden states pooled by masked mean
over non-padding positions. A job either produces a complete, valid EMB1
file for every manifest item or fails with every per-item problem listed:
a silently shorter file would break id pairing downstream.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch
from PIL import Image

from .emb1 import Emb1Error, write_emb1
from .manifest import ManifestItem, load_manifest

VISION_POLICY = "cls_last"
TEXT_POLICY = "hidden_penultimate_meanpool"
_POLICY_FOR_MODALITY = {"vision": VISION_POLICY, "text": TEXT_POLICY}


class ExtractError(RuntimeError):
    pass


@dataclass(frozen=True)
class ExtractJob:
    model: str
    modality: str  # "vision" | "text"
    manifest_path: str
    output_path: str
    batch_size: int = 32
    device: str = "cpu"
    layer_policy: str = ""

    def __post_init__(self):
        if self.modality not in _POLICY_FOR_MODALITY:
            raise ExtractError(f"modality must be 'vision' or 'text', got {self.modality!r}")
        expected = _POLICY_FOR_MODALITY[self.modality]
        policy = self.layer_policy or expected
        if policy != expected:
            raise ExtractError(
                f"layer policy {policy!r} does not match modality {self.modality!r} "
                f"(expected {expected!r})"
            )
        object.__setattr__(self, "layer_policy", policy)
        if self.batch_size < 1:
            raise ExtractError("batch size must be >= 1")


def _batches(items: list[ManifestItem], size: int):
    for start in range(0, len(items), size):
        yield items[start : start + size]


def _load_images(batch: list[ManifestItem], errors: list[str]) -> list:
    images = []
    for item in batch:
        try:
            with Image.open(item.image_path) as img:
                images.append(img.convert("RGB"))
        except (FileNotFoundError, OSError) as exc:
            errors.append(f"{item.id}: cannot load image {item.image_path} ({exc})")
            images.append(None)
    return images


def _extract_vision(job: ExtractJob, items: list[ManifestItem]) -> np.ndarray:
    from transformers import AutoImageProcessor, AutoModel

    try:
        processor = AutoImageProcessor.from_pretrained(job.model)
        model = AutoModel.from_pretrained(job.model)
    except Exception as exc:
        raise ExtractError(f"cannot load vision model {job.model!r}: {exc}") from exc
    model.eval().to(job.device)
    errors: list[str] = []
    rows = []
    with torch.no_grad():
        for batch in _batches(items, job.batch_size):
            images = _load_images(batch, errors)
            good = [img for img in images if img is not None]
            if not good or errors:
                continue  # keep scanning for more item errors before failing
            inputs = processor(images=good, return_tensors="pt").to(job.device)
            out = model(**inputs)
            if not hasattr(out, "last_hidden_state"):
                raise ExtractError(f"model {job.model!r} exposes no token states")
            rows.append(out.last_hidden_state[:, 0, :].cpu().to(torch.float32).numpy())
    if errors:
        raise ExtractError("vision job failed:\n  " + "\n  ".join(errors))
    return np.vstack(rows)


def _extract_text(job: ExtractJob, items: list[ManifestItem]) -> np.ndarray:
    from transformers import AutoModel, AutoTokenizer

    try:
        tokenizer = AutoTokenizer.from_pretrained(job.model)
        model = AutoModel.from_pretrained(job.model)
    except Exception as exc:
        raise ExtractError(f"cannot load text model {job.model!r}: {exc}") from exc
    model.eval().to(job.device)
    limit = min(
        int(getattr(tokenizer, "model_max_length", 10**9) or 10**9),
        int(getattr(model.config, "max_position_embeddings", 10**9) or 10**9),
    )
    errors: list[str] = []
    rows = []
    with torch.no_grad():
        for batch in _batches(items, job.batch_size):
            enc = tokenizer([item.caption for item in batch], padding=True,
                            return_tensors="pt")
            lengths = enc["attention_mask"].sum(dim=1)
            overflow = [
                f"{item.id}: caption tokenizes to {int(length)} tokens, limit {limit}"
                for item, length in zip(batch, lengths)
                if int(length) > limit
            ]
            if overflow:
                errors.extend(overflow)
                continue
            enc = enc.to(job.device)
            out = model(**enc, output_hidden_states=True)
            hidden = out.hidden_states[-2]
            mask = enc["attention_mask"].unsqueeze(-1).to(hidden.dtype)
            pooled = (hidden * mask).sum(dim=1) / mask.sum(dim=1)
            rows.append(pooled.cpu().to(torch.float32).numpy())
    if errors:
        raise ExtractError("text job failed:\n  " + "\n  ".join(errors))
    return np.vstack(rows)


def extract(job: ExtractJob) -> Path:
    """Run the job and write its EMB1 file; returns the output path."""
    items = load_manifest(job.manifest_path)
    if job.modality == "vision":
        data = _extract_vision(job, items)
    else:
        data = _extract_text(job, items)
    if data.shape[0] != len(items):
        raise ExtractError(
            f"produced {data.shape[0]} rows for {len(items)} manifest items"
        )
    out = Path(job.output_path)
    try:
        write_emb1(
            out,
            ids=[item.id for item in items],
            modality=job.modality,
            data=data,
            source=f"{job.model}:{job.layer_policy}",
        )
    except Emb1Error as exc:
        raise ExtractError(f"output failed validation: {exc}") from exc
    print(
        f"wrote {data.shape[0]} x {data.shape[1]} {job.modality} embeddings to {out}",
        file=sys.stderr,
    )
    return out
