"""Dataset manifest: CSV with columns id, image_path, caption."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path


class ManifestError(ValueError):
    pass


@dataclass(frozen=True)
class ManifestItem:
    id: str
    image_path: str
    caption: str


def load_manifest(path: str | Path) -> list[ManifestItem]:
    path = Path(path)
    if not path.exists():
        raise ManifestError(f"manifest not found: {path}")
    with path.open("r", newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0][:3] != ["id", "image_path", "caption"]:
        raise ManifestError(f"{path}: header must be id,image_path,caption")
    items = []
    seen: set[str] = set()
    for i, row in enumerate(rows[1:]):
        if len(row) < 3:
            raise ManifestError(f"{path}: row {i} has {len(row)} columns, expected 3")
        item_id, image_path, caption = row[0], row[1], row[2]
        if item_id in seen:
            raise ManifestError(f"{path}: duplicate id {item_id!r} at row {i}")
        seen.add(item_id)
        # relative image paths resolve against the manifest directory
        img = Path(image_path)
        if image_path and not img.is_absolute():
            img = path.parent / img
        items.append(ManifestItem(id=item_id, image_path=str(img), caption=caption))
    if not items:
        raise ManifestError(f"{path}: no items")
    return items
