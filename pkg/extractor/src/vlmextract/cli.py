"""Command-line wrapper: vlmextract --model NAME --modality vision|text
--manifest F --out F [--batch 32 --device cpu]."""

from __future__ import annotations

import argparse
import sys

from .emb1 import Emb1Error
from .extract import ExtractError, ExtractJob, extract
from .manifest import ManifestError


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="vlmextract",
        description="Dump pretrained-model embeddings for sampled image-text "
        "pairs into an EMB1 file.",
    )
    p.add_argument("--model", required=True, help="model identifier or local checkpoint path")
    p.add_argument("--modality", required=True, choices=["vision", "text"])
    p.add_argument("--manifest", required=True, help="CSV: id,image_path,caption")
    p.add_argument("--out", required=True, help="EMB1 output path")
    p.add_argument("--batch", type=int, default=32)
    p.add_argument("--device", default="cpu")
    return p


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        job = ExtractJob(
            model=args.model,
            modality=args.modality,
            manifest_path=args.manifest,
            output_path=args.out,
            batch_size=args.batch,
            device=args.device,
        )
        extract(job)
        return 0
    except (ExtractError, ManifestError, Emb1Error) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - process boundary
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
