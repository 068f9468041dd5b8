#!/usr/bin/env python3
"""Generate a synthetic encoder pool for exercising the CLI end to end.

Each fake encoder's embeddings are an orthogonal transform of the shared
text embeddings plus encoder-specific noise, so the planted quality order
is the noise order. A matching performance file is emitted so `correlate`
has something to chew on.

Example:
    python3 scripts/make_synthetic_pool.py --out demo_pool --encoders 6
    gwselect rank --pool demo_pool/pool.json --text demo_pool/text.emb \
        --metric gw --restarts 4 --out demo_pool/ranking.json
    gwselect correlate --scores demo_pool/ranking.json \
        --performance demo_pool/perf.json
"""

import argparse
import json
from pathlib import Path

import numpy as np

from gwselect.embed_io import EmbeddingSet, Modality, write_embeddings


def build_pool(out: Path, n: int, dim: int, encoders: int, seed: int) -> None:
    rng = np.random.default_rng(seed)
    out.mkdir(parents=True, exist_ok=True)
    ids = tuple(f"pair{i:05d}" for i in range(n))
    text_data = rng.standard_normal((n, dim))
    write_embeddings(
        EmbeddingSet(ids=ids, modality=Modality.TEXT,
                     data=text_data.astype(np.float32), source="synthetic-llm"),
        out / "text.emb",
    )
    sigmas = np.linspace(0.0, 0.5, encoders)
    manifest, perf = [], {}
    for k, sigma in enumerate(sigmas):
        q, _ = np.linalg.qr(rng.standard_normal((dim, dim)))
        vis = text_data @ q + sigma * rng.standard_normal((n, dim))
        name = f"encoder{k:02d}"
        write_embeddings(
            EmbeddingSet(ids=ids, modality=Modality.VISION,
                         data=vis.astype(np.float32), source=name),
            out / f"{name}.emb",
        )
        manifest.append({"name": name, "embedding_path": f"{name}.emb"})
        # planted downstream quality: clean structure scores high
        perf[name] = round(70.0 - 25.0 * float(sigma) + rng.normal(0.0, 0.3), 2)
    (out / "pool.json").write_text(json.dumps(manifest, indent=2) + "\n")
    (out / "perf.json").write_text(json.dumps(perf, indent=2) + "\n")
    print(f"wrote {encoders} encoders ({n} pairs, dim {dim}) under {out}/")


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=Path, default=Path("demo_pool"))
    ap.add_argument("--pairs", type=int, default=100)
    ap.add_argument("--dim", type=int, default=16)
    ap.add_argument("--encoders", type=int, default=6)
    ap.add_argument("--seed", type=int, default=42)
    args = ap.parse_args()
    build_pool(args.out, args.pairs, args.dim, args.encoders, args.seed)


if __name__ == "__main__":
    main()
