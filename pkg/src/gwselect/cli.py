"""Command-line entry point.

Subcommands: gw, score, rank, correlate, theory-check, bench. Reports go
to --out (or stdout); diagnostics go to stderr; exit codes are 0 success,
2 validation error, 1 internal error. GWSELECT_THREADS caps math-library
parallelism (0 = automatic).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import jsonfmt
from .baselines import Metric
from .embed_io import EmbeddingSet, Modality, read_embeddings, sample_pairs
from .errors import FormatError, GwSelectError, ParameterError
from .gw_core import GwConfig, PenaltyKind, solve_gw
from .mmspace import DistanceMatrix, median_scale_match, pairwise_angular, pairwise_distances
from .selection import (
    SelectionConfig,
    correlate_with_performance,
    load_pool_manifest,
    score_paired,
    score_pool,
)
from .theory_check import run_sweep

# must stay referenced: threadpoolctl restores limits when this is collected
_thread_limiter = None


def _apply_thread_cap() -> None:
    global _thread_limiter
    raw = os.environ.get("GWSELECT_THREADS", "").strip()
    if not raw:
        return
    try:
        cap = int(raw)
    except ValueError:
        raise ParameterError(f"GWSELECT_THREADS must be an integer, got {raw!r}") from None
    if cap < 0:
        raise ParameterError("GWSELECT_THREADS must be >= 0")
    if cap == 0:
        return
    try:
        from threadpoolctl import threadpool_limits
    except ImportError:
        return
    _thread_limiter = threadpool_limits(limits=cap)


def _write_report(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


def _load_pair(args) -> tuple[EmbeddingSet, EmbeddingSet]:
    vision = read_embeddings(args.vision, modality=Modality.VISION)
    text = read_embeddings(args.text, modality=Modality.TEXT)
    count = args.pairs if args.pairs is not None else min(1000, vision.n)
    paired = sample_pairs(vision, text, count, args.seed)
    return paired.vision, paired.text


def _gw_config(args) -> GwConfig:
    return GwConfig(
        max_iters=args.iters,
        restarts=args.restarts,
        seed=args.seed,
        penalty=PenaltyKind.parse(args.penalty),
    )


def _selection_config(args, llm_name: str = "llm") -> SelectionConfig:
    return SelectionConfig(
        llm_name=llm_name,
        pairs=args.pairs,
        seed=args.seed,
        gw=_gw_config(args),
        cca_components=getattr(args, "cca_components", 10),
        mutual_nn_k=getattr(args, "knn", 10),
    )


def _cmd_gw(args) -> int:
    vision, text = _load_pair(args)
    if args.penalty == "l1" and vision.n > 160:
        print(
            f"warning: absolute penalty at n={vision.n} is very slow; "
            "consider --penalty l2",
            file=sys.stderr,
        )
    d_vision = pairwise_distances(vision)
    d_text = pairwise_distances(text)
    matched = median_scale_match(d_vision, d_text)
    result = solve_gw(matched.scaled, d_text, _gw_config(args))
    _write_report(jsonfmt.dumps(result.to_report()) + "\n", args.out)
    print(
        f"gw value {result.value:.6g} after {result.iterations_run} iterations "
        f"(converged={result.converged}, restart={result.restart_index})",
        file=sys.stderr,
    )
    return 0


def _cmd_score(args) -> int:
    vision, text = _load_pair(args)
    metric = Metric.parse(args.metric)
    score = score_paired(vision, text, metric, _selection_config(args))
    _write_report(jsonfmt.dumps(score.to_report()) + "\n", args.out)
    return 0


def _cmd_rank(args) -> int:
    pool = load_pool_manifest(args.pool)
    text = read_embeddings(args.text, modality=Modality.TEXT)
    metric = Metric.parse(args.metric)
    if args.pairs is None:
        args.pairs = min(1000, text.n)
    config = _selection_config(args, llm_name=args.llm)
    report = score_pool(pool, text, metric, config)
    _write_report(report.to_json(), args.out)
    print(f"selected {report.selected} out of {len(report.rows)} encoders", file=sys.stderr)
    return 0


def _load_json(path: str):
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON ({exc})") from None


def _cmd_correlate(args) -> int:
    report = _load_json(args.scores)
    if not isinstance(report, dict) or "rows" not in report:
        raise FormatError(f"{args.scores}: expected a ranking report with 'rows'")
    scores = {row["name"]: float(row["score"]) for row in report["rows"]}
    perf_raw = _load_json(args.performance)
    if not isinstance(perf_raw, dict):
        raise FormatError(f"{args.performance}: expected an object mapping name -> value")
    perf = {str(k): float(v) for k, v in perf_raw.items()}
    shared = sorted(set(scores) & set(perf))
    dropped = sorted((set(scores) | set(perf)) - set(shared))
    if dropped:
        print(f"excluding unmatched encoders: {', '.join(dropped)}", file=sys.stderr)
    if len(shared) < 3:
        raise ParameterError(f"need at least 3 matched encoders, got {len(shared)}")
    stats = correlate_with_performance(
        {k: scores[k] for k in shared}, {k: perf[k] for k in shared}
    )
    _write_report(stats.to_json(), args.out)
    return 0


def _cmd_theory_check(args) -> int:
    records = run_sweep(args.instances, args.seed)
    all_hold = all(r["holds"] for r in records)
    report = {"count": len(records), "all_hold": all_hold, "records": records}
    _write_report(jsonfmt.dumps(report) + "\n", args.out)
    if not all_hold:
        print("bound violation detected: this indicates an implementation bug", file=sys.stderr)
        return 1
    print(f"both bounds hold on {len(records)}/{len(records)} instances", file=sys.stderr)
    return 0


def _bench_instance(n: int, dim: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    rng = np.random.default_rng(seed)
    vision = rng.standard_normal((n, dim))
    q, _ = np.linalg.qr(rng.standard_normal((dim, dim)))
    text = vision @ q + 0.2 * rng.standard_normal((n, dim))
    return vision, text


def _cmd_bench(args) -> int:
    try:
        sizes = [int(s) for s in args.sizes.split(",") if s.strip()]
    except ValueError:
        raise ParameterError(f"--sizes must be comma-separated integers, got {args.sizes!r}") from None
    if not sizes or any(s < 2 for s in sizes):
        raise ParameterError("--sizes needs integers >= 2")
    penalty = PenaltyKind.parse(args.penalty)
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["n", "phase", "seconds", "penalty", "iters"])
    for n in sizes:
        vision, text = _bench_instance(n, args.dim, args.seed + n)
        t0 = time.perf_counter()
        d_vision = DistanceMatrix(values=pairwise_angular(vision), label="vision")
        d_text = DistanceMatrix(values=pairwise_angular(text), label="text")
        matched = median_scale_match(d_vision, d_text)
        t_pairwise = time.perf_counter() - t0
        config = GwConfig(max_iters=args.iters, seed=args.seed, penalty=penalty)
        t0 = time.perf_counter()
        result = solve_gw(matched.scaled, d_text, config)
        t_solve = time.perf_counter() - t0
        writer.writerow([n, "pairwise", f"{t_pairwise:.6f}", penalty.value, 0])
        writer.writerow([n, "solve", f"{t_solve:.6f}", penalty.value, result.iterations_run])
        print(
            f"n={n}: pairwise {t_pairwise:.3f}s, solve {t_solve:.3f}s "
            f"({result.iterations_run} iterations, value {result.value:.6g})",
            file=sys.stderr,
        )
    _write_report(buf.getvalue(), args.out)
    return 0


def _add_common(p: argparse.ArgumentParser, with_pairs: bool = True) -> None:
    if with_pairs:
        p.add_argument("--pairs", type=int, default=None,
                       help="paired samples to draw (default: min(1000, n))")
    p.add_argument("--iters", type=int, default=1000, help="solver iteration cap")
    p.add_argument("--seed", type=int, default=42, help="deterministic seed")
    p.add_argument("--restarts", type=int, default=1, help="solver restarts")
    p.add_argument("--penalty", choices=["l1", "l2"], default="l1",
                   help="pairwise-distance penalty")
    p.add_argument("--out", default=None, help="report path (default: stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gwselect",
        description="Rank candidate vision encoders for a language model by "
        "representation-space structural similarity.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gw", help="transport-based distance for one vision/text pair")
    p.add_argument("--vision", required=True)
    p.add_argument("--text", required=True)
    _add_common(p)
    p.set_defaults(func=_cmd_gw)

    p = sub.add_parser("score", help="single-pair score under any metric")
    p.add_argument("--metric", required=True, choices=["gw", "rsa", "cca", "mutualnn"])
    p.add_argument("--vision", required=True)
    p.add_argument("--text", required=True)
    p.add_argument("--cca-components", dest="cca_components", type=int, default=10)
    p.add_argument("--knn", type=int, default=10, help="neighbors for mutualnn")
    _add_common(p)
    p.set_defaults(func=_cmd_score)

    p = sub.add_parser("rank", help="score and rank an encoder pool")
    p.add_argument("--pool", required=True, help="pool manifest JSON")
    p.add_argument("--text", required=True)
    p.add_argument("--metric", required=True,
                   choices=["gw", "rsa", "cca", "mutualnn", "accuracy"])
    p.add_argument("--llm", default="llm", help="language model name for the report")
    p.add_argument("--cca-components", dest="cca_components", type=int, default=10)
    p.add_argument("--knn", type=int, default=10)
    _add_common(p)
    p.set_defaults(func=_cmd_rank)

    p = sub.add_parser("correlate", help="correlate a ranking report with performance numbers")
    p.add_argument("--scores", required=True, help="ranking report JSON")
    p.add_argument("--performance", required=True, help="JSON object: encoder name -> value")
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_correlate)

    p = sub.add_parser("theory-check", help="verify the distortion/Lipschitz bounds on synthetic instances")
    p.add_argument("--instances", type=int, default=200)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_theory_check)

    p = sub.add_parser("bench", help="runtime scaling of the distance estimate")
    p.add_argument("--sizes", required=True, help="comma-separated sample counts")
    p.add_argument("--dim", type=int, default=64, help="embedding dimension for synthetic data")
    p.add_argument("--iters", type=int, default=1000)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--penalty", choices=["l1", "l2"], default="l2",
                   help="l2 scales to large n; l1 is the small-n reference path")
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_bench)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        _apply_thread_cap()
        return args.func(args)
    except GwSelectError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - last-resort boundary
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
