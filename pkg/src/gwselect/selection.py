"""Rank a pool of candidate vision encoders against one language model.

Per encoder the pipeline is: load embeddings, subsample aligned pairs,
build angular distance matrices, scale-match vision toward text, then
score with the requested metric (transport-based or a baseline). Reports
are deterministic: fixed key order, 17-significant-digit floats, ties
broken by encoder name.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import jsonfmt
from .baselines import (
    METRIC_DIRECTION,
    Direction,
    Metric,
    MetricScore,
    cca_score,
    mutual_nn_score,
    rsa_score,
    _score,
)
from .embed_io import EmbeddingSet, read_embeddings, sample_pairs
from .errors import (
    AlignmentError,
    DegenerateError,
    FormatError,
    ParameterError,
    PoolError,
    ValidationError,
)
from .gw_core import GwConfig, solve_gw
from .mmspace import median_scale_match, pairwise_distances


@dataclass(frozen=True)
class EncoderEntry:
    name: str
    embedding_path: str
    external_accuracy: float | None = None
    size_params: int | None = None


@dataclass(frozen=True)
class SelectionConfig:
    llm_name: str = "llm"
    pairs: int | None = None  # None: use every available pair
    seed: int = 42
    gw: GwConfig = field(default_factory=GwConfig)
    cca_components: int = 10
    mutual_nn_k: int = 10

    def to_report(self) -> dict:
        return {
            "pairs": self.pairs,
            "seed": self.seed,
            "gw": {
                "max_iters": self.gw.max_iters,
                "tolerance": self.gw.tolerance,
                "restarts": self.gw.restarts,
                "seed": self.gw.seed,
                "penalty": self.gw.penalty.value,
            },
            "cca_components": self.cca_components,
            "mutual_nn_k": self.mutual_nn_k,
        }


@dataclass(frozen=True)
class RankingReport:
    llm_name: str
    metric: Metric
    rows: tuple[tuple[str, float, int], ...]  # (encoder, score, rank)
    selected: str
    excluded: tuple[str, ...]
    config: SelectionConfig

    def to_report(self) -> dict:
        return {
            "llm_name": self.llm_name,
            "metric": self.metric.value,
            "direction": METRIC_DIRECTION[self.metric].value,
            "rows": [
                {"name": name, "score": score, "rank": rank}
                for name, score, rank in self.rows
            ],
            "excluded": list(self.excluded),
            "selected": self.selected,
            "config": self.config.to_report(),
        }

    def to_json(self) -> str:
        return jsonfmt.dumps(self.to_report()) + "\n"


@dataclass(frozen=True)
class CorrelationStats:
    pearson_abs: float
    spearman_abs: float
    r_squared: float

    def __post_init__(self):
        for name in ("pearson_abs", "spearman_abs", "r_squared"):
            v = getattr(self, name)
            if not (0.0 <= v <= 1.0):
                raise ValidationError(f"{name}={v} outside [0, 1]")

    def to_report(self) -> dict:
        return {
            "pearson_abs": self.pearson_abs,
            "spearman_abs": self.spearman_abs,
            "r_squared": self.r_squared,
        }

    def to_json(self) -> str:
        return jsonfmt.dumps(self.to_report()) + "\n"


def _as_clean_vector(x, name: str) -> np.ndarray:
    v = np.asarray(x, dtype=np.float64)
    if v.ndim != 1:
        raise ParameterError(f"{name} must be a flat sequence")
    if v.size < 3:
        raise ParameterError(f"{name} needs at least 3 values, got {v.size}")
    if not np.isfinite(v).all():
        raise ValidationError(f"{name} has non-finite values")
    return v


def pearson(x, y) -> float:
    """Product-moment correlation, two-pass formula."""
    xv = _as_clean_vector(x, "x")
    yv = _as_clean_vector(y, "y")
    if xv.size != yv.size:
        raise ParameterError(f"length mismatch: {xv.size} vs {yv.size}")
    xc = xv - xv.mean()
    yc = yv - yv.mean()
    denom = np.sqrt((xc @ xc) * (yc @ yc))
    if denom == 0.0:
        raise DegenerateError("correlation undefined for constant input")
    return float(min(1.0, max(-1.0, xc @ yc / denom)))


def _fractional_ranks(v: np.ndarray) -> np.ndarray:
    """Average (fractional) ranks, 1-based; ties share their mean rank."""
    order = np.argsort(v, kind="stable")
    ranks = np.empty(v.size, dtype=np.float64)
    sv = v[order]
    i = 0
    while i < v.size:
        j = i
        while j + 1 < v.size and sv[j + 1] == sv[i]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def spearman(x, y) -> float:
    """Pearson correlation of fractional ranks."""
    xv = _as_clean_vector(x, "x")
    yv = _as_clean_vector(y, "y")
    if xv.size != yv.size:
        raise ParameterError(f"length mismatch: {xv.size} vs {yv.size}")
    return pearson(_fractional_ranks(xv), _fractional_ranks(yv))


def r_squared(x, y) -> float:
    """Coefficient of determination of the least-squares line y ~ a + b*x."""
    xv = _as_clean_vector(x, "x")
    yv = _as_clean_vector(y, "y")
    if xv.size != yv.size:
        raise ParameterError(f"length mismatch: {xv.size} vs {yv.size}")
    xc = xv - xv.mean()
    yc = yv - yv.mean()
    sxx = xc @ xc
    sst = yc @ yc
    if sxx == 0.0 or sst == 0.0:
        raise DegenerateError("r_squared undefined for constant input")
    slope = (xc @ yc) / sxx
    resid = yc - slope * xc
    return float(min(1.0, max(0.0, 1.0 - (resid @ resid) / sst)))


def correlate_with_performance(
    scores: dict[str, float], performance: dict[str, float]
) -> CorrelationStats:
    """|Pearson|, |Spearman| and R^2 between metric scores and externally
    supplied performance numbers, aligned by encoder name."""
    if set(scores) != set(performance):
        only_s = sorted(set(scores) - set(performance))
        only_p = sorted(set(performance) - set(scores))
        raise AlignmentError(
            f"score/performance names differ (scores only: {only_s}, performance only: {only_p})"
        )
    names = sorted(scores)
    if len(names) < 3:
        raise ParameterError(f"need at least 3 aligned encoders, got {len(names)}")
    x = [scores[k] for k in names]
    y = [performance[k] for k in names]
    return CorrelationStats(
        pearson_abs=abs(pearson(x, y)),
        spearman_abs=abs(spearman(x, y)),
        r_squared=r_squared(x, y),
    )


def gw_metric_score(
    vision: EmbeddingSet, text: EmbeddingSet, config: GwConfig = GwConfig()
) -> MetricScore:
    """Transport-based structural score for one aligned pair of sets:
    angular distances, median scale match (vision toward text), then the
    conditional-gradient solve."""
    d_vision = pairwise_distances(vision)
    d_text = pairwise_distances(text)
    matched = median_scale_match(d_vision, d_text)
    result = solve_gw(matched.scaled, d_text, config)
    return _score(Metric.GW, result.value)


def score_paired(
    paired_vision: EmbeddingSet,
    paired_text: EmbeddingSet,
    metric: Metric,
    config: SelectionConfig,
) -> MetricScore:
    if metric is Metric.GW:
        return gw_metric_score(paired_vision, paired_text, config.gw)
    if metric is Metric.RSA:
        return rsa_score(paired_vision, paired_text)
    if metric is Metric.CCA:
        return cca_score(paired_vision, paired_text, config.cca_components)
    if metric is Metric.MUTUAL_NN:
        return mutual_nn_score(paired_vision, paired_text, config.mutual_nn_k)
    raise ParameterError(f"metric {metric.value} is not computed from embeddings")


def rank_rows(
    scores: dict[str, float], direction: Direction
) -> tuple[tuple[tuple[str, float, int], ...], str]:
    """Sort scores per direction (name-ascending tie-break) and assign
    ranks 1..m; returns (rows, selected)."""
    sign = 1.0 if direction is Direction.LOWER_BETTER else -1.0
    ordered = sorted(scores.items(), key=lambda kv: (sign * kv[1], kv[0]))
    rows = tuple((name, value, rank) for rank, (name, value) in enumerate(ordered, start=1))
    return rows, rows[0][0]


def score_pool(
    pool: list[EncoderEntry],
    text: EmbeddingSet,
    metric: Metric,
    config: SelectionConfig = SelectionConfig(),
) -> RankingReport:
    """Score every pool entry against the text set and rank them.

    Encoders without a published accuracy are excluded from accuracy-based
    ranking (but only from that); a missing or unpairable embedding file is
    an error naming the encoder.
    """
    if not pool:
        raise PoolError("empty encoder pool")
    names = [e.name for e in pool]
    if len(set(names)) != len(names):
        raise PoolError("duplicate encoder names in pool")
    scores: dict[str, float] = {}
    excluded: list[str] = []
    for entry in pool:
        if metric is Metric.ACCURACY_EXTERNAL:
            if entry.external_accuracy is None:
                excluded.append(entry.name)
            else:
                scores[entry.name] = float(entry.external_accuracy)
            continue
        try:
            vision = read_embeddings(entry.embedding_path)
        except FileNotFoundError:
            raise PoolError(f"encoder {entry.name!r}: missing embedding file "
                            f"{entry.embedding_path}") from None
        except (FormatError, ValidationError) as exc:
            raise PoolError(f"encoder {entry.name!r}: {exc}") from exc
        count = config.pairs if config.pairs is not None else vision.n
        paired = sample_pairs(vision, text, count, config.seed)
        scores[entry.name] = score_paired(paired.vision, paired.text, metric, config).value
    if not scores:
        raise PoolError("no scorable encoders in pool")
    rows, selected = rank_rows(scores, METRIC_DIRECTION[metric])
    return RankingReport(
        llm_name=config.llm_name,
        metric=metric,
        rows=rows,
        selected=selected,
        excluded=tuple(sorted(excluded)),
        config=config,
    )


def load_pool_manifest(path: str | Path) -> list[EncoderEntry]:
    """Pool manifest: JSON array of {"name", "embedding_path",
    "external_accuracy"?, "size_params"?}. Relative embedding paths resolve
    against the manifest's directory."""
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(raw, list):
        raise FormatError(f"{path}: manifest must be a JSON array")
    entries = []
    for i, item in enumerate(raw):
        if not isinstance(item, dict) or "name" not in item or "embedding_path" not in item:
            raise FormatError(f"{path}: entry {i} needs 'name' and 'embedding_path'")
        emb = Path(item["embedding_path"])
        if not emb.is_absolute():
            emb = path.parent / emb
        acc = item.get("external_accuracy")
        size = item.get("size_params")
        entries.append(
            EncoderEntry(
                name=str(item["name"]),
                embedding_path=str(emb),
                external_accuracy=None if acc is None else float(acc),
                size_params=None if size is None else int(size),
            )
        )
    return entries
