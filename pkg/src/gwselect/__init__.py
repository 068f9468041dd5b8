"""Training-free vision-encoder ranking for a target LLM via structural
similarity of representation spaces."""

from .baselines import (
    Direction,
    Metric,
    MetricScore,
    cca_score,
    mutual_nn_score,
    rsa_score,
)
from .embed_io import (
    EmbeddingSet,
    Modality,
    PairedSample,
    read_embeddings,
    sample_pairs,
    write_embeddings,
)
from .gw_core import (
    GwConfig,
    GwSolveResult,
    PenaltyKind,
    gw_discrepancy,
    gw_gradient,
    gw_infinity,
    line_search_step,
    solve_gw,
)
from .linear_ot import (
    Coupling,
    Permutation,
    brute_force_lap,
    coupling_from_permutation,
    product_coupling,
    solve_linear_ot,
)
from .mmspace import (
    DistanceMatrix,
    ScaleMatchResult,
    angular_distance,
    median_scale_match,
    offdiag_median,
    pairwise_distances,
)
from .selection import (
    CorrelationStats,
    EncoderEntry,
    RankingReport,
    SelectionConfig,
    correlate_with_performance,
    gw_metric_score,
    load_pool_manifest,
    pearson,
    r_squared,
    score_pool,
    spearman,
)
from .theory_check import (
    LipschitzBoundResult,
    SynthInstance,
    check_distortion_bound,
    check_lipschitz_bound,
    isometric_instance,
    run_sweep,
    synth_instance,
    worst_pair_error,
)

__version__ = "0.1.0"
