"""k* distribution analysis of labeled latent spaces.

For every sample, k* is the 1-based rank of its nearest neighbor with a
different label. Dividing by the class size gives a per-class distribution on
(0, 1] whose skewness labels the class Fractured, Overlapped or Clustered.

Typical use::

    from kstar import load_embeddings, analyze

    report = analyze(load_embeddings("logits.csv"))
    print(report.pattern_counts())
"""

from __future__ import annotations

__version__ = "0.1.0"

from .dataset import (
    ClassIndex,
    EmbeddingSet,
    PredictionSet,
    build_class_index,
    load_embeddings,
    load_predictions,
    predictions_from_labels,
    write_embeddings,
)
from .distance import CITYBLOCK, COSINE, EUCLIDEAN, MAXNORM, Metric, distance
from .distribution import (
    ClassStats,
    KStarResult,
    Pattern,
    PatternSummary,
    aggregate_by_pattern,
    all_class_statistics,
    class_accuracy,
    class_statistics,
    classify_pattern,
    compute_kstar,
    moments,
)
from .errors import (
    DimensionError,
    KStarError,
    ParseError,
    SingleClassError,
    SpecError,
    ValidationError,
    VocabularyMismatchError,
    ZeroVectorError,
)
from .neighbor_matrix import NeighborMatrix, build_neighbor_matrix
from .neighbors import NeighborEngine, NeighborOrder, first_heterogeneous_rank, sorted_neighbors
from .report import AnalysisReport, Comparison, build_report, compare, render, render_all
from .synth import SynthSpec, generate


def analyze(
    emb: EmbeddingSet,
    metric: Metric = EUCLIDEAN,
    preds: PredictionSet | None = None,
    *,
    threads: int | None = 1,
    bins: int = 20,
    source: dict | None = None,
) -> AnalysisReport:
    """Run the whole pipeline on an in-memory embedding set."""
    index = build_class_index(emb)
    result = compute_kstar(emb, index, metric, threads=threads)
    stats = all_class_statistics(emb, index, result, preds)
    return build_report(emb, result, stats, source=source, bins=bins)
