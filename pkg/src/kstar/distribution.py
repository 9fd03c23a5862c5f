"""Per-class k* distributions, their moments and pattern labels."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from .dataset import ClassIndex, EmbeddingSet, PredictionSet
from .distance import EUCLIDEAN, Metric
from .neighbors import NeighborEngine

# Below this spread a distribution is treated as constant.
SIGMA_EPS = 1e-12
SKEW_THRESHOLD = 0.5


class Pattern(str, Enum):
    FRACTURED = "Fractured"
    OVERLAPPED = "Overlapped"
    CLUSTERED = "Clustered"

    @property
    def glyph(self) -> str:
        return _GLYPHS[self]

    @property
    def color(self) -> str:
        return _COLORS[self]

    @property
    def letter(self) -> str:
        return _LETTERS[self]


_GLYPHS = {Pattern.FRACTURED: "★", Pattern.OVERLAPPED: "♣", Pattern.CLUSTERED: "♠"}
_COLORS = {Pattern.FRACTURED: "#d62728", Pattern.OVERLAPPED: "#ff7f0e", Pattern.CLUSTERED: "#1f77b4"}
_LETTERS = {Pattern.FRACTURED: "A", Pattern.OVERLAPPED: "B", Pattern.CLUSTERED: "C"}
PATTERN_ORDER = (Pattern.FRACTURED, Pattern.OVERLAPPED, Pattern.CLUSTERED)


@dataclass(frozen=True, eq=False)
class KStarResult:
    """k* rank of every sample plus what is needed to normalize it per class."""

    ranks: np.ndarray
    labels: np.ndarray
    sizes: np.ndarray
    metric: Metric

    @property
    def n_classes(self) -> int:
        return len(self.sizes)

    def class_ranks(self, c: int) -> np.ndarray:
        return self.ranks[self.labels == c]

    def normalized(self, c: int) -> np.ndarray:
        """The k* distribution of class ``c``: each rank divided by the class size.

        Kept as a multiset in sample order; duplicates matter for every moment.
        """
        return self.class_ranks(c) / float(self.sizes[c])


def compute_kstar(
    emb: EmbeddingSet,
    index: ClassIndex,
    m: Metric = EUCLIDEAN,
    *,
    threads: int | None = 1,
) -> KStarResult:
    ranks = NeighborEngine(emb, m).all_kstar(threads)
    ranks.flags.writeable = False
    return KStarResult(ranks, emb.labels, index.sizes, m)


def moments(values) -> tuple[float, float, float]:
    """Population mean, standard deviation and skewness (divisor ``len(values)``).

    Skewness is reported as 0 when the standard deviation is at most
    ``SIGMA_EPS``.
    """
    v = np.asarray(values, dtype=np.float64)
    n = v.size
    if n == 0:
        raise ValueError("moments of an empty distribution")
    mu = math.fsum(v) / n
    dev = v - mu
    m2 = math.fsum(dev * dev) / n
    m3 = math.fsum(dev * dev * dev) / n
    sigma = math.sqrt(m2)
    gamma = m3 / m2**1.5 if sigma > SIGMA_EPS else 0.0
    return mu, sigma, gamma


def classify_pattern(gamma: float, sigma: float, mu: float) -> Pattern:
    """Pattern label from the skewness of a k* distribution.

    ``|gamma| == 0.5`` counts as Overlapped. A constant distribution
    (``sigma <= SIGMA_EPS``) is Clustered when its mean is at least 0.5 and
    Fractured otherwise.
    """
    if not (math.isfinite(gamma) and math.isfinite(sigma) and math.isfinite(mu)):
        raise ValueError(f"non-finite statistics: gamma={gamma}, sigma={sigma}, mu={mu}")
    if sigma <= SIGMA_EPS:
        return Pattern.CLUSTERED if mu >= 0.5 else Pattern.FRACTURED
    if gamma > SKEW_THRESHOLD:
        return Pattern.FRACTURED
    if gamma < -SKEW_THRESHOLD:
        return Pattern.CLUSTERED
    return Pattern.OVERLAPPED


@dataclass(frozen=True)
class ClassStats:
    """One row of a per-class table."""

    class_id: int
    class_name: str
    n_samples: int
    mu: float
    sigma: float
    gamma: float
    pattern: Pattern
    accuracy: float | None = None


def class_accuracy(index: ClassIndex, preds: PredictionSet, c: int) -> float:
    members = index.members[c]
    return float(np.count_nonzero(preds.predicted[members] == c)) / len(members)


def class_statistics(
    result: KStarResult,
    c: int,
    *,
    class_name: str | None = None,
    accuracy: float | None = None,
) -> ClassStats:
    values = result.normalized(c)
    if values.size == 0:
        raise ValueError(f"class {c} has no samples")
    mu, sigma, gamma = moments(values)
    return ClassStats(
        class_id=c,
        class_name=str(c) if class_name is None else class_name,
        n_samples=int(values.size),
        mu=mu,
        sigma=sigma,
        gamma=gamma,
        pattern=classify_pattern(gamma, sigma, mu),
        accuracy=accuracy,
    )


def all_class_statistics(
    emb: EmbeddingSet,
    index: ClassIndex,
    result: KStarResult,
    preds: PredictionSet | None = None,
) -> list[ClassStats]:
    return [
        class_statistics(
            result,
            c,
            class_name=emb.class_names[c],
            accuracy=None if preds is None else class_accuracy(index, preds, c),
        )
        for c in range(emb.n_classes)
    ]


@dataclass(frozen=True)
class PatternSummary:
    """Unweighted averages over the classes sharing one pattern."""

    pattern: Pattern
    mean_mu: float
    mean_gamma: float
    mean_accuracy: float | None
    n_classes: int


def aggregate_by_pattern(stats: Sequence[ClassStats]) -> list[PatternSummary]:
    """One summary per pattern that has at least one class, in A/B/C order."""
    out = []
    for pattern in PATTERN_ORDER:
        group = [s for s in stats if s.pattern is pattern]
        if not group:
            continue
        accs = [s.accuracy for s in group if s.accuracy is not None]
        out.append(
            PatternSummary(
                pattern=pattern,
                mean_mu=math.fsum(s.mu for s in group) / len(group),
                mean_gamma=math.fsum(s.gamma for s in group) / len(group),
                mean_accuracy=math.fsum(accs) / len(accs) if accs else None,
                n_classes=len(group),
            )
        )
    return out
