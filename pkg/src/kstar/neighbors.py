"""Exact neighbor ordering and first-heterogeneous-neighbor ranks.

Neighbors of a query ``p`` are all other samples, ordered by the pair
``(distance, sample index)`` so that ties resolve to the lower index. Ranks are
1-based and never include the query itself.

Distances are computed one query row at a time with the same numpy reduction,
so the value for any pair does not depend on how queries are split between
workers. No ``n x n`` matrix is ever built.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .dataset import ClassIndex, EmbeddingSet
from .distance import EUCLIDEAN, Metric
from .errors import SingleClassError, ValidationError


@dataclass(frozen=True)
class NeighborOrder:
    """All ``n - 1`` other samples sorted by (distance, index)."""

    query: int
    indices: np.ndarray
    distances: np.ndarray

    def __len__(self) -> int:
        return len(self.indices)

    def pairs(self) -> list[tuple[int, float]]:
        return list(zip(self.indices.tolist(), self.distances.tolist()))


def resolve_threads(threads: int | None) -> int:
    """``None`` or 0 means one worker per CPU."""
    if not threads:
        return os.cpu_count() or 1
    if threads < 0:
        raise ValidationError(f"thread count must be >= 0, got {threads}")
    return threads


class NeighborEngine:
    """Per-query distance computations over one embedding set and metric."""

    def __init__(self, emb: EmbeddingSet, metric: Metric = EUCLIDEAN):
        self.emb = emb
        self.metric = metric
        self._points = emb.points
        self._labels = emb.labels
        self._sq_norms = None
        if metric.kind == "cosine":
            self._sq_norms = np.sum(self._points * self._points, axis=1)
        self._arange = np.arange(emb.n)

    def distances(self, p: int) -> np.ndarray:
        """Distances from sample ``p`` to every sample (including ``p`` itself)."""
        return self.metric.to_rows(self._points, self._points[p], self._sq_norms)

    def _check_query(self, p: int) -> int:
        p = int(p)
        if not 0 <= p < self.emb.n:
            raise IndexError(f"sample index {p} out of range for n={self.emb.n}")
        return p

    def sorted_neighbors(self, p: int) -> NeighborOrder:
        p = self._check_query(p)
        dist = self.distances(p)
        others = np.delete(self._arange, p)
        od = dist[others]
        # lexsort: last key is primary
        order = np.lexsort((others, od))
        return NeighborOrder(p, others[order], od[order])

    def kstar(self, p: int) -> int:
        """1-based rank of the nearest neighbor whose label differs from ``p``'s.

        Counts the same-class samples that precede the first heterogeneous
        neighbor in (distance, index) order; no sort.
        """
        p = self._check_query(p)
        return self._kstar(p, self.distances(p))

    def _kstar(self, p: int, dist: np.ndarray) -> int:
        same = self._labels == self._labels[p]
        diff_idx = np.flatnonzero(~same)
        if diff_idx.size == 0:
            raise SingleClassError(f"sample {p} has no differently-labeled neighbor")
        diff_d = dist[diff_idx]
        d_star = diff_d.min()
        q_star = diff_idx[np.argmax(diff_d == d_star)]
        same[p] = False
        sd = dist[same]
        si = self._arange[same]
        ahead = (sd < d_star) | ((sd == d_star) & (si < q_star))
        return 1 + int(np.count_nonzero(ahead))

    def _kstar_range(self, start: int, stop: int) -> np.ndarray:
        out = np.empty(stop - start, dtype=np.int64)
        for i, p in enumerate(range(start, stop)):
            out[i] = self._kstar(p, self.distances(p))
        return out

    def all_kstar(self, threads: int | None = 1) -> np.ndarray:
        """k* for every sample, computed over disjoint query ranges."""
        n = self.emb.n
        if self.emb.n_classes < 2:
            raise SingleClassError("k* needs at least 2 classes")
        workers = min(resolve_threads(threads), n)
        if workers == 1:
            return self._kstar_range(0, n)
        bounds = np.linspace(0, n, workers + 1).astype(int)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(self._kstar_range, bounds[:-1], bounds[1:]))
        return np.concatenate(parts)


def sorted_neighbors(emb: EmbeddingSet, p: int, m: Metric = EUCLIDEAN) -> NeighborOrder:
    return NeighborEngine(emb, m).sorted_neighbors(p)


def first_heterogeneous_rank(emb: EmbeddingSet, index: ClassIndex, p: int, m: Metric = EUCLIDEAN) -> int:
    if len(index) < 2:
        raise SingleClassError("k* needs at least 2 classes")
    return NeighborEngine(emb, m).kstar(p)


def scan_rank(order: NeighborOrder, labels: np.ndarray) -> int:
    """Position (1-based) of the first differently-labeled entry of ``order``."""
    hits = np.flatnonzero(labels[order.indices] != labels[order.query])
    if hits.size == 0:
        raise SingleClassError(f"sample {order.query} has no differently-labeled neighbor")
    return int(hits[0]) + 1
