"""Same-class / different-class neighbor matrices for one class.

Row ``i`` belongs to one member of the class and column ``r`` to its
``(r + 1)``-th ranked neighbor; a cell is 1 when that neighbor shares the
class. Rows are displayed by descending k* (ties: ascending sample index), which
puts the first 0 of every row on a monotone frontier.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator

import numpy as np

from ._io import atomic_write, atomic_write_lines
from .dataset import ClassIndex, EmbeddingSet
from .distance import EUCLIDEAN, Metric
from .errors import SingleClassError
from .neighbors import NeighborEngine, resolve_threads
from .svg import SVG

SAME_COLOR = "#2ca02c"
DIFF_COLOR = "#bbbbbb"


@dataclass(frozen=True, eq=False)
class NeighborMatrix:
    class_id: int
    rows: np.ndarray  # uint8, shape (|S_c|, n - 1), in display order
    row_order: np.ndarray  # sample index of each displayed row
    kstar: np.ndarray  # k* of each displayed row

    @property
    def shape(self) -> tuple[int, int]:
        return self.rows.shape


def display_order(engine: NeighborEngine, members: np.ndarray, threads: int | None = 1):
    """Members sorted by descending k*, ties by ascending index, with their k*."""
    members = np.asarray(members)
    workers = min(resolve_threads(threads), max(len(members), 1))
    if workers == 1:
        ks = np.array([engine.kstar(p) for p in members], dtype=np.int64)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            ks = np.array(list(pool.map(engine.kstar, members.tolist())), dtype=np.int64)
    order = np.lexsort((members, -ks))
    return members[order], ks[order]


def iter_neighbor_rows(engine: NeighborEngine, samples, c: int) -> Iterator[np.ndarray]:
    """Yield the 0/1 row of each sample in ``samples``; one sort per row, O(n) memory."""
    labels = engine.emb.labels
    for p in samples:
        order = engine.sorted_neighbors(int(p))
        yield (labels[order.indices] == c).astype(np.uint8)


def _check(emb: EmbeddingSet, index: ClassIndex, c: int) -> np.ndarray:
    if emb.n_classes < 2:
        raise SingleClassError("neighbor matrix needs at least 2 classes")
    if not 0 <= c < len(index):
        raise IndexError(f"class id {c} out of range")
    return index.members[c]


def build_neighbor_matrix(
    emb: EmbeddingSet,
    index: ClassIndex,
    c: int,
    m: Metric = EUCLIDEAN,
    *,
    threads: int | None = 1,
) -> NeighborMatrix:
    members = _check(emb, index, c)
    engine = NeighborEngine(emb, m)
    row_order, ks = display_order(engine, members, threads)
    rows = np.empty((len(members), emb.n - 1), dtype=np.uint8)
    for i, row in enumerate(iter_neighbor_rows(engine, row_order, c)):
        rows[i] = row
    return NeighborMatrix(c, rows, row_order, ks)


def write_matrix_csv(path, rows) -> Path:
    """Write rows (an array or any iterable of 0/1 rows) as headerless CSV."""
    return atomic_write_lines(path, (",".join(map(str, r.tolist())) + "\n" for r in rows))


def matrix_svg(rows, n_rows: int, n_cols: int, class_size: int, title: str = "") -> str:
    """Render 0/1 rows as colored runs; a dashed diagonal marks the class size.

    The diagonal runs from (rank 0, first row) to (rank |S_c|, last row).
    """
    width, height = 800.0, 600.0
    margin_l, margin_t, margin_b = 40.0, 30.0, 30.0
    plot_w = width - margin_l - 20.0
    cell_w = plot_w / max(n_cols, 1)
    cell_h = min(12.0, (height - margin_t - margin_b) / max(n_rows, 1))
    plot_h = cell_h * n_rows
    svg = SVG(width, margin_t + plot_h + margin_b, title or None)
    if title:
        svg.text(margin_l, 18, title, font_size=13)
    svg.rect(margin_l, margin_t, plot_w, plot_h, DIFF_COLOR)
    for i, row in enumerate(rows):
        row = np.asarray(row, dtype=np.int8)
        y = margin_t + i * cell_h
        # start/stop of runs of ones
        edges = np.diff(np.concatenate(([0], row, [0])))
        starts = np.flatnonzero(edges == 1)
        stops = np.flatnonzero(edges == -1)
        for a, b in zip(starts.tolist(), stops.tolist()):
            svg.rect(margin_l + a * cell_w, y, (b - a) * cell_w, cell_h, SAME_COLOR)
    svg.line(
        margin_l,
        margin_t,
        margin_l + class_size * cell_w,
        margin_t + plot_h,
        stroke="#000000",
        stroke_dasharray="4,3",
        stroke_width=1,
    )
    svg.text(margin_l, margin_t + plot_h + 18, "neighbor rank", font_size=11)
    svg.text(margin_l + plot_w, margin_t + plot_h + 18, str(n_cols), font_size=11, text_anchor="end")
    return svg.render()


def write_neighbor_matrix(
    emb: EmbeddingSet,
    index: ClassIndex,
    c: int,
    m: Metric,
    stem,
    *,
    threads: int | None = 1,
    csv: bool = True,
    svg: bool = True,
) -> list[Path]:
    """Stream one class's matrix to ``<stem>.nnmatrix.csv`` / ``.nnmatrix.svg``.

    Rows are computed one at a time, so memory stays O(n) per row plus the SVG
    markup.
    """
    members = _check(emb, index, c)
    engine = NeighborEngine(emb, m)
    row_order, _ = display_order(engine, members, threads)
    stem = Path(stem)
    written = []
    title = f"{emb.class_names[c]}: same-class (green) vs other-class (gray) neighbors"

    # rows are recomputed per artifact rather than held in memory
    if csv:
        written.append(write_matrix_csv(stem.with_name(stem.name + ".nnmatrix.csv"),
                                        iter_neighbor_rows(engine, row_order, c)))
    if svg:
        doc = matrix_svg(iter_neighbor_rows(engine, row_order, c), len(members), emb.n - 1,
                         len(members), title)
        written.append(atomic_write(stem.with_name(stem.name + ".nnmatrix.svg"), doc))
    return written
