from __future__ import annotations

import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from kstar import EmbeddingSet


@pytest.fixture
def hand_set() -> EmbeddingSet:
    """A@0, A@1, B@3, B@4 on a line."""
    return EmbeddingSet.from_arrays(np.array([[0.0], [1.0], [3.0], [4.0]]), ["A", "A", "B", "B"])


def random_set(rng: np.random.Generator, n: int, d: int, n_classes: int, *, integer: bool = False) -> EmbeddingSet:
    """Random labeled points; every class appears at least once."""
    if integer:
        pts = rng.integers(-4, 5, size=(n, d)).astype(np.float64)
    else:
        pts = rng.standard_normal((n, d))
    labels = np.concatenate([np.arange(n_classes), rng.integers(0, n_classes, n - n_classes)])
    rng.shuffle(labels)
    return EmbeddingSet.from_arrays(pts, [f"c{l}" for l in labels])


_ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture
def acceptance(request):
    """Record one acceptance criterion as a PASS/FAIL line."""

    def record(number: int, title: str, ok: bool, detail: str) -> bool:
        line = f"{'PASS' if ok else 'FAIL'}  [{number:2d}] {title}: {detail}"
        request.config.stash.setdefault(_ACCEPTANCE, []).append(line)
        reporter = request.config.pluginmanager.get_plugin("terminalreporter")
        if reporter is not None:
            reporter.write_line("")
            reporter.write_line(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda l: int(l.split("[")[1].split("]")[0])):
            terminalreporter.write_line(line)
