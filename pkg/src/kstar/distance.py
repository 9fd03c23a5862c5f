"""Minkowski and cosine distances.

All reductions go through ``np.sum`` / ``np.max`` along the coordinate axis.
``np.sum`` uses pairwise summation, which keeps the rounding error of long
(d in the thousands) accumulations small enough that rank order is stable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, ValidationError, ZeroVectorError


@dataclass(frozen=True)
class Metric:
    """A distance function: ``minkowski`` of order ``r`` or ``cosine``.

    ``r`` may be ``math.inf`` (max-norm). ``r`` is ignored for cosine.
    """

    kind: str = "minkowski"
    r: float = 2.0

    def __post_init__(self):
        if self.kind not in ("minkowski", "cosine"):
            raise ValidationError(f"unknown metric kind {self.kind!r}")
        if self.kind == "minkowski" and not (self.r > 0):
            raise ValidationError(f"Minkowski order must be positive, got {self.r}")

    @property
    def name(self) -> str:
        if self.kind == "cosine":
            return "cosine"
        return _NAMES_BY_R.get(float(self.r), f"minkowski-{self.r:g}")

    @classmethod
    def parse(cls, name: str) -> "Metric":
        """``euclidean``, ``cityblock``, ``maxnorm``, ``cosine`` or ``minkowski-<r>``."""
        key = name.strip().lower()
        if key in NAMED_METRICS:
            return NAMED_METRICS[key]
        if key.startswith("minkowski-"):
            try:
                r = float(key.split("-", 1)[1])
            except ValueError:
                pass
            else:
                return cls("minkowski", r)
        raise ValidationError(
            f"unknown metric {name!r}; expected one of {', '.join(CLI_METRICS)}"
        )

    def to_rows(self, points: np.ndarray, x: np.ndarray, sq_norms: np.ndarray | None = None) -> np.ndarray:
        """Distance from ``x`` to every row of ``points``.

        ``sq_norms`` (squared L2 norms of the rows) may be passed to avoid
        recomputing them for cosine; it is ignored for Minkowski metrics.
        """
        if self.kind == "cosine":
            if sq_norms is None:
                sq_norms = np.sum(points * points, axis=1)
            x_sq = float(np.sum(x * x))
            # sqrt of a product keeps sqrt(s*s) == s exactly, so d(a, a) == 0
            denom = np.sqrt(sq_norms * x_sq)
            if not np.all(denom > 0.0):
                raise ZeroVectorError("cosine distance is undefined for zero vectors")
            dots = np.sum(points * x, axis=1)
            out = 1.0 - dots / denom
            return np.clip(out, 0.0, 2.0, out=out)

        diff = points - x
        r = self.r
        if r == 2.0:
            np.multiply(diff, diff, out=diff)
            return np.sqrt(np.sum(diff, axis=1))
        np.abs(diff, out=diff)
        if r == 1.0:
            return np.sum(diff, axis=1)
        if math.isinf(r):
            return np.max(diff, axis=1)
        np.power(diff, r, out=diff)
        return np.sum(diff, axis=1) ** (1.0 / r)


EUCLIDEAN = Metric("minkowski", 2.0)
CITYBLOCK = Metric("minkowski", 1.0)
MAXNORM = Metric("minkowski", math.inf)
COSINE = Metric("cosine")

NAMED_METRICS = {
    "euclidean": EUCLIDEAN,
    "cityblock": CITYBLOCK,
    "maxnorm": MAXNORM,
    "cosine": COSINE,
}
CLI_METRICS = tuple(NAMED_METRICS)
_NAMES_BY_R = {2.0: "euclidean", 1.0: "cityblock", math.inf: "maxnorm"}


def distance(a, b, m: Metric = EUCLIDEAN) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 1 or a.shape != b.shape:
        raise DimensionError(f"vectors must have equal length, got {a.shape} and {b.shape}")
    return float(m.to_rows(a[None, :], b)[0])
