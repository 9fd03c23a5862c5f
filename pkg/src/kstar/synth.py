"""Synthetic labeled latent spaces with a planted k* pattern per class.

Layouts
-------
clustered
    One unit-variance isotropic Gaussian blob per class. Centers are the
    scaled standard basis vectors ``separation / sqrt(2) * e_c`` (a regular
    simplex with edge ``separation``); when ``dim < classes`` they fall back to
    a line with spacing ``separation``.
overlapped
    Classes are grouped in pairs (a trailing odd class joins the last pair).
    Within a group every class is a slab along axis 0 of length
    ``OVERLAP_SLAB``; consecutive slabs share a mixing band of width
    ``OVERLAP_BAND``. Positions along the slab are stratified, the remaining
    axes carry Gaussian noise of scale ``OVERLAP_NOISE``. ``offset`` shifts the
    j-th class of a group by an extra ``j * offset`` along axis 0.
fractured
    Each class is split into ``shards`` unit-variance sub-blobs on axis 0.
    With ``interleave`` the shards of different classes alternate
    (``c0 c1 c2 c0 c1 c2 ...``) ``FRACTURE_GAP`` apart, so other classes sit
    between the shards of each class.

The random stream is SplitMix64 and normals come from Box-Muller, so output is
bit-identical for a given spec on any platform.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dataset import EmbeddingSet
from .errors import SpecError

LAYOUTS = ("clustered", "overlapped", "fractured")

# Overlapped geometry: pure part of a slab 20, mixing band 10 (half the pure part).
OVERLAP_PURE = 20.0
OVERLAP_BAND = 10.0
OVERLAP_SLAB = OVERLAP_PURE + OVERLAP_BAND
OVERLAP_NOISE = 1.0
# Space between overlapped groups, in slab lengths.
GROUP_GAP = 3.0
FRACTURE_GAP = 1.5

_MASK = (1 << 64) - 1
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)


class SplitMix64:
    """SplitMix64 generator; output ``k`` is ``mix(seed + (k + 1) * golden)``."""

    def __init__(self, seed: int):
        self.seed = int(seed) & _MASK
        self.position = 0

    def next_u64(self, count: int) -> np.ndarray:
        k = np.arange(self.position + 1, self.position + 1 + count, dtype=np.uint64)
        self.position += count
        z = np.uint64(self.seed) + k * _GOLDEN
        z = (z ^ (z >> np.uint64(30))) * _M1
        z = (z ^ (z >> np.uint64(27))) * _M2
        return z ^ (z >> np.uint64(31))

    def uniform(self, count: int) -> np.ndarray:
        """Doubles in [0, 1) from the top 53 bits."""
        return (self.next_u64(count) >> np.uint64(11)).astype(np.float64) * 2.0**-53

    def normal(self, count: int) -> np.ndarray:
        """Standard normals via Box-Muller, two per pair of uniforms."""
        pairs = (count + 1) // 2
        u = self.uniform(2 * pairs).tolist()
        out = []
        log, sqrt, cos, sin, two_pi = math.log, math.sqrt, math.cos, math.sin, 2.0 * math.pi
        for i in range(0, 2 * pairs, 2):
            radius = sqrt(-2.0 * log(1.0 - u[i]))
            theta = two_pi * u[i + 1]
            out.append(radius * cos(theta))
            out.append(radius * sin(theta))
        return np.array(out[:count], dtype=np.float64)


@dataclass(frozen=True)
class SynthSpec:
    layout: str
    classes: int = 4
    per_class: int = 100
    dim: int = 16
    seed: int = 0
    separation: float = 10.0
    offset: float = 0.0
    shards: int = 8
    interleave: bool = True

    def validate(self) -> None:
        if self.layout not in LAYOUTS:
            raise SpecError(f"layout must be one of {LAYOUTS}, got {self.layout!r}")
        if self.classes < 2:
            raise SpecError("need at least 2 classes")
        if self.per_class < 4:
            raise SpecError("need at least 4 samples per class")
        if self.dim < 1:
            raise SpecError("dimension must be at least 1")
        if not self.separation >= 0:
            raise SpecError("separation must be >= 0")
        if not math.isfinite(self.offset):
            raise SpecError("offset must be finite")
        if self.layout == "fractured" and not 2 <= self.shards <= self.per_class // 2:
            raise SpecError(f"shards must be in [2, per_class/2], got {self.shards}")


def class_names(classes: int) -> list[str]:
    return [f"class_{c}" for c in range(classes)]


def _groups(classes: int) -> list[list[int]]:
    groups = [[c, c + 1] for c in range(0, classes - 1, 2)]
    if classes % 2:
        groups[-1].append(classes - 1)
    return groups


def generate(spec: SynthSpec) -> EmbeddingSet:
    spec.validate()
    C, M, d = spec.classes, spec.per_class, spec.dim
    n = C * M
    rng = SplitMix64(spec.seed)
    X = rng.normal(n * d).reshape(n, d)
    labels = np.repeat(np.arange(C), M)
    within = np.tile(np.arange(M), C)

    if spec.layout == "clustered":
        if d >= C:
            X[np.arange(n), labels] += spec.separation / math.sqrt(2.0)
        else:
            X[:, 0] += labels * spec.separation
    elif spec.layout == "fractured":
        shard = within % spec.shards
        if spec.interleave:
            slot = shard * C + labels
        else:
            slot = labels * spec.shards + shard
        X[:, 0] += slot * FRACTURE_GAP
    else:
        X *= OVERLAP_NOISE
        strata = (np.arange(M) + rng.uniform(n).reshape(C, M)) / M
        base = 0.0
        for group in _groups(C):
            for j, c in enumerate(group):
                start = base + j * (OVERLAP_PURE + spec.offset)
                X[labels == c, 0] = start + OVERLAP_SLAB * strata[c]
            base += len(group) * OVERLAP_PURE + OVERLAP_BAND + GROUP_GAP * OVERLAP_SLAB

    names = class_names(C)
    return EmbeddingSet.from_arrays(X, [names[c] for c in labels])
