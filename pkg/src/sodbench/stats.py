"""Ground-truth statistics: center bias (R_o, R_m), object size, component counts."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy import ndimage

from .maps import BinaryMask

# 8-connectivity for counting objects
_STRUCTURE = np.ones((3, 3), dtype=bool)


class EmptyMaskError(ValueError):
    pass


@dataclass(frozen=True)
class MaskStats:
    r_o: float
    r_m: float
    size: float
    components: int


def _center_geometry(shape: tuple[int, int]) -> tuple[float, float, float]:
    h, w = shape
    cy, cx = (h - 1) / 2.0, (w - 1) / 2.0
    return cy, cx, math.hypot(cy, cx)


def mask_stats(gt: BinaryMask) -> MaskStats:
    """Center-bias distances and size of the (union) foreground of one mask.

    Distances are measured from the image center and divided by the
    half-diagonal, so a corner pixel scores exactly 1.
    """
    bits = gt.bits
    ys, xs = np.nonzero(bits)
    if ys.size == 0:
        raise EmptyMaskError("mask has no foreground pixels")
    cy, cx, half_diag = _center_geometry(bits.shape)
    if half_diag == 0.0:
        r_o = r_m = 0.0
    else:
        r_o = math.hypot(float(ys.mean()) - cy, float(xs.mean()) - cx) / half_diag
        r_m = float(np.sqrt(((ys - cy) ** 2 + (xs - cx) ** 2).max())) / half_diag
    _, n_comp = ndimage.label(bits, structure=_STRUCTURE)
    return MaskStats(
        r_o=min(r_o, 1.0),
        r_m=min(r_m, 1.0),
        size=ys.size / bits.size,
        components=int(n_comp),
    )


def component_stats(gt: BinaryMask) -> list[MaskStats]:
    """Stats for each 8-connected foreground component, ordered by label."""
    labels, n = ndimage.label(gt.bits, structure=_STRUCTURE)
    return [mask_stats(BinaryMask(labels == k)) for k in range(1, n + 1)]


def distribution(values: Sequence[float], bins: int = 20) -> np.ndarray:
    """Probability histogram of values in [0, 1] over equal-width bins; 1.0 lands in the last bin."""
    if bins < 1:
        raise ValueError("bins must be >= 1")
    v = np.asarray(values, dtype=np.float64)
    if v.size == 0:
        raise ValueError("cannot build a distribution from an empty list")
    if np.any((v < 0.0) | (v > 1.0)):
        raise ValueError("values must lie in [0, 1]")
    counts, _ = np.histogram(v, bins=bins, range=(0.0, 1.0))
    return counts / v.size


@dataclass(frozen=True)
class Range:
    min: float
    max: float
    mean: float


@dataclass(frozen=True)
class DatasetSummary:
    count: int
    empty: int
    size: Range
    r_o: Range
    r_m: Range
    per_mask: tuple[MaskStats, ...]

    def to_dict(self) -> dict:
        out = {"count": self.count, "empty": self.empty}
        for name in ("size", "r_o", "r_m"):
            r = getattr(self, name)
            out[name] = {"min": r.min, "max": r.max, "mean": r.mean}
        return out


def _range(values: list[float]) -> Range:
    return Range(min(values), max(values), math.fsum(values) / len(values))


def dataset_summary(masks: Iterable[BinaryMask]) -> DatasetSummary:
    """Min / max / mean of size, R_o and R_m over the non-empty masks.

    Empty masks are counted in ``empty`` and left out of every statistic.
    """
    stats: list[MaskStats] = []
    empty = 0
    for m in masks:
        try:
            stats.append(mask_stats(m))
        except EmptyMaskError:
            empty += 1
    if not stats:
        raise ValueError("no non-empty masks to summarize")
    return DatasetSummary(
        count=len(stats),
        empty=empty,
        size=_range([s.size for s in stats]),
        r_o=_range([s.r_o for s in stats]),
        r_m=_range([s.r_m for s in stats]),
        per_mask=tuple(stats),
    )
