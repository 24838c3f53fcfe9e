"""Depth depurator gate and depth-histogram quality diagnostic.

The gate keeps the RGB-D prediction when it agrees with the depth-only
prediction (MAE distance at most ``t``) and otherwise falls back to the
RGB-only prediction.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy.signal import find_peaks

from .maps import SaliencyMap, scale255
from .metrics import DimensionError

DEFAULT_T = 0.15
CANDIDATE_TS = (0.01, 0.02, 0.05, 0.10, 0.15, 0.20)
DEFAULT_SMOOTH_WINDOW = 9
DEFAULT_PROMINENCE = 0.02
PEAK_MASS_FLOOR = 0.10
PEAK_SEPARATION = 32


class Gate(str, enum.Enum):
    KEPT_DEPTH = "kept-depth"
    DISCARDED_DEPTH = "discarded-depth"


@dataclass(frozen=True)
class DduDecision:
    gate: Gate
    distance: float
    threshold: float
    output: SaliencyMap

    @property
    def kept(self) -> bool:
        return self.gate is Gate.KEPT_DEPTH


def map_distance(a: SaliencyMap, b: SaliencyMap) -> float:
    """Mean absolute difference between two maps of equal size."""
    if a.shape != b.shape:
        raise DimensionError(f"maps differ in size: {a.shape} vs {b.shape}")
    return float(np.mean(np.abs(a.values - b.values)))


def ddu_select(s_rgb: SaliencyMap, s_rgbd: SaliencyMap, s_depth: SaliencyMap,
               t: float = DEFAULT_T) -> DduDecision:
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"t must be in [0, 1], got {t}")
    if s_rgb.shape != s_rgbd.shape:
        raise DimensionError(f"maps differ in size: {s_rgb.shape} vs {s_rgbd.shape}")
    delta = map_distance(s_rgbd, s_depth)
    if delta <= t:
        return DduDecision(Gate.KEPT_DEPTH, delta, t, s_rgbd)
    return DduDecision(Gate.DISCARDED_DEPTH, delta, t, s_rgb)


@dataclass(frozen=True)
class Peak:
    index: int
    prominence: float
    mass: float  # share of total pixel mass in this peak's basin


@dataclass(frozen=True, eq=False)
class DepthHistogram:
    bins: np.ndarray
    smoothed: np.ndarray
    peaks: tuple[Peak, ...]

    @property
    def total(self) -> int:
        return int(self.bins.sum())

    @property
    def low_confidence(self) -> bool:
        """No peak clears the prominence floor, so the peak structure is noise."""
        return len(self.peaks) == 0


def smooth_histogram(bins: np.ndarray, window: int) -> np.ndarray:
    """Centered moving average with edge-clamped padding, rescaled to the input mass."""
    if window < 1 or window % 2 == 0:
        raise ValueError(f"smoothing window must be a positive odd integer, got {window}")
    b = np.asarray(bins, dtype=np.float64)
    half = window // 2
    padded = np.pad(b, half, mode="edge")
    csum = np.concatenate(([0.0], np.cumsum(padded)))
    out = (csum[window:] - csum[:-window]) / window
    total, got = b.sum(), out.sum()
    if got > 0:
        out *= total / got
    return out


def _basin_masses(smoothed: np.ndarray, idx: np.ndarray) -> np.ndarray:
    """Split the curve at the lowest point between neighbouring peaks and sum each part."""
    cuts = [0]
    for a, b in zip(idx[:-1], idx[1:]):
        cuts.append(int(a + np.argmin(smoothed[a:b + 1])))
    cuts.append(len(smoothed))
    masses = np.array([smoothed[lo:hi].sum() for lo, hi in zip(cuts[:-1], cuts[1:])])
    total = smoothed.sum()
    return masses / total if total > 0 else masses


def depth_histogram(depth: SaliencyMap, smooth_window: int = DEFAULT_SMOOTH_WINDOW,
                    prominence: float = DEFAULT_PROMINENCE) -> DepthHistogram:
    """256-bin histogram of a depth map, its smoothed curve and prominent peaks.

    ``prominence`` is a fraction of the pixel count. At window 1 it applies to
    raw counts; for wider windows it shrinks by sqrt(window), the rate at which
    averaging damps counting noise, so a wide window flattens a genuine spike
    without pushing it under the floor.
    """
    q = scale255(depth.values).ravel()
    bins = np.bincount(q, minlength=256)
    smoothed = smooth_histogram(bins, smooth_window)
    # padding at the curve's floor lets peaks touching bin 0 or 255 register,
    # while a flat spread of values does not turn into one wide peak
    floor = smoothed.min()
    padded = np.concatenate(([floor], smoothed, [floor]))
    idx, props = find_peaks(padded, prominence=prominence * q.size / np.sqrt(smooth_window))
    idx = idx - 1
    masses = _basin_masses(smoothed, idx) if len(idx) else np.array([])
    peaks = tuple(Peak(int(i), float(p), float(m))
                  for i, p, m in zip(idx, props["prominences"], masses))
    return DepthHistogram(bins=bins, smoothed=smoothed, peaks=peaks)


def depth_quality_label(h: DepthHistogram) -> str:
    """'likely-high' for clearly bimodal depth, 'likely-low' otherwise. Diagnostic only."""
    strong = [p.index for p in h.peaks if p.mass >= PEAK_MASS_FLOOR]
    if len(strong) >= 2 and max(strong) - min(strong) >= PEAK_SEPARATION:
        return "likely-high"
    return "likely-low"
