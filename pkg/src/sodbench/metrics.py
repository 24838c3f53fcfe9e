"""Per-image saliency metrics: MAE, PR curve, F-measure, S-measure, E-measure, BCE.

Every threshold-dependent quantity is derived from exact integer confusion
counts. The counts for all 256 thresholds come from one 256-level histogram of
the quantized prediction split by ground-truth label, followed by a reverse
cumulative sum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, NamedTuple

import numpy as np

from .maps import BinaryMask, SaliencyMap, scale255

N_THRESHOLDS = 256
DEFAULT_BETA2 = 0.3
ALPHA = 0.5
S_LAMBDA = 1.0
S_EPS = 1e-20
# machine epsilon; a larger constant keeps a perfect prediction measurably below 1
E_EPS = float(np.finfo(np.float64).eps)
BCE_EPS = 1e-7

METRIC_NAMES = ("mae", "f_max", "f_adaptive", "s_measure", "e_max", "bce")


class DimensionError(ValueError):
    """Prediction and ground truth do not share dimensions."""


def _check(sal, gt) -> tuple[np.ndarray, np.ndarray]:
    s = sal.values if isinstance(sal, SaliencyMap) else np.asarray(sal, dtype=np.float64)
    g = gt.bits if isinstance(gt, BinaryMask) else np.asarray(gt).astype(bool)
    if s.shape != g.shape:
        raise DimensionError(f"prediction {s.shape} and ground truth {g.shape} differ in size")
    return s, g


@dataclass(frozen=True)
class Confusion:
    tp: int
    fp: int
    fn: int
    tn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


class CurvePoint(NamedTuple):
    threshold: int
    precision: float
    recall: float
    f_beta: float
    e_value: float


@dataclass(frozen=True, eq=False)
class Curve:
    """Per-threshold statistics for thresholds 0..255 (array index == threshold)."""

    tp: np.ndarray
    fp: np.ndarray
    fn: np.ndarray
    tn: np.ndarray
    precision: np.ndarray
    recall: np.ndarray
    f_beta: np.ndarray
    e_value: np.ndarray

    @property
    def thresholds(self) -> np.ndarray:
        return np.arange(N_THRESHOLDS)

    def confusion(self, threshold: int) -> Confusion:
        i = threshold
        return Confusion(int(self.tp[i]), int(self.fp[i]), int(self.fn[i]), int(self.tn[i]))

    def points(self) -> Iterator[CurvePoint]:
        for i in range(N_THRESHOLDS):
            yield CurvePoint(i, float(self.precision[i]), float(self.recall[i]),
                             float(self.f_beta[i]), float(self.e_value[i]))

    def __len__(self):
        return N_THRESHOLDS

    def __eq__(self, other):
        if not isinstance(other, Curve):
            return NotImplemented
        names = ("tp", "fp", "fn", "tn", "precision", "recall", "f_beta", "e_value")
        return all(np.array_equal(getattr(self, n), getattr(other, n)) for n in names)


def mae(sal, gt) -> float:
    s, g = _check(sal, gt)
    return float(np.mean(np.abs(s - g)))


def threshold_counts(sal, gt) -> tuple[np.ndarray, np.ndarray, int, int]:
    """Return (tp, fp) arrays over all 256 thresholds plus foreground/background pixel totals."""
    s, g = _check(sal, gt)
    q = scale255(s).ravel()
    hist = np.bincount(q + N_THRESHOLDS * g.ravel(), minlength=2 * N_THRESHOLDS)
    bg_hist, fg_hist = hist[:N_THRESHOLDS], hist[N_THRESHOLDS:]
    tp = np.cumsum(fg_hist[::-1])[::-1]
    fp = np.cumsum(bg_hist[::-1])[::-1]
    return tp, fp, int(fg_hist.sum()), int(bg_hist.sum())


def confusion_at(sal, gt, threshold: int) -> Confusion:
    if not 0 <= threshold <= 255:
        raise ValueError(f"threshold must be in [0, 255], got {threshold}")
    s, g = _check(sal, gt)
    pred = scale255(s) >= threshold
    tp = int(np.count_nonzero(pred & g))
    fp = int(np.count_nonzero(pred & ~g))
    fn = int(np.count_nonzero(~pred & g))
    return Confusion(tp, fp, fn, g.size - tp - fp - fn)


def f_beta(precision, recall, beta2: float = DEFAULT_BETA2):
    """Weighted harmonic mean (1 + b2) P R / (b2 P + R); 0 where the denominator vanishes.

    Works elementwise on arrays as well as on scalars.
    """
    if beta2 <= 0:
        raise ValueError(f"beta2 must be positive, got {beta2}")
    p = np.asarray(precision, dtype=np.float64)
    r = np.asarray(recall, dtype=np.float64)
    den = beta2 * p + r
    with np.errstate(divide="ignore", invalid="ignore"):
        f = np.where(den > 0, (1.0 + beta2) * p * r / np.where(den > 0, den, 1.0), 0.0)
    return float(f) if f.ndim == 0 else f


def _precision_recall(tp, fp, n_fg):
    tp = np.asarray(tp, dtype=np.float64)
    pos = tp + np.asarray(fp, dtype=np.float64)
    precision = np.divide(tp, pos, out=np.zeros_like(tp), where=pos > 0)
    recall = tp / n_fg if n_fg > 0 else np.zeros_like(tp)
    return precision, recall


def _e_from_counts(tp, fp, fn, tn) -> np.ndarray:
    """Mean enhanced-alignment value of binary predictions given their confusion counts.

    With binary prediction and GT the enhanced matrix takes one value per
    confusion cell, so the image mean is a count-weighted sum of four terms.
    """
    tp, fp, fn, tn = (np.asarray(a, dtype=np.float64) for a in (tp, fp, fn, tn))
    n = tp + fp + fn + tn
    mean_pred = (tp + fp) / n
    mean_gt = (tp + fn) / n

    def cell(pred_bit, gt_bit):
        phi_p = pred_bit - mean_pred
        phi_g = gt_bit - mean_gt
        align = 2.0 * phi_g * phi_p / (phi_g * phi_g + phi_p * phi_p + E_EPS)
        return (1.0 + align) ** 2 / 4.0

    e = (tp * cell(1.0, 1.0) + fp * cell(1.0, 0.0) + fn * cell(0.0, 1.0) + tn * cell(0.0, 0.0)) / n
    n_fg = tp + fn
    e = np.where(n_fg == 0, (fn + tn) / n, e)
    e = np.where(n_fg == n, (tp + fp) / n, e)
    return e


def pr_curve(sal, gt, beta2: float = DEFAULT_BETA2) -> Curve:
    """Precision, recall, F and E values at every threshold 0..255.

    Precision is defined as 0 when nothing is predicted positive. With an
    all-background ground truth recall is undefined and reported as 0; callers
    flag such records (see ``evaluate_pair``).
    """
    tp, fp, n_fg, n_bg = threshold_counts(sal, gt)
    fn = n_fg - tp
    tn = n_bg - fp
    precision, recall = _precision_recall(tp, fp, n_fg)
    return Curve(
        tp=tp, fp=fp, fn=fn, tn=tn,
        precision=precision, recall=recall,
        f_beta=f_beta(precision, recall, beta2),
        e_value=_e_from_counts(tp, fp, fn, tn),
    )


def adaptive_threshold(sal) -> int:
    s = sal.values if isinstance(sal, SaliencyMap) else np.asarray(sal, dtype=np.float64)
    return int(min(max(math.floor(2.0 * float(s.mean()) * 255.0 + 0.5), 0), 255))


def f_adaptive(sal, gt, beta2: float = DEFAULT_BETA2) -> float:
    """F-measure at the adaptive threshold: twice the mean saliency, clamped to 255."""
    c = confusion_at(sal, gt, adaptive_threshold(sal))
    n_fg = c.tp + c.fn
    p, r = _precision_recall(c.tp, c.fp, n_fg)
    return f_beta(p, r, beta2)


# ---------------------------------------------------------------- S-measure

def _object_score(x: np.ndarray) -> float:
    if x.size == 0:
        return 0.0
    mean = float(x.mean())
    std = float(x.std(ddof=1)) if x.size > 1 else 0.0
    return 2.0 * mean / (mean * mean + 1.0 + 2.0 * S_LAMBDA * std + S_EPS)


def _s_object(s: np.ndarray, g: np.ndarray) -> float:
    mu = float(g.mean())
    return mu * _object_score(s[g]) + (1.0 - mu) * _object_score(1.0 - s[~g])


def _centroid_split(g: np.ndarray) -> tuple[int, int]:
    """Row/column split indices; the rounded centroid pixel falls in the top-left quadrant."""
    ys, xs = np.nonzero(g)
    cy = math.floor(float(ys.mean()) + 0.5) + 1
    cx = math.floor(float(xs.mean()) + 0.5) + 1
    return cy, cx


def _level(a: np.ndarray) -> float:
    # mean of a constant block, taken exactly so its variance is exactly zero
    first = a.flat[0]
    return float(first) if np.all(a == first) else float(a.mean())


def _ssim(x: np.ndarray, y: np.ndarray) -> float:
    n = x.size
    mx, my = _level(x), _level(y)
    if n > 1:
        dx, dy = x - mx, y - my
        vx = float((dx * dx).sum()) / (n - 1)
        vy = float((dy * dy).sum()) / (n - 1)
        cov = float((dx * dy).sum()) / (n - 1)
    else:
        vx = vy = cov = 0.0
    num = 4.0 * mx * my * cov
    den = (mx * mx + my * my) * (vx + vy)
    if num != 0.0:
        return num / den
    return 1.0 if den == 0.0 else 0.0


def _s_region(s: np.ndarray, g: np.ndarray) -> float:
    cy, cx = _centroid_split(g)
    n_fg = int(np.count_nonzero(g))
    score = 0.0
    for rows, cols in ((slice(0, cy), slice(0, cx)), (slice(0, cy), slice(cx, None)),
                       (slice(cy, None), slice(0, cx)), (slice(cy, None), slice(cx, None))):
        gq = g[rows, cols]
        k_fg = int(np.count_nonzero(gq))
        if k_fg == 0:
            continue
        score += (k_fg / n_fg) * _ssim(s[rows, cols], gq.astype(np.float64))
    return score


def s_measure(sal, gt) -> float:
    """Structure measure: 0.5 * object-aware + 0.5 * region-aware similarity, in [0, 1]."""
    s, g = _check(sal, gt)
    fg_share = float(g.mean())
    if fg_share == 0.0:
        return 1.0 - float(s.mean())
    if fg_share == 1.0:
        return float(s.mean())
    score = ALPHA * _s_object(s, g) + (1.0 - ALPHA) * _s_region(s, g)
    return min(max(score, 0.0), 1.0)


# ---------------------------------------------------------------- E-measure

def e_measure(binpred, gt) -> float:
    """Enhanced-alignment measure of a binary prediction against the GT."""
    p = binpred.bits if isinstance(binpred, BinaryMask) else np.asarray(binpred).astype(bool)
    _, g = _check(p.astype(np.float64), gt)
    pf = p.astype(np.float64)
    gf = g.astype(np.float64)
    if not g.any():
        return float(np.mean(1.0 - pf))
    if g.all():
        return float(np.mean(pf))
    phi_p = pf - pf.mean()
    phi_g = gf - gf.mean()
    align = 2.0 * phi_g * phi_p / (phi_g * phi_g + phi_p * phi_p + E_EPS)
    return float(np.mean((1.0 + align) ** 2 / 4.0))


def e_curve(sal, gt) -> np.ndarray:
    """E-measure of the prediction binarized at each threshold 0..255."""
    tp, fp, n_fg, n_bg = threshold_counts(sal, gt)
    return _e_from_counts(tp, fp, n_fg - tp, n_bg - fp)


def e_max(sal, gt) -> float:
    return float(e_curve(sal, gt).max())


def bce(sal, gt) -> float:
    """Binary cross-entropy with predictions clamped to [1e-7, 1 - 1e-7]."""
    s, g = _check(sal, gt)
    s = np.clip(s, BCE_EPS, 1.0 - BCE_EPS)
    return float(-np.mean(np.where(g, np.log(s), np.log1p(-s))))


# ---------------------------------------------------------------- records

@dataclass(frozen=True)
class MetricRecord:
    mae: float
    f_max: float
    f_adaptive: float
    s_measure: float
    e_max: float
    bce: float
    curve: Curve = field(repr=False)
    flags: tuple[str, ...] = ()

    def scores(self) -> dict[str, float]:
        return {name: getattr(self, name) for name in METRIC_NAMES}

    def to_dict(self, include_curve: bool = False) -> dict:
        d: dict = dict(self.scores())
        d["flags"] = list(self.flags)
        if include_curve:
            d["curve"] = [p._asdict() for p in self.curve.points()]
        return d


def evaluate_pair(sal, gt, beta2: float = DEFAULT_BETA2) -> MetricRecord:
    """Compute every metric for one prediction / ground-truth pair of equal size."""
    s, g = _check(sal, gt)
    curve = pr_curve(s, g, beta2)
    flags = () if g.any() else ("empty-gt",)
    return MetricRecord(
        mae=mae(s, g),
        f_max=float(curve.f_beta.max()),
        f_adaptive=f_adaptive(s, g, beta2),
        s_measure=s_measure(s, g),
        e_max=float(curve.e_value.max()),
        bce=bce(s, g),
        curve=curve,
        flags=flags,
    )
