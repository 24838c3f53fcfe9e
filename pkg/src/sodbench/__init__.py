"""Benchmark engine for RGB-D salient object detection."""

from .maps import BinaryMask, SaliencyMap, binarize, load_map, load_mask, normalize, resize_to, save_map
from .metrics import (
    Confusion,
    Curve,
    CurvePoint,
    MetricRecord,
    bce,
    confusion_at,
    e_curve,
    e_max,
    e_measure,
    evaluate_pair,
    f_adaptive,
    f_beta,
    mae,
    pr_curve,
    s_measure,
)
from .ddu import DduDecision, DepthHistogram, Gate, ddu_select, depth_histogram, depth_quality_label
from .stats import MaskStats, dataset_summary, distribution, mask_stats
from .harness import DatasetManifest, evaluate_dataset, load_manifest, scan_manifest
from .ranking import Leaderboard, ScoreRow, bound_analysis, rank_models
from .report import emit_report

__version__ = "0.1.0"
