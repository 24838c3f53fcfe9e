"""Dataset ingestion and parallel per-image evaluation.

Per-image scores are computed independently (in worker processes when
``jobs > 1``) and aggregated single-threaded in stem order. Scalar dataset
means are exact rational means rounded once, which makes them independent of
worker count and of summation order, and invariant under replicating every
image k times.
"""

from __future__ import annotations

import json
import logging
import multiprocessing as mp
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from functools import partial
from pathlib import Path
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from .maps import MapError, load_map, load_mask, resize_to
from .metrics import DEFAULT_BETA2, METRIC_NAMES, N_THRESHOLDS, DimensionError, MetricRecord, evaluate_pair

log = logging.getLogger(__name__)

IMAGE_SUFFIXES = {".png", ".jpg", ".jpeg", ".bmp", ".tif", ".tiff"}


class ManifestError(ValueError):
    pass


@dataclass(frozen=True)
class Pair:
    stem: str
    pred: Path
    gt: Path
    depth: Optional[Path] = None


@dataclass(frozen=True)
class DatasetManifest:
    name: str
    model: str
    pairs: tuple[Pair, ...]
    unmatched: tuple[str, ...] = ()

    def __post_init__(self):
        stems = [p.stem for p in self.pairs]
        if len(set(stems)) != len(stems):
            dupes = sorted({s for s in stems if stems.count(s) > 1})
            raise ManifestError(f"duplicate image stems: {', '.join(dupes)}")
        object.__setattr__(self, "pairs", tuple(sorted(self.pairs, key=lambda p: p.stem)))

    def validate(self) -> None:
        missing = [str(f) for p in self.pairs for f in (p.pred, p.gt, p.depth)
                   if f is not None and not Path(f).is_file()]
        if missing:
            raise ManifestError(f"{len(missing)} listed file(s) do not exist, e.g. {missing[0]}")


def index_images(folder: Path) -> dict[str, Path]:
    index: dict[str, Path] = {}
    if not folder.is_dir():
        return index
    for f in sorted(folder.iterdir()):
        if not f.is_file() or f.suffix.lower() not in IMAGE_SUFFIXES:
            continue
        if f.stem in index:
            raise ManifestError(f"duplicate stem {f.stem!r} in {folder}: {index[f.stem].name}, {f.name}")
        index[f.stem] = f
    return index


def scan_manifest(dataset_dir, model: str, name: Optional[str] = None) -> DatasetManifest:
    """Pair files by stem under ``<dataset_dir>/{GT,depth,pred/<model>}``.

    Predictions without ground truth (and vice versa) are excluded and listed
    in ``unmatched``.
    """
    root = Path(dataset_dir)
    if not root.is_dir():
        raise ManifestError(f"dataset directory not found: {root}")
    preds = index_images(root / "pred" / model)
    gts = index_images(root / "GT")
    depths = index_images(root / "depth")

    unmatched = [f"pred/{model}/{preds[s].name}: no ground truth" for s in sorted(preds.keys() - gts.keys())]
    unmatched += [f"GT/{gts[s].name}: no prediction" for s in sorted(gts.keys() - preds.keys())]
    pairs = tuple(Pair(s, preds[s], gts[s], depths.get(s)) for s in sorted(preds.keys() & gts.keys()))
    if not pairs:
        raise ManifestError(f"no prediction/ground-truth pairs found under {root} for model {model!r}")
    for line in unmatched:
        log.warning("unmatched: %s", line)
    return DatasetManifest(name or root.name, model, pairs, tuple(unmatched))


def load_manifest(path) -> DatasetManifest:
    """Read an explicit manifest JSON.

    Format::

        {"name": "SIP", "model": "mine",
         "pairs": [{"pred": "p/1.png", "gt": "g/1.png", "depth": "d/1.png"}, ...]}

    ``pairs`` entries may also be ``[pred, gt]`` or ``[pred, gt, depth]`` lists.
    Relative paths resolve against the manifest's directory.
    """
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ManifestError(f"cannot read manifest {path}: {exc}") from exc
    base = path.parent

    def res(p):
        if p is None:
            return None
        p = Path(p)
        return p if p.is_absolute() else base / p

    pairs = []
    for entry in doc.get("pairs", []):
        if isinstance(entry, dict):
            pred, gt, depth = entry.get("pred"), entry.get("gt"), entry.get("depth")
        else:
            pred, gt, depth = (list(entry) + [None])[:3]
        if pred is None or gt is None:
            raise ManifestError(f"manifest entry missing pred or gt: {entry!r}")
        pairs.append(Pair(Path(pred).stem, res(pred), res(gt), res(depth)))
    if not pairs:
        raise ManifestError(f"manifest {path} lists no pairs")
    manifest = DatasetManifest(doc.get("name", path.stem), doc.get("model", "model"), tuple(pairs))
    manifest.validate()
    return manifest


# ---------------------------------------------------------------- evaluation

@dataclass(frozen=True)
class ImageResult:
    stem: str
    record: Optional[MetricRecord] = None
    error: Optional[str] = None


def evaluate_files(pair: Pair, beta2: float = DEFAULT_BETA2) -> ImageResult:
    """Load one pair, resize the prediction to the GT size if needed, and score it."""
    try:
        sal = load_map(pair.pred)
        gt = load_mask(pair.gt)
        if sal.shape != gt.shape:
            sal = resize_to(sal, gt.width, gt.height)
        return ImageResult(pair.stem, evaluate_pair(sal, gt, beta2))
    except (MapError, DimensionError, OSError) as exc:
        return ImageResult(pair.stem, error=str(exc))


_SHIFT = 1100  # every finite double is an integer multiple of 2**-1074


def exact_mean(values: Sequence[float]) -> float:
    """Correctly rounded arithmetic mean (exact integer sum, one rounding).

    Independent of summation order, and the mean of k copies of x is x.
    """
    if not values:
        raise ValueError("mean of empty sequence")
    total = 0
    for v in values:
        num, den = float(v).as_integer_ratio()
        total += num << (_SHIFT + 1 - den.bit_length())
    return float(Fraction(total, len(values) << _SHIFT))


@dataclass(frozen=True)
class DatasetScores:
    n_images: int
    mae: float
    f_max: float
    f_adaptive: float
    s_measure: float
    e_max: float
    bce: float
    flagged: int = 0

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass(frozen=True, eq=False)
class MeanCurve:
    """Per-threshold dataset means of precision, recall, F and E."""

    precision: np.ndarray
    recall: np.ndarray
    f_beta: np.ndarray
    e_value: np.ndarray

    def __eq__(self, other):
        if not isinstance(other, MeanCurve):
            return NotImplemented
        return all(np.array_equal(getattr(self, n), getattr(other, n))
                   for n in ("precision", "recall", "f_beta", "e_value"))

    def rows(self):
        for t in range(N_THRESHOLDS):
            yield t, float(self.precision[t]), float(self.recall[t]), float(self.f_beta[t]), float(self.e_value[t])


def aggregate(records: Sequence[MetricRecord]) -> tuple[DatasetScores, MeanCurve]:
    if not records:
        raise ValueError("no records to aggregate")
    means = {name: exact_mean([getattr(r, name) for r in records]) for name in METRIC_NAMES}
    scores = DatasetScores(n_images=len(records), flagged=sum(1 for r in records if r.flags), **means)

    def column_mean(attr):
        stack = np.stack([getattr(r.curve, attr) for r in records], axis=1)
        return np.array([exact_mean(row) for row in stack.tolist()])

    curve = MeanCurve(*(column_mean(a) for a in ("precision", "recall", "f_beta", "e_value")))
    return scores, curve


@dataclass(frozen=True)
class DatasetResult:
    name: str
    model: str
    images: tuple[ImageResult, ...]
    scores: Optional[DatasetScores]
    curve: Optional[MeanCurve]

    @property
    def records(self) -> list[tuple[str, MetricRecord]]:
        return [(r.stem, r.record) for r in self.images if r.record is not None]

    @property
    def failures(self) -> list[tuple[str, str]]:
        return [(r.stem, r.error) for r in self.images if r.error is not None]

    @property
    def partial(self) -> bool:
        return any(r.error is not None for r in self.images)


def _pool_context():
    # fork avoids re-importing numpy/scipy in every worker
    if "fork" in mp.get_all_start_methods():
        return mp.get_context("fork")
    return mp.get_context()


def evaluate_dataset(manifest: DatasetManifest, beta2: float = DEFAULT_BETA2, jobs: int = 1,
                     progress: Optional[Callable[[int, int], None]] = None) -> DatasetResult:
    """Score every pair in the manifest and aggregate dataset means.

    Unreadable pairs are recorded as failures and left out of the means.
    Results are identical for any ``jobs``.
    """
    if jobs < 1:
        raise ValueError("jobs must be >= 1")
    pairs = list(manifest.pairs)
    if not pairs:
        raise ManifestError("manifest has no pairs")
    work = partial(evaluate_files, beta2=beta2)
    results: list[ImageResult] = []
    n = len(pairs)
    if jobs == 1 or n == 1:
        it: Iterable[ImageResult] = map(work, pairs)
        _collect(it, results, n, progress)
    else:
        chunk = max(1, n // (jobs * 8))
        with ProcessPoolExecutor(max_workers=jobs, mp_context=_pool_context()) as ex:
            _collect(ex.map(work, pairs, chunksize=chunk), results, n, progress)

    results.sort(key=lambda r: r.stem)
    good = [r.record for r in results if r.record is not None]
    scores, curve = aggregate(good) if good else (None, None)
    for r in results:
        if r.error is not None:
            log.error("failed %s: %s", r.stem, r.error)
    return DatasetResult(manifest.name, manifest.model, tuple(results), scores, curve)


def _collect(it, results, n, progress):
    for i, r in enumerate(it, 1):
        results.append(r)
        if progress is not None:
            progress(i, n)

