"""Leaderboard ranking over model x dataset scores, and best/worst-path bounds.

Per-metric ranks use competition ranking (ties share the lowest rank and the
next rank skips). A model's dataset Rank is its ordinal position by the mean
of its four metric ranks; ties go to the higher S-measure, then to the
lexicographically smaller model name. All Rank is the ordinal position by the
mean of the dataset Ranks, with ties broken by mean S-measure and then name.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Optional, Sequence

log = logging.getLogger(__name__)

METRICS = ("S", "F", "E", "M")
HIGHER_IS_BETTER = {"S": True, "F": True, "E": True, "M": False}
TIE_BREAK_NOTE = (
    "Per-metric ranks are competition ranks (ties share the lowest rank). "
    "Rank orders models by the mean of their four metric ranks; ties go to the "
    "higher S-measure, then the alphabetically first model. All Rank orders models "
    "by the mean of their dataset Ranks with the same tie-break on mean S-measure."
)

# column aliases accepted when reading score tables
_ALIASES = {
    "S": ("S", "s", "s_measure", "S_alpha"),
    "F": ("F", "f", "f_max", "F_beta"),
    "E": ("E", "e", "e_max", "E_xi"),
    "M": ("M", "m", "mae", "MAE"),
}


@dataclass(frozen=True)
class ScoreRow:
    dataset: str
    model: str
    S: Optional[float]
    F: Optional[float]
    E: Optional[float]
    M: Optional[float]

    def value(self, metric: str) -> Optional[float]:
        return getattr(self, metric)

    @property
    def complete(self) -> bool:
        return all(v is not None and not math.isnan(v) for v in (self.S, self.F, self.E, self.M))


@dataclass(frozen=True)
class Cell:
    S: float
    F: float
    E: float
    M: float
    ranks: tuple[int, int, int, int]
    rank: int

    @property
    def mean_rank(self) -> float:
        return sum(self.ranks) / 4


@dataclass(frozen=True)
class Leaderboard:
    cells: Mapping[tuple[str, str], Cell]  # (model, dataset) -> Cell
    all_rank: Mapping[str, int]
    datasets: tuple[str, ...] = field(compare=False)
    excluded: tuple[str, ...] = ()

    @property
    def models(self) -> list[str]:
        """Models ordered by All Rank."""
        return sorted(self.all_rank, key=lambda m: self.all_rank[m])

    def cell(self, model: str, dataset: str) -> Cell:
        return self.cells[(model, dataset)]

    def ranking(self, dataset: str) -> list[str]:
        """Models of one dataset ordered by dataset Rank."""
        return sorted((m for (m, d) in self.cells if d == dataset), key=lambda m: self.cells[(m, dataset)].rank)

    def score_rows(self) -> list[ScoreRow]:
        return [ScoreRow(d, m, c.S, c.F, c.E, c.M) for (m, d), c in self.cells.items()]


def competition_ranks(values: Sequence[float], higher_is_better: bool) -> list[int]:
    """1 + number of strictly better values, for each value."""
    if higher_is_better:
        return [1 + sum(1 for w in values if w > v) for v in values]
    return [1 + sum(1 for w in values if w < v) for v in values]


def rank_models(table: Iterable[ScoreRow]) -> Leaderboard:
    rows = list(table)
    datasets: list[str] = []
    for r in rows:
        if r.dataset not in datasets:
            datasets.append(r.dataset)
    by_key: dict[tuple[str, str], ScoreRow] = {}
    for r in rows:
        key = (r.model, r.dataset)
        if key in by_key:
            raise ValueError(f"duplicate score row for model {r.model!r} on {r.dataset!r}")
        by_key[key] = r

    models = sorted({r.model for r in rows})
    excluded = sorted(m for m in models
                      if any((m, d) not in by_key or not by_key[(m, d)].complete for d in datasets))
    for m in excluded:
        log.warning("model %s excluded from ranking: missing score cell(s)", m)
    kept = [m for m in models if m not in excluded]

    cells: dict[tuple[str, str], Cell] = {}
    for d in datasets:
        ds_rows = [by_key[(m, d)] for m in kept]
        per_metric = [competition_ranks([r.value(k) for r in ds_rows], HIGHER_IS_BETTER[k]) for k in METRICS]
        ranks = {r.model: tuple(per_metric[j][i] for j in range(4)) for i, r in enumerate(ds_rows)}
        order = sorted(ds_rows, key=lambda r: (sum(ranks[r.model]), -r.S, r.model))
        for pos, r in enumerate(order, 1):
            cells[(r.model, d)] = Cell(r.S, r.F, r.E, r.M, ranks[r.model], pos)

    def overall_key(m):
        mean_rank = Fraction(sum(cells[(m, d)].rank for d in datasets), len(datasets))
        mean_s = sum(Fraction(cells[(m, d)].S) for d in datasets) / len(datasets)
        return (mean_rank, -mean_s, m)

    all_rank = {m: i for i, m in enumerate(sorted(kept, key=overall_key), 1)}
    return Leaderboard(cells=cells, all_rank=all_rank, datasets=tuple(datasets), excluded=tuple(excluded))


def _parse_float(text) -> Optional[float]:
    if text is None:
        return None
    text = str(text).strip()
    if text in ("", "-", "NA", "nan", "NaN"):
        return None
    return float(text)


def read_scores(paths: Iterable) -> list[ScoreRow]:
    """Read score rows from one or more CSV files with dataset, model and S/F/E/M columns.

    Leaderboard CSVs written by this package and the ``scores.csv`` of an
    evaluation run are both accepted.
    """
    rows: list[ScoreRow] = []
    for path in paths:
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            header = reader.fieldnames or []
            cols = {}
            for k, names in _ALIASES.items():
                found = next((n for n in names if n in header), None)
                if found is None:
                    raise ValueError(f"{path}: no column for metric {k} (expected one of {names})")
                cols[k] = found
            for line in reader:
                rows.append(ScoreRow(
                    dataset=line["dataset"], model=line["model"],
                    **{k: _parse_float(line[c]) for k, c in cols.items()},
                ))
    return rows


# ---------------------------------------------------------------- bounds

@dataclass(frozen=True)
class Bounds:
    lower: float
    upper: float
    n: int


def _exact_mean(values: Iterable[float]) -> float:
    vals = [Fraction(v) for v in values]
    if not vals:
        raise ValueError("mean of empty sequence")
    return float(sum(vals, Fraction(0)) / len(vals))


def bound_analysis(pairs: Iterable[tuple[float, float]]) -> Bounds:
    """Dataset means of the per-image larger (upper) and smaller (lower) score of two paths."""
    pairs = list(pairs)
    if not pairs:
        raise ValueError("bound analysis needs at least one score pair")
    return Bounds(
        lower=_exact_mean(min(a, b) for a, b in pairs),
        upper=_exact_mean(max(a, b) for a, b in pairs),
        n=len(pairs),
    )


def gated_mean(pairs: Sequence[tuple[float, float]], keep_second: Sequence[bool]) -> float:
    """Dataset mean when a gate picks, per image, the second score (True) or the first."""
    if len(pairs) != len(keep_second):
        raise ValueError("one gate decision per pair is required")
    return _exact_mean(b if k else a for (a, b), k in zip(pairs, keep_second))
