"""Leaderboard and curve reports: CSV, Markdown, JSON and SVG."""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path
from typing import Iterable, Mapping, Optional

import numpy as np

from .harness import MeanCurve
from .ranking import METRICS, TIE_BREAK_NOTE, Leaderboard

LEADERBOARD_COLUMNS = ["dataset", "model", "S", "F", "E", "M",
                       "rank_S", "rank_F", "rank_E", "rank_M", "Rank", "All Rank"]
FORMATS = ("csv", "markdown", "json", "svg")

_PALETTE = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b",
            "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"]


def _ordered_cells(lb: Leaderboard):
    for d in lb.datasets:
        for m in lb.ranking(d):
            yield d, m, lb.cell(m, d)


def leaderboard_csv(lb: Leaderboard) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(LEADERBOARD_COLUMNS)
    for d, m, c in _ordered_cells(lb):
        w.writerow([d, m, repr(c.S), repr(c.F), repr(c.E), repr(c.M), *c.ranks, c.rank, lb.all_rank[m]])
    return buf.getvalue()


def leaderboard_markdown(lb: Leaderboard) -> str:
    out = ["# Leaderboard", ""]
    for d in lb.datasets:
        out += [f"## {d}", "",
                "| Model | S↑ | F↑ | E↑ | M↓ | Rank |",
                "|---|---:|---:|---:|---:|---:|"]
        for m in lb.ranking(d):
            c = lb.cell(m, d)
            out.append(f"| {m} | {c.S:.3f} | {c.F:.3f} | {c.E:.3f} | {c.M:.3f} | {c.rank} |")
        out.append("")
    out += ["## All Rank", "", "| Model | " + " | ".join(lb.datasets) + " | All Rank |",
            "|---|" + "---:|" * (len(lb.datasets) + 1)]
    for m in lb.models:
        ranks = " | ".join(str(lb.cell(m, d).rank) for d in lb.datasets)
        out.append(f"| {m} | {ranks} | {lb.all_rank[m]} |")
    out.append("")
    if lb.excluded:
        out += [f"Excluded (missing scores): {', '.join(lb.excluded)}", ""]
    out += [TIE_BREAK_NOTE, ""]
    return "\n".join(out)


def leaderboard_json(lb: Leaderboard) -> str:
    doc = {
        "datasets": list(lb.datasets),
        "tie_break": TIE_BREAK_NOTE,
        "excluded": list(lb.excluded),
        "all_rank": {m: lb.all_rank[m] for m in lb.models},
        "cells": [
            {"dataset": d, "model": m, **{k: getattr(c, k) for k in METRICS},
             "ranks": dict(zip(METRICS, c.ranks)), "rank": c.rank}
            for d, m, c in _ordered_cells(lb)
        ],
    }
    return json.dumps(doc, indent=2) + "\n"


def curve_csv(curve: MeanCurve) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["threshold", "precision", "recall", "f", "e"])
    for t, p, r, f, e in curve.rows():
        w.writerow([t, repr(p), repr(r), repr(f), repr(e)])
    return buf.getvalue()


def read_curve_csv(path) -> MeanCurve:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if len(rows) != 256:
        raise ValueError(f"{path}: expected 256 curve rows, found {len(rows)}")
    rows.sort(key=lambda r: int(r["threshold"]))
    col = lambda k: np.array([float(r[k]) for r in rows])
    return MeanCurve(col("precision"), col("recall"), col("f"), col("e"))


def curves_svg(curves: Mapping[str, MeanCurve], kind: str = "pr", title: Optional[str] = None,
               width: int = 480, height: int = 400) -> str:
    """Line chart with one polyline per label.

    ``kind="pr"`` plots precision against recall; ``kind="f"`` plots F against threshold.
    """
    if kind not in ("pr", "f"):
        raise ValueError(f"unknown plot kind {kind!r}")
    left, right, top, bottom = 50, 130, 30, 40
    pw, ph = width - left - right, height - top - bottom

    def sx(x):
        return left + x * pw

    def sy(y):
        return top + (1.0 - y) * ph

    xlabel, ylabel = ("Recall", "Precision") if kind == "pr" else ("Threshold", "F-measure")
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    if title:
        parts.append(f'<text x="{left + pw / 2:.1f}" y="18" text-anchor="middle" font-size="13">{_esc(title)}</text>')
    for i in range(6):
        v = i / 5
        tick = f"{v:.1f}" if kind == "pr" else str(round(v * 255))
        parts.append(f'<text x="{sx(v):.1f}" y="{top + ph + 15}" text-anchor="middle" font-size="10">{tick}</text>')
        parts.append(f'<text x="{left - 5}" y="{sy(v) + 3:.1f}" text-anchor="end" font-size="10">{v:.1f}</text>')
    parts.append(f'<text x="{left + pw / 2:.1f}" y="{height - 5}" text-anchor="middle" font-size="11">{xlabel}</text>')
    parts.append(f'<text x="12" y="{top + ph / 2:.1f}" text-anchor="middle" font-size="11" '
                 f'transform="rotate(-90 12 {top + ph / 2:.1f})">{ylabel}</text>')

    for i, label in enumerate(sorted(curves)):
        c = curves[label]
        if kind == "pr":
            xs, ys = c.recall, c.precision
        else:
            xs, ys = [t / 255 for t in range(256)], c.f_beta
        pts = " ".join(f"{sx(float(x)):.2f},{sy(float(y)):.2f}" for x, y in zip(xs, ys))
        color = _PALETTE[i % len(_PALETTE)]
        parts.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}">'
                     f'<title>{_esc(label)}</title></polyline>')
        ly = top + 12 + 16 * i
        parts.append(f'<line x1="{left + pw + 10}" y1="{ly}" x2="{left + pw + 30}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        parts.append(f'<text x="{left + pw + 34}" y="{ly + 4}" font-size="10">{_esc(label)}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _esc(text: str) -> str:
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def emit_report(lb: Optional[Leaderboard], curves: Optional[Mapping[str, Mapping[str, MeanCurve]]],
                formats: Iterable[str], out_dir) -> list[Path]:
    """Write the requested report formats into ``out_dir`` and return the written paths.

    ``curves`` maps dataset -> model -> mean curve and is only used for ``svg``.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    def put(name, text):
        p = out / name
        p.write_text(text, encoding="utf-8")
        written.append(p)

    for fmt in formats:
        if fmt not in FORMATS:
            raise ValueError(f"unknown report format {fmt!r}")
        if fmt == "svg":
            for dataset, per_model in sorted((curves or {}).items()):
                put(f"pr_{dataset}.svg", curves_svg(per_model, "pr", f"PR curve - {dataset}"))
                put(f"f_{dataset}.svg", curves_svg(per_model, "f", f"F-measure by threshold - {dataset}"))
        elif lb is None:
            continue
        elif fmt == "csv":
            put("leaderboard.csv", leaderboard_csv(lb))
        elif fmt == "markdown":
            put("leaderboard.md", leaderboard_markdown(lb))
        elif fmt == "json":
            put("leaderboard.json", leaderboard_json(lb))
    return written
