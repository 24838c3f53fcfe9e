"""``sodbench`` command line: eval, rank, fuse, stats, bounds, plot.

Exit codes: 0 success, 2 partial failure (some images or models failed),
1 fatal error or invalid arguments.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .ddu import CANDIDATE_TS, DEFAULT_PROMINENCE, DEFAULT_SMOOTH_WINDOW, DEFAULT_T, ddu_select, \
    depth_histogram, depth_quality_label
from .harness import ManifestError, evaluate_dataset, exact_mean, load_manifest, \
    scan_manifest, index_images
from .maps import MapError, load_map, load_mask, save_map
from .metrics import DEFAULT_BETA2, METRIC_NAMES, mae, s_measure
from .ranking import bound_analysis, rank_models, read_scores
from .report import FORMATS, curve_csv, curves_svg, emit_report, read_curve_csv
from .stats import distribution, dataset_summary, mask_stats, EmptyMaskError

log = logging.getLogger("sodbench")

EXIT_OK, EXIT_FATAL, EXIT_PARTIAL = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_FATAL, f"{self.prog}: error: {message}\n")


@dataclass
class RunConfig:
    subcommand: str
    inputs: dict = field(default_factory=dict)
    t: float = DEFAULT_T
    beta2: float = DEFAULT_BETA2
    jobs: int = 1
    out: Optional[Path] = None
    formats: tuple[str, ...] = ()
    allow_partial: bool = False

    def validate(self) -> None:
        if not 0.0 <= self.t <= 1.0:
            raise UsageError(f"--t must be in [0, 1], got {self.t}")
        if not self.beta2 > 0.0:
            raise UsageError(f"--beta2 must be positive, got {self.beta2}")
        if self.jobs < 1:
            raise UsageError(f"--jobs must be >= 1, got {self.jobs}")
        if self.out is not None:
            try:
                self.out.mkdir(parents=True, exist_ok=True)
            except OSError as exc:
                raise UsageError(f"cannot create output directory {self.out}: {exc}") from exc
            if not os.access(self.out, os.W_OK):
                raise UsageError(f"output directory {self.out} is not writable")


def _unit_float(text: str) -> float:
    v = float(text)
    if not 0.0 <= v <= 1.0:
        raise argparse.ArgumentTypeError(f"must be in [0, 1], got {text}")
    return v


def _positive_float(text: str) -> float:
    v = float(text)
    if not v > 0.0:
        raise argparse.ArgumentTypeError(f"must be positive, got {text}")
    return v


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {text}")
    return v


def _jobs_default() -> int:
    env = os.environ.get("SODBENCH_JOBS")
    if not env:
        return 1
    try:
        return int(env)
    except ValueError:
        raise UsageError(f"SODBENCH_JOBS must be an integer, got {env!r}") from None


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


# ---------------------------------------------------------------- eval

def cmd_eval(args, cfg: RunConfig) -> int:
    if args.manifest:
        manifest = load_manifest(args.manifest)
    else:
        if not (args.root and args.dataset and args.model):
            raise UsageError("eval needs --root, --dataset and --model (or --manifest)")
        manifest = scan_manifest(Path(args.root) / args.dataset, args.model, name=args.dataset)

    n = len(manifest.pairs)
    step = max(1, n // 10)

    def progress(i, total):
        if i % step == 0 or i == total:
            log.info("evaluated %d/%d", i, total)

    result = evaluate_dataset(manifest, beta2=cfg.beta2, jobs=cfg.jobs, progress=progress)
    out = cfg.out

    rows = []
    records_json = []
    for img in result.images:
        if img.record is None:
            continue
        r = img.record
        rows.append([img.stem, *(repr(getattr(r, k)) for k in METRIC_NAMES), ";".join(r.flags)])
        records_json.append({"stem": img.stem, **r.to_dict()})
        if args.curves:
            cdir = out / "curves"
            cdir.mkdir(exist_ok=True)
            _write_csv(cdir / f"{img.stem}.csv", ["threshold", "precision", "recall", "f", "e"],
                       [[p.threshold, repr(p.precision), repr(p.recall), repr(p.f_beta), repr(p.e_value)]
                        for p in r.curve.points()])
    _write_csv(out / "records.csv", ["stem", *METRIC_NAMES, "flags"], rows)
    (out / "records.json").write_text(json.dumps(records_json, indent=1) + "\n", encoding="utf-8")
    if manifest.unmatched:
        (out / "unmatched.txt").write_text("\n".join(manifest.unmatched) + "\n", encoding="utf-8")
    if result.failures:
        _write_csv(out / "failures.csv", ["stem", "error"], result.failures)
        log.error("%d of %d images failed", len(result.failures), n)

    if result.scores is not None and (not result.partial or cfg.allow_partial):
        s = result.scores
        _write_csv(out / "scores.csv",
                   ["dataset", "model", "S", "F", "E", "M", "f_adaptive", "bce", "n_images", "flagged"],
                   [[result.name, result.model, repr(s.s_measure), repr(s.f_max), repr(s.e_max), repr(s.mae),
                     repr(s.f_adaptive), repr(s.bce), s.n_images, s.flagged]])
        (out / "curve.csv").write_text(curve_csv(result.curve), encoding="utf-8")
        print(f"{result.name}/{result.model}: S={s.s_measure:.4f} F={s.f_max:.4f} "
              f"E={s.e_max:.4f} M={s.mae:.4f} ({s.n_images} images)")
    elif result.partial:
        log.error("scores withheld because of failures; rerun with --allow-partial to publish them")
    return EXIT_PARTIAL if result.partial else EXIT_OK


# ---------------------------------------------------------------- rank

def cmd_rank(args, cfg: RunConfig) -> int:
    rows = read_scores(args.scores)
    if not rows:
        raise UsageError("no score rows found")
    lb = rank_models(rows)
    if lb.excluded and not cfg.allow_partial:
        log.error("models with missing scores: %s; rerun with --allow-partial to rank the rest",
                  ", ".join(lb.excluded))
        return EXIT_PARTIAL
    if cfg.out is None:
        from .report import leaderboard_markdown
        sys.stdout.write(leaderboard_markdown(lb))
    else:
        for p in emit_report(lb, None, cfg.formats or ("csv", "markdown", "json"), cfg.out):
            log.info("wrote %s", p)
    return EXIT_PARTIAL if lb.excluded else EXIT_OK


# ---------------------------------------------------------------- fuse

def cmd_fuse(args, cfg: RunConfig) -> int:
    rgb, rgbd, depth = (index_images(Path(d)) for d in (args.rgb, args.rgbd, args.depth))
    stems = sorted(rgb.keys() & rgbd.keys() & depth.keys())
    if not stems:
        raise UsageError("no image stems common to --rgb, --rgbd and --depth")
    missing = sorted((rgb.keys() | rgbd.keys() | depth.keys()) - set(stems))
    for s in missing:
        log.warning("stem %s missing from at least one input directory", s)
    gts = index_images(Path(args.gt)) if args.gt else {}
    sweep = _parse_sweep(args.sweep) if args.sweep is not None else ()

    out = cfg.out
    decisions, failures = [], []
    sweep_acc = {t: {"kept": 0, "mae": [], "s": []} for t in sweep}
    for stem in stems:
        try:
            a, b, c = load_map(rgb[stem]), load_map(rgbd[stem]), load_map(depth[stem])
            d = ddu_select(a, b, c, cfg.t)
            gt = load_mask(gts[stem]) if stem in gts else None
            if gt is not None and gt.shape != d.output.shape:
                raise MapError(f"ground truth {gt.shape} and prediction {d.output.shape} differ in size")
        except (MapError, ValueError, OSError) as exc:
            failures.append((stem, str(exc)))
            continue
        save_map(d.output, out / f"{stem}.png")
        decisions.append([stem, repr(d.distance), d.gate.value])
        for t in sweep:
            pick = ddu_select(a, b, c, t)
            acc = sweep_acc[t]
            acc["kept"] += pick.kept
            if gt is not None:
                acc["mae"].append(mae(pick.output, gt))
                acc["s"].append(s_measure(pick.output, gt))

    _write_csv(out / "decisions.csv", ["image", "delta", "gate"], decisions)
    if sweep:
        header = ["t", "kept", "discarded"] + (["mae", "s_measure"] if gts else [])
        rows = []
        for t in sweep:
            acc = sweep_acc[t]
            row = [repr(t), acc["kept"], len(decisions) - acc["kept"]]
            if gts:
                row += [repr(exact_mean(acc["mae"])) if acc["mae"] else "",
                        repr(exact_mean(acc["s"])) if acc["s"] else ""]
            rows.append(row)
        _write_csv(out / "sweep.csv", header, rows)
    if failures:
        _write_csv(out / "failures.csv", ["image", "error"], failures)
    kept = sum(1 for r in decisions if r[2] == "kept-depth")
    print(f"fused {len(decisions)} images at t={cfg.t}: {kept} kept depth, {len(decisions) - kept} discarded")
    return EXIT_PARTIAL if failures or missing else EXIT_OK


def _parse_sweep(text: str) -> tuple[float, ...]:
    if text == "":
        return CANDIDATE_TS
    try:
        ts = tuple(float(x) for x in text.split(","))
    except ValueError:
        raise UsageError(f"--sweep expects comma-separated numbers, got {text!r}") from None
    for t in ts:
        if not 0.0 <= t <= 1.0:
            raise UsageError(f"--sweep values must be in [0, 1], got {t}")
    return ts


# ---------------------------------------------------------------- stats

def cmd_stats(args, cfg: RunConfig) -> int:
    gts = index_images(Path(args.gt))
    if not gts:
        raise UsageError(f"no ground-truth images in {args.gt}")
    per_image, masks, failures, empty = [], [], [], []
    for stem in sorted(gts):
        try:
            m = load_mask(gts[stem])
        except MapError as exc:
            failures.append((stem, str(exc)))
            continue
        masks.append(m)
        try:
            st = mask_stats(m)
        except EmptyMaskError:
            empty.append(stem)
            continue
        per_image.append([stem, repr(st.r_o), repr(st.r_m), repr(st.size), st.components])
    summary = dataset_summary(masks).to_dict()
    summary["empty_masks"] = empty
    text = json.dumps(summary, indent=2) + "\n"

    if cfg.out is None:
        sys.stdout.write(text)
    else:
        out = cfg.out
        (out / "summary.json").write_text(text, encoding="utf-8")
        _write_csv(out / "per_image.csv", ["stem", "r_o", "r_m", "size", "components"], per_image)
        cols = {k: distribution([float(r[i]) for r in per_image], args.bins)
                for i, k in ((1, "r_o"), (2, "r_m"), (3, "size"))}
        _write_csv(out / "distributions.csv", ["bin_lo", "bin_hi", "r_o", "r_m", "size"],
                   [[repr(i / args.bins), repr((i + 1) / args.bins),
                     *(repr(float(cols[k][i])) for k in ("r_o", "r_m", "size"))]
                    for i in range(args.bins)])
        if args.depth:
            rows = []
            for stem, path in sorted(index_images(Path(args.depth)).items()):
                try:
                    h = depth_histogram(load_map(path), args.smooth_window, args.prominence)
                except MapError as exc:
                    failures.append((stem, str(exc)))
                    continue
                rows.append([stem, len(h.peaks), ";".join(str(p.index) for p in h.peaks),
                             int(h.low_confidence), depth_quality_label(h)])
            _write_csv(out / "depth_quality.csv", ["stem", "peaks", "peak_bins", "low_confidence", "label"], rows)
        print(f"{summary['count']} masks: size mean {summary['size']['mean']:.4f} "
              f"[{summary['size']['min']:.4f}, {summary['size']['max']:.4f}]")
    if failures:
        for stem, err in failures:
            log.error("failed %s: %s", stem, err)
        return EXIT_PARTIAL
    return EXIT_OK


# ---------------------------------------------------------------- bounds

def _read_records(path) -> dict[str, dict]:
    with open(path, newline="") as fh:
        return {row["stem"]: row for row in csv.DictReader(fh)}


def cmd_bounds(args, cfg: RunConfig) -> int:
    a, b = _read_records(args.a), _read_records(args.b)
    if args.metric not in METRIC_NAMES:
        raise UsageError(f"--metric must be one of {', '.join(METRIC_NAMES)}")
    stems = sorted(a.keys() & b.keys())
    if not stems:
        raise UsageError("the two record files share no image stems")
    pairs = [(float(a[s][args.metric]), float(b[s][args.metric])) for s in stems]
    bounds = bound_analysis(pairs)
    lower_better = args.metric in ("mae", "bce")
    doc = {
        "metric": args.metric,
        "n": bounds.n,
        "mean_a": exact_mean([p[0] for p in pairs]),
        "mean_b": exact_mean([p[1] for p in pairs]),
        "lower": bounds.lower,
        "upper": bounds.upper,
        "best": bounds.lower if lower_better else bounds.upper,
        "worst": bounds.upper if lower_better else bounds.lower,
    }
    text = json.dumps(doc, indent=2) + "\n"
    if cfg.out is not None:
        (cfg.out / "bounds.json").write_text(text, encoding="utf-8")
    sys.stdout.write(text)
    unmatched = (a.keys() | b.keys()) - set(stems)
    return EXIT_PARTIAL if unmatched else EXIT_OK


# ---------------------------------------------------------------- plot

def cmd_plot(args, cfg: RunConfig) -> int:
    root = Path(args.curves)
    files = sorted(root.rglob("curve.csv")) + sorted(root.rglob("*.curve.csv"))
    if not files:
        raise UsageError(f"no curve.csv files under {root}")
    curves = {}
    for f in files:
        label = f.stem[: -len(".curve")] if f.name.endswith(".curve.csv") else str(f.parent.relative_to(root))
        curves[label if label != "." else root.name] = read_curve_csv(f)
    target = Path(args.svg)
    if target.suffix.lower() == ".svg":
        target.parent.mkdir(parents=True, exist_ok=True)
        pr_path, f_path = target, target.with_name(target.stem + "_f.svg")
    else:
        target.mkdir(parents=True, exist_ok=True)
        pr_path, f_path = target / "pr_curves.svg", target / "f_curves.svg"
    pr_path.write_text(curves_svg(curves, "pr", "PR curve"), encoding="utf-8")
    f_path.write_text(curves_svg(curves, "f", "F-measure by threshold"), encoding="utf-8")
    print(f"wrote {pr_path} and {f_path} ({len(curves)} curves)")
    return EXIT_OK


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="sodbench", description="RGB-D salient object detection benchmark engine.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", metavar="COMMAND")

    e = sub.add_parser("eval", help="score one model's predictions on one dataset")
    e.add_argument("--root", help="benchmark root holding <dataset>/{GT,depth,pred/<model>}")
    e.add_argument("--dataset")
    e.add_argument("--model")
    e.add_argument("--manifest", help="JSON manifest with explicit (pred, gt, depth) entries")
    e.add_argument("--beta2", type=_positive_float, default=DEFAULT_BETA2)
    e.add_argument("--jobs", type=_positive_int, default=None, help="worker processes (default: $SODBENCH_JOBS or 1)")
    e.add_argument("--out", required=True)
    e.add_argument("--curves", action="store_true", help="also write a 256-row curve CSV per image")
    e.add_argument("--allow-partial", action="store_true", help="publish dataset scores despite failed images")

    r = sub.add_parser("rank", help="build a leaderboard from score CSVs")
    r.add_argument("--scores", nargs="+", required=True)
    r.add_argument("--out", help="report directory (default: Markdown to stdout)")
    r.add_argument("--format", default="csv,markdown,json", help="comma-separated subset of csv,markdown,json")
    r.add_argument("--allow-partial", action="store_true", help="rank models despite missing cells")

    f = sub.add_parser("fuse", help="apply the depth depurator gate to three prediction folders")
    f.add_argument("--rgb", required=True)
    f.add_argument("--rgbd", required=True)
    f.add_argument("--depth", required=True)
    f.add_argument("--t", type=_unit_float, default=DEFAULT_T, help="depth-agreement threshold (default 0.15)")
    f.add_argument("--out", default="fused", help="output folder for fused maps (default: ./fused)")
    f.add_argument("--sweep", nargs="?", const="", default=None,
                   help="also tabulate gate decisions for these t values (default candidates if no value)")
    f.add_argument("--gt", help="GT folder; adds mean MAE and S-measure per swept t")

    s = sub.add_parser("stats", help="center-bias and object-size statistics of GT masks")
    s.add_argument("--gt", required=True)
    s.add_argument("--out")
    s.add_argument("--bins", type=_positive_int, default=20)
    s.add_argument("--depth", help="depth-map folder for the histogram quality diagnostic")
    s.add_argument("--smooth-window", type=int, default=DEFAULT_SMOOTH_WINDOW)
    s.add_argument("--prominence", type=_unit_float, default=DEFAULT_PROMINENCE)

    b = sub.add_parser("bounds", help="lower/upper bounds of a per-image best/worst path choice")
    b.add_argument("--a", required=True, help="records.csv of the first path")
    b.add_argument("--b", required=True, help="records.csv of the second path")
    b.add_argument("--metric", default="s_measure")
    b.add_argument("--out")

    pl = sub.add_parser("plot", help="render PR and F-threshold SVG plots from curve CSVs")
    pl.add_argument("--curves", required=True)
    pl.add_argument("--svg", required=True)
    return p


_COMMANDS = {"eval": cmd_eval, "rank": cmd_rank, "fuse": cmd_fuse,
             "stats": cmd_stats, "bounds": cmd_bounds, "plot": cmd_plot}


def _config(args) -> RunConfig:
    cfg = RunConfig(subcommand=args.command)
    if hasattr(args, "t"):
        cfg.t = args.t
    if hasattr(args, "beta2"):
        cfg.beta2 = args.beta2
    if hasattr(args, "jobs"):
        cfg.jobs = args.jobs if args.jobs is not None else _jobs_default()
    if getattr(args, "out", None):
        cfg.out = Path(args.out)
    if hasattr(args, "format"):
        cfg.formats = tuple(x.strip() for x in args.format.split(",") if x.strip())
        bad = [x for x in cfg.formats if x not in FORMATS or x == "svg"]
        if bad:
            raise UsageError(f"unsupported --format value(s): {', '.join(bad)}")
    cfg.allow_partial = getattr(args, "allow_partial", False)
    if args.command == "stats":
        if args.bins < 1:
            raise UsageError("--bins must be >= 1")
        if args.smooth_window < 1 or args.smooth_window % 2 == 0:
            raise UsageError("--smooth-window must be a positive odd integer")
        if not 0.0 <= args.prominence <= 1.0:
            raise UsageError("--prominence must be in [0, 1]")
    cfg.validate()
    return cfg


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    if args.command is None:
        parser.print_help(sys.stderr)
        return EXIT_FATAL
    try:
        cfg = _config(args)
        return _COMMANDS[args.command](args, cfg)
    except UsageError as exc:
        print(f"sodbench {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_FATAL
    except (ManifestError, MapError, ValueError, OSError) as exc:
        print(f"sodbench {args.command}: {exc}", file=sys.stderr)
        return EXIT_FATAL


if __name__ == "__main__":
    sys.exit(main())
