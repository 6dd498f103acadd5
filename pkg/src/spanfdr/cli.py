"""Command-line entry point: ``spanfdr {validate,calibrate,sweep,match,simulate}``.

Exit codes: 0 success, 1 validation or configuration error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional, Sequence

from . import calmetrics, conformal, matcher, plotting, report, synth
from .records import (
    DEFAULT_PASS_SCORE,
    Dataset,
    DatasetError,
    group_by,
    load_dataset,
    resolve_labels,
    serialize_record,
    write_dataset,
)

logger = logging.getLogger("spanfdr")

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2

DEFAULT_SWEEP_ALPHAS = (0.01, 0.03, 0.05, 0.10, 0.15, 0.20, 0.25)
FORMATS = ("markdown", "csv")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    inputs: tuple[Path, ...]
    out: Path
    alphas: tuple[float, ...]
    seed: int = 0
    cal_fraction: float = 0.5
    grouping: str = "global"
    num_bins: int = calmetrics.DEFAULT_BINS
    formats: tuple[str, ...] = FORMATS
    stratify: bool = False
    jobs: int = 1
    figures: bool = True
    pass_score: int = DEFAULT_PASS_SCORE

    def __post_init__(self):
        for a in self.alphas:
            if not 0.0 < a < 1.0:
                raise ConfigError(f"alpha must lie in (0, 1), got {a}")
        if not self.alphas:
            raise ConfigError("at least one alpha is required")
        if not 0.0 < self.cal_fraction < 1.0:
            raise ConfigError(f"cal-fraction must lie in (0, 1), got {self.cal_fraction}")
        if self.grouping not in ("global", "per-category", "both"):
            raise ConfigError(f"unknown grouping {self.grouping!r}")
        if self.num_bins < 1:
            raise ConfigError("bins must be >= 1")
        bad = [f for f in self.formats if f not in FORMATS]
        if bad or not self.formats:
            raise ConfigError(f"unknown format(s) {bad}; choose from {FORMATS}")
        if self.jobs < 1:
            raise ConfigError("jobs must be >= 1")

    @property
    def groupings(self) -> tuple[str, ...]:
        return ("global", "per-category") if self.grouping == "both" else (self.grouping,)


# -- helpers -----------------------------------------------------------------


def _formats(values: Optional[Sequence[str]]) -> tuple[str, ...]:
    if not values:
        return FORMATS
    out = []
    for v in values:
        out += [x.strip() for x in v.split(",") if x.strip()]
    return tuple(dict.fromkeys(out))


def _run_config(args, default_alphas: Sequence[float]) -> RunConfig:
    return RunConfig(
        inputs=tuple(Path(p) for p in args.input),
        out=Path(args.out),
        alphas=tuple(args.alpha) if args.alpha else tuple(default_alphas),
        seed=args.seed,
        cal_fraction=args.cal_fraction,
        grouping=args.grouping,
        num_bins=args.bins,
        formats=_formats(args.format),
        stratify=args.stratify,
        jobs=args.jobs,
        figures=not args.no_figures,
        pass_score=args.pass_score,
    )


def _load_labeled(cfg: RunConfig) -> Dataset:
    records = []
    for path in cfg.inputs:
        records += load_dataset(path).records
    dataset, dropped = resolve_labels(Dataset(tuple(records), ",".join(map(str, cfg.inputs))), cfg.pass_score)
    if dropped:
        print(f"dropped {dropped} record(s) without a verification label", file=sys.stderr)
    if len(dataset) == 0:
        raise ConfigError("no labeled records to calibrate on")
    return dataset


def _write_table(out: Path, stem: str, rows, columns, formats, title: str) -> None:
    if "csv" in formats:
        (out / f"{stem}.csv").write_text(report.to_csv(rows, columns), encoding="utf-8")
    if "markdown" in formats:
        (out / f"{stem}.md").write_text(report.to_markdown(rows, columns, title), encoding="utf-8")


# -- subcommands -------------------------------------------------------------


def cmd_validate(args) -> int:
    try:
        dataset = load_dataset(args.input)
    except DatasetError as exc:
        for err in exc.errors:
            print(f"error: {err}")
        for rid in exc.duplicates:
            print(f"error: duplicate record_id {rid!r}")
        print(f"{len(exc.errors)} invalid line(s), {len(exc.duplicates)} duplicate id(s)")
        return EXIT_CONFIG
    if len(dataset) == 0:
        print(f"warning: {args.input} contains no records")
    labeled = sum(1 for r in dataset if r.resolved_label() is not None)
    categories = sorted({(r.domain, r.category) for r in dataset})
    print(f"{len(dataset)} record(s), {labeled} labeled, {len(categories)} domain/category group(s)")
    return EXIT_OK


def run_calibrate(cfg: RunConfig) -> dict[str, dict]:
    dataset = _load_labeled(cfg)
    cfg.out.mkdir(parents=True, exist_ok=True)
    alpha_results = []
    for grouping in cfg.groupings:
        for alpha in cfg.alphas:
            res = conformal.calibrate(
                dataset, alpha, grouping, cfg.seed, cfg.cal_fraction, cfg.num_bins, cfg.stratify, cfg.jobs
            )
            alpha_results += list(res.values())
    rows = report.calibration_rows(alpha_results)
    _write_table(cfg.out, "calibration", rows, report.CALIBRATION_COLUMNS, cfg.formats,
                 "FDR-controlled calibration")

    # Reliability curves are computed on every labeled record of each group.
    curves = {}
    for grouping in cfg.groupings:
        for key, group in group_by(dataset, conformal.GROUPINGS[grouping]).items():
            sc = conformal.Scored.from_dataset(group)
            curves[conformal.group_name(key)] = calmetrics.reliability_curve(sc.conf, sc.labels, cfg.num_bins)
    for name in sorted(curves):
        calmetrics.write_curve_csv(curves[name], cfg.out / f"reliability_{report.slug(name)}.csv")
    if cfg.figures:
        plotting.reliability_diagram(dict(sorted(curves.items())), cfg.out / "reliability.png")
    return {"rows": rows, "curves": curves}


def run_sweep(cfg: RunConfig) -> list[dict]:
    dataset = _load_labeled(cfg)
    cfg.out.mkdir(parents=True, exist_ok=True)
    sweeps = {}
    for grouping in cfg.groupings:
        sweeps.update(
            conformal.sweep(dataset, cfg.alphas, grouping, cfg.seed, cfg.cal_fraction, cfg.stratify, cfg.jobs)
        )
    rows = report.sweep_rows(sweeps)
    _write_table(cfg.out, "sweep", rows, report.SWEEP_COLUMNS, cfg.formats, "FDR sweep across alpha")
    if cfg.figures:
        plotting.sweep_plot(sweeps, cfg.out / "sweep.png")
    return rows


def cmd_calibrate(args) -> int:
    cfg = _run_config(args, (0.05,))
    rows = run_calibrate(cfg)["rows"]
    print(report.to_markdown(rows, report.CALIBRATION_COLUMNS))
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = _run_config(args, DEFAULT_SWEEP_ALPHAS)
    rows = run_sweep(cfg)
    print(report.to_markdown(rows, report.SWEEP_COLUMNS))
    return EXIT_OK


def cmd_match(args) -> int:
    gold_path = Path(args.gold)
    if not gold_path.is_file():
        raise ConfigError(f"gold file not found: {gold_path}")
    pred_path = Path(args.input[0]) if args.input else None
    if pred_path is None:
        raise ConfigError("--input (predictions) is required")
    formats = _formats(args.format)
    dataset = load_dataset(pred_path)
    gold_entities, gold_relations = matcher.load_annotations(gold_path)
    pred_relations = []
    if args.pred_relations:
        _, pred_relations = matcher.load_annotations(args.pred_relations)

    labeled, entity_prf = matcher.label_dataset(dataset, gold_entities)
    prfs = {"entity": entity_prf}
    if gold_relations or pred_relations:
        prfs["relation"] = matcher.match_relations(pred_relations, gold_relations)
    by_label = matcher.per_label_prf(labeled.records, [r.label for r in labeled], gold_entities)
    prfs.update({f"entity:{k}": v for k, v in by_label.items()})

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_dataset(labeled, out / "labeled.jsonl")
    rows = report.prf_rows(prfs)
    _write_table(out, "match", rows, report.PRF_COLUMNS, formats, "Exact-match evaluation")
    print(report.to_markdown(rows, report.PRF_COLUMNS))
    return EXIT_OK


def cmd_simulate(args) -> int:
    if args.config:
        cfg = synth.RegimeConfig.from_file(args.config)
    else:
        cfg = synth.preset(args.preset)
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.n is not None:
        overrides["n"] = args.n
    cfg = replace(cfg, **overrides)
    dataset = synth.generate(cfg)
    if args.out == "-":
        for rec in dataset:
            sys.stdout.write(serialize_record(rec) + "\n")
    else:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        write_dataset(dataset, args.out)
    if cfg.n == 0:
        print("warning: generated an empty dataset", file=sys.stderr)
    return EXIT_OK


# -- argument parsing --------------------------------------------------------


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--input", action="append", required=True, help="record file, - for stdin (repeatable)")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--cal-fraction", type=float, default=0.5)
    p.add_argument("--alpha", type=float, action="append", help="target FDR (repeatable)")
    p.add_argument("--grouping", choices=("global", "per-category", "both"), default="global")
    p.add_argument("--bins", type=int, default=calmetrics.DEFAULT_BINS)
    p.add_argument("--format", action="append", help="markdown, csv or both (comma-separated)")
    p.add_argument("--stratify", action="store_true", help="split per domain/category")
    p.add_argument("--jobs", type=int, default=1, help="worker threads for per-group fitting")
    p.add_argument("--no-figures", action="store_true")
    p.add_argument("--pass-score", type=int, default=DEFAULT_PASS_SCORE,
                   help="minimum fact_score counted as correct")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="spanfdr", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a record file")
    p.add_argument("--input", required=True)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("calibrate", help="fit thresholds and report calibration metrics")
    _add_run_flags(p)
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("sweep", help="fit thresholds across a grid of alphas")
    _add_run_flags(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("match", help="label predictions by exact match against gold annotations")
    p.add_argument("--input", action="append", required=True, help="predicted records")
    p.add_argument("--gold", required=True, help="gold annotation file")
    p.add_argument("--pred-relations", help="predicted relations in the gold annotation format")
    p.add_argument("--out", required=True)
    p.add_argument("--format", action="append")
    p.set_defaults(func=cmd_match)

    p = sub.add_parser("simulate", help="write a synthetic record file")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--preset", choices=sorted(synth.PRESETS))
    src.add_argument("--config", help="JSON regime config")
    p.add_argument("--seed", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--out", required=True, help="output record file, or - for stdout")
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        # ConfigError, DatasetError and record validation all derive from ValueError.
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
