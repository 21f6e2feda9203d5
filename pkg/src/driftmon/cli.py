"""Command-line entry point: ``driftmon baseline | monitor | report``.

Exit codes: 0 in control, 2 usage or input error, 3 trending, 4 breach.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from collections.abc import Sequence
from contextlib import contextmanager

from . import __version__
from .config import load_config
from .errors import DriftError, EmptyDataset, EmptyInput, ParseFailure, SchemaMismatch
from .monitoring import ChartStatus
from .reference import BaselineConfig, FeatureSchema, build_baseline, is_missing, load_baseline, save_baseline
from .runner import EXIT_USAGE, StreamMonitor, dumps_report, exit_code_for, summarize_reports


def _split(arg: str | None) -> list[str]:
    return [s.strip() for s in arg.split(",") if s.strip()] if arg else []


@contextmanager
def _open_in(path: str):
    if path == "-":
        yield sys.stdin
    else:
        with open(path, encoding="utf-8", newline="") as fh:
            yield fh


@contextmanager
def _open_out(path: str | None):
    if path in (None, "-"):
        yield sys.stdout
    else:
        with open(path, "w", encoding="utf-8") as fh:
            yield fh


def read_csv(path: str) -> tuple[list[str], dict[str, list[str]]]:
    """Read a CSV with a header row into column lists of raw strings."""
    try:
        with _open_in(path) as fh:
            reader = csv.reader(fh)
            try:
                header = next(reader)
            except StopIteration:
                raise EmptyDataset(f"{path} is empty") from None
            except csv.Error as exc:
                raise ParseFailure(str(exc), reader.line_num) from None
            header = [h.strip() for h in header]
            if len(set(header)) != len(header):
                raise ParseFailure("duplicate column names in header", 1)
            columns: dict[str, list[str]] = {h: [] for h in header}
            try:
                for row in reader:
                    if not row:
                        continue
                    if len(row) != len(header):
                        raise ParseFailure(f"expected {len(header)} fields, found {len(row)}", reader.line_num)
                    for name, cell in zip(header, row):
                        columns[name].append(cell)
            except csv.Error as exc:
                raise ParseFailure(str(exc), reader.line_num) from None
    except OSError as exc:
        raise DriftError(f"cannot read {path}: {exc}") from exc
    if not header or not columns[header[0]]:
        raise EmptyDataset(f"{path} has no data rows")
    return header, columns


def _looks_numeric(values: Sequence[str]) -> bool:
    seen = False
    for v in values:
        if is_missing(v):
            continue
        try:
            float(v)
        except ValueError:
            return False
        seen = True
    return seen


def infer_schema(header: Sequence[str], columns: dict[str, list[str]], args: argparse.Namespace) -> list[FeatureSchema]:
    roles = {}
    for flag, role in (("target", "target"), ("prediction", "prediction"), ("probability", "probability")):
        name = getattr(args, flag)
        if name:
            roles[name] = role
    for name in _split(args.ignore):
        roles[name] = "ignore"
    declared = set(roles) | set(_split(args.categorical)) | set(_split(args.numeric))
    missing = sorted(declared - set(header))
    if missing:
        raise SchemaMismatch(f"columns not found in {args.input}: {missing}")

    categorical = set(_split(args.categorical))
    numeric = set(_split(args.numeric))
    schema = []
    for name in header:
        role = roles.get(name, "predictor")
        if role in ("target", "prediction"):
            kind = "numeric" if args.regression else "categorical"
        elif role == "probability" or name in numeric:
            kind = "numeric"
        elif name in categorical:
            kind = "categorical"
        else:
            kind = "numeric" if _looks_numeric(columns[name]) else "categorical"
        schema.append(FeatureSchema(name, kind, role))
    return schema


def cmd_baseline(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    header, columns = read_csv(args.input)
    schema = infer_schema(header, columns, args)
    bconf = BaselineConfig(
        cd_bins=args.bins or cfg.cd_bins,
        si_bins=args.si_bins or cfg.si_bins,
        quantile_points=cfg.quantile_points,
        max_categories=args.max_categories,
        positive_label=args.positive_label,
    )
    snapshot = build_baseline(columns, schema, bconf, created_at=args.created_at)
    save_baseline(snapshot, args.out)
    summary = {
        "baseline": args.out,
        "rows": snapshot.row_count,
        "features": {
            name: {
                "kind": fb.kind,
                "role": fb.role,
                "bins": fb.cd_hist.bin_count if fb.cd_hist is not None else 0,
                "degenerate": fb.degenerate,
            }
            for name, fb in snapshot.features.items()
        },
        "degenerate": snapshot.degenerate_features,
        "concept": snapshot.has_concept,
    }
    print(json.dumps(summary, sort_keys=True, indent=2))
    return 0


def cmd_monitor(args: argparse.Namespace) -> int:
    snapshot = load_baseline(args.baseline)
    cfg = load_config(args.config, window_size=args.window, strict=True if args.strict else None)
    monitor = StreamMonitor(snapshot, cfg)
    with _open_in(args.stream) as src, _open_out(args.output) as out:
        for report in monitor.run(src):
            out.write(dumps_report(report) + "\n")
            out.flush()
    return exit_code_for(monitor.worst)


def _read_reports(path: str) -> list[dict]:
    reports = []
    with _open_in(path) as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                rep = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseFailure(exc.msg, lineno) from None
            if not isinstance(rep, dict):
                raise ParseFailure("report is not a JSON object", lineno)
            reports.append(rep)
    return reports


def cmd_report(args: argparse.Namespace) -> int:
    try:
        reports = _read_reports(args.reports)
    except OSError as exc:
        raise DriftError(f"cannot read {args.reports}: {exc}") from exc
    if not reports:
        raise EmptyInput(f"{args.reports} holds no reports")
    summary = summarize_reports(reports)
    with _open_out(args.output) as out:
        out.write(json.dumps(summary, sort_keys=True, indent=2) + "\n")
    return exit_code_for(ChartStatus.from_label(summary["verdict"]))


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="driftmon", description="Data and concept drift monitoring against a frozen training baseline.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    b = sub.add_parser("baseline", help="build a baseline snapshot from a training CSV")
    b.add_argument("input", help="training CSV with a header row ('-' for stdin)")
    b.add_argument("--out", "-o", required=True, help="baseline file to write")
    b.add_argument("--config", help="JSON run config")
    b.add_argument("--target", help="ground-truth column")
    b.add_argument("--prediction", help="model prediction column")
    b.add_argument("--probability", help="predicted probability of the positive class")
    b.add_argument("--categorical", help="comma-separated categorical predictors")
    b.add_argument("--numeric", help="comma-separated columns forced numeric")
    b.add_argument("--ignore", help="comma-separated columns to skip")
    b.add_argument("--regression", action="store_true", help="target and prediction are numeric")
    b.add_argument("--positive-label", help="positive class for confusion rates and Brier")
    b.add_argument("--bins", type=int, help="covariate drift bin count (default 20)")
    b.add_argument("--si-bins", type=int, help="stability index bin count (default 10)")
    b.add_argument("--max-categories", type=int, help="keep only the most frequent categories")
    b.add_argument("--created-at", help="timestamp recorded in the snapshot (default: now, UTC)")
    b.set_defaults(func=cmd_baseline)

    m = sub.add_parser("monitor", help="stream live NDJSON records against a baseline")
    m.add_argument("stream", nargs="?", default="-", help="NDJSON record file ('-' or omitted for stdin)")
    m.add_argument("--baseline", required=True)
    m.add_argument("--config", help="JSON run config")
    m.add_argument("--window", type=int, help="records per evaluation window (default 500)")
    m.add_argument("--format", choices=["ndjson"], default="ndjson")
    m.add_argument("--strict", action="store_true", help="treat a malformed record as fatal")
    m.add_argument("--output", "-o", help="write reports here instead of stdout")
    m.set_defaults(func=cmd_monitor)

    r = sub.add_parser("report", help="summarize a stream of window reports")
    r.add_argument("reports", nargs="?", default="-", help="NDJSON report file ('-' for stdin)")
    r.add_argument("--output", "-o")
    r.set_defaults(func=cmd_report)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else 0
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except DriftError as exc:
        print(f"driftmon: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"driftmon: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
