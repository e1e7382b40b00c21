"""``pcasvm`` command line: ingest, align, pca-report, biplot, backtest, render.

Exit status is 0 on success, 1 on data or validation errors and 2 on
usage errors. Logs go to stderr as ``key=value`` lines.
"""

from __future__ import annotations

import argparse
import io
import json
import logging
import sys
from pathlib import Path

from .backtest import BacktestReport, run_backtest, summarize
from .config import config_from_dict, load_panel, read_config
from .errors import PcaSvmError
from .pca import biplot_csv, biplot_loadings, contribution, fit_panel_pca, scree_csv, select_components
from .timeseries import align_panel, atomic_write, read_price_csv, write_price_csv

log = logging.getLogger("pcasvm")


def _setup_logging(verbosity: int) -> None:
    level = logging.WARNING - 10 * min(verbosity, 2)
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("level=%(levelname)s logger=%(name)s %(message)s"))
    root = logging.getLogger("pcasvm")
    root.handlers[:] = [handler]
    root.setLevel(level)
    root.propagate = False


def _analysis_instruments(doc: dict, panel) -> list:
    if doc.get("constituents"):
        return list(doc["constituents"])
    factors = {v for v in (doc.get("factors") or {}).values() if v}
    return [i for i in panel.instruments if i not in factors]


def cmd_ingest(args) -> int:
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for path in args.inputs:
        series = read_price_csv(path, None, args.date_format)
        buf = io.StringIO(newline="")
        write_price_csv(series, buf)
        target = out_dir / f"{series.instrument_id}.csv"
        atomic_write(target, buf.getvalue())
        log.info("event=ingest instrument=%s rows=%d out=%s", series.instrument_id, len(series), target)
    return 0


def cmd_align(args) -> int:
    if args.config:
        doc, base = read_config(args.config, args.override)
        if args.reference or args.start or args.end:
            panel_spec = doc.setdefault("panel", {})
            for key in ("reference", "start", "end"):
                if getattr(args, key):
                    panel_spec[key] = getattr(args, key)
        panel = load_panel(doc, base)
    else:
        if not args.inputs or not args.reference:
            return _usage_error(args, "align needs --config or input files plus --reference")
        series = [read_price_csv(p, None, args.date_format) for p in args.inputs]
        panel = align_panel(series, args.reference, args.start, args.end)
    atomic_write(args.out, panel.to_csv())
    log.info("event=align rows=%d instruments=%d out=%s", len(panel), len(panel.instruments), args.out)
    return 0


def _whole_period_model(args):
    doc, base = read_config(args.config, args.override)
    panel = load_panel(doc, base)
    ids = _analysis_instruments(doc, panel)
    lag = int(doc["lags"]["constituent"])
    correlation = args.correlation or bool(doc["pca"]["correlation"])
    return doc, fit_panel_pca(panel, ids, lag=lag, correlation=correlation), ids


def cmd_pca_report(args) -> int:
    doc, model, ids = _whole_period_model(args)
    atomic_write(args.out, scree_csv(model))
    report = contribution(model)
    m = select_components(report, float(doc["pca"]["threshold"]))
    log.info("event=pca-report components=%d first_rate=%.4f selected_m=%d out=%s",
             len(ids), report.rates[0], m, args.out)
    return 0


def cmd_biplot(args) -> int:
    _, model, ids = _whole_period_model(args)
    atomic_write(args.out, biplot_csv(biplot_loadings(model, scale=not args.no_scale), ids))
    log.info("event=biplot instruments=%d out=%s", len(ids), args.out)
    return 0


def cmd_backtest(args) -> int:
    doc, base = read_config(args.config, args.override)
    config = config_from_dict(doc)
    panel = load_panel(doc, base)
    report = run_backtest(config, panel, jobs=args.jobs)
    atomic_write(args.out, report.to_json())
    tables = summarize(report)
    if args.csv:
        atomic_write(args.csv, tables.csv)
    if args.text:
        atomic_write(args.text, tables.text)
    log.info("event=backtest iterations=%d out=%s", len(report.windows), args.out)
    return 0


def cmd_render(args) -> int:
    report = BacktestReport.from_json(Path(args.report).read_text(encoding="utf-8"))
    tables = summarize(report)
    body = tables.csv if args.format == "csv" else tables.text
    if args.out:
        atomic_write(args.out, body)
    else:
        sys.stdout.write(body)
    return 0


def _usage_error(args, message) -> int:
    args.parser.print_usage(sys.stderr)
    print(f"{args.parser.prog}: error: {message}", file=sys.stderr)
    return 2


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-v", "--verbose", action="count", default=0, help="repeat for more detail")
    with_config = argparse.ArgumentParser(add_help=False)
    with_config.add_argument("--override", action="append", default=[], metavar="KEY=VALUE",
                             help="dotted config override, e.g. svm.C=100 (repeatable, last wins)")

    parser = argparse.ArgumentParser(prog="pcasvm", description="PCA + kernel-SVM direction forecasting toolkit")
    parser.add_argument("-v", "--verbose", dest="verbose_global", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", parents=[common], help="validate price CSVs and rewrite them with ISO dates")
    p.add_argument("inputs", nargs="+")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--date-format", help="strptime pattern for the input date column")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("align", parents=[common, with_config], help="align instruments on the reference calendar")
    p.add_argument("inputs", nargs="*")
    p.add_argument("--config")
    p.add_argument("--reference")
    p.add_argument("--start")
    p.add_argument("--end")
    p.add_argument("--date-format")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_align)

    for name, func, help_text in (
        ("pca-report", cmd_pca_report, "whole-period scree table (component,eigenvalue,rate,cumulative)"),
        ("biplot", cmd_biplot, "whole-period PC1/PC2 loadings (instrument,pc1,pc2)"),
    ):
        p = sub.add_parser(name, parents=[common, with_config], help=help_text)
        p.add_argument("--config", required=True)
        p.add_argument("--out", required=True)
        p.add_argument("--correlation", action="store_true", help="use the correlation matrix")
        if name == "biplot":
            p.add_argument("--no-scale", action="store_true", help="do not scale loadings by sqrt(eigenvalue)")
        p.set_defaults(func=func)

    p = sub.add_parser("backtest", parents=[common, with_config], help="rolling-window backtest of all models")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True, help="report JSON")
    p.add_argument("--csv", help="also write the hit-ratio table as CSV")
    p.add_argument("--text", help="also write the hit-ratio table as aligned text")
    p.add_argument("--jobs", type=int, default=1, help="worker processes across windows")
    p.set_defaults(func=cmd_backtest)

    p = sub.add_parser("render", parents=[common], help="render a report JSON as text or CSV")
    p.add_argument("report")
    p.add_argument("--format", choices=("text", "csv"), default="text")
    p.add_argument("--out")
    p.set_defaults(func=cmd_render)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    args.parser = parser
    _setup_logging(args.verbose + args.verbose_global)
    try:
        return args.func(args)
    except (PcaSvmError, OSError, json.JSONDecodeError) as exc:
        log.error("event=failed command=%s error=%s", args.command, json.dumps(str(exc)))
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
