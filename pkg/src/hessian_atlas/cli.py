"""Command line interface.

Two subcommands: ``analyze`` runs one polynomial and optionally writes the
JSON report and a figure; ``corpus`` runs a directory of polynomial files
and aggregates audit pass rates into a JSON summary and a CSV table.

Exit codes: 0 ok, 2 parse error, 3 non-generic or failed input, 4 audit
failure under --strict, 5 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

from .parsing import ParseError, parse_polynomial
from .plots import emit_svg
from .report import (
    SCHEMA_VERSION,
    AnalysisOptions,
    analyze,
    emit_json,
    _format_json,
)

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_NON_GENERIC = 3
EXIT_AUDIT = 4
EXIT_IO = 5


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--grid", type=int, default=512, help="seed/label grid resolution")
    parser.add_argument("--window", type=float, default=8.0, help="affine seed window half-size")
    parser.add_argument("--tol", type=float, default=1e-9, help="curve residual tolerance")
    parser.add_argument("--seed", type=int, default=42, help="seed for jittered sampling")
    parser.add_argument(
        "--strict", action="store_true", help="audit failures produce a nonzero exit code"
    )


def _options(args) -> AnalysisOptions:
    return AnalysisOptions(
        grid=args.grid,
        window=args.window,
        tol=args.tol,
        seed=args.seed,
        strict=args.strict,
    )


def _print_summary(report) -> None:
    print(f"degree {report.degree}  status {report.status}")
    if report.top_form:
        print(
            f"top form: k={report.top_form['k']}"
            f"  class={report.top_form['classification']}"
            f"  simple={report.top_form['all_real_factors_simple']}"
        )
    if report.curve_summary:
        print(
            f"curve: {report.curve_summary['oval_count']} oval(s), "
            f"compact={report.curve_summary['compact_in_affine_chart']}, "
            f"transverse_at_infinity={report.transverse_at_infinity}"
        )
    if report.topology_summary:
        t = report.topology_summary
        print(
            f"topology: P={t['P']} N={t['N']} chi(B+)={t['chi_b_plus']} "
            f"chi(B-)={t['chi_b_minus']}  H<=0 is {t['h_le0']['region']} "
            f"(chi={t['h_le0']['chi']}, orientable={t['h_le0']['orientable']})"
        )
    print(f"special parabolic points: P-={report.p_minus} P+={report.p_plus}")
    for g in report.godron_summary:
        print(
            f"  {g['folded_type']:<6} index {g['index']:+d} at "
            f"({g['coords'][0]:.6f}, {g['coords'][1]:.6f}) [{g['chart']}-chart]"
        )
    for p in report.infinity_summary:
        idx = "n/a" if p["index"] is None else f"{p['index']:+.1f}"
        print(
            f"infinity singular point at ({p['direction'][0]:.6f}, "
            f"{p['direction'][1]:.6f}): index {idx}"
        )
    for a in report.audits:
        print(f"audit {a.name:<32} {a.status}")
    if report.failure:
        print(f"failure: {report.failure['stage']}: {report.failure['error']}")


def _cmd_analyze(args) -> int:
    try:
        poly = parse_polynomial(args.poly)
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE

    report = analyze(poly, _options(args), expression=args.poly)
    _print_summary(report)

    try:
        if args.json:
            emit_json(report, args.json)
        if args.svg:
            emit_svg(report, report.curve_set, report.godrons, args.svg)
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO

    if report.status in ("failed", "non_generic"):
        return EXIT_NON_GENERIC
    if args.strict and any(a.status == "fail" for a in report.audits):
        return EXIT_AUDIT
    return EXIT_OK


def read_corpus_file(path: Path) -> str:
    """One polynomial expression per file; '#' starts a comment."""
    lines = []
    for line in path.read_text(encoding="utf-8").splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            lines.append(line)
    return " ".join(lines)


def _cmd_corpus(args) -> int:
    directory = Path(args.dir)
    if not directory.is_dir():
        print(f"i/o error: not a directory: {directory}", file=sys.stderr)
        return EXIT_IO
    options = _options(args)

    entries = []
    aggregate: dict = {}
    had_parse_error = False
    files = sorted(p for p in directory.iterdir() if p.is_file())
    for path in files:
        text = read_corpus_file(path)
        if not text:
            continue
        entry = {"file": path.name, "expression": text}
        try:
            poly = parse_polynomial(text)
        except ParseError as exc:
            entry["status"] = "parse_error"
            entry["error"] = str(exc)
            entries.append(entry)
            had_parse_error = True
            continue
        report = analyze(poly, options, expression=text)
        entry.update(
            {
                "status": report.status,
                "degree": report.degree,
                "k": report.top_form["k"] if report.top_form else None,
                "ovals": report.curve_summary["oval_count"] if report.curve_summary else None,
                "P": report.topology_summary["P"] if report.topology_summary else None,
                "N": report.topology_summary["N"] if report.topology_summary else None,
                "p_minus": report.p_minus,
                "p_plus": report.p_plus,
                "audits": {a.name: a.status for a in report.audits},
            }
        )
        entries.append(entry)
        for a in report.audits:
            slot = aggregate.setdefault(a.name, {"pass": 0, "fail": 0, "skipped": 0})
            slot[a.status] += 1
        if args.figures:
            fig_dir = Path(args.figures)
            fig_dir.mkdir(parents=True, exist_ok=True)
            emit_svg(
                report, report.curve_set, report.godrons,
                fig_dir / (path.stem + ".svg"),
            )
        print(
            f"{path.name}: {report.status}, ovals={entry.get('ovals')}, "
            f"P-={report.p_minus}, P+={report.p_plus}"
        )

    summary = {
        "schema": SCHEMA_VERSION,
        "type": "corpus-summary",
        "count": len(entries),
        "entries": entries,
        "aggregate": aggregate,
    }
    try:
        Path(args.report).write_text(_format_json(summary) + "\n", encoding="utf-8")
        csv_path = args.csv or str(Path(args.report).with_suffix(".csv"))
        _write_csv(csv_path, entries)
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO

    if had_parse_error:
        return EXIT_PARSE
    if args.strict and any(
        any(s == "fail" for s in e.get("audits", {}).values()) for e in entries
    ):
        return EXIT_AUDIT
    return EXIT_OK


def _write_csv(path: str, entries: list) -> None:
    audit_names = sorted({name for e in entries for name in e.get("audits", {})})
    fields = ["file", "status", "degree", "k", "ovals", "P", "N", "p_minus", "p_plus"]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(fields + audit_names)
        for e in entries:
            row = [e.get(k, "") for k in fields]
            row += [e.get("audits", {}).get(name, "") for name in audit_names]
            writer.writerow(row)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="hessian-atlas",
        description="Invariant inventory of the parabolic curve of a polynomial graph surface",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    pa = sub.add_parser("analyze", help="analyze one polynomial expression")
    pa.add_argument("--poly", required=True, help='expression, e.g. "x^3 + y^3 + 3*x*y"')
    pa.add_argument("--json", help="write the JSON report to this path")
    pa.add_argument("--svg", help="render the figure to this path")
    _add_common(pa)
    pa.set_defaults(func=_cmd_analyze)

    pc = sub.add_parser("corpus", help="analyze every polynomial file in a directory")
    pc.add_argument("--dir", required=True, help="directory of polynomial files")
    pc.add_argument("--report", required=True, help="summary JSON output path")
    pc.add_argument("--csv", help="summary CSV output path (default: next to report)")
    pc.add_argument("--figures", help="directory for per-polynomial figures")
    _add_common(pc)
    pc.set_defaults(func=_cmd_corpus)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
