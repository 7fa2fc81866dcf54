"""Command-line front end.

Exit codes
  0  success
  1  batch: a document failed and continue-on-error is off
  2  unusable input: parse failure, invalid records, no overlap,
     empty report directory or more than half the reports unreadable
  3  render / self-audit: the emitted HTML failed the accessibility audit
"""

import argparse
import csv
import io
import json
import os
import sys
from pathlib import Path

from . import __version__, compliance, evaluation, stats
from .batch import dump_json, load_manifest, render_document, run_batch, write_atomic, write_outputs
from .diagnostics import Diagnostics
from .emitter import self_audit
from .model import EmptyDocument, MalformedInput
from .stitcher import PaperIdMismatch, safe_id

EXIT_OK, EXIT_FAILED, EXIT_INPUT, EXIT_AUDIT = 0, 1, 2, 3


def _stderr_json(obj):
    sys.stderr.write(json.dumps(obj, sort_keys=True, ensure_ascii=False) + "\n")


def _csv_text(rows):
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(rows)
    return buf.getvalue()


def _env(name, default=None):
    return os.environ.get(f"SCIA11Y_{name.upper()}", default)


# -- render -------------------------------------------------------------------


def cmd_render(args):
    try:
        fulltext = Path(args.fulltext).read_bytes()
    except OSError as e:
        _stderr_json({"code": "unreadable_input", "message": str(e)})
        return EXIT_INPUT
    figures = None
    if args.figures:
        try:
            figures = Path(args.figures).read_bytes()
        except OSError as e:
            _stderr_json({"code": "figures_unreadable", "message": str(e)})
    diag = Diagnostics()
    try:
        out = render_document(fulltext, figures, lang=args.lang or _env("lang", "en"),
                              assets_dir=args.assets_dir or _env("assets_dir"),
                              inline_images=args.inline_images, banner=not args.no_banner,
                              allow_id_mismatch=args.allow_id_mismatch, diag=diag)
    except (MalformedInput, EmptyDocument, PaperIdMismatch) as e:
        sys.stderr.write(diag.to_jsonl())
        _stderr_json({"code": type(e).__name__, "message": str(e)})
        return EXIT_INPUT
    sys.stderr.write(diag.to_jsonl())
    paths = write_outputs(out, args.out, safe_id(out.paper_id))
    print(json.dumps({"paper_id": out.paper_id, "outputs": [str(p) for p in paths],
                      "audit_passed": out.audit_passed, "warnings": len(diag)}, sort_keys=True))
    return EXIT_OK if out.audit_passed else EXIT_AUDIT


def cmd_batch(args):
    flags = {"parallelism": args.parallelism, "output_dir": args.output_dir, "lang": args.lang,
             "continue_on_error": args.continue_on_error}
    try:
        job = load_manifest(args.manifest, flags=flags)
    except (OSError, ValueError, TypeError) as e:
        _stderr_json({"code": "bad_manifest", "message": str(e)})
        return EXIT_INPUT
    result = run_batch(job, limit=args.limit, log=_stderr_json)
    print(dump_json(result.summary), end="")
    return result.exit_code


def cmd_self_audit(args):
    worst = EXIT_OK
    for path in args.html:
        report = self_audit(Path(path).read_bytes())
        print(json.dumps({"file": path, **report.to_json()}, sort_keys=True))
        if not report.passed:
            worst = EXIT_AUDIT
    return worst


# -- audit / stats ------------------------------------------------------------


REPORT_SUFFIXES = (".html", ".htm", ".json")


def load_compliance(reports_dir, metadata_csv=None, clusters=None):
    """Parse every report; returns (records, unreadable list of (name, reason), total)."""
    paths = sorted(p for p in Path(reports_dir).iterdir() if p.suffix.lower() in REPORT_SUFFIXES) \
        if Path(reports_dir).is_dir() else []
    table = compliance.load_cluster_table(clusters)
    meta = compliance.load_metadata_csv(metadata_csv) if metadata_csv else {}
    records, unreadable = [], []
    for p in paths:
        try:
            rec = compliance.parse_report(p.read_bytes(), paper_id=p.stem)
        except compliance.ReportUnreadable as e:
            unreadable.append((p.name, str(e)))
            continue
        records.append(compliance.attach_metadata(rec, meta.get(rec.paper_id), table))
    return records, unreadable, len(paths), table


def _load_or_fail(args):
    records, unreadable, total, table = load_compliance(args.reports_dir, args.metadata, args.clusters)
    for name, reason in unreadable:
        _stderr_json({"code": "report_unreadable", "file": name, "message": reason})
    if total == 0:
        _stderr_json({"code": "no_reports", "message": f"no reports in {args.reports_dir}"})
        return None
    if len(unreadable) * 2 > total:
        _stderr_json({"code": "too_many_unreadable", "message": f"{len(unreadable)} of {total} reports unreadable"})
        return None
    return records, unreadable, total, table


def _stat_json(fn, *args):
    try:
        return fn(*args).to_json()
    except stats.DegenerateInput as e:
        return {"degenerate": str(e)}


def compute_stats(records, include_other=False, table=None):
    groups = compliance.cluster_groups(records, include_other, table)
    values = list(groups.values())
    pts = compliance.word_share_by_field(records)
    return {
        "groups": {k: len(v) for k, v in groups.items()},
        "anova": _stat_json(stats.anova_f, values),
        "kruskal_wallis": _stat_json(stats.kruskal_wallis_h, values),
        "word_share_correlation": _stat_json(
            stats.pearson_r, [p[0] for p in pts.values()], [p[1] for p in pts.values()]),
        "fields": {f: {"word_share": s, "mean_normalized": m} for f, (s, m) in pts.items()},
    }


def cmd_audit(args):
    loaded = _load_or_fail(args)
    if loaded is None:
        return EXIT_INPUT
    records, unreadable, total, table = loaded
    out = Path(args.out)
    (row,) = compliance.aggregate(records, "all")
    write_atomic(out / "criteria.csv", _csv_text(compliance.criterion_table_rows(records, args.column)))
    hist = compliance.histogram(records)
    write_atomic(out / "histogram.csv", _csv_text([("total_compliance", "papers"), *enumerate(hist)]))
    for group in ("year", "field_of_study", "software_cluster"):
        rows = compliance.aggregate(records, group)
        write_atomic(out / f"by_{group}.csv", _csv_text(compliance.aggregate_rows(rows, group)))
    write_atomic(out / "software.csv", _csv_text(compliance.software_table_rows(records, table)))
    summary = {
        "schema_version": 1,
        "reports": total,
        "unreadable": len(unreadable),
        "scored": len(records),
        "histogram": hist,
        "overall": row.to_json(),
        "stats": compute_stats(records, args.include_other, table),
    }
    write_atomic(out / "summary.json", dump_json(summary))
    print(dump_json({k: summary[k] for k in ("reports", "unreadable", "scored", "histogram")}), end="")
    return EXIT_OK


def cmd_stats(args):
    loaded = _load_or_fail(args)
    if loaded is None:
        return EXIT_INPUT
    records, _, _, table = loaded
    text = dump_json(compute_stats(records, args.include_other, table))
    if args.out:
        write_atomic(Path(args.out) / "stats.json", text)
    print(text, end="")
    return EXIT_OK


# -- evaluation ---------------------------------------------------------------


def _load_records(path):
    records, errors = evaluation.load_records(path)
    for e in errors:
        _stderr_json({"code": "invalid_record", "source": e.source,
                      "problems": [{"field": f, "message": m} for f, m in e.problems]})
    return records, errors


def _field_map(path):
    if not path:
        return None
    with open(path, newline="", encoding="utf-8") as f:
        return {r["paper_id"]: r["field_of_study"] for r in csv.DictReader(f)}


def cmd_evaluate(args):
    records, errors = _load_records(args.records)
    if errors:
        return EXIT_INPUT
    chosen = evaluation.primary_records(records, args.reconcile, args.seed, args.primary_annotator)
    try:
        errors_table = evaluation.aggregate_errors(chosen)
        readability = evaluation.readability_by_field(chosen, _field_map(args.field_map))
    except evaluation.EmptyInput as e:
        _stderr_json({"code": "empty_input", "message": str(e)})
        return EXIT_INPUT
    out = Path(args.out)
    write_atomic(out / "element_counts.csv", errors_table.to_csv())
    write_atomic(out / "element_counts.json", dump_json(errors_table.to_json()))
    write_atomic(out / "readability_by_field.csv", readability.to_csv())
    write_atomic(out / "readability_by_field.json", dump_json(readability.to_json()))
    print(errors_table.to_csv(), end="")
    return EXIT_OK


def cmd_agreement(args):
    a, errs_a = _load_records(args.records_a)
    b, errs_b = _load_records(args.records_b)
    if errs_a or errs_b:
        return EXIT_INPUT
    try:
        rows = evaluation.agreement_suite(a, b)
    except evaluation.NoOverlap as e:
        _stderr_json({"code": "no_overlap", "message": str(e)})
        return EXIT_INPUT
    text = evaluation.agreement_csv(rows)
    if args.out:
        write_atomic(Path(args.out) / "agreement.csv", text)
        write_atomic(Path(args.out) / "agreement.json", dump_json([r.to_json() for r in rows]))
    print(text, end="")
    return EXIT_OK


# -- parser -------------------------------------------------------------------


def build_parser():
    p = argparse.ArgumentParser(prog="sciaccess", description="Accessible HTML renders of scholarly papers, "
                                "PDF accessibility audits and render-faithfulness evaluation.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("render", help="render one paper to HTML")
    r.add_argument("fulltext", help="full-text extraction JSON")
    r.add_argument("--figures", help="figure manifest JSON (optional)")
    r.add_argument("--out", required=True, help="output directory")
    r.add_argument("--lang", help="document language tag (default en)")
    r.add_argument("--assets-dir", help="directory image paths are resolved against")
    r.add_argument("--inline-images", action="store_true", help="embed images as data URIs")
    r.add_argument("--no-banner", action="store_true", help="omit the about-this-page banner")
    r.add_argument("--allow-id-mismatch", action="store_true",
                   help="merge a figure manifest whose paper_id differs")
    r.set_defaults(func=cmd_render)

    b = sub.add_parser("batch", help="render a corpus described by a job manifest")
    b.add_argument("manifest", help="job manifest JSON")
    b.add_argument("--parallelism", type=int)
    b.add_argument("--output-dir")
    b.add_argument("--lang")
    b.add_argument("--continue-on-error", action=argparse.BooleanOptionalAction, default=None)
    b.add_argument("--limit", type=int, help="process at most this many pending documents")
    b.set_defaults(func=cmd_batch)

    for name, func, helptext in (("audit", cmd_audit, "score checker reports and write compliance tables"),
                                 ("stats", cmd_stats, "ANOVA, Kruskal-Wallis and Pearson statistics")):
        a = sub.add_parser(name, help=helptext)
        a.add_argument("reports_dir")
        a.add_argument("--metadata", help="metadata CSV (paper_id, year, field_of_study, creator fields)")
        a.add_argument("--clusters", help="software cluster table JSON (default: shipped table)")
        a.add_argument("--include-other", action="store_true", help="include the Other cluster in group tests")
        a.add_argument("--out", required=(name == "audit"), help="output directory")
        if name == "audit":
            a.add_argument("--column", default="Ours", help="column header for the criterion table")
        a.set_defaults(func=func)

    e = sub.add_parser("evaluate", help="aggregate evaluation records into element and readability tables")
    e.add_argument("records", help="directory (or file) of record JSON")
    e.add_argument("--out", required=True)
    e.add_argument("--reconcile", choices=("first", "random"), default="first")
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--primary-annotator")
    e.add_argument("--field-map", help="CSV with paper_id, field_of_study")
    e.set_defaults(func=cmd_evaluate)

    g = sub.add_parser("agreement", help="inter-rater agreement between two record sets")
    g.add_argument("records_a")
    g.add_argument("records_b")
    g.add_argument("--out")
    g.set_defaults(func=cmd_agreement)

    s = sub.add_parser("self-audit", help="audit emitted HTML files")
    s.add_argument("html", nargs="+")
    s.set_defaults(func=cmd_self_audit)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
