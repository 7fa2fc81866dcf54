"""Faithfulness-evaluation records, their aggregate tables, and inter-rater agreement.

Agreement statistics
--------------------
``cohens_kappa``      (p_o - p_e) / (1 - p_e), p_e from the two raters' marginals.
``icc``               ICC(A,1): two-way random effects, absolute agreement, single
                      rater.  With n items, k = 2 raters, item means r_i, rater
                      means c_j and grand mean g::

                          MSR = k * sum (r_i - g)^2 / (n - 1)
                          MSC = n * sum (c_j - g)^2 / (k - 1)
                          MSE = sum (x_ij - r_i - c_j + g)^2 / ((n - 1)(k - 1))
                          ICC = (MSR - MSE) / (MSR + (k - 1) MSE + k (MSC - MSE) / n)

``mean_difference``   mean and population standard deviation of |a_i - b_i|.
``percent_agreement`` exact-match proportion (also used for numeric questions).
"""

import csv
import io
import json
import math
import random
import statistics
from dataclasses import dataclass, fields
from enum import Enum
from pathlib import Path

from .stats import DegenerateInput

RECORD_SCHEMA_VERSION = 1


class InvalidRecord(ValueError):
    """Raised with a list of (field, message) problems."""

    def __init__(self, problems, source=None):
        self.problems = list(problems)
        self.source = source
        where = f"{source}: " if source else ""
        super().__init__(where + "; ".join(f"{f}: {m}" for f, m in self.problems))


class EmptyInput(ValueError):
    pass


class LengthMismatch(ValueError):
    pass


class NoOverlap(ValueError):
    pass


class _Choice(str, Enum):
    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        key = "".join(ch for ch in str(value).lower() if ch.isalnum())
        for member in cls:
            if key in (member.value.replace("_", ""), member.name.lower().replace("_", "")):
                return member
        raise ValueError(f"{value!r} is not one of {[m.value for m in cls]}")


class Answer(_Choice):
    YES = "yes"
    PARTIALLY = "partially"
    NO = "no"


class BibliographyGrade(_Choice):
    ALL_CORRECT = "all_correct"
    MOSTLY_CORRECT = "mostly_correct"
    HALF_CORRECT = "half_correct"
    MOSTLY_INCORRECT = "mostly_incorrect"
    INCORRECT = "incorrect"
    NO_BIBLIOGRAPHY = "no_bibliography"


class CitationGrade(_Choice):
    ALL_LINKED = "all_linked"
    MAJORITY_LINKED = "majority_linked"
    HALF_LINKED = "half_linked"
    MOST_UNLINKED = "most_unlinked"
    NONE_LINKED = "none_linked"
    NO_BIBLIOGRAPHY = "no_bibliography"


class Readability(_Choice):
    NO_MAJOR_PROBLEMS = "no_major_problems"
    SOME_PROBLEMS = "some_problems"
    LOTS_OF_PROBLEMS = "lots_of_problems"


@dataclass(frozen=True)
class EvaluationRecord:
    paper_id: str
    annotator_id: str
    skipped: str | None = None
    title_ok: Answer | None = None
    authors_ok: Answer | None = None
    abstract_ok: Answer | None = None
    has_equations: bool | None = None
    figures_present: int | None = None
    figures_correct: int | None = None
    figure_captions_correct: int | None = None
    figure_captions_mixed: int | None = None
    tables_present: int | None = None
    tables_correct: int | None = None
    table_captions_correct: int | None = None
    table_captions_mixed: int | None = None
    table_content_mixed: int | None = None
    header_footer_errors: int | None = None
    section_heading_errors: int | None = None
    missing_paragraphs: int | None = None
    bibliography_grade: BibliographyGrade | None = None
    inline_citation_grade: CitationGrade | None = None
    readability: Readability | None = None
    field_of_study: str | None = None
    comments: str = ""

    @property
    def is_skipped(self):
        return self.skipped is not None


FIELD_NAMES = tuple(f.name for f in fields(EvaluationRecord))
CHOICE_FIELDS = {
    "title_ok": Answer,
    "authors_ok": Answer,
    "abstract_ok": Answer,
    "bibliography_grade": BibliographyGrade,
    "inline_citation_grade": CitationGrade,
    "readability": Readability,
}
COUNT_FIELDS = (
    "figures_present", "figures_correct", "figure_captions_correct", "figure_captions_mixed",
    "tables_present", "tables_correct", "table_captions_correct", "table_captions_mixed",
    "table_content_mixed", "header_footer_errors", "section_heading_errors", "missing_paragraphs",
)
GRADE_FIELDS = tuple(CHOICE_FIELDS) + COUNT_FIELDS + ("has_equations",)
REQUIRED_ANSWERS = ("title_ok", "authors_ok", "abstract_ok", "readability")
# (part, whole): part may not exceed whole, and needs whole to be answered
BOUNDED_BY = (
    ("figures_correct", "figures_present"),
    ("figure_captions_correct", "figures_present"),
    ("figure_captions_mixed", "figures_present"),
    ("tables_correct", "tables_present"),
    ("table_captions_correct", "tables_present"),
    ("table_captions_mixed", "tables_present"),
)


def validate_record(raw):
    """Check a record dict and build an :class:`EvaluationRecord`, or raise InvalidRecord."""
    if not isinstance(raw, dict):
        raise InvalidRecord([("<record>", "expected a JSON object")])
    problems = []
    raw = dict(raw)
    version = raw.pop("schema_version", RECORD_SCHEMA_VERSION)
    if version != RECORD_SCHEMA_VERSION:
        problems.append(("schema_version", f"unsupported version {version!r}"))
    for key in sorted(set(raw) - set(FIELD_NAMES)):
        problems.append((key, "unknown field"))
    values = {}
    for name in ("paper_id", "annotator_id"):
        v = raw.get(name)
        if not isinstance(v, str) or not v.strip():
            problems.append((name, "required non-empty string"))
        values[name] = v
    for name in ("skipped", "field_of_study"):
        v = raw.get(name)
        if v is not None and not isinstance(v, str):
            problems.append((name, "must be a string or null"))
        values[name] = v
    comments = raw.get("comments") or ""
    if not isinstance(comments, str):
        problems.append(("comments", "must be a string"))
    values["comments"] = comments
    for name, enum in CHOICE_FIELDS.items():
        v = raw.get(name)
        if v is None:
            values[name] = None
            continue
        try:
            values[name] = enum.parse(v)
        except ValueError as e:
            problems.append((name, str(e)))
    for name in COUNT_FIELDS:
        v = raw.get(name)
        if v is not None and (isinstance(v, bool) or not isinstance(v, int) or v < 0):
            problems.append((name, f"must be a non-negative integer, got {v!r}"))
            v = None
        values[name] = v
    eq = raw.get("has_equations")
    if eq is not None and not isinstance(eq, bool):
        problems.append(("has_equations", "must be a boolean"))
    values["has_equations"] = eq

    for part, whole in BOUNDED_BY:
        p, w = values.get(part), values.get(whole)
        if p is None:
            continue
        if w is None:
            problems.append((part, f"given without {whole}"))
        elif p > w:
            problems.append((part, f"{p} exceeds {whole}={w}"))
    if values.get("skipped") is not None:
        if not values["skipped"].strip():
            problems.append(("skipped", "skip reason must be non-empty"))
        for name in GRADE_FIELDS:
            if raw.get(name) is not None:
                problems.append((name, "a skipped record carries no grades"))
    else:
        for name in REQUIRED_ANSWERS:
            if raw.get(name) is None:
                problems.append((name, "required unless the record is skipped"))
    if problems:
        raise InvalidRecord(problems)
    return EvaluationRecord(**values)


def record_to_json(rec):
    out = {"schema_version": RECORD_SCHEMA_VERSION}
    for name in FIELD_NAMES:
        v = getattr(rec, name)
        out[name] = v.value if isinstance(v, Enum) else v
    return out


def load_records(root):
    """Read every ``*.json`` under ``root`` (one record per file, or a list).

    Returns ``(records, errors)`` where errors is a list of InvalidRecord with
    ``source`` set to the offending path.
    """
    root = Path(root)
    paths = [root] if root.is_file() else sorted(root.rglob("*.json"))
    records, errors = [], []
    for path in paths:
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except (OSError, UnicodeDecodeError, json.JSONDecodeError) as e:
            errors.append(InvalidRecord([("<file>", str(e))], source=str(path)))
            continue
        for i, item in enumerate(data if isinstance(data, list) else [data]):
            try:
                records.append(validate_record(item))
            except InvalidRecord as e:
                src = str(path) if not isinstance(data, list) else f"{path}[{i}]"
                errors.append(InvalidRecord(e.problems, source=src))
    return records, errors


def _csv_cell(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, Enum):
        return v.value
    return str(v)


def records_to_csv(records):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(FIELD_NAMES)
    for r in records:
        w.writerow([_csv_cell(getattr(r, n)) for n in FIELD_NAMES])
    return buf.getvalue()


def records_from_csv(text):
    """Inverse of :func:`records_to_csv`; raises InvalidRecord naming the row."""
    out = []
    for lineno, row in enumerate(csv.DictReader(io.StringIO(text)), start=2):
        raw = {}
        for name, cell in row.items():
            if name is None:
                raise InvalidRecord([("<row>", "more cells than header columns")], source=f"line {lineno}")
            if cell == "" and name != "comments":
                raw[name] = None
            elif name in COUNT_FIELDS:
                raw[name] = int(cell) if cell.lstrip("-").isdigit() else cell
            elif name == "has_equations":
                raw[name] = {"true": True, "false": False}.get(cell.lower(), cell)
            else:
                raw[name] = cell
        try:
            out.append(validate_record(raw))
        except InvalidRecord as e:
            raise InvalidRecord(e.problems, source=f"line {lineno}") from None
    return out


def primary_records(records, strategy="first", seed=0, primary_annotator=None):
    """One record per paper.

    ``first`` keeps the first non-skipped record in input order (falling back to
    the first record); ``random`` picks uniformly with a seeded generator.  A
    ``primary_annotator`` overrides either strategy for papers they graded.
    """
    by_paper = {}
    for r in records:
        by_paper.setdefault(r.paper_id, []).append(r)
    rng = random.Random(seed)
    out = []
    for pid in sorted(by_paper):
        cands = by_paper[pid]
        graded = [r for r in cands if not r.is_skipped] or cands
        preferred = [r for r in graded if r.annotator_id == primary_annotator]
        if preferred:
            out.append(preferred[0])
        elif strategy == "first":
            out.append(graded[0])
        elif strategy == "random":
            out.append(graded[rng.randrange(len(graded))])
        else:
            raise ValueError(f"unknown reconciliation strategy {strategy!r}")
    return out


# -- aggregate tables ---------------------------------------------------------

SKIPPED = "Skipped"


def object_errors(present, correct):
    """Error count for a figure/table question; None when not applicable or unanswered."""
    if present is None or correct is None or present == 0:
        return None
    return present - correct


def _object_bucket(present, correct):
    if present is None:
        return SKIPPED
    if present == 0:
        return "No figures/tables"
    if correct is None:
        return SKIPPED
    err = present - correct
    return "No errors" if err == 0 else "1 error" if err == 1 else ">1 error"


def _text_bucket(n):
    if n is None:
        return SKIPPED
    return "No errors" if n == 0 else "1-5 errors" if n <= 5 else ">5 errors"


BIB_CLASSES = ("No bibliography", "All or most correct", "Half correct", "Mostly incorrect")

_BIB_CLASS = {
    BibliographyGrade.ALL_CORRECT: "All or most correct",
    BibliographyGrade.MOSTLY_CORRECT: "All or most correct",
    BibliographyGrade.HALF_CORRECT: "Half correct",
    BibliographyGrade.MOSTLY_INCORRECT: "Mostly incorrect",
    BibliographyGrade.INCORRECT: "Mostly incorrect",
    BibliographyGrade.NO_BIBLIOGRAPHY: "No bibliography",
    CitationGrade.ALL_LINKED: "All or most correct",
    CitationGrade.MAJORITY_LINKED: "All or most correct",
    CitationGrade.HALF_LINKED: "Half correct",
    CitationGrade.MOST_UNLINKED: "Mostly incorrect",
    CitationGrade.NONE_LINKED: "Mostly incorrect",
    CitationGrade.NO_BIBLIOGRAPHY: "No bibliography",
}


def bib_class(grade):
    """Collapse a five-level bibliography or citation grade to four classes."""
    return None if grade is None else _BIB_CLASS[grade]


READABILITY_LABELS = {
    Readability.NO_MAJOR_PROBLEMS: "Good",
    Readability.SOME_PROBLEMS: "Okay",
    Readability.LOTS_OF_PROBLEMS: "Bad",
}

_ANSWER_LABELS = {Answer.YES: "Yes", Answer.PARTIALLY: "Partially", Answer.NO: "No"}

# (section header, bucket labels, ((row label, bucket function), ...))
TABLE_LAYOUT = (
    ("Metadata Element", ("Yes", "Partially", "No"), (
        ("Title", lambda r: _ANSWER_LABELS[r.title_ok]),
        ("Authors", lambda r: _ANSWER_LABELS[r.authors_ok]),
        ("Abstract", lambda r: _ANSWER_LABELS[r.abstract_ok]),
    )),
    ("Figure/Table Element", (SKIPPED, "No figures/tables", "No errors", "1 error", ">1 error"), (
        ("Figure extraction errors", lambda r: _object_bucket(r.figures_present, r.figures_correct)),
        ("Figure caption errors", lambda r: _object_bucket(r.figures_present, r.figure_captions_correct)),
        ("Table extraction errors", lambda r: _object_bucket(r.tables_present, r.tables_correct)),
        ("Table caption errors", lambda r: _object_bucket(r.tables_present, r.table_captions_correct)),
    )),
    ("Text Element", (SKIPPED, "No errors", "1-5 errors", ">5 errors"), (
        ("Header/Footer/Footnote errors", lambda r: _text_bucket(r.header_footer_errors)),
        ("Section heading errors", lambda r: _text_bucket(r.section_heading_errors)),
        ("Body paragraph errors", lambda r: _text_bucket(r.missing_paragraphs)),
    )),
    ("Bibliography Element", ("Skipped/poor bib extraction",) + BIB_CLASSES, (
        ("Bibliography extraction", lambda r: bib_class(r.bibliography_grade) or "Skipped/poor bib extraction"),
        ("Inline citation linking", lambda r: bib_class(r.inline_citation_grade) or "Skipped/poor bib extraction"),
    )),
    ("Overall Readability", ("Good", "Okay", "Bad"), (
        ("Overall score", lambda r: READABILITY_LABELS[r.readability]),
    )),
)


@dataclass(frozen=True)
class ErrorTable:
    """Bucketed counts per evaluated element, grouped into sections."""

    n_records: int
    sections: tuple  # ((header, buckets, ((element, counts), ...)), ...)

    def row(self, element):
        for _, buckets, rows in self.sections:
            for name, counts in rows:
                if name == element:
                    return dict(zip(buckets, counts))
        raise KeyError(element)

    def to_json(self):
        return {
            "n_records": self.n_records,
            "sections": [
                {"header": h, "buckets": list(b), "rows": {name: list(c) for name, c in rows}}
                for h, b, rows in self.sections
            ],
        }

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        for header, buckets, rows in self.sections:
            w.writerow((header,) + buckets)
            for name, counts in rows:
                w.writerow((name,) + counts)
        return buf.getvalue()


def aggregate_errors(records):
    """Table of bucketed assessment counts over non-skipped records."""
    graded = [r for r in records if not r.is_skipped]
    if not graded:
        raise EmptyInput("no graded evaluation records")
    sections = []
    for header, buckets, rows in TABLE_LAYOUT:
        out_rows = []
        for name, bucket in rows:
            counts = dict.fromkeys(buckets, 0)
            for r in graded:
                counts[bucket(r)] += 1
            out_rows.append((name, tuple(counts[b] for b in buckets)))
        sections.append((header, buckets, tuple(out_rows)))
    return ErrorTable(len(graded), tuple(sections))


@dataclass(frozen=True)
class ReadabilityTable:
    rows: tuple  # ((label, n, good, okay, bad), ...) with "All papers" first

    HEADER = ("Overall Readability", "Number of papers", "Good", "Okay", "Bad")

    def row(self, label):
        for r in self.rows:
            if r[0] == label:
                return r[1:]
        raise KeyError(label)

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.HEADER)
        w.writerows(self.rows)
        return buf.getvalue()

    def to_json(self):
        return [dict(zip(("group", "n", "good", "okay", "bad"), r)) for r in self.rows]


def readability_by_field(records, field_map=None, unknown="Unknown"):
    """Readability distribution overall and per field of study (fields sorted by name)."""
    graded = [r for r in records if not r.is_skipped]
    if not graded:
        raise EmptyInput("no graded evaluation records")
    order = tuple(Readability)

    def tally(rs):
        counts = [sum(r.readability is g for r in rs) for g in order]
        return (len(rs), *counts)

    by_field = {}
    for r in graded:
        f = (field_map or {}).get(r.paper_id) or r.field_of_study or unknown
        by_field.setdefault(f, []).append(r)
    rows = [("All papers", *tally(graded))]
    rows += [(f, *tally(by_field[f])) for f in sorted(by_field, key=str.lower)]
    return ReadabilityTable(tuple(rows))


# -- agreement ----------------------------------------------------------------


class Metric(str, Enum):
    PERCENT_AGREEMENT = "PercentAgreement"
    COHENS_KAPPA = "CohensKappa"
    ICC = "ICC"
    MEAN_DIFFERENCE = "MeanDifference"


@dataclass(frozen=True)
class AgreementResult:
    metric: Metric
    value: float
    sd: float | None = None
    n_items: int = 0
    degenerate: bool = False

    def to_json(self):
        return {"metric": self.metric.value, "value": self.value, "sd": self.sd,
                "n_items": self.n_items, "degenerate": self.degenerate}


def _paired(a, b):
    a, b = list(a), list(b)
    if len(a) != len(b):
        raise LengthMismatch(f"{len(a)} != {len(b)}")
    if not a:
        raise DegenerateInput("no items")
    return a, b


def percent_agreement(a, b):
    a, b = _paired(a, b)
    return AgreementResult(Metric.PERCENT_AGREEMENT, sum(x == y for x, y in zip(a, b)) / len(a), n_items=len(a))


def cohens_kappa(a, b, classes=None):
    """Cohen's kappa.  When chance agreement is 1 (one class used throughout) the
    result is flagged degenerate and reported as 1.0."""
    a, b = _paired(a, b)
    n = len(a)
    if classes is not None:
        stray = (set(a) | set(b)) - set(classes)
        if stray:
            raise ValueError(f"labels outside declared classes: {sorted(map(str, stray))}")
    labels = set(a) | set(b)
    po = sum(x == y for x, y in zip(a, b)) / n
    pe = math.fsum(a.count(c) * b.count(c) for c in labels) / (n * n)
    if pe >= 1.0:
        return AgreementResult(Metric.COHENS_KAPPA, 1.0, n_items=n, degenerate=True)
    return AgreementResult(Metric.COHENS_KAPPA, (po - pe) / (1.0 - pe), n_items=n)


def icc(a, b):
    """ICC(A,1) for two raters (see module docstring)."""
    a, b = _paired(a, b)
    a, b = [float(v) for v in a], [float(v) for v in b]
    n, k = len(a), 2
    if n < 2:
        raise DegenerateInput("icc needs at least 2 items")
    grand = math.fsum(a + b) / (n * k)
    rows = [(x + y) / 2.0 for x, y in zip(a, b)]
    cols = [math.fsum(a) / n, math.fsum(b) / n]
    sst = math.fsum((v - grand) ** 2 for v in a + b)
    if sst == 0:
        raise DegenerateInput("zero total variance")
    msr = k * math.fsum((r - grand) ** 2 for r in rows) / (n - 1)
    msc = n * math.fsum((c - grand) ** 2 for c in cols) / (k - 1)
    mse = math.fsum(
        (x - r - c + grand) ** 2 for col, c in zip((a, b), cols) for x, r in zip(col, rows)
    ) / ((n - 1) * (k - 1))
    denom = msr + (k - 1) * mse + k * (msc - mse) / n
    if denom <= 0:
        raise DegenerateInput("icc denominator is zero")
    return AgreementResult(Metric.ICC, (msr - mse) / denom, n_items=n)


def mean_difference(a, b):
    a, b = _paired(a, b)
    diffs = [abs(float(x) - float(y)) for x, y in zip(a, b)]
    return AgreementResult(Metric.MEAN_DIFFERENCE, statistics.fmean(diffs), statistics.pstdev(diffs), len(diffs))


@dataclass(frozen=True)
class AgreementRow:
    criterion: str
    n_classes: int | None
    n_items: int
    agreement: float | None
    kappa: AgreementResult | None = None
    icc: AgreementResult | None = None
    mean_difference: AgreementResult | None = None

    def cells(self):
        def fmt(v):
            return "-" if v is None else f"{v:.2f}"

        md = self.mean_difference
        return (
            self.criterion,
            "-" if self.n_classes is None else str(self.n_classes),
            fmt(self.agreement),
            fmt(self.kappa and self.kappa.value),
            fmt(self.icc and self.icc.value),
            "-" if md is None else f"{md.value:.2f} ± {md.sd:.2f}",
        )

    def to_json(self):
        return {
            "criterion": self.criterion,
            "n_classes": self.n_classes,
            "n_items": self.n_items,
            "agreement": self.agreement,
            "kappa": self.kappa and self.kappa.to_json(),
            "icc": self.icc and self.icc.to_json(),
            "mean_difference": self.mean_difference and self.mean_difference.to_json(),
        }


AGREEMENT_HEADER = ("Evaluation criteria", "Number of classes", "Agreement", "Cohen's Kappa", "ICC",
                    "Mean Difference (± SD)")

CATEGORICAL_QUESTIONS = (
    ("Title", len(Answer), lambda r: r.title_ok),
    ("Authors", len(Answer), lambda r: r.authors_ok),
    ("Abstract", len(Answer), lambda r: r.abstract_ok),
)
NUMERIC_QUESTIONS = (
    ("Number of figures", lambda r: r.figures_present),
    ("Figure extraction errors", lambda r: object_errors(r.figures_present, r.figures_correct)),
    ("Figure caption errors", lambda r: object_errors(r.figures_present, r.figure_captions_correct)),
    ("Number of tables", lambda r: r.tables_present),
    ("Table extraction errors", lambda r: object_errors(r.tables_present, r.tables_correct)),
    ("Table caption errors", lambda r: object_errors(r.tables_present, r.table_captions_correct)),
    ("Header/footer/footnote errors", lambda r: r.header_footer_errors),
    ("Section heading errors", lambda r: r.section_heading_errors),
    ("Body paragraph errors", lambda r: r.missing_paragraphs),
)
LATE_CATEGORICAL = (
    ("Bibliography extraction", len(BIB_CLASSES), lambda r: bib_class(r.bibliography_grade)),
    ("Inline citation linking", len(BIB_CLASSES), lambda r: bib_class(r.inline_citation_grade)),
    ("Overall score", len(Readability), lambda r: r.readability),
)


def overlap(records_a, records_b):
    """Pairs (a, b) of graded records for papers graded by both sides, by paper id."""
    a = {r.paper_id: r for r in reversed(list(records_a)) if not r.is_skipped}
    b = {r.paper_id: r for r in reversed(list(records_b)) if not r.is_skipped}
    return [(a[p], b[p]) for p in sorted(set(a) & set(b))]


def _try(fn, *args):
    try:
        return fn(*args)
    except DegenerateInput:
        return None


def agreement_suite(records_a, records_b):
    """Per-question agreement rows over the papers both annotators graded."""
    pairs = overlap(records_a, records_b)
    if not pairs:
        raise NoOverlap("the two record sets share no graded paper")

    def answered(get):
        items = [(get(x), get(y)) for x, y in pairs]
        items = [(u, v) for u, v in items if u is not None and v is not None]
        return [u for u, _ in items], [v for _, v in items]

    def categorical(name, k, get):
        xa, xb = answered(get)
        if not xa:
            return AgreementRow(name, k, 0, None)
        return AgreementRow(name, k, len(xa), percent_agreement(xa, xb).value, kappa=cohens_kappa(xa, xb))

    rows = [categorical(*q) for q in CATEGORICAL_QUESTIONS]
    for name, get in NUMERIC_QUESTIONS:
        xa, xb = answered(get)
        if not xa:
            rows.append(AgreementRow(name, None, 0, None))
            continue
        rows.append(AgreementRow(
            name, None, len(xa), percent_agreement(xa, xb).value,
            icc=_try(icc, xa, xb), mean_difference=mean_difference(xa, xb),
        ))
    rows += [categorical(*q) for q in LATE_CATEGORICAL]
    return rows


def agreement_csv(rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(AGREEMENT_HEADER)
    for r in rows:
        w.writerow(r.cells())
    return buf.getvalue()
