"""PDF accessibility compliance: checker-report ingestion, scoring and aggregate tables.

Five checker rules are tracked. A paper's Total Compliance is the number it
passes, Normalized Total Compliance is that number over five, and it is
Adobe-5 compliant when it passes all of them. "Needs manual check" never
counts as a pass.
"""

import csv
import json
import re
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from html.parser import HTMLParser
from importlib import resources

from . import stats


class ReportUnreadable(ValueError):
    """The checker could not process the PDF (corrupt, password protected, truncated report)."""


class EmptyInput(ValueError):
    pass


class Criterion(str, Enum):
    ALT_TEXT = "alt_text"
    TABLE_HEADERS = "table_headers"
    TAGGED_PDF = "tagged_pdf"
    DEFAULT_LANGUAGE = "default_language"
    TAB_ORDER = "tab_order"

    @property
    def label(self):
        return _LABELS[self]


_LABELS = {
    Criterion.ALT_TEXT: "Alt-text",
    Criterion.TABLE_HEADERS: "Table headers",
    Criterion.TAGGED_PDF: "Tagged PDF",
    Criterion.DEFAULT_LANGUAGE: "Default language",
    Criterion.TAB_ORDER: "Tab order",
}


class Status(str, Enum):
    PASSED = "passed"
    FAILED = "failed"
    NEEDS_MANUAL_CHECK = "needs_manual_check"


# checker rule names, lower-cased, that map onto the tracked criteria
RULE_NAMES = {
    "figures alternate text": Criterion.ALT_TEXT,
    "alt-text": Criterion.ALT_TEXT,
    "alt text": Criterion.ALT_TEXT,
    "alternate text": Criterion.ALT_TEXT,
    "table headers": Criterion.TABLE_HEADERS,
    "headers": Criterion.TABLE_HEADERS,
    "tagged pdf": Criterion.TAGGED_PDF,
    "primary language": Criterion.DEFAULT_LANGUAGE,
    "default language": Criterion.DEFAULT_LANGUAGE,
    "tab order": Criterion.TAB_ORDER,
}
for _c in Criterion:
    RULE_NAMES[_c.value] = _c

_STATUS_WORDS = {
    "passed": Status.PASSED,
    "pass": Status.PASSED,
    "failed": Status.FAILED,
    "fail": Status.FAILED,
    "needs manual check": Status.NEEDS_MANUAL_CHECK,
    "needs_manual_check": Status.NEEDS_MANUAL_CHECK,
    "manual check": Status.NEEDS_MANUAL_CHECK,
    "skipped": Status.NEEDS_MANUAL_CHECK,
}

_UNREADABLE_RE = re.compile(
    r"password[- ]protected|corrupt|could not be (?:opened|processed)|failed to (?:open|process)", re.IGNORECASE
)


@dataclass
class ComplianceRecord:
    paper_id: str
    criteria: dict
    year: int | None = None
    field_of_study: str | None = None
    creator_raw: tuple = ()
    software_cluster: str | None = None

    def __post_init__(self):
        missing = [c.value for c in Criterion if c not in self.criteria]
        if missing:
            raise ValueError(f"{self.paper_id}: missing criteria {missing}")

    def passed(self, criterion):
        return self.criteria[criterion] is Status.PASSED

    @property
    def score(self):
        return score(self)


@dataclass(frozen=True)
class ComplianceScore:
    total: int
    normalized: Fraction
    adobe5: bool


def score(record):
    total = sum(1 for c in Criterion if record.criteria[c] is Status.PASSED)
    return ComplianceScore(total, Fraction(total, 5), total == 5)


def _status(text):
    s = _STATUS_WORDS.get(" ".join(str(text).lower().replace("-", " ").split()))
    if s is None:
        s = _STATUS_WORDS.get(str(text).strip().lower())
    return s


def _criterion(rule_name, section=None):
    name = " ".join(rule_name.lower().split())
    c = RULE_NAMES.get(name)
    if c is Criterion.TABLE_HEADERS and name == "headers" and section and "table" not in section.lower():
        return None
    return c


class _ReportParser(HTMLParser):
    def __init__(self):
        super().__init__(convert_charrefs=True)
        self.section = None
        self.rows = []  # (section, cells)
        self.items = []  # (section, text)
        self._heading = None
        self._row = None
        self._cell = None
        self._li = None

    def handle_starttag(self, tag, attrs):
        if re.fullmatch(r"h[1-6]", tag):
            self._heading = ""
        elif tag == "tr":
            self._row = []
        elif tag in ("td", "th") and self._row is not None:
            self._cell = ""
        elif tag == "li":
            self._li = ""

    def handle_endtag(self, tag):
        if re.fullmatch(r"h[1-6]", tag) and self._heading is not None:
            self.section = self._heading.strip()
            self._heading = None
        elif tag in ("td", "th") and self._cell is not None:
            self._row.append(self._cell.strip())
            self._cell = None
        elif tag == "tr" and self._row is not None:
            self.rows.append((self.section, self._row))
            self._row = None
        elif tag == "li" and self._li is not None:
            self.items.append((self.section, self._li.strip()))
            self._li = None

    def handle_data(self, data):
        if self._heading is not None:
            self._heading += data
        if self._cell is not None:
            self._cell += data
        if self._li is not None:
            self._li += data


_ITEM_RE = re.compile(r"^(.*?)\s*[-:–]\s*(passed|failed|needs manual check|skipped)\b", re.IGNORECASE)


def _criteria_from_html(text):
    p = _ReportParser()
    p.feed(text)
    p.close()
    found = {}
    for section, cells in p.rows:
        if len(cells) < 2:
            continue
        c, s = _criterion(cells[0], section), _status(cells[1])
        if c is not None and s is not None:
            found.setdefault(c, s)
    for section, item in p.items:
        m = _ITEM_RE.match(item)
        if m:
            c, s = _criterion(m.group(1), section), _status(m.group(2))
            if c is not None and s is not None:
                found.setdefault(c, s)
    return found


def _criteria_from_json(data):
    if str(data.get("status", "ok")).lower() == "unreadable":
        raise ReportUnreadable(data.get("reason") or "checker could not process the PDF")
    found = {}
    for name, value in (data.get("rules") or data.get("criteria") or {}).items():
        c, s = _criterion(name), _status(value)
        if c is not None and s is not None:
            found.setdefault(c, s)
    return found


def parse_report(raw, paper_id=None):
    """Extract the five tracked criteria from a checker report (HTML or normalized JSON)."""
    text = raw.decode("utf-8", errors="replace") if isinstance(raw, bytes) else raw
    if not text.strip():
        raise ReportUnreadable("empty report")
    if text.lstrip().startswith("{"):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as e:
            raise ReportUnreadable(f"truncated JSON report: {e}") from None
        found = _criteria_from_json(data)
        paper_id = data.get("paper_id") or paper_id
    else:
        found = _criteria_from_html(text)
    missing = [c.label for c in Criterion if c not in found]
    if missing:
        marker = _UNREADABLE_RE.search(text)
        reason = marker.group() if marker else f"report lacks {', '.join(missing)}"
        raise ReportUnreadable(reason)
    return ComplianceRecord(str(paper_id or ""), {c: found[c] for c in Criterion})


def report_to_json(record):
    return {"schema_version": 1, "paper_id": record.paper_id, "status": "ok",
            "rules": {c.value: record.criteria[c].value for c in Criterion}}


# -- typesetting software -----------------------------------------------------

METADATA_FIELDS = ("xmp_creator_tool", "docinfo_creator_tool", "producer")


def load_cluster_table(path=None):
    if path is None:
        text = resources.files("sciaccess").joinpath("data/software_clusters.json").read_text("utf-8")
    else:
        with open(path, encoding="utf-8") as f:
            text = f.read()
    data = json.loads(text)
    return [(c["name"], tuple(s.lower() for s in c["substrings"])) for c in data["clusters"]], data["fallback"]


_DEFAULT_TABLE = None


def canonicalize_creator(values, table=None):
    """Cluster name for creator metadata ``values`` given in priority order."""
    global _DEFAULT_TABLE
    if table is None:
        if _DEFAULT_TABLE is None:
            _DEFAULT_TABLE = load_cluster_table()
        table = _DEFAULT_TABLE
    clusters, fallback = table
    for value in values:
        v = (value or "").lower()
        if not v.strip():
            continue
        for name, subs in clusters:
            if any(s in v for s in subs):
                return name
    return fallback


def named_clusters(table=None):
    return [name for name, _ in (table or load_cluster_table())[0]]


def load_metadata_csv(path):
    """paper_id -> dict(year, field_of_study, creator_raw)."""
    out = {}
    with open(path, newline="", encoding="utf-8") as f:
        for row in csv.DictReader(f):
            pid = (row.get("paper_id") or "").strip()
            if not pid:
                continue
            year = (row.get("year") or "").strip()
            out[pid] = {
                "year": int(year) if year.isdigit() else None,
                "field_of_study": (row.get("field_of_study") or "").strip() or None,
                "creator_raw": tuple((row.get(k) or "").strip() for k in METADATA_FIELDS),
            }
    return out


def attach_metadata(record, meta, table=None):
    if meta is None:
        record.software_cluster = canonicalize_creator((), table)
        return record
    record.year = meta["year"]
    record.field_of_study = meta["field_of_study"]
    record.creator_raw = meta["creator_raw"]
    record.software_cluster = canonicalize_creator(meta["creator_raw"], table)
    return record


# -- aggregation --------------------------------------------------------------

GROUPINGS = {
    "all": lambda r: "All",
    "year": lambda r: r.year,
    "field_of_study": lambda r: r.field_of_study,
    "software_cluster": lambda r: r.software_cluster,
}


@dataclass
class AggregateRow:
    group: object
    n: int
    passed: dict = field(default_factory=dict)
    normalized_sum: Fraction = Fraction(0)
    adobe5: int = 0

    def rate(self, criterion):
        return self.passed[criterion] / self.n

    @property
    def mean_normalized(self):
        return float(self.normalized_sum / self.n)

    @property
    def adobe5_rate(self):
        return self.adobe5 / self.n

    def to_json(self):
        return {
            "group": self.group,
            "n": self.n,
            **{f"{c.value}_rate": self.rate(c) for c in Criterion},
            "mean_normalized": self.mean_normalized,
            "adobe5_rate": self.adobe5_rate,
        }


def _group_sort_key(g):
    return (g is None, isinstance(g, str), g if g is not None else 0)


def aggregate(records, group_by="all"):
    """Per-group criterion pass rates, mean normalized compliance and Adobe-5 rate."""
    records = list(records)
    if not records:
        raise EmptyInput("no compliance records")
    key = GROUPINGS[group_by]
    rows = {}
    for r in records:
        g = key(r)
        row = rows.get(g)
        if row is None:
            row = rows[g] = AggregateRow(g, 0, {c: 0 for c in Criterion})
        s = score(r)
        row.n += 1
        for c in Criterion:
            row.passed[c] += r.criteria[c] is Status.PASSED
        row.normalized_sum += s.normalized
        row.adobe5 += s.adobe5
    return [rows[g] for g in sorted(rows, key=_group_sort_key)]


def histogram(records):
    """Number of records at each Total Compliance value 0..5."""
    counts = [0] * 6
    for r in records:
        counts[score(r).total] += 1
    return counts


def combination_counts(records, total):
    """Counter of passed-criterion sets among records with the given total."""
    out = Counter()
    for r in records:
        if score(r).total == total:
            out[frozenset(c for c in Criterion if r.passed(c))] += 1
    return out


def software_counts(records, table=None):
    """(cluster, count, share) rows, named clusters by count then the fallback cluster last."""
    records = list(records)
    if not records:
        raise EmptyInput("no compliance records")
    fallback = (table or load_cluster_table())[1]
    counts = Counter(r.software_cluster or fallback for r in records)
    named = sorted(((c, n) for c, n in counts.items() if c != fallback), key=lambda t: (-t[1], t[0]))
    rows = named + ([(fallback, counts[fallback])] if fallback in counts else [])
    return [(c, n, n / len(records)) for c, n in rows]


def cluster_groups(records, include_other=False, table=None):
    table = table or load_cluster_table()
    names = named_clusters(table) + ([table[1]] if include_other else [])
    groups = {name: [] for name in names}
    for r in records:
        if r.software_cluster in groups:
            groups[r.software_cluster].append(score(r).total)
    return {k: v for k, v in groups.items() if v}


def cluster_tests(records, include_other=False, table=None):
    """ANOVA F and Kruskal-Wallis H of Total Compliance across software clusters."""
    groups = cluster_groups(records, include_other, table)
    return stats.anova_f(list(groups.values())), stats.kruskal_wallis_h(list(groups.values()))


def word_share_by_field(records, cluster="Microsoft Word"):
    """field -> (share of PDFs from ``cluster``, mean normalized compliance)."""
    per_field = {}
    for r in records:
        if r.field_of_study is None:
            continue
        per_field.setdefault(r.field_of_study, []).append(r)
    out = {}
    for f in sorted(per_field):
        rs = per_field[f]
        share = sum(r.software_cluster == cluster for r in rs) / len(rs)
        out[f] = (share, float(sum(score(r).normalized for r in rs) / len(rs)))
    return out


def word_share_correlation(records, cluster="Microsoft Word"):
    pts = word_share_by_field(records, cluster)
    return stats.pearson_r([p[0] for p in pts.values()], [p[1] for p in pts.values()])


# -- fixed-layout tables --------------------------------------------------


def _pct(x):
    return f"{100 * x:.1f}%"


def criterion_table_rows(records, column="Ours"):
    """Per-criterion pass rate plus the Adobe-5 rate, formatted as percentages."""
    (row,) = aggregate(records, "all")
    rows = [("Criterion", column)]
    rows += [(c.label, _pct(row.rate(c))) for c in Criterion]
    rows.append(("Adobe-5 Compliance", _pct(row.adobe5_rate)))
    return rows


def software_table_rows(records, table=None):
    rows = [("Typesetting Software", "Count (%)")]
    rows += [(name, f"{n} ({100 * share:.1f}%)") for name, n, share in software_counts(records, table)]
    return rows


def aggregate_rows(rows, group_label):
    header = (group_label, "n", *(c.label for c in Criterion), "Mean normalized compliance", "Adobe-5 rate")
    body = [
        ("" if r.group is None else r.group, r.n, *(f"{r.rate(c):.6f}" for c in Criterion),
         f"{r.mean_normalized:.6f}", f"{r.adobe5_rate:.6f}")
        for r in rows
    ]
    return [header, *body]
