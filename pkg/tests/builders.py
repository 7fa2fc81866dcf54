"""Fixture builders shared by the test suite and the scripts in ``scripts/``.

Everything here is deterministic given its arguments.
"""

import json
import random
from pathlib import Path

from sciaccess.compliance import ComplianceRecord, Criterion, Status, report_to_json

FIXTURES = Path(__file__).parent / "fixtures"
GOLDEN = Path(__file__).parent / "golden"
CORPUS = FIXTURES / "corpus"


# -- random documents ---------------------------------------------------------

WORDS = "we show that the model improves results across several settings as seen in".split()


def _sentence(rng, n=6):
    return " ".join(rng.choice(WORDS) for _ in range(n)).capitalize()


def random_document(rng, max_objects=8, max_paragraphs=20, max_bib=6, paper_id="rand"):
    """A random S2ORC-shaped document plus figure manifest.

    Returns ``(fulltext_dict, manifest_dict)``.  Paragraphs mention figures and
    tables through ``ref_spans`` and bibliography entries through
    ``cite_spans``; some objects are left out of the manifest so placeholders
    are exercised.
    """
    n_fig = rng.randint(0, max_objects)
    n_tab = rng.randint(0, max_objects - n_fig)
    n_par = rng.randint(0, max_paragraphs)
    n_bib = rng.randint(0, max_bib)
    bib_keys = [f"BIBREF{i}" for i in range(n_bib)]
    n_sec = rng.randint(1, 4) if n_par else 0
    body = []
    for j in range(n_par):
        sec = min(j * n_sec // max(n_par, 1), n_sec - 1)
        text, cites, refs = _sentence(rng), [], []
        for _ in range(rng.randint(0, 3)):
            kind, count = rng.choice((("Figure", n_fig), ("Table", n_tab)))
            if count == 0 and rng.random() < 0.7:
                continue
            k = rng.randint(1, max(count + 1, 1))
            mention = f"{kind} {k}"
            text += " see "
            refs.append({"start": len(text), "end": len(text) + len(mention), "ref_id": None})
            text += mention
        for _ in range(rng.randint(0, 2)):
            if not bib_keys:
                break
            key = rng.choice(bib_keys)
            mark = f"[{key[6:]}]"
            text += " "
            cites.append({"start": len(text), "end": len(text) + len(mark), "ref_id": key})
            text += mark
        text += "."
        body.append({"text": text, "cite_spans": cites, "ref_spans": refs,
                     "section": f"Section {sec + 1}", "sec_num": str(sec + 1)})
    fulltext = {
        "paper_id": paper_id,
        "title": "Random document",
        "authors": [{"first": "Ada", "middle": [], "last": "Lovelace", "suffix": ""}],
        "abstract": [{"text": "An abstract.", "cite_spans": [], "ref_spans": []}],
        "body_text": body,
        "bib_entries": {k: {"ref_id": k, "title": f"Reference {k}", "authors": [], "year": 2020,
                            "venue": "Venue"} for k in bib_keys},
        "ref_entries": {},
    }
    objects = []
    for kind, count in (("figure", n_fig), ("table", n_tab)):
        for k in range(1, count + 1):
            if rng.random() < 0.8:
                objects.append({"kind": kind, "number": k, "caption": f"{kind.title()} {k}: caption.",
                                "image_path": f"{paper_id}-{kind}{k}.png"})
    manifest = {"schema_version": 1, "paper_id": paper_id, "objects": objects}
    return fulltext, manifest


# -- compliance histogram corpus ----------------------------------------------

# target histogram: papers at each Total Compliance value
HIST_HISTOGRAM = (8519, 1010, 741, 358, 494, 275)
HIST_DL_ONLY = 793
HIST_MISSING_ALT_AT_4 = 396
# per-criterion pass counts consistent with the target percentages
HIST_CRITERION_PASSES = {
    Criterion.ALT_TEXT: 854,
    Criterion.TABLE_HEADERS: 1516,
    Criterion.TAGGED_PDF: 1527,
    Criterion.DEFAULT_LANGUAGE: 1960,
    Criterion.TAB_ORDER: 1060,
}


def _record(i, passed):
    return ComplianceRecord(f"p{i:05d}", {c: Status.PASSED if c in passed else Status.FAILED for c in Criterion})


def histogram_pass_sets():
    """Passed-criterion sets for the 11,397-paper corpus.

    Totals 0, 5, the DefaultLanguage-only singles and the missing-AltText
    fours follow the target counts.  The remaining records (other singles,
    twos, threes, the other fours missing TabOrder) are filled greedily so the
    per-criterion pass counts equal ``HIST_CRITERION_PASSES``.
    """
    all5 = frozenset(Criterion)
    sets = [frozenset()] * HIST_HISTOGRAM[0] + [all5] * HIST_HISTOGRAM[5]
    sets += [all5 - {Criterion.ALT_TEXT}] * HIST_MISSING_ALT_AT_4
    sets += [all5 - {Criterion.TAB_ORDER}] * (HIST_HISTOGRAM[4] - HIST_MISSING_ALT_AT_4)
    sets += [frozenset({Criterion.DEFAULT_LANGUAGE})] * HIST_DL_ONLY
    need = dict(HIST_CRITERION_PASSES)
    for s in sets:
        for c in s:
            need[c] -= 1
    order = list(Criterion)

    def take(k, allowed):
        pick = sorted(allowed, key=lambda c: (-need[c], order.index(c)))[:k]
        for c in pick:
            need[c] -= 1
        return frozenset(pick)

    non_dl = [c for c in Criterion if c is not Criterion.DEFAULT_LANGUAGE]
    sets += [take(1, non_dl) for _ in range(HIST_HISTOGRAM[1] - HIST_DL_ONLY)]
    sets += [take(3, order) for _ in range(HIST_HISTOGRAM[3])]
    sets += [take(2, order) for _ in range(HIST_HISTOGRAM[2])]
    assert all(v == 0 for v in need.values()), need
    return sets


def histogram_records():
    return [_record(i, s) for i, s in enumerate(histogram_pass_sets())]


def write_histogram_reports(directory):
    """One normalized JSON report per histogram-corpus record; returns the directory."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for rec in histogram_records():
        (directory / f"{rec.paper_id}.json").write_text(json.dumps(report_to_json(rec)), encoding="utf-8")
    return directory


# -- evaluation records from fixed element counts --------------------

FIELD_READABILITY = (
    ("Art", 6, 1, 6), ("Biology", 12, 7, 4), ("Business", 6, 2, 6), ("Chemistry", 12, 5, 2),
    ("Computer science", 10, 7, 4), ("Economics", 6, 8, 6), ("Engineering", 15, 7, 1),
    ("Environmental science", 7, 8, 3), ("Geography", 9, 6, 2), ("Geology", 12, 8, 1),
    ("History", 5, 1, 1), ("Materials science", 15, 8, 1), ("Mathematics", 13, 8, 4),
    ("Medicine", 14, 12, 0), ("Other", 6, 2, 0), ("Philosophy", 7, 5, 0), ("Physics", 25, 10, 4),
    ("Political science", 6, 6, 1), ("Psychology", 11, 7, 4), ("Sociology", 13, 4, 3),
)
N_GRADED, N_SKIPPED = 385, 137


def _spread(counts_by_value):
    out = []
    for value, n in counts_by_value:
        out += [value] * n
    assert len(out) == N_GRADED, len(out)
    return out


def _cycle(values, n):
    return [values[i % len(values)] for i in range(n)]


def reference_evaluation_records():
    """385 graded and 137 skipped record dicts reproducing the target counts.

    Each question's answers are laid out independently over the graded papers,
    so every row of the element table and every field row of the readability
    table comes out exactly.
    """
    n = N_GRADED
    title = _spread([("yes", 337), ("partially", 16), ("no", 32)])
    authors = _spread([("yes", 307), ("partially", 64), ("no", 14)])
    abstract = _spread([("yes", 308), ("partially", 22), ("no", 55)])

    # figures: 94 papers without figures, the rest with 4 figures each
    fig_present = [0] * 94 + [4] * (n - 94)
    fig_err = [None] * 94 + [None] * 6 + [0] * 201 + [1] * 45 + _cycle([2, 3, 4], 39)
    cap_err = [None] * 94 + [0] * 174 + [1] * 55 + _cycle([2, 3], 62)
    # tables: 2 unanswered, 166 without tables, the rest with 3 tables each
    tab_present = [None] * 2 + [0] * 166 + [3] * (n - 168)
    tab_err = [None] * 168 + [0] * 165 + [1] * 32 + _cycle([2, 3], 20)
    tcap_err = [None] * 168 + [0] * 190 + [1] * 23 + [2] * 4
    header = [None] * 3 + [0] * 170 + _cycle([1, 2, 3, 4, 5], 172) + _cycle([6, 8, 12], 40)
    headings = [None] * 2 + [0] * 88 + _cycle([1, 2, 3, 4, 5], 258) + _cycle([6, 7, 9], 37)
    paragraphs = [None] * 1 + [0] * 226 + _cycle([1, 2, 3, 4, 5], 128) + _cycle([6, 10], 30)
    bib = ([None] * 7 + ["no_bibliography"] * 15 + _cycle(["all_correct", "mostly_correct"], 313)
        + ["half_correct"] * 3 + _cycle(["mostly_incorrect", "incorrect"], 47))
    inline = ([None] * 39 + ["no_bibliography"] * 10 + _cycle(["all_linked", "majority_linked"], 290)
              + ["half_linked"] * 20 + _cycle(["most_unlinked", "none_linked"], 26))
    fields, readability = [], []
    for name, good, okay, bad in FIELD_READABILITY:
        fields += [name] * (good + okay + bad)
        readability += ["no_major_problems"] * good + ["some_problems"] * okay + ["lots_of_problems"] * bad
    for column in (fig_present, fig_err, cap_err, tab_present, tab_err, tcap_err, header, headings,
                   paragraphs, bib, inline, fields, readability):
        assert len(column) == n, len(column)

    records = []
    for i in range(n):
        fp, tp = fig_present[i], tab_present[i]
        records.append({
            "schema_version": 1,
            "paper_id": f"eval{i:04d}",
            "annotator_id": "A" if i % 2 == 0 else "B",
            "title_ok": title[i],
            "authors_ok": authors[i],
            "abstract_ok": abstract[i],
            "has_equations": i % 3 == 0,
            "figures_present": fp,
            "figures_correct": None if fig_err[i] is None else fp - fig_err[i],
            "figure_captions_correct": None if cap_err[i] is None else fp - cap_err[i],
            "tables_present": tp,
            "tables_correct": None if tab_err[i] is None else tp - tab_err[i],
            "table_captions_correct": None if tcap_err[i] is None else tp - tcap_err[i],
            "header_footer_errors": header[i],
            "section_heading_errors": headings[i],
            "missing_paragraphs": paragraphs[i],
            "bibliography_grade": bib[i],
            "inline_citation_grade": inline[i],
            "readability": readability[i],
            "field_of_study": fields[i],
        })
    reasons = ("not in English", "too long", "not a paper")
    for j in range(N_SKIPPED):
        records.append({"schema_version": 1, "paper_id": f"skip{j:04d}", "annotator_id": "A" if j % 2 else "B",
                        "skipped": reasons[j % 3]})
    return records


def write_json(path, obj):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, ensure_ascii=False) + "\n", encoding="utf-8")


def seeded(seed):
    return random.Random(seed)
