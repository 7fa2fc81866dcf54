"""Write the test fixtures under tests/fixtures.

* ``corpus/``      ten full-text/figure-manifest pairs covering the stitcher's cases
* ``reports/``     synthetic checker reports (HTML table, HTML list, JSON, unreadable)
                   with an answer key and a metadata CSV
* ``evaluation/``  evaluation records reproducing the reference element counts,
                   plus a small two-annotator overlap set

Re-running is idempotent.  Paragraph text uses two inline markers that are
turned into spans: ``{Figure 2}`` becomes an object reference and
``[[BIBREF0|[1]]]`` a citation of ``BIBREF0`` displayed as ``[1]``.
"""

import re
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "tests"))

from builders import CORPUS, FIXTURES, reference_evaluation_records, write_json  # noqa: E402

_MARK = re.compile(r"\{([^}]+)\}|\[\[([^|\]]+)\|([^\]]+\]?)\]\]")


def para(text, section=None, sec_num=None, **extra):
    out, cites, refs, pos = "", [], [], 0
    for m in _MARK.finditer(text):
        out += text[pos:m.start()]
        if m.group(1):
            refs.append({"start": len(out), "end": len(out) + len(m.group(1)), "ref_id": None})
            out += m.group(1)
        else:
            shown = m.group(3)
            cites.append({"start": len(out), "end": len(out) + len(shown), "ref_id": m.group(2)})
            out += shown
        pos = m.end()
    out += text[pos:]
    entry = {"text": out, "cite_spans": cites, "ref_spans": refs}
    if section is not None:
        entry["section"] = section
    if sec_num is not None:
        entry["sec_num"] = sec_num
    entry.update(extra)
    return entry


def author(first, last, middle=()):
    return {"first": first, "middle": list(middle), "last": last, "suffix": ""}


def bib(key, title, authors, year, venue="", **extra):
    return {"ref_id": key, "title": title, "authors": [author(*a) for a in authors], "year": year,
            "venue": venue, **extra}


def paper(pid, title, authors, abstract, body, bib_entries=(), ref_entries=None, envelope=False):
    content = {
        "abstract": [para(t) for t in abstract],
        "body_text": body,
        "bib_entries": {b["ref_id"]: b for b in bib_entries},
        "ref_entries": ref_entries or {},
    }
    head = {"paper_id": pid, "title": title, "authors": authors}
    return {**head, "pdf_parse": content} if envelope else {**head, **content}


def manifest(pid, *objects):
    objs = [{"kind": k, "number": n, "caption": c, "image_path": p, **({} if p else {"extracted": False})}
            for k, n, c, p in objects]
    return {"schema_version": 1, "paper_id": pid, "objects": objs}


def corpus():
    docs = {}

    # 01: three sections, one reference cited in sections II and III, a missing
    # interior figure, a table, an equation and a bibliography URL wrapped across lines
    s = ("Introduction", "1"), ("Related Work", "2"), ("Method", "3")
    docs["01-three-sections"] = (paper(
        "paper-01", "Accessible Rendering of Papers", [author("Ada", "Lovelace"), author("Alan", "Turing", ["M."])],
        ["We render papers as HTML so that screen readers can navigate them."],
        [
            para("Papers are usually distributed as PDF {Figure 1}.", *s[0]),
            para("Reading order is often lost.", *s[0]),
            para("Prior work measured compliance [[BIBREF0|[1]]] and found it low.", *s[1]),
            para("Our pipeline is shown in {Figure 3}, with results in {Table 1}.", *s[2]),
            {"text": "EQUATION", "section": "Method", "sec_num": "3", "eq_num": "(1)"},
            para("As noted by [[BIBREF0|[1]]], tags matter; see also [[BIBREF1|[2]]].", *s[2]),
        ],
        [bib("BIBREF0", "Making the field accessible", [("Jane", "Doe")], 2017, "CHI",
             raw_text="J. Doe. Making the field accessible. CHI 2017. https://example.org/acc- essibility/report.pdf"),
         bib("BIBREF1", "Tagged documents", [("Li", "Wei")], 2015, "ASSETS", other_ids={"DOI": ["10.1145/2700648.2809847"]})],
    ), manifest("paper-01",
                ("figure", 1, "Figure 1: A PDF page.", "paper-01-fig1.png"),
                ("figure", 3, "Figure 3: The pipeline.", "paper-01-fig3.png"),
                ("table", 1, "Table 1: Results.", "paper-01-tab1.png")))

    # 02: paragraph 1 mentions Figure 1, paragraph 2 mentions Figure 3
    docs["02-placement"] = (paper(
        "paper-02", "Placement Example", [author("Grace", "Hopper")], ["Objects follow their first mention."],
        [para("Paragraph one cites {Figure 1}.", "Results", "1"),
         para("Paragraph two cites {Figure 3}.", "Results", "1"),
         para("Paragraph three has no mentions.", "Results", "1")],
    ), manifest("paper-02", *[("figure", k, f"Figure {k}: panel {k}.", f"paper-02-fig{k}.png") for k in (1, 2, 3)]))

    # 03: no figure manifest at all
    docs["03-no-manifest"] = (paper(
        "paper-03", "A Paper Without Extracted Figures", [author("Katherine", "Johnson")],
        ["Figures could not be extracted for this paper."],
        [para("The trajectory is plotted in {Figure 1} and {Figure 2}.", "Trajectories", "1"),
         para("Table data appear in {Table 2}.", "Data", "2")],
    ), None)

    # 04: nested numbering
    docs["04-nested"] = (paper(
        "paper-04", "Deeply Nested Sections", [author("Edsger", "Dijkstra", ["W."])], ["Headings nest."],
        [para("Top level.", "Background", "1"),
         para("Second level.", "Graphs", "1.1"),
         para("Third level with {Fig. 1}.", "Shortest paths", "1.1.1"),
         para("Back to the top.", "Discussion", "2"),
         para("Skipping straight to depth three.", "Details", "2.1.1")],
    ), manifest("paper-04", ("figure", 1, "Figure 1: A graph.", "paper-04-fig1.png")))

    # 05: abstract only; objects fall back to after the abstract
    docs["05-abstract-only"] = (paper(
        "paper-05", "Extended Abstract", [author("Barbara", "Liskov")],
        ["This extended abstract has no body.", "It still has a figure."], [],
    ), manifest("paper-05", ("figure", 1, "Figure 1: Overview.", "paper-05-fig1.png")))

    # 06: non-ASCII text and DOI-only references
    docs["06-unicode"] = (paper(
        "paper-06", "Évaluation de l’accessibilité — α, β, γ", [author("Zoë", "Müller"), author("Łukasz", "Kaiser")],
        ["Résumé: naïve façades ≠ accessible documents."],
        [para("Les résultats ({Table 1}) confirment [[BIBREF0|Müller et al. 2019]].", "Résultats", "1"),
         para("Les limites sont discutées.", "Discussion", "2")],
        [bib("BIBREF0", "Über Barrierefreiheit", [("Zoë", "Müller")], 2019, "Journal", doi="10.1000/xyz-123")],
    ), manifest("paper-06", ("table", 1, "Table 1: Résultats.", "paper-06-tab1.png")))

    # 07: unnumbered figure and a non-extracted table
    docs["07-unnumbered"] = (paper(
        "paper-07", "Unnumbered Objects", [author("Donald", "Knuth", ["E."])], ["Some figures lack numbers."],
        [para("See {Table 1} and {Table 2}.", "Tables", "1"),
         para("The final remarks.", "Conclusion", "2")],
    ), manifest("paper-07",
                ("figure", None, "A decorative figure.", "paper-07-logo.png"),
                ("table", 1, "Table 1: Extracted.", "paper-07-tab1.png"),
                ("table", 2, "Table 2: Not extracted.", None)))

    # 08: figure manifest in the DeepFigures layout
    docs["08-deepfigures"] = (paper(
        "paper-08", "DeepFigures Manifest", [author("Yann", "LeCun")], ["Figures come from a detector."],
        [para("Architecture in {Figure 1}; accuracy in {Table 1}.", "Model", "1")],
    ), {"figures": [
        {"figType": "Figure", "name": "1", "caption": "Figure 1: Architecture.", "renderURL": "paper-08-fig1.png"},
        {"figType": "Table", "name": "1", "caption": "Table 1: Accuracy.", "renderURL": "paper-08-tab1.png"}]})

    # 09: nested pdf_parse envelope and references via ref_entries
    docs["09-envelope"] = (paper(
        "paper-09", "Envelope Format", [author("Frances", "Allen")], ["The body sits in pdf_parse."],
        [{**para("Compiler stages are drawn in the diagram.", "Compilers", "1"),
          "ref_spans": [{"start": 33, "end": 40, "ref_id": "FIGREF0"}]},
         para("Later text.", "Compilers", "1")],
        ref_entries={"FIGREF0": {"type": "figure", "num": "2", "text": "Figure 2: Stages."}},
        envelope=True,
    ), manifest("paper-09", ("figure", 1, "Figure 1: Before.", "paper-09-fig1.png"),
                ("figure", 2, "Figure 2: Stages.", "paper-09-fig2.png")))

    # 10: unresolved citation, unnumbered headings and an empty heading
    docs["10-messy"] = (paper(
        "paper-10", "Messy Extraction", [author("Margaret", "Hamilton")], [],
        [para("An unresolved citation [[BIBREF9|[9]]] and a resolved one [[BIBREF0|[1]]].", "Overview"),
         para("Text under an empty heading.", ""),
         para("Appendix material mentions {Figure 2}.", "Appendix")],
        [bib("BIBREF0", "Software engineering", [("Margaret", "Hamilton")], 1969, "NASA",
             raw_text="M. Hamilton. Software engineering. http://www.example.com/apollo- guidance- computer.")],
    ), manifest("paper-10", ("figure", 2, "Figure 2: Guidance computer.", "paper-10-fig2.png")))
    return docs


def write_corpus():
    for stem, (text, figs) in corpus().items():
        write_json(CORPUS / "fulltext" / f"{stem}.json", text)
        if figs is not None:
            write_json(CORPUS / "figures" / f"{stem}.json", figs)


# -- checker reports ----------------------------------------------------------

RULES = (
    ("Document", ("Accessibility permission flag", "Image-only PDF", "Tagged PDF", "Logical Reading Order",
                  "Primary language", "Title", "Bookmarks", "Color contrast")),
    ("Page Content", ("Tagged content", "Tagged annotations", "Tab order", "Character encoding",
                      "Tagged multimedia", "Screen flicker", "Scripts", "Timed responses", "Navigation links")),
    ("Forms", ("Tagged form fields", "Field descriptions")),
    ("Alternate Text", ("Figures alternate text", "Nested alternate text", "Associated with content",
                        "Hides annotation", "Other elements alternate text")),
    ("Tables", ("Rows", "TH and TD", "Headers", "Regularity", "Summary")),
    ("Lists", ("List items", "Lbl and LBody")),
    ("Headings", ("Appropriate nesting",)),
)
TRACKED = {"Figures alternate text": "alt_text", "Headers": "table_headers", "Tagged PDF": "tagged_pdf",
           "Primary language": "default_language", "Tab order": "tab_order"}
WORDS = {"passed": "Passed", "failed": "Failed", "needs_manual_check": "Needs manual check"}


def html_report(statuses, layout="table", untracked="Failed"):
    lines = ["<html><head><title>Accessibility Report</title></head><body>",
             "<h1>Accessibility Report</h1>", "<h2>Detailed Report</h2>"]
    for section, rules in RULES:
        lines.append(f"<h3>{section}</h3>")
        lines.append("<table>" if layout == "table" else "<ul>")
        if layout == "table":
            lines.append("<tr><th>Rule Name</th><th>Status</th><th>Description</th></tr>")
        for rule in rules:
            status = WORDS[statuses[TRACKED[rule]]] if rule in TRACKED else untracked
            if layout == "table":
                lines.append(f"<tr><td>{rule}</td><td>{status}</td><td>Checks {rule.lower()}.</td></tr>")
            else:
                lines.append(f"<li>{rule} - {status}</li>")
        lines.append("</table>" if layout == "table" else "</ul>")
    lines.append("</body></html>")
    return "\n".join(lines) + "\n"


REPORT_KEY = {
    "r01": {"alt_text": "passed", "table_headers": "passed", "tagged_pdf": "passed",
            "default_language": "passed", "tab_order": "passed"},
    "r02": {"alt_text": "failed", "table_headers": "failed", "tagged_pdf": "failed",
            "default_language": "passed", "tab_order": "failed"},
    "r03": {"alt_text": "needs_manual_check", "table_headers": "passed", "tagged_pdf": "passed",
            "default_language": "failed", "tab_order": "passed"},
    "r04": {"alt_text": "failed", "table_headers": "needs_manual_check", "tagged_pdf": "passed",
            "default_language": "passed", "tab_order": "needs_manual_check"},
    "r05": {"alt_text": "failed", "table_headers": "failed", "tagged_pdf": "failed",
            "default_language": "failed", "tab_order": "failed"},
    "r06": {"alt_text": "passed", "table_headers": "failed", "tagged_pdf": "passed",
            "default_language": "passed", "tab_order": "passed"},
}
REPORT_METADATA = (
    ("paper_id", "year", "field_of_study", "xmp_creator_tool", "docinfo_creator_tool", "producer"),
    ("r01", "2019", "Computer science", "Adobe InDesign CC 2017 (Macintosh)", "", "Adobe PDF Library 15.0"),
    ("r02", "2019", "Medicine", "", "Microsoft® Word 2016", "Microsoft® Word 2016"),
    ("r03", "2020", "Physics", "LaTeX with hyperref", "", "pdfTeX-1.40.21"),
    ("r04", "2020", "Physics", "", "", "Arbortext Advanced Print Publisher 11.1.4546/W Unicode"),
    ("r05", "2018", "Biology", "", "PScript5.dll Version 5.2.2", "Acrobat Distiller 10.0.0 (Windows)"),
    ("r06", "2018", "Medicine", "", "", ""),
)


def write_reports():
    out = FIXTURES / "reports"
    out.mkdir(parents=True, exist_ok=True)
    for i, (pid, statuses) in enumerate(REPORT_KEY.items()):
        if pid == "r06":
            write_json(out / f"{pid}.json", {"schema_version": 1, "paper_id": pid, "status": "ok", "rules": {
                name: WORDS[statuses[c]] for name, c in TRACKED.items()}})
            continue
        layout = "list" if pid == "r04" else "table"
        (out / f"{pid}.html").write_text(html_report(statuses, layout, "Passed" if i % 2 else "Failed"),
                                         encoding="utf-8")
    (out / "r07.html").write_text(
        "<html><body><h1>Accessibility Report</h1><p>The document is password-protected and could not be "
        "processed.</p></body></html>\n", encoding="utf-8")
    write_json(FIXTURES / "reports_key.json", {"readable": REPORT_KEY, "unreadable": ["r07"]})
    with open(FIXTURES / "reports_metadata.csv", "w", encoding="utf-8", newline="") as f:
        for row in REPORT_METADATA:
            f.write(",".join(f'"{c}"' if "," in c else c for c in row) + "\n")


# -- evaluation records -------------------------------------------------------


def overlap_record(i, annotator):
    return {
        "schema_version": 1, "paper_id": f"overlap{i:02d}", "annotator_id": annotator,
        "title_ok": ("yes", "yes", "partially", "no")[i % 4], "authors_ok": "yes",
        "abstract_ok": ("yes", "no")[i % 2], "has_equations": i % 2 == 0,
        "figures_present": i % 5, "figures_correct": max(i % 5 - i % 2, 0),
        "figure_captions_correct": i % 5,
        "tables_present": i % 3, "tables_correct": i % 3, "table_captions_correct": i % 3,
        "header_footer_errors": i % 7, "section_heading_errors": i % 4, "missing_paragraphs": i % 6,
        "bibliography_grade": ("all_correct", "half_correct", "incorrect", "no_bibliography")[i % 4],
        "inline_citation_grade": ("all_linked", "majority_linked", "none_linked")[i % 3],
        "readability": ("no_major_problems", "some_problems", "lots_of_problems")[i % 3],
        "field_of_study": "Physics",
    }


def write_evaluation():
    out = FIXTURES / "evaluation"
    write_json(out / "reference" / "records.json", reference_evaluation_records())
    for ann in ("A", "B"):
        for i in range(20):
            write_json(out / f"overlap_{ann}" / f"overlap{i:02d}.{ann}.json", overlap_record(i, ann))
    write_json(out / "disjoint" / "other.json", {**overlap_record(0, "C"), "paper_id": "elsewhere"})


if __name__ == "__main__":
    write_corpus()
    write_reports()
    write_evaluation()
    print(f"fixtures written under {FIXTURES}")
