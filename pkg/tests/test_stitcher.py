import json
import re

import pytest
from hypothesis import given
from hypothesis import strategies as st

from builders import CORPUS, random_document, seeded
from sciaccess.model import (
    BibEntry,
    BibStructured,
    FigureManifest,
    Kind,
    Section,
    parse_extraction,
    parse_figures,
)
from sciaccess.stitcher import (
    NOT_EXTRACTED,
    HeadingBlock,
    ObjectBlock,
    PaperIdMismatch,
    ParagraphBlock,
    PlaceholderBlock,
    build_links,
    heading_levels,
    is_absolute_url,
    merge,
    placeholder_text,
    render_tree_from_json,
    render_tree_to_json,
    repair_urls,
    safe_id,
    scan_handles,
)


def load(stem, figures=True):
    doc = parse_extraction((CORPUS / "fulltext" / f"{stem}.json").read_bytes())
    path = CORPUS / "figures" / f"{stem}.json"
    figs = parse_figures(path.read_bytes()) if figures and path.exists() else FigureManifest(None, ())
    return doc, figs


def object_positions(tree):
    """anchor -> (section, paragraph) the object block follows, read off the tree."""
    out = {}
    for region in (tree.abstract, tree.body):
        pos = None
        for b in region:
            if isinstance(b, HeadingBlock):
                pos = (b.section_index, -1)
            elif isinstance(b, ParagraphBlock):
                pos = (b.section_index, b.paragraph_index)
            elif b.kind is not None:
                out[b.anchor] = pos if pos is not None else (-1, -1)
    return out


# -- independent placement oracle ---------------------------------------------


def oracle_placement(fulltext, manifest):
    """Closed-form placement, computed straight off the raw JSON.

    A numbered object that is never mentioned but lies below the highest
    mentioned number sits with its predecessor; any other object goes after the
    first paragraph mentioning a number >= its own, or after the last paragraph.
    """
    paragraphs = [((-1, j), p) for j, p in enumerate(fulltext["abstract"])]
    sec, j, last_key = -1, 0, None
    for p in fulltext["body_text"]:
        key = (p.get("section"), p.get("sec_num"))
        if key != last_key:
            sec, j, last_key = sec + 1, 0, key
        paragraphs.append(((sec, j), p))
        j += 1
    fallback = paragraphs[-1][0]
    mentions = {"figure": [], "table": []}
    for pos, p in paragraphs:
        for r in p["ref_spans"]:
            word, num = p["text"][r["start"]:r["end"]].split()
            mentions[word.lower()].append((pos, int(num)))
    expected = {}
    for kind in ("figure", "table"):
        have = {o["number"] for o in manifest["objects"] if o["kind"] == kind}
        mentioned = {k for _, k in mentions[kind]}
        interior = set(range(min(have) + 1, max(have))) if have else set()
        top = max(mentioned, default=0)
        numbers = sorted(have | mentioned | interior)
        where = {}
        for i, n in enumerate(numbers):
            if i > 0 and n not in mentioned and n < top:
                where[n] = where[numbers[i - 1]]
            else:
                where[n] = next((pos for pos, k in mentions[kind] if k >= n), fallback)
            expected[f"obj-{kind}-{n}"] = where[n]
    return expected


def test_worked_example_placement():
    doc, figs = load("02-placement")
    pos = object_positions(merge(doc, figs))
    assert pos == {"obj-figure-1": (0, 0), "obj-figure-2": (0, 0), "obj-figure-3": (0, 1)}


@given(st.integers(0, 2**32 - 1))
def test_placement_matches_oracle(seed):
    text, manifest = random_document(seeded(seed))
    tree = merge(parse_extraction(json.dumps(text)), parse_figures(json.dumps(manifest)))
    assert object_positions(tree) == oracle_placement(text, manifest)


@given(st.integers(0, 2**32 - 1))
def test_slot_order_is_figures_then_tables_by_number(seed):
    text, manifest = random_document(seeded(seed))
    tree = merge(parse_extraction(json.dumps(text)), parse_figures(json.dumps(manifest)))
    run = []
    for b in list(tree.blocks()) + [None]:
        if isinstance(b, (ObjectBlock, PlaceholderBlock)):
            run.append((b.kind.rank, b.number))
            continue
        assert run == sorted(run)
        run = []


def synthetic(paragraph_mentions, objects):
    """Document with one section whose paragraph j mentions ``paragraph_mentions[j]``."""
    body = []
    for mentions in paragraph_mentions:
        text, refs = "Text", []
        for m in mentions:
            text += " "
            refs.append({"start": len(text), "end": len(text) + len(m)})
            text += m
        body.append({"text": text + ".", "section": "Body", "sec_num": "7", "ref_spans": refs})
    doc = parse_extraction(json.dumps({"paper_id": "s", "title": "t", "body_text": body}))
    figs = parse_figures(json.dumps({"paper_id": "s", "objects": [
        {"kind": k, "number": n, "caption": "", "image_path": f"{k}{n}.png"} for k, n in objects]}))
    return object_positions(merge(doc, figs))


def test_later_mention_flushes_lower_numbers():
    pos = synthetic([["Figure 2"], [], [], ["Figure 1"]], [("figure", 1), ("figure", 2)])
    assert pos == {"obj-figure-1": (0, 0), "obj-figure-2": (0, 0)}


def test_kinds_are_independent():
    pos = synthetic([[], [], ["Table 1"], [], ["Figure 1"]], [("figure", 1), ("table", 1)])
    assert pos == {"obj-table-1": (0, 2), "obj-figure-1": (0, 4)}


def test_never_mentioned_trailing_object_goes_last():
    pos = synthetic([["Figure 1"], ["Figure 2"], []], [("figure", k) for k in (1, 2, 3, 4)])
    assert pos["obj-figure-4"] == (0, 2)
    assert pos["obj-figure-3"] == (0, 2)


def test_placeholder_sentences():
    assert placeholder_text(Kind.FIGURE, 2) == "Figure 2. Not extracted; please refer to original document."
    assert placeholder_text(Kind.TABLE, 7) == "Table 7. Not extracted; please refer to original document."
    assert placeholder_text(None) == "Equation. Not extracted; please refer to original document."


def test_interior_gap_and_mentioned_missing_placeholders():
    doc, figs = load("01-three-sections")
    tree = merge(doc, figs)
    placeholders = {b.anchor: b.text for b in tree.blocks() if isinstance(b, PlaceholderBlock)}
    assert placeholders["obj-figure-2"].endswith(NOT_EXTRACTED)
    assert placeholders["eq-1"] == placeholder_text(None)

    doc, figs = load("03-no-manifest", figures=False)
    tree = merge(doc, figs)
    anchors = {b.anchor for b in tree.blocks() if isinstance(b, PlaceholderBlock)}
    assert anchors == {"obj-figure-1", "obj-figure-2", "obj-table-2"}


def test_unmentioned_objects_fall_back_to_end():
    doc, figs = load("05-abstract-only")
    assert object_positions(merge(doc, figs)) == {"obj-figure-1": (-1, 1)}
    doc, figs = load("07-unnumbered")
    pos = object_positions(merge(doc, figs))
    assert pos["obj-figure-u1"] == (1, 0)


def test_reference_via_ref_entries():
    doc, figs = load("09-envelope")
    pos = object_positions(merge(doc, figs))
    assert pos == {"obj-figure-1": (0, 0), "obj-figure-2": (0, 0)}


def test_paper_id_mismatch():
    doc, _ = load("02-placement")
    other = FigureManifest("someone-else", ())
    with pytest.raises(PaperIdMismatch):
        merge(doc, other)
    merge(doc, other, allow_id_mismatch=True)


def test_scan_handles_fallback():
    found = scan_handles("As Fig. 2 and table 10 show, figure12 too; not Figure.")
    assert [(h.kind, h.number) for _, _, h in found] == [(Kind.FIGURE, 2), (Kind.TABLE, 10), (Kind.FIGURE, 12)]


# -- links --------------------------------------------------------------------


def test_return_links_first_mention_per_section():
    doc, _ = load("01-three-sections")
    graph, _ = build_links(doc)
    assert graph.returns_for("BIBREF0") == ((1, "cite-BIBREF0-1-1"), (2, "cite-BIBREF0-2-1"))
    assert graph.returns_for("BIBREF1") == ((2, "cite-BIBREF1-2-1"),)


@given(st.integers(0, 2**32 - 1))
def test_every_citation_has_same_section_return_link(seed):
    text, _ = random_document(seeded(seed))
    doc = parse_extraction(json.dumps(text))
    graph, marks = build_links(doc)
    returns = {key: dict(links) for key, links in graph.return_links}
    for anchor, key in graph.citation_links:
        section = anchor.rsplit("-", 2)[1]
        s = -1 if section == "abs" else int(section)
        assert s in returns[key]
        first = [c.anchor for (sec, _), (cites, _) in sorted(marks.items()) if sec == s
                 for c in cites if c.bib_key == key][0]
        assert returns[key][s] == first


@given(st.text(min_size=1, max_size=30))
def test_safe_id_is_injective_and_clean(text):
    sid = safe_id(text)
    assert re.fullmatch(r"[A-Za-z0-9_-]+", sid)
    assert safe_id(text + "x") != sid


# -- bibliography URLs --------------------------------------------------------


@pytest.mark.parametrize("raw, url", [
    ("See http://www.example.com/apollo- guidance- computer.", "http://www.example.com/apolloguidancecomputer"),
    ("Doe. https://example.org/acc- essibility/report.pdf", "https://example.org/accessibility/report.pdf"),
    ("Available at https://arxiv.org/abs/2105.00076).", "https://arxiv.org/abs/2105.00076"),
    ("doi:10.1145/3441852.3471207.", "https://doi.org/10.1145/3441852.3471207"),
    ("No link at all.", None),
    ("Broken http://nodot/ only", None),
])
def test_repair_urls(raw, url):
    assert repair_urls(BibEntry("k", raw)).url == url


def test_repair_prefers_valid_given_url_and_doi_field():
    e = BibEntry("k", "text", "https://valid.example.com/x")
    assert repair_urls(e) is e
    e = BibEntry("k", "text", None, BibStructured(doi="10.1/abc"))
    assert repair_urls(e).url == "https://doi.org/10.1/abc"


@given(st.text(max_size=80))
def test_repaired_url_is_absolute_or_none(raw):
    url = repair_urls(BibEntry("k", raw)).url
    assert url is None or is_absolute_url(url)


# -- headings -----------------------------------------------------------------


def test_heading_levels_never_skip():
    secs = [Section(i, "h", n, ()) for i, n in enumerate(["1", "1.1.1", "2", None, "3.1.1.1.1.1.1"])]
    assert heading_levels(secs) == [2, 3, 2, 2, 3]


@given(st.lists(st.one_of(st.none(), st.lists(st.integers(1, 9), min_size=1, max_size=8)
                          .map(lambda xs: ".".join(map(str, xs)))), max_size=20))
def test_heading_levels_property(numberings):
    levels = heading_levels([Section(i, "h", n, ()) for i, n in enumerate(numberings)])
    prev = 1
    for lvl in levels:
        assert 2 <= lvl <= 6 and lvl <= prev + 1
        prev = lvl


def test_toc_lists_sections_and_objects():
    doc, figs = load("01-three-sections")
    toc = merge(doc, figs).toc
    assert [e.text for e in toc] == ["1 Introduction", "2 Related Work", "3 Method"]
    assert [label for _, label in toc[0].children] == ["Figure 1", "Figure 2 (not extracted)"]
    assert [label for _, label in toc[1].children] == []
    assert [label for _, label in toc[2].children] == ["Figure 3", "Table 1"]


def test_empty_heading_is_labelled():
    doc, figs = load("10-messy")
    headings = [b.text for b in merge(doc, figs).body if isinstance(b, HeadingBlock)]
    assert headings == ["Overview", "Untitled section", "Appendix"]


@pytest.mark.parametrize("stem", sorted(p.stem for p in (CORPUS / "fulltext").glob("*.json")))
def test_render_tree_json_roundtrip(stem):
    doc, figs = load(stem)
    tree = merge(doc, figs)
    data = json.loads(json.dumps(render_tree_to_json(tree)))
    assert render_tree_from_json(data) == tree
