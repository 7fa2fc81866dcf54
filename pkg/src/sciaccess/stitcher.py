"""Merge extracted text and extracted figures into a single ordered render tree.

Objects are placed after the paragraph that first mentions them. Each kind
(figures, tables) keeps its own queue sorted by number: the first mention of
number k flushes every not-yet-placed object of that kind numbered <= k to
the mentioning paragraph. Whatever is never flushed goes after the last body
paragraph, before the references.

Positions are ``(section_index, paragraph_index)`` pairs. Section -1 is the
abstract; paragraph -1 means "directly after the section heading".
"""

import re
from dataclasses import dataclass, replace
from urllib.parse import urlparse

from .diagnostics import Diagnostics
from .model import BibEntry, BibStructured, Kind, normalize_handle

RENDER_SCHEMA_VERSION = 1
NOT_EXTRACTED = "Not extracted; please refer to original document."


class PaperIdMismatch(ValueError):
    pass


def placeholder_text(kind, number=None):
    if kind is None:
        return f"Equation. {NOT_EXTRACTED}"
    label = kind.label if number is None else f"{kind.label} {number}"
    return f"{label}. {NOT_EXTRACTED}"


def object_anchor(kind, number, unnumbered_ordinal=None):
    if number is None:
        return f"obj-{kind.value}-u{unnumbered_ordinal}"
    return f"obj-{kind.value}-{number}"


def safe_id(text):
    # injective: anything outside [A-Za-z0-9-] is hex-escaped behind "_"
    return re.sub(r"[^A-Za-z0-9-]", lambda m: "_%x_" % ord(m.group()), text)


def section_anchor(index):
    return f"sec-{index}"


def bib_anchor(key):
    return f"bib-{safe_id(key)}"


def cite_anchor(key, section_index, n):
    section = "abs" if section_index < 0 else str(section_index)
    return f"cite-{safe_id(key)}-{section}-{n}"


# -- render tree types --------------------------------------------------------


@dataclass(frozen=True)
class CiteMark:
    start: int
    end: int
    bib_key: str | None
    anchor: str | None  # None for unresolved citations, rendered as plain text


@dataclass(frozen=True)
class RefMark:
    start: int
    end: int
    target: str | None


@dataclass(frozen=True)
class HeadingBlock:
    section_index: int
    anchor: str
    text: str
    numbering: str | None
    level: int


@dataclass(frozen=True)
class ParagraphBlock:
    section_index: int
    paragraph_index: int
    text: str
    cites: tuple = ()
    refs: tuple = ()


@dataclass(frozen=True)
class ObjectBlock:
    section_index: int
    anchor: str
    kind: Kind
    number: int | None
    caption: str
    image_path: str | None
    extracted: bool


@dataclass(frozen=True)
class PlaceholderBlock:
    """Stands in for an inferred-but-missing object; ``kind`` None means an equation."""

    section_index: int
    anchor: str
    kind: Kind | None
    number: int | None
    text: str


@dataclass(frozen=True)
class TocEntry:
    anchor: str
    text: str
    depth: int
    children: tuple = ()  # (anchor, label) pairs


@dataclass(frozen=True)
class LinkGraph:
    citation_links: tuple = ()  # (cite anchor, bib key)
    return_links: tuple = ()  # (bib key, ((section_index, cite anchor), ...))
    object_links: tuple = ()  # (ref id, object anchor)

    def returns_for(self, key):
        for k, links in self.return_links:
            if k == key:
                return links
        return ()


@dataclass(frozen=True)
class RenderTree:
    paper_id: str
    title: str
    authors: tuple
    lang: str
    abstract: tuple
    body: tuple
    toc: tuple
    link_graph: LinkGraph
    bibliography: tuple

    def blocks(self):
        yield from self.abstract
        yield from self.body


@dataclass(frozen=True)
class PlannedObject:
    anchor: str
    kind: Kind | None
    number: int | None
    position: tuple
    obj: object = None  # ExtractedObject, or None for an inferred placeholder
    order: int = 0


# -- mentions -----------------------------------------------------------------

_SCAN_RE = re.compile(r"\b(figure|fig\.|fig|table|tab\.|tab)\s*(\d+)(?!\d)", re.IGNORECASE)


def scan_handles(text):
    """Regex fallback for paragraphs without extractor reference spans."""
    out = []
    for m in _SCAN_RE.finditer(text):
        h = normalize_handle(f"{m.group(1)} {m.group(2)}")
        if h is not None:
            out.append((m.start(), m.end(), h))
    return out


def object_mentions(doc):
    """Map each paragraph position to its ``(start, end, handle)`` mentions, in reading order."""
    mentions = {}
    for s, j, p in doc.paragraphs():
        if p.object_refs:
            mentions[(s, j)] = [(r.start, r.end, r.handle) for r in p.object_refs]
        else:
            mentions[(s, j)] = scan_handles(p.text)
    return mentions


def _mention_sequence(doc, kind):
    for pos, found in object_mentions(doc).items():
        for _, _, h in found:
            if h is not None and h.kind is kind:
                yield pos, h.number


def fallback_position(doc):
    if doc.sections:
        last = doc.sections[-1]
        return (last.index, len(last.paragraphs) - 1)
    return (-1, len(doc.abstract) - 1)


def _flush(numbers, mentions, fallback):
    """Position for each object number of one kind.

    ``mentions`` is the kind's ``(position, number)`` sequence in reading
    order.  The first mention of k flushes every queued number <= k to that
    position; the flush then carries on through queued numbers that are never
    mentioned anywhere but lie below the highest mentioned number, so an
    unmentioned object sits with its predecessor.  Whatever is left goes to
    ``fallback``.
    """
    mentions = list(mentions)
    mentioned = {k for _, k in mentions}
    top = max(mentioned, default=0)
    queue = sorted(set(numbers))
    where = {}
    for pos, k in mentions:
        if not queue or queue[0] > k:
            continue
        while queue and queue[0] <= k:
            where[queue.pop(0)] = pos
        while queue and queue[0] not in mentioned and queue[0] < top:
            where[queue.pop(0)] = pos
    for n in queue:
        where[n] = fallback
    return where


def _kind_positions(doc, figs, kind, fallback):
    have = [o.number for o in figs.objects if o.kind is kind and o.number is not None]
    numbers = set(have) | set(inferred_missing(doc, figs, kind))
    return _flush(numbers, _mention_sequence(doc, kind), fallback)


def _sort_key(item):
    kind_rank = -1 if item.kind is None else item.kind.rank
    return (item.position, kind_rank, item.number is None, item.number or 0, item.order)


def place_objects(doc, figs):
    """Placement plan for every manifest object, sorted in reading order."""
    fallback = fallback_position(doc)
    plan = []
    for kind in Kind:
        objs = [o for o in figs.objects if o.kind is kind]
        numbered = {o.number: o for o in objs if o.number is not None}
        where = _kind_positions(doc, figs, kind, fallback)
        for n, o in numbered.items():
            plan.append(PlannedObject(object_anchor(kind, n), kind, n, where[n], o))
        unnumbered = [o for o in objs if o.number is None]
        for i, o in enumerate(unnumbered, 1):
            plan.append(PlannedObject(object_anchor(kind, None, i), kind, None, fallback, o, order=i))
    return sorted(plan, key=_sort_key)


def inferred_missing(doc, figs, kind):
    """Numbers of ``kind`` that are mentioned, or interior to the extracted range, but absent."""
    have = {o.number for o in figs.objects if o.kind is kind and o.number is not None}
    mentioned = {k for _, k in _mention_sequence(doc, kind)}
    interior = set(range(min(have) + 1, max(have))) if have else set()
    return sorted((mentioned | interior) - have)


def insert_placeholders(doc, figs, plan):
    fallback = fallback_position(doc)
    out = list(plan)
    for kind in Kind:
        missing = inferred_missing(doc, figs, kind)
        if not missing:
            continue
        where = _kind_positions(doc, figs, kind, fallback)
        out.extend(PlannedObject(object_anchor(kind, n), kind, n, where[n]) for n in missing)
    for i, eq in enumerate(doc.equation_slots, 1):
        out.append(PlannedObject(f"eq-{i}", None, None, (eq.section_index, eq.after_paragraph), order=i))
    return sorted(out, key=_sort_key)


# -- links --------------------------------------------------------------------


def build_links(doc, targets=None):
    """Citation links, per-section return links, and object-reference links.

    Returns ``(LinkGraph, marks)`` where ``marks`` maps a paragraph position to
    its ``(cites, refs)`` mark tuples for the emitter.
    """
    citation_links, object_links = [], []
    first_in_section = {}  # key -> {section: anchor}
    counters = {}
    marks = {}
    mentions = object_mentions(doc)
    for s, j, p in doc.paragraphs():
        cites = []
        for c in p.citation_spans:
            if not c.resolved:
                cites.append(CiteMark(c.start, c.end, c.bib_key, None))
                continue
            n = counters[(c.bib_key, s)] = counters.get((c.bib_key, s), 0) + 1
            anchor = cite_anchor(c.bib_key, s, n)
            cites.append(CiteMark(c.start, c.end, c.bib_key, anchor))
            citation_links.append((anchor, c.bib_key))
            first_in_section.setdefault(c.bib_key, {}).setdefault(s, anchor)
        refs = []
        for n, (start, end, h) in enumerate(mentions[(s, j)], 1):
            if any(start < c.end and c.start < end for c in cites):
                continue
            target = None
            if h is not None:
                anchor = object_anchor(h.kind, h.number)
                if targets is None or anchor in targets:
                    target = anchor
                    object_links.append((f"ref-{'abs' if s < 0 else s}-{j}-{n}", anchor))
            refs.append(RefMark(start, end, target))
        marks[(s, j)] = (tuple(cites), tuple(refs))
    return_links = tuple(
        (b.key, tuple(sorted(first_in_section[b.key].items())))
        for b in doc.bibliography
        if b.key in first_in_section
    )
    return LinkGraph(tuple(citation_links), return_links, tuple(object_links)), marks


# -- bibliography URLs --------------------------------------------------------

_URL_CHAR = r'(?:[^\s<>"-]|-(?!\s))'
URL_RE = re.compile(rf"https?://{_URL_CHAR}+(?:-\s+{_URL_CHAR}+)*", re.IGNORECASE)
_DOI_RE = re.compile(r"\b(10\.\d{4,9}/[^\s<>\"]+)")
_TRAILING = ".,;:'\"]}>"


def strip_trailing(url):
    while url and (url[-1] in _TRAILING or (url[-1] == ")" and url.count("(") < url.count(")"))):
        url = url[:-1]
    return url


def heal_url(candidate):
    return strip_trailing(re.sub(r"-\s+", "", candidate.strip()))


def is_absolute_url(url):
    if not url or any(ch.isspace() for ch in url) or any(ch in url for ch in '<>"'):
        return False
    try:
        parsed = urlparse(url)
        host = parsed.hostname
        parsed.port
    except ValueError:
        return False
    if parsed.scheme.lower() not in ("http", "https") or not host:
        return False
    return "." in host or host == "localhost"


def url_candidates(entry):
    if entry.url:
        yield heal_url(entry.url)
    for m in URL_RE.finditer(entry.raw_text):
        yield heal_url(m.group())
    for m in _DOI_RE.finditer(entry.raw_text):
        yield "https://doi.org/" + strip_trailing(m.group(1))
    if entry.structured is not None and entry.structured.doi:
        yield "https://doi.org/" + entry.structured.doi.strip()


def repair_urls(entry):
    """Recover or heal the entry URL; the result is a valid absolute URL or None."""
    if entry.url and is_absolute_url(entry.url):
        return entry
    for cand in url_candidates(entry):
        if is_absolute_url(cand):
            return replace(entry, url=cand)
    return replace(entry, url=None) if entry.url else entry


# -- TOC and assembly ---------------------------------------------------------


def heading_levels(sections):
    """HTML heading level per section: depth + 1, never more than one below the previous."""
    levels, prev = [], 1
    for s in sections:
        level = min(s.depth + 1, 6, prev + 1)
        levels.append(level)
        prev = level
    return levels


def object_label(block):
    if block.kind is None:
        return "Equation"
    label = block.kind.label if block.number is None else f"{block.kind.label} {block.number}"
    missing = isinstance(block, PlaceholderBlock) or not block.extracted
    return f"{label} (not extracted)" if missing else label


def build_toc(body):
    entries = []
    for b in body:
        if isinstance(b, HeadingBlock):
            entries.append([b.anchor, b.text, b.level - 1, []])
        elif isinstance(b, (ObjectBlock, PlaceholderBlock)) and b.kind is not None and entries:
            entries[-1][3].append((b.anchor, object_label(b)))
    return tuple(TocEntry(a, t, d, tuple(c)) for a, t, d, c in entries)


def heading_display(section):
    text = section.heading_text.strip() or "Untitled section"
    return f"{section.numbering} {text}" if section.numbering else text


def _slot_blocks(items, section_index):
    out = []
    for it in items:
        if it.kind is None:
            out.append(PlaceholderBlock(section_index, it.anchor, None, None, placeholder_text(None)))
        elif it.obj is None:
            out.append(PlaceholderBlock(section_index, it.anchor, it.kind, it.number,
                                        placeholder_text(it.kind, it.number)))
        else:
            o = it.obj
            out.append(ObjectBlock(section_index, it.anchor, o.kind, o.number, o.caption, o.image_path, o.extracted))
    return out


def _assemble(doc, plan, marks):
    slots = {}
    for it in plan:
        slots.setdefault(it.position, []).append(it)

    def region(s, paragraphs):
        out = _slot_blocks(slots.pop((s, -1), []), s)
        for j, p in enumerate(paragraphs):
            cites, refs = marks[(s, j)]
            out.append(ParagraphBlock(s, j, p.text, cites, refs))
            out.extend(_slot_blocks(slots.pop((s, j), []), s))
        return out

    abstract = region(-1, doc.abstract)
    body = []
    for sec, level in zip(doc.sections, heading_levels(doc.sections)):
        body.append(HeadingBlock(sec.index, section_anchor(sec.index), heading_display(sec), sec.numbering, level))
        body.extend(region(sec.index, sec.paragraphs))
    assert not slots, f"unplaced positions {sorted(slots)}"
    return tuple(abstract), tuple(body)


def merge(doc, figs, *, allow_id_mismatch=False, lang="en", diag=None):
    """Stitch ``doc`` and ``figs`` into a ``RenderTree``."""
    diag = diag if diag is not None else Diagnostics()
    if figs.paper_id is not None and figs.paper_id != doc.paper_id:
        if not allow_id_mismatch:
            raise PaperIdMismatch(f"manifest is for {figs.paper_id!r}, document is {doc.paper_id!r}")
        diag.warn("paper_id_mismatch", "merging manifest for a different paper_id", manifest=figs.paper_id)
    plan = insert_placeholders(doc, figs, place_objects(doc, figs))
    for it in plan:
        if it.position[0] < 0 and it.kind is not None:
            diag.warn("object_in_abstract", f"{it.anchor} placed inside the abstract", anchor=it.anchor)
        if it.kind is not None and it.obj is None:
            diag.warn("placeholder", f"{it.anchor} inferred but not extracted", anchor=it.anchor)
    targets = {it.anchor for it in plan}
    links, marks = build_links(doc, targets)
    abstract, body = _assemble(doc, plan, marks)
    return RenderTree(
        paper_id=doc.paper_id,
        title=doc.title,
        authors=tuple(a.full() for a in doc.authors),
        lang=lang,
        abstract=abstract,
        body=body,
        toc=build_toc(body),
        link_graph=links,
        bibliography=tuple(repair_urls(b) for b in doc.bibliography),
    )


# -- .render.json -------------------------------------------------------------


def _block_to_json(b):
    if isinstance(b, HeadingBlock):
        return {"type": "heading", "section_index": b.section_index, "anchor": b.anchor, "text": b.text,
                "numbering": b.numbering, "level": b.level}
    if isinstance(b, ParagraphBlock):
        return {"type": "paragraph", "section_index": b.section_index, "paragraph_index": b.paragraph_index,
                "text": b.text,
                "cites": [[c.start, c.end, c.bib_key, c.anchor] for c in b.cites],
                "refs": [[r.start, r.end, r.target] for r in b.refs]}
    if isinstance(b, ObjectBlock):
        return {"type": "object", "section_index": b.section_index, "anchor": b.anchor, "kind": b.kind.value,
                "number": b.number, "caption": b.caption, "image_path": b.image_path, "extracted": b.extracted}
    return {"type": "placeholder", "section_index": b.section_index, "anchor": b.anchor,
            "kind": None if b.kind is None else b.kind.value, "number": b.number, "text": b.text}


def _block_from_json(d):
    t = d["type"]
    if t == "heading":
        return HeadingBlock(d["section_index"], d["anchor"], d["text"], d["numbering"], d["level"])
    if t == "paragraph":
        return ParagraphBlock(d["section_index"], d["paragraph_index"], d["text"],
                              tuple(CiteMark(*c) for c in d["cites"]), tuple(RefMark(*r) for r in d["refs"]))
    if t == "object":
        return ObjectBlock(d["section_index"], d["anchor"], Kind(d["kind"]), d["number"], d["caption"],
                           d["image_path"], d["extracted"])
    if t == "placeholder":
        kind = None if d["kind"] is None else Kind(d["kind"])
        return PlaceholderBlock(d["section_index"], d["anchor"], kind, d["number"], d["text"])
    raise ValueError(f"unknown block type {t!r}")


def render_tree_to_json(tree):
    lg = tree.link_graph
    return {
        "schema_version": RENDER_SCHEMA_VERSION,
        "paper_id": tree.paper_id,
        "title": tree.title,
        "authors": list(tree.authors),
        "lang": tree.lang,
        "abstract": [_block_to_json(b) for b in tree.abstract],
        "body": [_block_to_json(b) for b in tree.body],
        "toc": [{"anchor": e.anchor, "text": e.text, "depth": e.depth, "children": [list(c) for c in e.children]}
                for e in tree.toc],
        "link_graph": {
            "citation_links": [list(x) for x in lg.citation_links],
            "return_links": {k: [list(x) for x in links] for k, links in lg.return_links},
            "object_links": [list(x) for x in lg.object_links],
        },
        "bibliography": [
            {"key": b.key, "raw_text": b.raw_text, "url": b.url,
             "structured": None if b.structured is None else {
                 "authors": list(b.structured.authors), "title": b.structured.title, "venue": b.structured.venue,
                 "year": b.structured.year, "doi": b.structured.doi}}
            for b in tree.bibliography
        ],
    }


def render_tree_from_json(data):
    if data.get("schema_version") != RENDER_SCHEMA_VERSION:
        raise ValueError(f"unsupported render schema_version {data.get('schema_version')!r}")
    lg = data["link_graph"]
    bib = []
    for b in data["bibliography"]:
        st = b["structured"]
        if st is not None:
            st = BibStructured(tuple(st["authors"]), st["title"], st["venue"], st["year"], st["doi"])
        bib.append(BibEntry(b["key"], b["raw_text"], b["url"], st))
    return RenderTree(
        paper_id=data["paper_id"],
        title=data["title"],
        authors=tuple(data["authors"]),
        lang=data["lang"],
        abstract=tuple(_block_from_json(b) for b in data["abstract"]),
        body=tuple(_block_from_json(b) for b in data["body"]),
        toc=tuple(TocEntry(e["anchor"], e["text"], e["depth"], tuple(tuple(c) for c in e["children"]))
                  for e in data["toc"]),
        link_graph=LinkGraph(
            tuple(tuple(x) for x in lg["citation_links"]),
            tuple((k, tuple(tuple(x) for x in v)) for k, v in lg["return_links"].items()),
            tuple(tuple(x) for x in lg["object_links"]),
        ),
        bibliography=tuple(bib),
    )
