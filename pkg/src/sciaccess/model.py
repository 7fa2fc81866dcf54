"""Document model for extractor output, and parsers for the two input formats.

Full text arrives in the S2ORC JSON envelope (``title``, ``authors``,
``abstract``, ``body_text`` with ``cite_spans``/``ref_spans``,
``bib_entries``, ``ref_entries``). Figures and tables arrive as a separate
manifest, see ``docs/formats.md``.
"""

import hashlib
import json
import re
from dataclasses import dataclass
from enum import Enum

from .diagnostics import Diagnostics

MANIFEST_SCHEMA_VERSION = 1


class MalformedInput(ValueError):
    pass


class EmptyDocument(ValueError):
    """The extractor produced no title, no abstract and no sections."""


class Kind(str, Enum):
    FIGURE = "figure"
    TABLE = "table"

    @property
    def label(self):
        return self.value.capitalize()

    @property
    def rank(self):
        # figures are emitted before tables when flushed into the same slot
        return 0 if self is Kind.FIGURE else 1


@dataclass(frozen=True)
class Handle:
    kind: Kind
    number: int

    def render(self):
        return f"{self.kind.label} {self.number}"


_HANDLE_WORDS = {"figure": Kind.FIGURE, "fig": Kind.FIGURE, "table": Kind.TABLE, "tab": Kind.TABLE}
_HANDLE_RE = re.compile(r"^\s*(figure|fig\.?|table|tab\.?)\s*(\d+)\s*$", re.IGNORECASE)
_CAPTION_PREFIX_RE = re.compile(r"^\s*(figure|fig\.?|table|tab\.?)\s*(\d+)\b", re.IGNORECASE)


def normalize_handle(raw):
    """Return the ``Handle`` named by ``raw`` ("Fig. 1", "TABLE 4"), or None."""
    if not isinstance(raw, str):
        return None
    m = _HANDLE_RE.match(raw)
    if not m:
        return None
    return Handle(_HANDLE_WORDS[m.group(1).lower().rstrip(".")], int(m.group(2)))


@dataclass(frozen=True)
class AuthorName:
    first: str = ""
    middle: tuple = ()
    last: str = ""
    suffix: str = ""

    def full(self):
        parts = [self.first, *self.middle, self.last, self.suffix]
        return " ".join(p for p in parts if p)


@dataclass(frozen=True)
class CitationSpan:
    start: int
    end: int
    text: str
    bib_key: str | None
    resolved: bool


@dataclass(frozen=True)
class ObjectRef:
    start: int
    end: int
    text: str
    ref_id: str | None
    handle: Handle | None

    @property
    def unparseable(self):
        return self.handle is None


@dataclass(frozen=True)
class Paragraph:
    text: str
    citation_spans: tuple = ()
    object_refs: tuple = ()


@dataclass(frozen=True)
class Section:
    index: int
    heading_text: str
    numbering: str | None
    paragraphs: tuple = ()

    @property
    def depth(self):
        return len(self.numbering.split(".")) if self.numbering else 1


@dataclass(frozen=True)
class BibStructured:
    authors: tuple = ()
    title: str | None = None
    venue: str | None = None
    year: int | None = None
    doi: str | None = None


@dataclass(frozen=True)
class BibEntry:
    key: str
    raw_text: str
    url: str | None = None
    structured: BibStructured | None = None


@dataclass(frozen=True)
class EquationSlot:
    """A display equation that was detected but not extracted.

    ``after_paragraph`` is -1 when the equation precedes the first paragraph
    of its section.
    """

    section_index: int
    after_paragraph: int
    label: str | None = None


@dataclass(frozen=True)
class ExtractedDocument:
    paper_id: str
    title: str
    authors: tuple
    abstract: tuple
    sections: tuple
    bibliography: tuple
    equation_slots: tuple
    source_hash: str

    def bib_keys(self):
        return {b.key for b in self.bibliography}

    def paragraphs(self):
        """Yield ``(section_index, paragraph_index, paragraph)``; the abstract is section -1."""
        for j, p in enumerate(self.abstract):
            yield -1, j, p
        for s in self.sections:
            for j, p in enumerate(s.paragraphs):
                yield s.index, j, p


@dataclass(frozen=True)
class ExtractedObject:
    kind: Kind
    number: int | None
    caption: str
    image_path: str | None = None
    extracted: bool = True

    @property
    def handle(self):
        return None if self.number is None else Handle(self.kind, self.number)


@dataclass(frozen=True)
class FigureManifest:
    paper_id: str | None
    objects: tuple = ()


# -- decoding -----------------------------------------------------------------


def _decode(raw, diag):
    if isinstance(raw, str):
        return raw
    try:
        return raw.decode("utf-8")
    except UnicodeDecodeError:
        text = raw.decode("utf-8", errors="replace")
        replaced = text.count("\ufffd") - raw.count("\ufffd".encode("utf-8"))
        diag.warn("invalid_utf8", "invalid UTF-8 sequences replaced", count=replaced)
        return text


def _load_json(raw, diag):
    text = _decode(raw, diag)
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise MalformedInput(f"not valid JSON: {e}") from None


def _str(value):
    if value is None:
        return ""
    return value if isinstance(value, str) else str(value)


def _int_or_none(value):
    if isinstance(value, bool):
        return None
    if isinstance(value, int):
        return value
    if isinstance(value, str) and value.strip().isdigit():
        return int(value.strip())
    return None


# -- spans --------------------------------------------------------------------


def _clean_spans(raw_spans, text, what, diag):
    """Bounds-check spans, resolve overlaps (longer span wins), sort by start."""
    spans = []
    for s in raw_spans or ():
        if not isinstance(s, dict):
            diag.warn("bad_span", f"{what} span is not an object")
            continue
        start, end = _int_or_none(s.get("start")), _int_or_none(s.get("end"))
        if start is None or end is None or not 0 <= start < end <= len(text):
            diag.warn("span_out_of_bounds", f"{what} span dropped", start=s.get("start"), end=s.get("end"))
            continue
        spans.append((start, end, s))
    kept = []
    for start, end, s in sorted(spans, key=lambda t: (-(t[1] - t[0]), t[0])):
        if any(start < e and b < end for b, e, _ in kept):
            diag.warn("span_overlap", f"shorter overlapping {what} span dropped", start=start, end=end)
            continue
        kept.append((start, end, s))
    return sorted(kept, key=lambda t: t[0])


def _parse_paragraph(entry, bib_keys, ref_entries, diag):
    text = _str(entry.get("text"))
    cites = []
    for start, end, s in _clean_spans(entry.get("cite_spans"), text, "citation", diag):
        key = s.get("ref_id")
        key = None if key is None else _str(key)
        resolved = key is not None and key in bib_keys
        if not resolved:
            diag.warn("unresolved_citation", "citation span has no bibliography entry", ref_id=key)
        cites.append(CitationSpan(start, end, text[start:end], key, resolved))
    refs = []
    for start, end, s in _clean_spans(entry.get("ref_spans"), text, "object", diag):
        ref_id = s.get("ref_id")
        ref_id = None if ref_id is None else _str(ref_id)
        span_text = text[start:end]
        handle = normalize_handle(span_text) or normalize_handle(s.get("handle"))
        if handle is None and ref_id in ref_entries:
            target = ref_entries[ref_id] or {}
            kind = {"figure": Kind.FIGURE, "table": Kind.TABLE}.get(_str(target.get("type")).lower())
            num = _int_or_none(target.get("num"))
            if kind is not None and num is not None:
                handle = Handle(kind, num)
        refs.append(ObjectRef(start, end, span_text, ref_id, handle))
    return Paragraph(text, tuple(cites), tuple(refs))


def _is_equation(entry):
    if _str(entry.get("type")).lower() == "equation":
        return True
    return _str(entry.get("text")).strip() == "EQUATION"


# -- full text ----------------------------------------------------------------

_NUMBERING_RE = re.compile(r"^\d+(\.\d+)*$")


def _numbering(sec_num, diag):
    if sec_num is None:
        return None
    s = _str(sec_num).strip().rstrip(".")
    if not s:
        return None
    if not _NUMBERING_RE.match(s):
        diag.warn("bad_numbering", "section number is not a dotted digit sequence", sec_num=sec_num)
        return None
    return s


def _parse_author(a):
    if isinstance(a, str):
        parts = a.split()
        if not parts:
            return AuthorName()
        return AuthorName(first=parts[0] if len(parts) > 1 else "", middle=tuple(parts[1:-1]), last=parts[-1])
    if isinstance(a, dict):
        middle = a.get("middle") or ()
        if isinstance(middle, str):
            middle = (middle,)
        return AuthorName(_str(a.get("first")), tuple(_str(m) for m in middle), _str(a.get("last")), _str(a.get("suffix")))
    return AuthorName()


def _compose_raw(b, authors):
    bits = []
    if authors:
        bits.append(", ".join(authors))
    for k in ("title", "venue"):
        if b.get(k):
            bits.append(_str(b[k]))
    if b.get("year"):
        bits.append(_str(b["year"]))
    return ". ".join(bits) + ("." if bits else "")


def _parse_bib_entry(key, b):
    if not isinstance(b, dict):
        return BibEntry(key, _str(b))
    authors = tuple(
        _parse_author(a).full() if not isinstance(a, str) else a for a in (b.get("authors") or ())
    )
    doi = b.get("doi")
    other = b.get("other_ids") or {}
    if not doi and isinstance(other, dict) and other.get("DOI"):
        dois = other["DOI"]
        doi = dois[0] if isinstance(dois, list) else dois
    structured = BibStructured(
        authors=authors,
        title=b.get("title") or None,
        venue=b.get("venue") or None,
        year=_int_or_none(b.get("year")),
        doi=_str(doi) or None,
    )
    if structured == BibStructured():
        structured = None
    url = b.get("url")
    if not url:
        for u in b.get("urls") or ():
            u = u.get("url") if isinstance(u, dict) else u
            if u:
                url = u
                break
    raw_text = _str(b.get("raw_text")) or _compose_raw(b, authors)
    return BibEntry(key, raw_text, _str(url) or None, structured)


def parse_extraction(raw, diag=None):
    """Parse S2ORC-shaped full-text JSON bytes into an ``ExtractedDocument``."""
    diag = diag if diag is not None else Diagnostics()
    data = _load_json(raw, diag)
    if not isinstance(data, dict):
        raise MalformedInput("top-level JSON value must be an object")
    if data.get("paper_id") in (None, ""):
        raise MalformedInput("missing paper_id")
    body = data.get("pdf_parse") if isinstance(data.get("pdf_parse"), dict) else data
    for k in ("abstract", "body_text"):
        if body.get(k) is not None and not isinstance(body.get(k), (list, str)):
            raise MalformedInput(f"{k} must be a list")
    bib_raw = body.get("bib_entries") or {}
    if not isinstance(bib_raw, (dict, list)):
        raise MalformedInput("bib_entries must be an object")
    ref_entries = body.get("ref_entries") or {}
    if not isinstance(ref_entries, dict):
        raise MalformedInput("ref_entries must be an object")

    bibliography, seen = [], set()
    items = bib_raw.items() if isinstance(bib_raw, dict) else (
        (_str((b or {}).get("ref_id") or (b or {}).get("key")), b) for b in bib_raw
    )
    for key, b in items:
        key = _str(key)
        if not key or key in seen:
            diag.warn("duplicate_bib_key", "bibliography entry dropped", key=key)
            continue
        seen.add(key)
        bibliography.append(_parse_bib_entry(key, b))

    abstract_raw = body.get("abstract") or []
    if isinstance(abstract_raw, str):
        abstract_raw = [{"text": abstract_raw}]
    abstract = tuple(
        _parse_paragraph(e if isinstance(e, dict) else {"text": e}, seen, ref_entries, diag) for e in abstract_raw
    )

    sections, equations = [], []
    current_key, heading, numbering, paragraphs = None, None, None, None

    def close():
        if current_key is not None:
            sections.append(Section(len(sections), heading, numbering, tuple(paragraphs)))

    for entry in body.get("body_text") or []:
        if not isinstance(entry, dict):
            entry = {"text": entry}
        key = (_str(entry.get("section")), _str(entry.get("sec_num")), entry.get("section_index"))
        if key != current_key:
            close()
            current_key, heading = key, _str(entry.get("section"))
            numbering, paragraphs = _numbering(entry.get("sec_num"), diag), []
        if _is_equation(entry):
            label = entry.get("eq_num")
            equations.append(EquationSlot(len(sections), len(paragraphs) - 1, _str(label) or None))
            continue
        paragraphs.append(_parse_paragraph(entry, seen, ref_entries, diag))
    close()

    title = _str(data.get("title") or body.get("title") or (data.get("metadata") or {}).get("title"))
    if not title.strip() and not sections and not abstract:
        raise EmptyDocument(f"paper {data['paper_id']}: no title, abstract or sections")
    authors = data.get("authors") or (data.get("metadata") or {}).get("authors") or []
    return ExtractedDocument(
        paper_id=_str(data["paper_id"]),
        title=title,
        authors=tuple(_parse_author(a) for a in authors),
        abstract=abstract,
        sections=tuple(sections),
        bibliography=tuple(bibliography),
        equation_slots=tuple(equations),
        source_hash=hashlib.sha256(raw if isinstance(raw, bytes) else raw.encode("utf-8")).hexdigest(),
    )


def _paragraph_to_json(p, section=None):
    d = {
        "text": p.text,
        "cite_spans": [
            {"start": c.start, "end": c.end, "text": c.text, "ref_id": c.bib_key} for c in p.citation_spans
        ],
        "ref_spans": [
            {"start": r.start, "end": r.end, "text": r.text, "ref_id": r.ref_id,
             **({"handle": r.handle.render()} if r.handle else {})}
            for r in p.object_refs
        ],
    }
    if section is not None:
        d.update(section)
    return d


def document_to_json(doc):
    """Inverse of ``parse_extraction`` up to ``source_hash``."""
    body = []
    eq_by_pos = {}
    for eq in doc.equation_slots:
        eq_by_pos.setdefault((eq.section_index, eq.after_paragraph), []).append(eq)
    for s in doc.sections:
        sec = {"section": s.heading_text, "sec_num": s.numbering, "section_index": s.index}

        def equations(after):
            for eq in eq_by_pos.get((s.index, after), ()):
                body.append({"text": "EQUATION", "type": "equation", "eq_num": eq.label, **sec})

        equations(-1)
        for j, p in enumerate(s.paragraphs):
            body.append(_paragraph_to_json(p, sec))
            equations(j)
    bib = {}
    for b in doc.bibliography:
        d = {"ref_id": b.key, "raw_text": b.raw_text, "url": b.url}
        if b.structured is not None:
            st = b.structured
            d.update(authors=list(st.authors), title=st.title, venue=st.venue, year=st.year, doi=st.doi)
        bib[b.key] = d
    return {
        "paper_id": doc.paper_id,
        "title": doc.title,
        "authors": [
            {"first": a.first, "middle": list(a.middle), "last": a.last, "suffix": a.suffix} for a in doc.authors
        ],
        "abstract": [_paragraph_to_json(p, {"section": "Abstract"}) for p in doc.abstract],
        "body_text": body,
        "bib_entries": bib,
        "ref_entries": {},
    }


# -- figure manifest ----------------------------------------------------------


def _parse_object(o, diag):
    if not isinstance(o, dict):
        raise MalformedInput("manifest object must be a JSON object")
    kind_raw = _str(o.get("kind") or o.get("figType")).strip().lower()
    kind = {"figure": Kind.FIGURE, "table": Kind.TABLE}.get(kind_raw)
    if kind is None:
        raise MalformedInput(f"unknown object kind {kind_raw!r}")
    caption = _str(o.get("caption") or o.get("caption_text"))
    number = _int_or_none(o.get("number"))
    if number is None:
        number = _int_or_none(o.get("name"))
    if number is None:
        m = _CAPTION_PREFIX_RE.match(caption)
        if m and _HANDLE_WORDS[m.group(1).lower().rstrip(".")] is kind:
            number = int(m.group(2))
    if number is not None and number <= 0:
        diag.warn("bad_object_number", "non-positive object number treated as unnumbered", number=number)
        number = None
    image_path = o.get("image_path") or o.get("renderURL") or None
    extracted = o.get("extracted")
    extracted = image_path is not None if extracted is None else bool(extracted)
    if not extracted and image_path is not None:
        diag.warn("image_without_extraction", "image_path ignored on non-extracted object", number=number)
        image_path = None
    return ExtractedObject(kind, number, caption, _str(image_path) or None, extracted)


def parse_figures(raw, diag=None):
    """Parse a figure manifest; numbered objects are deduplicated on (kind, number)."""
    diag = diag if diag is not None else Diagnostics()
    data = _load_json(raw, diag)
    if isinstance(data, list):
        data = {"objects": data}
    if not isinstance(data, dict):
        raise MalformedInput("manifest must be a JSON object")
    version = data.get("schema_version", MANIFEST_SCHEMA_VERSION)
    if version != MANIFEST_SCHEMA_VERSION:
        diag.warn("schema_version", "unknown manifest schema_version", schema_version=version)
    raw_objects = data.get("objects", data.get("figures", []))
    if not isinstance(raw_objects, list):
        raise MalformedInput("objects must be a list")
    objects, seen = [], set()
    for o in raw_objects:
        obj = _parse_object(o, diag)
        if obj.number is not None:
            if obj.handle in seen:
                diag.warn("duplicate_object", f"duplicate {obj.handle.render()} dropped", number=obj.number)
                continue
            seen.add(obj.handle)
        objects.append(obj)
    paper_id = data.get("paper_id")
    return FigureManifest(None if paper_id is None else _str(paper_id), tuple(objects))


def manifest_to_json(manifest):
    return {
        "schema_version": MANIFEST_SCHEMA_VERSION,
        "paper_id": manifest.paper_id,
        "objects": [
            {"kind": o.kind.value, "number": o.number, "caption": o.caption,
             "image_path": o.image_path, "extracted": o.extracted}
            for o in manifest.objects
        ],
    }
