"""Serialize a ``RenderTree`` to one self-contained HTML5 document, and audit the result.

Anchor ids are stable across runs: ``sec-<index>``, ``bib-<key>``,
``cite-<key>-<section>-<n>``, ``obj-<kind>-<number>``, ``eq-<n>``.
"""

import base64
import html
import json
import mimetypes
from dataclasses import dataclass, field
from html.parser import HTMLParser
from pathlib import Path

from .diagnostics import Diagnostics
from .stitcher import (
    NOT_EXTRACTED,
    HeadingBlock,
    ObjectBlock,
    ParagraphBlock,
    PlaceholderBlock,
    URL_RE,
    strip_trailing,
    bib_anchor,
    heal_url,
    placeholder_text,
)

STYLE = "body{max-width:42em;margin:0 auto;padding:0 1em;font:1.125em/1.6 Georgia,serif}"
BANNER = (
    "This page is an automatically generated HTML version of a paper PDF. "
    "Some content may be missing or out of order; refer to the original document when in doubt."
)


class AssetMissing(OSError):
    pass


@dataclass
class EmitOptions:
    lang: str | None = None  # overrides the tree's language tag
    assets_dir: Path | None = None  # where image paths are resolved; None skips the existence check
    asset_href: str = "assets"
    inline_images: bool = False
    banner: bool = True


@dataclass
class HtmlRender:
    bytes: bytes
    anchor_index: dict = field(default_factory=dict)

    @property
    def text(self):
        return self.bytes.decode("utf-8")


def _e(text):
    return html.escape(text, quote=True)


def _image_src(block, opts):
    """Return the img src for ``block``, raising AssetMissing if the file cannot be read."""
    rel = block.image_path.replace("\\", "/")
    if opts.assets_dir is None and not opts.inline_images:
        return f"{opts.asset_href.rstrip('/')}/{rel}" if opts.asset_href else rel
    path = Path(block.image_path)
    if not path.is_absolute():
        path = Path(opts.assets_dir or ".") / path
    try:
        data = path.read_bytes()
    except OSError as e:
        raise AssetMissing(str(path)) from e
    if opts.inline_images:
        mime = mimetypes.guess_type(path.name)[0] or "application/octet-stream"
        return f"data:{mime};base64,{base64.b64encode(data).decode('ascii')}"
    return f"{opts.asset_href.rstrip('/')}/{rel}" if opts.asset_href else rel


class _Writer:
    def __init__(self):
        self.lines = []
        self.anchors = {}

    def anchor(self, anchor, kind):
        self.anchors[anchor] = kind
        return anchor

    def __call__(self, line):
        self.lines.append(line)


def _paragraph_html(block, w):
    marks = sorted(
        [(c.start, c.end, "cite", c) for c in block.cites] + [(r.start, r.end, "ref", r) for r in block.refs],
        key=lambda m: m[0],
    )
    out, pos = [], 0
    for start, end, what, m in marks:
        out.append(_e(block.text[pos:start]))
        piece = _e(block.text[start:end])
        if what == "cite" and m.anchor is not None:
            w.anchor(m.anchor, "cite")
            out.append(f'<a id="{m.anchor}" href="#{bib_anchor(m.bib_key)}">{piece}</a>')
        elif what == "ref" and m.target is not None:
            out.append(f'<a href="#{m.target}">{piece}</a>')
        else:
            out.append(piece)
        pos = end
    out.append(_e(block.text[pos:]))
    return f"<p>{''.join(out)}</p>"


def _placeholder_figure(anchor, sentence, caption, w):
    w.anchor(anchor, "placeholder")
    w(f'<figure id="{anchor}" class="placeholder" aria-label="{_e(sentence)}">')
    extra = f" {_e(caption)}" if caption else ""
    w(f"<figcaption>{_e(sentence)}{extra}</figcaption>")
    w("</figure>")


def _object_html(block, opts, w, diag):
    if isinstance(block, PlaceholderBlock):
        _placeholder_figure(block.anchor, block.text, "", w)
        return
    sentence = placeholder_text(block.kind, block.number)
    if not block.extracted or not block.image_path:
        _placeholder_figure(block.anchor, sentence, block.caption, w)
        return
    try:
        src = _image_src(block, opts)
    except AssetMissing as e:
        diag.warn("asset_missing", f"image for {block.anchor} unreadable, rendered as placeholder",
                  anchor=block.anchor, path=str(e))
        _placeholder_figure(block.anchor, sentence, block.caption, w)
        return
    label = block.kind.label if block.number is None else f"{block.kind.label} {block.number}"
    w.anchor(block.anchor, "figure")
    w(f'<figure id="{block.anchor}">')
    w(f'<img src="{_e(src)}" alt="{_e(label)}">')
    w(f"<figcaption>{_e(block.caption or label)}</figcaption>")
    w("</figure>")


def _blocks_html(blocks, opts, w, diag):
    for b in blocks:
        if isinstance(b, ParagraphBlock):
            w(_paragraph_html(b, w))
        elif isinstance(b, (ObjectBlock, PlaceholderBlock)):
            _object_html(b, opts, w, diag)


def _toc_html(toc, w):
    if not toc:
        return
    depth = 0
    for e in toc:
        if e.depth > depth:
            w("<ol>")
        else:
            w("</li>")
            for _ in range(depth - e.depth):
                w("</ol>")
                w("</li>")
        depth = e.depth
        w(f'<li><a href="#{e.anchor}">{_e(e.text)}</a>')
        if e.children:
            w("<ul>")
            for anchor, label in e.children:
                w(f'<li><a href="#{anchor}">{_e(label)}</a></li>')
            w("</ul>")
    w("</li>")
    for _ in range(depth - 1):
        w("</ol>")
        w("</li>")
    w("</ol>")


def section_labels(tree):
    labels = {-1: "Abstract"}
    for b in tree.body:
        if isinstance(b, HeadingBlock):
            labels[b.section_index] = f"§{b.numbering}" if b.numbering else b.text
    return labels


def _bib_html(entry, returns, labels, w):
    anchor = w.anchor(bib_anchor(entry.key), "bib")
    text = _e(entry.raw_text)
    if entry.url:
        link = f'<a href="{_e(entry.url)}">{_e(entry.url)}</a>'
        # a wrapped URL in the raw text is replaced by its healed link
        wrapped = next((m for m in URL_RE.finditer(entry.raw_text) if heal_url(m.group()) == entry.url), None)
        if wrapped is not None:
            raw = entry.raw_text
            end = wrapped.start() + len(strip_trailing(wrapped.group()))
            text = f"{_e(raw[:wrapped.start()])}{link}{_e(raw[end:])}"
        elif _e(entry.url) in text:
            text = text.replace(_e(entry.url), link, 1)
        else:
            text = f"{text} {link}"
    back = ""
    if returns:
        links = ", ".join(f'<a href="#{a}">{_e(labels.get(s, str(s)))}</a>' for s, a in returns)
        back = f' <span class="return-links">Return to: {links}</span>'
    w(f'<li id="{anchor}">{text}{back}</li>')


def emit_html(tree, opts=None, diag=None):
    """Render ``tree`` as UTF-8 HTML; identical inputs give byte-identical output."""
    opts = opts or EmitOptions()
    diag = diag if diag is not None else Diagnostics()
    lang = opts.lang or tree.lang or "en"
    title = tree.title.strip() or "Untitled document"
    w = _Writer()
    w("<!DOCTYPE html>")
    w(f'<html lang="{_e(lang)}">')
    w("<head>")
    w('<meta charset="utf-8">')
    w('<meta name="viewport" content="width=device-width, initial-scale=1">')
    w(f"<title>{_e(title)}</title>")
    w(f"<style>{STYLE}</style>")
    w("</head>")
    w("<body>")
    if opts.banner:
        w.anchor("about", "banner")
        w(f'<div id="about" role="note" aria-label="About this page">{_e(BANNER)}</div>')
    w("<main>")
    w.anchor("title", "h1")
    w(f'<h1 id="title">{_e(title)}</h1>')
    if tree.authors:
        w.anchor("authors", "section")
        w('<section id="authors" aria-labelledby="authors-heading">')
        w('<h2 id="authors-heading">Authors</h2>')
        w("<ul>")
        for a in tree.authors:
            w(f"<li>{_e(a)}</li>")
        w("</ul>")
        w("</section>")
    if tree.abstract:
        w.anchor("abstract", "section")
        w('<section id="abstract" aria-labelledby="abstract-heading">')
        w('<h2 id="abstract-heading">Abstract</h2>')
        _blocks_html(tree.abstract, opts, w, diag)
        w("</section>")
    w.anchor("toc", "nav")
    w('<nav id="toc" aria-labelledby="toc-heading">')
    w('<h2 id="toc-heading">Contents</h2>')
    _toc_html(tree.toc, w)
    w("</nav>")
    open_section = False
    for b in tree.body:
        if isinstance(b, HeadingBlock):
            if open_section:
                w("</section>")
            w.anchor(b.anchor, "section")
            w(f'<section id="{b.anchor}">')
            w(f"<h{b.level}>{_e(b.text)}</h{b.level}>")
            open_section = True
        else:
            _blocks_html([b], opts, w, diag)
    if open_section:
        w("</section>")
    if tree.bibliography:
        labels = section_labels(tree)
        w.anchor("references", "section")
        w('<section id="references" aria-labelledby="references-heading">')
        w('<h2 id="references-heading">References</h2>')
        w("<ul>")
        for entry in tree.bibliography:
            _bib_html(entry, tree.link_graph.returns_for(entry.key), labels, w)
        w("</ul>")
        w("</section>")
    w("</main>")
    w("</body>")
    w("</html>")
    return HtmlRender(("\n".join(w.lines) + "\n").encode("utf-8"), dict(sorted(w.anchors.items())))


# -- audit --------------------------------------------------------------------

_VOID = {"area", "base", "br", "col", "embed", "hr", "img", "input", "link", "meta", "source", "track", "wbr"}
_HEADINGS = {f"h{i}": i for i in range(1, 7)}


class _AuditParser(HTMLParser):
    def __init__(self):
        super().__init__(convert_charrefs=True)
        self.stack = []
        self.root_lang = None
        self.headings = []  # (level, id or text)
        self.ids = []
        self.hrefs = []
        self.images = []  # (alt, inside_figure, src)
        self.figures = []  # dicts
        self.bib_items = []  # (id, inside_ul)
        self.has_references = False
        self._heading_text = None

    def handle_starttag(self, tag, attrs):
        a = dict(attrs)
        if tag == "html" and not self.stack:
            self.root_lang = a.get("lang")
        if a.get("id"):
            self.ids.append(a["id"])
        href = a.get("href")
        if tag == "a" and href and href.startswith("#"):
            self.hrefs.append(href[1:])
        if tag in _HEADINGS:
            self.headings.append([_HEADINGS[tag], a.get("id"), ""])
            self._heading_text = self.headings[-1]
        if tag == "figure":
            self.figures.append({"id": a.get("id"), "label": (a.get("aria-label") or "").strip(),
                                 "caption": False, "img_alt": False})
        if tag == "figcaption" and self._in("figure"):
            self.figures[-1]["caption"] = True
        if tag == "img":
            alt = (a.get("alt") or "").strip()
            inside = self._in("figure")
            self.images.append((alt, inside, a.get("src")))
            if inside and alt:
                self.figures[-1]["img_alt"] = True
        if tag == "section" and a.get("id") == "references":
            self.has_references = True
        if tag == "li" and (a.get("id") or "").startswith("bib-"):
            self.bib_items.append((a["id"], self.stack[-1:] == ["ul"]))
        if tag not in _VOID:
            self.stack.append(tag)

    def handle_startendtag(self, tag, attrs):
        self.handle_starttag(tag, attrs)
        if tag not in _VOID:
            self.stack.pop()

    def handle_endtag(self, tag):
        if tag in _HEADINGS:
            self._heading_text = None
        if tag in self.stack:
            while self.stack and self.stack.pop() != tag:
                pass

    def handle_data(self, data):
        if self._heading_text is not None:
            self._heading_text[2] += data

    def _in(self, tag):
        return tag in self.stack


@dataclass
class CheckResult:
    name: str
    passed: bool
    offenders: list = field(default_factory=list)


@dataclass
class AuditReport:
    checks: list

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    def check(self, name):
        return next(c for c in self.checks if c.name == name)

    def to_json(self):
        return {
            "passed": self.passed,
            "checks": [{"name": c.name, "passed": c.passed, "offenders": c.offenders} for c in self.checks],
        }

    def dumps(self):
        return json.dumps(self.to_json(), indent=2, sort_keys=True) + "\n"


def _reading_order_offenders(ids):
    def rank(i):
        if i == "title":
            return (0, 0)
        if i == "authors":
            return (1, 0)
        if i == "abstract":
            return (2, 0)
        if i == "toc":
            return (3, 0)
        if i.startswith("sec-") and i[4:].isdigit():
            return (4, int(i[4:]))
        if i == "references":
            return (5, 0)
        return None

    ranked = [(rank(i), i) for i in ids if rank(i) is not None]
    offenders = [b for (ra, _), (rb, b) in zip(ranked, ranked[1:]) if rb <= ra]
    if "title" not in ids:
        offenders.append("title")
    return offenders


def self_audit(render):
    """Check the HTML analogues of the PDF accessibility criteria."""
    text = render.text if isinstance(render, HtmlRender) else (
        render.decode("utf-8") if isinstance(render, bytes) else render)
    p = _AuditParser()
    p.feed(text)
    p.close()
    checks = []
    checks.append(CheckResult("default_language", bool((p.root_lang or "").strip()),
                              [] if (p.root_lang or "").strip() else ["html"]))

    h1s = [h for h in p.headings if h[0] == 1]
    title_ok = len(h1s) == 1 and p.headings[0][0] == 1
    checks.append(CheckResult("single_title", title_ok, [] if title_ok else [h[1] or h[2] for h in h1s] or ["h1"]))

    skips = [h[1] or h[2].strip() for prev, h in zip(p.headings, p.headings[1:]) if h[0] > prev[0] + 1]
    checks.append(CheckResult("heading_hierarchy", not skips, skips))

    bad_figures = [f["id"] or "figure" for f in p.figures if not f["caption"] or not (f["img_alt"] or f["label"])]
    bad_images = [src or "img" for alt, inside, src in p.images if not inside or not alt]
    offenders = bad_figures + bad_images
    checks.append(CheckResult("figures_tagged", not offenders, offenders))

    id_set = set(p.ids)
    dangling = sorted({h for h in p.hrefs if h not in id_set})
    dupes = sorted({i for i in p.ids if p.ids.count(i) > 1})
    checks.append(CheckResult("anchors_resolve", not dangling and not dupes, dangling + dupes))

    order = _reading_order_offenders(p.ids)
    checks.append(CheckResult("reading_order", not order, order))

    bad_bib = [i for i, in_ul in p.bib_items if not in_ul]
    if p.bib_items and not p.has_references:
        bad_bib.append("references")
    checks.append(CheckResult("bibliography_list", not bad_bib, bad_bib))
    return AuditReport(checks)


class _ParagraphText(HTMLParser):
    def __init__(self):
        super().__init__(convert_charrefs=True)
        self.depth = 0
        self.chunks = []

    def handle_starttag(self, tag, attrs):
        if tag == "p":
            self.depth += 1
            self.chunks.append("")

    def handle_endtag(self, tag):
        if tag == "p":
            self.depth -= 1

    def handle_data(self, data):
        if self.depth:
            self.chunks[-1] += data


def paragraph_texts(html_text):
    """Visible text of every ``<p>`` element, in document order."""
    p = _ParagraphText()
    p.feed(html_text)
    p.close()
    return p.chunks


__all__ = [
    "AssetMissing", "AuditReport", "CheckResult", "EmitOptions", "HtmlRender", "NOT_EXTRACTED",
    "emit_html", "paragraph_texts", "self_audit",
]
