"""Single-document rendering pipeline and the resumable corpus batch runner."""

import html
import json
import os
import tempfile
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, fields
from pathlib import Path

from .diagnostics import Diagnostics, logger
from .emitter import EmitOptions, emit_html, self_audit
from .model import EmptyDocument, FigureManifest, MalformedInput, parse_extraction, parse_figures
from .stitcher import PaperIdMismatch, merge, render_tree_to_json

JOB_SCHEMA_VERSION = 1
ENV_PREFIX = "SCIA11Y_"


def write_atomic(path, data):
    """Write ``data`` to ``path`` via a temporary sibling and a rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if isinstance(data, str):
        data = data.encode("utf-8")
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def dump_json(obj):
    return json.dumps(obj, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


@dataclass
class RenderOutput:
    paper_id: str
    title: str
    html: bytes
    render_json: str
    audit_json: str
    audit_passed: bool
    diagnostics: Diagnostics


def render_document(fulltext, figures=None, *, lang="en", assets_dir=None, inline_images=False,
                    banner=True, allow_id_mismatch=False, diag=None):
    """Run parse → merge → emit → audit in memory.

    ``fulltext`` and ``figures`` are raw bytes/str; a ``None`` figure manifest
    yields a render with placeholders and a ``figures_missing`` warning.
    Raises MalformedInput, EmptyDocument or PaperIdMismatch.
    """
    diag = diag if diag is not None else Diagnostics()
    doc = parse_extraction(fulltext, diag)
    if figures is None:
        diag.warn("figures_missing", "no figure manifest; objects will be placeholders", paper_id=doc.paper_id)
        figs = FigureManifest(None, ())
    else:
        figs = parse_figures(figures, diag)
    tree = merge(doc, figs, allow_id_mismatch=allow_id_mismatch, lang=lang, diag=diag)
    opts = EmitOptions(lang=lang, assets_dir=None if assets_dir is None else Path(assets_dir),
                       inline_images=inline_images, banner=banner)
    rendered = emit_html(tree, opts, diag)
    report = self_audit(rendered)
    return RenderOutput(doc.paper_id, doc.title, rendered.bytes, dump_json(render_tree_to_json(tree)),
                        report.dumps(), report.passed, diag)


def write_outputs(out, out_dir, stem):
    """Write ``<stem>.html``, ``<stem>.render.json`` and ``<stem>.audit.json``."""
    out_dir = Path(out_dir)
    paths = (out_dir / f"{stem}.html", out_dir / f"{stem}.render.json", out_dir / f"{stem}.audit.json")
    write_atomic(paths[1], out.render_json)
    write_atomic(paths[2], out.audit_json)
    write_atomic(paths[0], out.html)
    return paths


# -- job manifest -------------------------------------------------------------


@dataclass
class JobManifest:
    fulltext_dir: Path
    output_dir: Path
    figures_dir: Path | None = None
    assets_dir: Path | None = None
    parallelism: int = 1
    continue_on_error: bool = False
    lang: str = "en"
    inline_images: bool = False

    def __post_init__(self):
        if int(self.parallelism) < 1:
            raise ValueError("parallelism must be a positive integer")
        self.parallelism = int(self.parallelism)


_PATH_KEYS = ("fulltext_dir", "output_dir", "figures_dir", "assets_dir")


def _coerce(name, value):
    if name in _PATH_KEYS:
        return None if value in (None, "") else Path(value)
    if name == "parallelism":
        return int(value)
    if name in ("continue_on_error", "inline_images"):
        if isinstance(value, str):
            lowered = value.strip().lower()
            if lowered not in ("1", "0", "true", "false", "yes", "no"):
                raise ValueError(f"{name}: expected a boolean, got {value!r}")
            return lowered in ("1", "true", "yes")
        return bool(value)
    return value


def resolve_manifest(manifest=None, env=None, flags=None, base_dir=None):
    """Combine settings with precedence flags > environment > manifest file > defaults."""
    names = [f.name for f in fields(JobManifest)]
    merged = {}
    for source in (manifest or {}, {k[len(ENV_PREFIX):].lower(): v for k, v in (env or {}).items()
                                    if k.startswith(ENV_PREFIX)}, flags or {}):
        for k, v in source.items():
            if k in names and v is not None:
                merged[k] = _coerce(k, v)
    for k in ("fulltext_dir", "output_dir"):
        if merged.get(k) is None:
            raise ValueError(f"job manifest needs {k}")
    if base_dir is not None:
        for k in _PATH_KEYS:
            if merged.get(k) is not None and not merged[k].is_absolute():
                merged[k] = Path(base_dir) / merged[k]
    return JobManifest(**merged)


def load_manifest(path, env=None, flags=None):
    path = Path(path)
    data = json.loads(path.read_text(encoding="utf-8"))
    version = data.pop("schema_version", JOB_SCHEMA_VERSION)
    if version != JOB_SCHEMA_VERSION:
        raise ValueError(f"unsupported job manifest schema_version {version!r}")
    return resolve_manifest(data, os.environ if env is None else env, flags, base_dir=path.parent)


# -- ledger -------------------------------------------------------------------

PENDING, DONE, FAILED, SKIPPED = "pending", "done", "failed", "skipped"


@dataclass(frozen=True)
class LedgerEntry:
    doc: str
    status: str
    reason: str | None = None

    def line(self):
        d = {"doc": self.doc, "status": self.status}
        if self.reason is not None:
            d["reason"] = self.reason
        return json.dumps(d, sort_keys=True, ensure_ascii=False) + "\n"


class Ledger:
    """Append-only JSON-lines status log; the last entry per document wins."""

    def __init__(self, path):
        self.path = Path(path)
        self.entries = []
        if self.path.exists():
            for line in self.path.read_text(encoding="utf-8").splitlines():
                if line.strip():
                    try:
                        d = json.loads(line)
                    except json.JSONDecodeError:
                        continue  # torn final line from an interrupted write
                    self.entries.append(LedgerEntry(d["doc"], d["status"], d.get("reason")))

    def append(self, entry):
        self.path.parent.mkdir(parents=True, exist_ok=True)
        with open(self.path, "a", encoding="utf-8") as f:
            f.write(entry.line())
            f.flush()
            os.fsync(f.fileno())
        self.entries.append(entry)

    def state(self):
        out = {}
        for e in self.entries:
            out[e.doc] = e
        return out


# -- batch --------------------------------------------------------------------


def discover(job):
    """Sorted (stem, fulltext path, figures path or None) for every document in the corpus."""
    docs = []
    for p in sorted(Path(job.fulltext_dir).glob("*.json")):
        figs = None
        if job.figures_dir is not None:
            for name in (f"{p.stem}.json", f"{p.stem}.figures.json"):
                cand = Path(job.figures_dir) / name
                if cand.exists():
                    figs = cand
                    break
        docs.append((p.stem, p, figs))
    return docs


def _process(job, item):
    stem, text_path, fig_path = item
    started = time.perf_counter()
    diag = Diagnostics({"doc": stem})
    try:
        fulltext = text_path.read_bytes()
        figures = fig_path.read_bytes() if fig_path is not None else None
        out = render_document(fulltext, figures, lang=job.lang, assets_dir=job.assets_dir,
                              inline_images=job.inline_images, diag=diag)
    except EmptyDocument as e:
        return stem, LedgerEntry(stem, SKIPPED, f"empty document: {e}"), None, diag, started
    except (MalformedInput, PaperIdMismatch, OSError) as e:
        return stem, LedgerEntry(stem, FAILED, f"{type(e).__name__}: {e}"), None, diag, started
    if not out.audit_passed:
        failed = [c["name"] for c in json.loads(out.audit_json)["checks"] if not c["passed"]]
        return stem, LedgerEntry(stem, FAILED, "self-audit failed: " + ", ".join(failed)), out, diag, started
    return stem, LedgerEntry(stem, DONE), out, diag, started


@dataclass
class BatchResult:
    summary: dict
    exit_code: int


def run_batch(job, limit=None, log=None, process=_process):
    """Render every pending document of ``job``; returns summary and exit code.

    Per-document outputs are computed by a worker pool but written and logged
    by this thread in sorted document order, so the output tree (ledger
    included) does not depend on the degree of parallelism.
    """
    out_root = Path(job.output_dir)
    renders = out_root / "renders"
    ledger = Ledger(out_root / "ledger.jsonl")
    docs = discover(job)
    state = ledger.state()
    for stem, _, _ in docs:
        if stem not in state:
            ledger.append(LedgerEntry(stem, PENDING))
    todo = [d for d in docs if ledger.state()[d[0]].status != DONE]
    if limit is not None:
        todo = todo[:limit]
    stopped = False
    with ThreadPoolExecutor(max_workers=job.parallelism) as pool:
        for stem, entry, out, diag, started in pool.map(lambda d: process(job, d), todo):
            if out is not None:
                write_outputs(out, renders, stem)
            ledger.append(entry)
            record = {"event": "document", "doc": stem, "status": entry.status,
                      "seconds": round(time.perf_counter() - started, 4), "warnings": len(diag),
                      "audit_passed": None if out is None else out.audit_passed}
            if log is not None:
                log(record)
            logger.info(json.dumps(record, sort_keys=True))
            if entry.status == FAILED and not job.continue_on_error:
                stopped = True
                pool.shutdown(wait=True, cancel_futures=True)
                break
    summary = summarize(ledger, [d[0] for d in docs])
    summary["stopped_early"] = stopped
    write_atomic(out_root / "summary.json", dump_json(summary))
    write_atomic(out_root / "index.html", index_html(summary, renders))
    failed = summary["counts"][FAILED] > 0
    return BatchResult(summary, 1 if failed and not job.continue_on_error else 0)


def summarize(ledger, stems):
    state = ledger.state()
    counts = {PENDING: 0, DONE: 0, FAILED: 0, SKIPPED: 0}
    docs = {}
    for stem in sorted(stems):
        e = state[stem]
        counts[e.status] += 1
        docs[stem] = {"status": e.status, **({"reason": e.reason} if e.reason else {})}
    return {"schema_version": JOB_SCHEMA_VERSION, "documents": len(stems), "counts": counts, "docs": docs}


def index_html(summary, renders_dir):
    """Static index page linking every rendered document."""
    items = []
    for stem, info in summary["docs"].items():
        if info["status"] != DONE:
            continue
        title = stem
        rj = Path(renders_dir) / f"{stem}.render.json"
        if rj.exists():
            title = json.loads(rj.read_text(encoding="utf-8")).get("title") or stem
        items.append(f'<li><a href="renders/{html.escape(stem)}.html">{html.escape(title)}</a></li>')
    c = summary["counts"]
    lines = [
        "<!DOCTYPE html>",
        '<html lang="en">',
        "<head>",
        '<meta charset="utf-8">',
        "<title>Rendered papers</title>",
        "</head>",
        "<body>",
        "<main>",
        '<h1 id="title">Rendered papers</h1>',
        f"<p>{c[DONE]} rendered, {c[FAILED]} failed, {c[SKIPPED]} skipped, {c[PENDING]} pending.</p>",
        "<ul>",
        *items,
        "</ul>",
        "</main>",
        "</body>",
        "</html>",
    ]
    return "\n".join(lines) + "\n"


def manifest_to_json(job):
    d = asdict(job)
    return {"schema_version": JOB_SCHEMA_VERSION,
            **{k: (str(v) if isinstance(v, Path) else v) for k, v in d.items()}}
