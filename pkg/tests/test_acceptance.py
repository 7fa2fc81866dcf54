"""Acceptance criteria, one test each.

Every test records a single PASS/FAIL line; the lines are printed in the
terminal summary of the pytest run (and directly when this file is executed
as a script).  Tolerances and time limits are fixed here.
"""

import itertools
import json
import random
import re
import time
from fractions import Fraction

import pytest

from builders import (
    CORPUS,
    HIST_HISTOGRAM,
    FIXTURES,
    GOLDEN,
    FIELD_READABILITY,
    histogram_records,
    random_document,
    seeded,
)
from sciaccess import compliance, evaluation, stats
from sciaccess.batch import JobManifest, run_batch
from sciaccess.compliance import ComplianceRecord, Criterion, Status
from sciaccess.emitter import emit_html, self_audit
from sciaccess.model import parse_extraction, parse_figures
from sciaccess.stitcher import NOT_EXTRACTED, PlaceholderBlock, build_links, merge
from test_stats import anova_oracle, kruskal_oracle, pearson_oracle
from test_stitcher import object_positions, oracle_placement

RESULTS = []

N_RANDOM_DOCS = 1000
PLACEMENT_SECONDS = 5.0
LINK_SECONDS = 10.0
ADOBE5_TOLERANCE_PP = 0.05
STATS_REL = 1e-9
INVARIANCE_ABS = 1e-12
STATS_CASES = 100
KAPPA_NULL_BOUND = 0.05


def record(number, title, ok, detail=""):
    RESULTS.append(f"{'PASS' if ok else 'FAIL'}  criterion {number:>2}: {title}" + (f" ({detail})" if detail else ""))
    return ok


def load_pair(stem):
    doc = parse_extraction((CORPUS / "fulltext" / f"{stem}.json").read_bytes())
    path = CORPUS / "figures" / f"{stem}.json"
    figs = parse_figures(path.read_bytes() if path.exists() else json.dumps({"objects": []}))
    return doc, figs


def random_trees(n, seed0=0):
    for seed in range(seed0, seed0 + n):
        text, manifest = random_document(seeded(seed), max_objects=8, max_paragraphs=20)
        yield text, manifest, merge(parse_extraction(json.dumps(text)), parse_figures(json.dumps(manifest)))


# -- 1 ------------------------------------------------------------------------


def test_criterion_01_placement_rule():
    doc, figs = load_pair("02-placement")
    worked = object_positions(merge(doc, figs)) == {
        "obj-figure-1": (0, 0), "obj-figure-2": (0, 0), "obj-figure-3": (0, 1)}
    start = time.perf_counter()
    mismatches = sum(object_positions(tree) != oracle_placement(text, manifest)
                     for text, manifest, tree in random_trees(N_RANDOM_DOCS))
    elapsed = time.perf_counter() - start
    ok = worked and mismatches == 0 and elapsed < PLACEMENT_SECONDS
    assert record(1, "placement rule", ok,
                  f"worked example {'ok' if worked else 'WRONG'}; {mismatches} mismatches over "
                  f"{N_RANDOM_DOCS} docs in {elapsed:.2f}s, limit {PLACEMENT_SECONDS}s")


# -- 2 ------------------------------------------------------------------------


def test_criterion_02_placeholder_sentence():
    expected = "Not extracted; please refer to original document."
    texts = {}
    for stem in ("01-three-sections", "03-no-manifest"):
        tree = merge(*load_pair(stem))
        texts[stem] = {b.anchor: b.text for b in tree.blocks() if isinstance(b, PlaceholderBlock)}
    interior = texts["01-three-sections"].get("obj-figure-2")  # 1 and 3 extracted
    mentioned = texts["03-no-manifest"].get("obj-figure-2")  # mentioned, no manifest
    ok = (NOT_EXTRACTED == expected and interior == f"Figure 2. {expected}" and mentioned == f"Figure 2. {expected}")
    assert record(2, "placeholder sentence", ok, f"interior={interior!r}, mentioned={mentioned!r}")


# -- 3 ------------------------------------------------------------------------


def test_criterion_03_link_bidirectionality():
    start = time.perf_counter()
    missing_returns = dangling = 0
    for text, _, tree in random_trees(N_RANDOM_DOCS, seed0=10_000):
        graph, _ = build_links(parse_extraction(json.dumps(text)))
        returns = {key: {s for s, _ in links} for key, links in graph.return_links}
        for anchor, key in graph.citation_links:
            sec = anchor.rsplit("-", 2)[1]
            if (-1 if sec == "abs" else int(sec)) not in returns.get(key, ()):
                missing_returns += 1
        html = emit_html(tree).text
        ids = set(re.findall(r'\sid="([^"]+)"', html))
        dangling += sum(h not in ids for h in re.findall(r'href="#([^"]*)"', html))
    elapsed = time.perf_counter() - start
    ok = missing_returns == 0 and dangling == 0 and elapsed < LINK_SECONDS
    assert record(3, "link bidirectionality", ok,
                  f"{missing_returns} citations without return link, {dangling} dangling anchors, "
                  f"{elapsed:.2f}s, limit {LINK_SECONDS}s")


# -- 4 ------------------------------------------------------------------------


def test_criterion_04_emission_audit():
    failures = []
    for stem in sorted(p.stem for p in (CORPUS / "fulltext").glob("*.json")):
        if not self_audit(emit_html(merge(*load_pair(stem)))).passed:
            failures.append(stem)
    for text, _, tree in random_trees(200, seed0=20_000):
        if not self_audit(emit_html(tree)).passed:
            failures.append(text["paper_id"])
    golden = (GOLDEN / "01-three-sections.html").read_text(encoding="utf-8")
    mutants = {
        "default_language": golden.replace('<html lang="en">', "<html>"),
        "heading_hierarchy": golden.replace("<h2>2 Related Work</h2>", "<h5>2 Related Work</h5>"),
        "figures_tagged": golden.replace(' alt="Figure 1"', ""),
    }
    caught = {name: not self_audit(html).check(name).passed for name, html in mutants.items()}
    ok = not failures and all(caught.values())
    assert record(4, "emission audit", ok, f"{len(failures)} renders failing; mutants caught: {caught}")


# -- 5 ------------------------------------------------------------------------


def test_criterion_05_compliance_scoring():
    three = compliance.score(ComplianceRecord("p", {
        c: Status.PASSED if i < 3 else Status.FAILED for i, c in enumerate(Criterion)}))
    example = (three.total, three.normalized, three.adobe5) == (3, Fraction(3, 5), False)
    bad = 0
    for combo in itertools.product(list(Status), repeat=5):
        s = compliance.score(ComplianceRecord("p", dict(zip(Criterion, combo))))
        bad += s.adobe5 != (s.total == 5) or s.normalized != Fraction(s.total, 5)
    ok = example and bad == 0
    assert record(5, "compliance scoring", ok, f"3-of-5 example {'ok' if example else 'WRONG'}; "
                                               f"{bad} of 243 assignments inconsistent")


# -- 6 ------------------------------------------------------------------------


def test_criterion_06_histogram_corpus():
    recs = histogram_records()
    hist = tuple(compliance.histogram(recs))
    ones = compliance.combination_counts(recs, 1)[frozenset({Criterion.DEFAULT_LANGUAGE})]
    fours = compliance.combination_counts(recs, 4)[frozenset(set(Criterion) - {Criterion.ALT_TEXT})]
    (row,) = compliance.aggregate(recs)
    rate = 100 * row.adobe5_rate
    ok = hist == HIST_HISTOGRAM and ones == 793 and fours == 396 and abs(rate - 2.4) <= ADOBE5_TOLERANCE_PP
    assert record(6, "compliance histogram corpus", ok, f"histogram {hist}, DL-only {ones}, missing-alt {fours}, "
                                           f"Adobe-5 {rate:.3f}% vs 2.4 ± {ADOBE5_TOLERANCE_PP}")


# -- 7 ------------------------------------------------------------------------


def _rel(a, b):
    return abs(a - b) / max(abs(b), 1e-300)


def test_criterion_07_statistics_oracles():
    rng = random.Random(7)
    worst = {"pearson": 0.0, "anova": 0.0, "kruskal": 0.0}
    inv = {"affine": 0.0, "monotone": 0.0}
    for _ in range(STATS_CASES):
        n = rng.randint(3, 40)
        x = [rng.randint(-1000, 1000) for _ in range(n)]
        y = [rng.randint(-1000, 1000) for _ in range(n)]
        if len(set(x)) < 2 or len(set(y)) < 2:
            x, y = x + [0, 1], y + [1, 0]
        r = stats.pearson_r(x, y).value
        r2, _ = pearson_oracle(x, y)
        worst["pearson"] = max(worst["pearson"], _rel(r * r, float(r2)))
        a, b = rng.uniform(0.5, 10), rng.uniform(-100, 100)
        inv["affine"] = max(inv["affine"], abs(stats.pearson_r([a * v + b for v in x], y).value - r))

        groups = [[rng.randint(0, 30) for _ in range(rng.randint(2, 25))] for _ in range(rng.randint(2, 6))]
        worst["anova"] = max(worst["anova"], _rel(stats.anova_f(groups).value, float(anova_oracle(groups))))
        h = stats.kruskal_wallis_h(groups).value
        worst["kruskal"] = max(worst["kruskal"], _rel(h, float(kruskal_oracle(groups))))
        moved = stats.kruskal_wallis_h([[v ** 3 + 2 * v for v in g] for g in groups]).value
        inv["monotone"] = max(inv["monotone"], abs(moved - h))
    ok = max(worst.values()) <= STATS_REL and max(inv.values()) <= INVARIANCE_ABS
    detail = ", ".join(f"{k} rel {v:.1e}" for k, v in worst.items())
    detail += ", " + ", ".join(f"{k} {v:.1e}" for k, v in inv.items())
    assert record(7, "statistics oracles", ok, f"{STATS_CASES} cases each: {detail}")


# -- 8 ------------------------------------------------------------------------


def test_criterion_08_agreement_suite():
    authors = ["yes"] * 17 + ["partially"] * 3
    kappa_same = evaluation.cohens_kappa(authors, authors).value
    rng = random.Random(8)
    a = [rng.randrange(3) for _ in range(10_000)]
    b = [rng.randrange(3) for _ in range(10_000)]
    kappa_null = evaluation.cohens_kappa(a, b).value
    counts = [4, 0, 2, 7, 3, 1, 5, 2]
    icc_same = evaluation.icc(counts, counts).value
    md = evaluation.mean_difference(counts, counts)
    md_text = f"{md.value:.2f} ± {md.sd:.2f}"
    ok = kappa_same == 1.0 and abs(kappa_null) < KAPPA_NULL_BOUND and abs(icc_same - 1) < 1e-12 \
        and md_text == "0.00 ± 0.00"
    assert record(8, "agreement suite", ok, f"kappa(a,a)={kappa_same}, null kappa={kappa_null:.4f}, "
                                            f"icc(a,a)={icc_same}, md={md_text}")


# -- 9 ------------------------------------------------------------------------


def test_criterion_09_table_reproduction():
    recs, errors = evaluation.load_records(FIXTURES / "evaluation" / "reference")
    table = evaluation.aggregate_errors(recs)
    read = evaluation.readability_by_field(recs)
    checks = {
        "overall": tuple(table.row("Overall score").values()) == (210, 122, 53),
        "figures": tuple(table.row("Figure extraction errors").values()) == (6, 94, 201, 45, 39),
        "all papers": read.row("All papers") == (385, 210, 122, 53),
        "physics": read.row("Physics") == (39, 25, 10, 4),
        "every field": all(read.row(f) == (g + o + b, g, o, b) for f, g, o, b in FIELD_READABILITY),
        "golden csv": table.to_csv() == (GOLDEN / "element_counts.csv").read_text(encoding="utf-8"),
    }
    ok = not errors and all(checks.values())
    assert record(9, "element and readability tables", ok, ", ".join(k for k, v in checks.items() if not v) or "all cells")


# -- 10 -----------------------------------------------------------------------


def _tree(root):
    return {str(p.relative_to(root)): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


def test_criterion_10_batch_determinism(tmp_path):
    def job(name, p):
        return JobManifest(CORPUS / "fulltext", tmp_path / name, CORPUS / "figures", parallelism=p)

    run_batch(job("p1", 1))
    run_batch(job("p8", 8))
    run_batch(job("resumed", 8), limit=3)
    partial = json.loads((tmp_path / "resumed" / "summary.json").read_text())["counts"]["pending"]
    run_batch(job("resumed", 8))
    same_parallel = _tree(tmp_path / "p1") == _tree(tmp_path / "p8")
    same_resume = _tree(tmp_path / "p1") == _tree(tmp_path / "resumed")
    ok = same_parallel and same_resume and partial == 7
    assert record(10, "batch determinism", ok, f"p1==p8: {same_parallel}, resumed==p1: {same_resume} "
                                               f"({partial} pending after interruption)")


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-q"]))
