"""Regenerate the golden outputs under tests/golden.

* ``<stem>.html`` for every corpus document (default render options)
* ``element_counts.csv`` / ``readability_by_field.csv`` from the reference-count records

Review the diff before committing: golden files pin the output format.
"""

import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "tests"))

from builders import CORPUS, FIXTURES, GOLDEN  # noqa: E402

from sciaccess import evaluation  # noqa: E402
from sciaccess.batch import render_document  # noqa: E402


def main():
    GOLDEN.mkdir(parents=True, exist_ok=True)
    for text in sorted((CORPUS / "fulltext").glob("*.json")):
        figs = CORPUS / "figures" / text.name
        out = render_document(text.read_bytes(), figs.read_bytes() if figs.exists() else None)
        (GOLDEN / f"{text.stem}.html").write_bytes(out.html)
    records, errors = evaluation.load_records(FIXTURES / "evaluation" / "reference")
    assert not errors, errors
    (GOLDEN / "element_counts.csv").write_text(evaluation.aggregate_errors(records).to_csv(), encoding="utf-8")
    (GOLDEN / "readability_by_field.csv").write_text(
        evaluation.readability_by_field(records).to_csv(), encoding="utf-8")
    print(f"golden files written under {GOLDEN}")


if __name__ == "__main__":
    main()
