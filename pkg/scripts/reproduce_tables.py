"""Rebuild the reference-count fixtures and run the CLI over them.

    python3 scripts/reproduce_tables.py [--out results/]

Writes, under ``--out``:

* ``compliance/`` — ``sciaccess audit`` over a synthetic 11,397-report corpus
  matching the compliance histogram (criterion table, histogram, summary)
* ``evaluation/`` — ``sciaccess evaluate`` over the 522 reference-count
  evaluation records (element counts and readability by field)
* ``agreement/`` — ``sciaccess agreement`` on the 20-paper overlap fixture

and prints the headline numbers.
"""

import argparse
import json
import sys
import tempfile
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "tests"))

from builders import FIXTURES, write_histogram_reports  # noqa: E402

from sciaccess.cli import main as cli  # noqa: E402


def run(argv):
    code = cli(argv)
    if code != 0:
        raise SystemExit(f"sciaccess {' '.join(argv)} exited with {code}")


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", default="results", type=Path)
    args = parser.parse_args()
    out = args.out

    with tempfile.TemporaryDirectory() as tmp:
        reports = write_histogram_reports(Path(tmp) / "reports")
        run(["audit", str(reports), "--out", str(out / "compliance"), "--column", "All"])
    run(["evaluate", str(FIXTURES / "evaluation" / "reference"), "--out", str(out / "evaluation")])
    run(["agreement", str(FIXTURES / "evaluation" / "overlap_A"), str(FIXTURES / "evaluation" / "overlap_B"),
         "--out", str(out / "agreement")])

    summary = json.loads((out / "compliance" / "summary.json").read_text(encoding="utf-8"))
    print()
    print("histogram (papers at total compliance 0..5):", summary["histogram"])
    print(f"Adobe-5 rate: {100 * summary['overall']['adobe5_rate']:.2f}%")
    print((out / "compliance" / "criteria.csv").read_text(encoding="utf-8"))
    print(f"outputs written under {out}/")


if __name__ == "__main__":
    main()
