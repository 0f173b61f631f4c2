"""Print the estimator comparison table for the urn and the non-uniform source."""

import argparse
import sys
from fractions import Fraction

from factprob.analysis import COMPARE_HEADER, estimator_comparison
from factprob.painting import generate_painting
from factprob.phenomena import FinitePhenomenon, urn_from_painting
from factprob.serialize import csv_text


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, default=3)
    ap.add_argument("--jobs", type=int, default=1)
    args = ap.parse_args()
    nonuniform = FinitePhenomenon(
        [{"r": "A", "s": i} for i in range(4)] + [{"r": "B", "s": i} for i in range(4, 12)],
        [Fraction(1, 10)] * 4 + [Fraction(3, 40)] * 8,
    )
    cases = {"urn": urn_from_painting(generate_painting(7, {1: 10, 2: 2, 3: 88})), "nonuniform": nonuniform}
    for name, ph in cases.items():
        rows = estimator_comparison(ph, [300, 1000, 10_000, 100_000], list(range(args.seeds)), jobs=args.jobs)
        sys.stdout.write(f"# {name}\n" + csv_text(COMPARE_HEADER, [r.csv() for r in rows]))


if __name__ == "__main__":
    main()
