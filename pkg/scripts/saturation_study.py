"""When does replica 1 saturate on the urn, compared with the coupon-collector scale?

The fill time of 100 equally likely cells has mean 100*H_100 (about 519);
saturation is declared one quiet window later.
"""

import argparse
from fractions import Fraction

import numpy as np

from factprob.painting import factual_law, generate_painting
from factprob.phenomena import urn_from_painting
from factprob.semint import SemintConfig, run_semint


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, default=30)
    ap.add_argument("--N", type=int, default=5000)
    ap.add_argument("--window", type=int, default=None)
    args = ap.parse_args()

    p = generate_painting(7, {1: 10, 2: 2, 3: 88})
    urn = urn_from_painting(p)
    truth = factual_law(p)
    harmonic = float(sum(Fraction(1, k) for k in range(1, 101)))
    fill, sat, exact = [], [], 0
    for s in range(args.seeds):
        res = run_semint(urn, args.N, seed=s, config=SemintConfig(window=args.window))
        first_full = next(i + 1 for i, c in enumerate(res.cells_on_y1) if c == 100)
        fill.append(first_full)
        sat.append(res.saturated_at)
        exact += res.estimate == truth
    print(f"coupon-collector mean fill: {100 * harmonic:.1f}")
    print(f"observed fill time: mean {np.mean(fill):.1f}, min {min(fill)}, max {max(fill)}")
    print(f"saturation trial:   mean {np.mean(sat):.1f}")
    print(f"estimate equal to the factual law in {exact}/{args.seeds} runs")


if __name__ == "__main__":
    main()
