"""Observed LLN fraction for the fair die against the exact binomial probability."""

import argparse
import math
from fractions import Fraction

from factprob.analysis import LLNConfig, lln_check
from factprob.phenomena import DicePhenomenon


def binomial_within(n, p, eps):
    lo, hi = (p - eps) * n, (p + eps) * n
    return sum(math.comb(n, k) * p**k * (1 - p) ** (n - k) for k in range(n + 1) if lo <= k <= hi)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--M", type=int, default=1000)
    ap.add_argument("--epsilon", type=float, default=0.05)
    ap.add_argument("--delta", type=float, default=0.05)
    ap.add_argument("--seed", type=int, default=11)
    ap.add_argument("--jobs", type=int, default=1)
    args = ap.parse_args()

    die = DicePhenomenon(orientation_unit=None)
    schedule = (25, 50, 100, 200, 400, 800, 1600)
    cfg = LLNConfig(args.epsilon, args.delta, args.M, 2000, 3, schedule)
    rep = lln_check(die, cfg, die.ground_truth, args.seed, args.jobs)
    eps = Fraction(str(args.epsilon))
    print("N,observed,binomial_exact")
    for n, frac in rep.by_N.items():
        print(f"{n},{float(frac):.4f},{float(binomial_within(n, Fraction(1, 6), eps)):.4f}")
    print(f"# Chebyshev N0 = {math.ceil(1 / (4 * args.epsilon**2 * args.delta))}, empirical N0 = {rep.empirical_N0}")


if __name__ == "__main__":
    main()
