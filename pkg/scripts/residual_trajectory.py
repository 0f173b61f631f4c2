"""Track K, N' and n'(r) as replicas complete on a die run.

The residuals are exposed for inspection only; nothing asserts that they
stay constant on average as K grows.
"""

import argparse

from factprob.phenomena import DicePhenomenon
from factprob.semint import run_semint


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--N", type=int, default=20000)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--every", type=int, default=10, help="print every k-th K change")
    args = ap.parse_args()
    res = run_semint(DicePhenomenon(zone=(0, 10, 0, 10), orientation_unit=None), args.N, args.seed)
    print("N,K,N_prime," + ",".join(f"n_prime_{r}" for r in res.form.labels))
    for e in res.k_track[:: args.every]:
        print(f"{e['N']},{e['K']},{e['N_prime']}," + ",".join(str(v) for v in e["n_prime"].values()))


if __name__ == "__main__":
    main()
