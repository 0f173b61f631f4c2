"""Run every scenario under scripts/scenarios into runs/<name>/."""

import argparse
from pathlib import Path

from factprob.runner import run_to_dir
from factprob.scenario import load_scenario

HERE = Path(__file__).resolve().parent


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out-dir", default="runs")
    ap.add_argument("--jobs", type=int, default=1)
    args = ap.parse_args()
    for path in sorted((HERE / "scenarios").glob("*.json")):
        sc = load_scenario(path)
        man = run_to_dir(sc, Path(args.out_dir) / sc.name, args.jobs)
        print(f"{sc.name:28s} {sc.kind:20s} -> {', '.join(man['outputs'])}")


if __name__ == "__main__":
    main()
