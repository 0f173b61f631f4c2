"""Command line: ``factprob run|validate|plot``.

Exit status 0 on success, 2 on invalid input, 3 when an internal invariant
breaks during a run.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path

from .analysis import COMPARE_HEADER
from .errors import ConfigError, InvariantError
from .runner import (
    CONVERGENCE_HEADER,
    KTRACK_HEADER,
    SATURATION_HEADER,
    compare_rows_from_json,
    convergence_rows,
    ktrack_rows,
    run_to_dir,
    saturation_rows,
    series_from_json,
)
from .scenario import load_scenario
from .serialize import csv_text, fmt_decimal

EXIT_OK, EXIT_CONFIG, EXIT_INVARIANT = 0, 2, 3


def _plot_convergence(res):
    if "convergence" not in res:
        raise ConfigError("report has no convergence series", "kind")
    return CONVERGENCE_HEADER, convergence_rows(series_from_json(res["convergence"]))


def _plot_saturation(res):
    if "timeline" not in res:
        raise ConfigError("report has no saturation timeline", "kind")
    return SATURATION_HEADER, saturation_rows(res)


def _plot_compare(res):
    if "rows" not in res:
        raise ConfigError("report has no comparison rows", "kind")
    return COMPARE_HEADER, compare_rows_from_json(res["rows"])


def _plot_l1(res):
    if "rows" not in res:
        raise ConfigError("report has no comparison rows", "kind")
    return ("N", "estimator", "l1"), [r[:3] for r in compare_rows_from_json(res["rows"])]


def _plot_k_track(res):
    if "k_track" not in res:
        raise ConfigError("report has no K trajectory", "kind")
    return KTRACK_HEADER, ktrack_rows(res)


def _plot_lln(res):
    if "by_N" not in res:
        raise ConfigError("report has no LLN fractions", "kind")
    rows = sorted((int(n), fmt_decimal(Fraction(v["num"], v["den"]))) for n, v in res["by_N"].items())
    return ("N", "fraction"), [list(r) for r in rows]


PLOTS = {
    "convergence": _plot_convergence,
    "saturation": _plot_saturation,
    "compare": _plot_compare,
    "l1": _plot_l1,
    "k-track": _plot_k_track,
    "lln": _plot_lln,
}


def plot_csv(report_path, kind: str) -> str:
    if kind not in PLOTS:
        raise ConfigError(f"unknown kind {kind!r}; choose from {', '.join(PLOTS)}", "kind")
    try:
        doc = json.loads(Path(report_path).read_text())
    except FileNotFoundError:
        raise ConfigError(f"no such file {str(report_path)!r}", "report") from None
    except json.JSONDecodeError as e:
        raise ConfigError(f"not valid JSON ({e.msg})", "report") from None
    if not isinstance(doc, dict) or "result" not in doc:
        raise ConfigError("not a report document", "report")
    header, rows = PLOTS[kind](doc["result"])
    return csv_text(header, rows)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="factprob", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="execute a scenario file")
    run.add_argument("scenario")
    run.add_argument("--seed", type=int, help="override the scenario's seed")
    run.add_argument("--jobs", type=int, default=1, help="worker processes for independent runs")
    run.add_argument("--out-dir", help="output directory (default: runs/<scenario name>)")

    val = sub.add_parser("validate", help="check a scenario file without running it")
    val.add_argument("scenario")
    val.add_argument("--seed", type=int)

    plot = sub.add_parser("plot", help="flatten a report into CSV")
    plot.add_argument("report")
    plot.add_argument("--kind", required=True)
    plot.add_argument("--out", help="write CSV here instead of stdout")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "validate":
            sc = load_scenario(args.scenario, args.seed)
            print(f"ok: {sc.kind} (seed {sc.seed}, digest {sc.digest()[:12]})")
        elif args.command == "run":
            if args.jobs < 1:
                raise ConfigError("must be >= 1", "--jobs")
            sc = load_scenario(args.scenario, args.seed)
            out = Path(args.out_dir) if args.out_dir else Path("runs") / sc.name
            manifest = run_to_dir(sc, out, args.jobs)
            for name in manifest["outputs"] + ["manifest.json"]:
                print(out / name)
        else:
            text = plot_csv(args.report, args.kind)
            if args.out:
                Path(args.out).write_text(text)
            else:
                sys.stdout.write(text)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except InvariantError as e:
        print(f"invariant breach [{e.name}]: {e}", file=sys.stderr)
        return EXIT_INVARIANT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
