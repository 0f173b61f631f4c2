"""Execute a validated scenario and shape its report.

Reports contain only quantities derived from (config, seed): no clocks, no
paths, no host details.  Those live in the run manifest instead.
"""

from __future__ import annotations

import datetime as _dt
import platform
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import __version__
from .analysis import (
    COMPARE_HEADER,
    LLNConfig,
    empirical_law,
    estimator_comparison,
    factualized_lln_check,
    l1_distance,
    laplace_oscillation,
    lln_check,
)
from .painting import factual_law, probability_game, reconstruct_by_borders, reconstruct_by_coordinates
from .phenomena import build_pre_probability_tree
from .scenario import Scenario
from .semint import SemintConfig, run_semint
from .serialize import fmt_decimal, law_json, write_csv, write_json

CONVERGENCE_HEADER = ("N", "label", "freq")
SATURATION_HEADER = ("trial", "replica", "cells_on_Y1")
KTRACK_HEADER = ("N", "K", "N_prime", "label", "n_prime")


@dataclass
class RunOutput:
    report: dict
    tables: dict[str, tuple[tuple, list]] = field(default_factory=dict)


def _default_schedule(n: int) -> list[int]:
    out, k = [], 10
    while k < n:
        out.append(k)
        k *= 10
    return out + [n]


def convergence_rows(series: dict) -> list:
    return [[n, lab, fmt_decimal(Fraction(pt["num"], pt["den"]) if isinstance(pt, dict) else pt)]
            for n, by_label in series for lab, pt in by_label]


def _convergence(labels: np.ndarray, support, schedule) -> list:
    """``[(N, [(label, n(label)/N), ...]), ...]`` at each checkpoint."""
    out = []
    for n in schedule:
        law = empirical_law(labels[:n], support)
        out.append((n, [(lab, m) for lab, m in law.items()]))
    return out


def _series_json(series):
    return [{"N": n, "freqs": [{"label": lab, "freq": m} for lab, m in pts]} for n, pts in series]


def series_from_json(data) -> list:
    return [(e["N"], [(p["label"], p["freq"]) for p in e["freqs"]]) for e in data]


def run_puzzle_coords(sc: Scenario, jobs: int) -> RunOutput:
    p = sc.build_painting()
    rep = reconstruct_by_coordinates(p, sc.seed)
    body = rep.to_json() | {"grid_equals_source": rep.grids[0] == p.layout(),
                            "extraction_order": rep.extraction_order}
    return RunOutput(body)


def run_puzzle_borders(sc: Scenario, jobs: int) -> RunOutput:
    p = sc.build_painting()
    rep = reconstruct_by_borders(p, sc.params.replicas, sc.seed)
    body = rep.to_json() | {
        "replicas": sc.params.replicas,
        "all_grids_equal_source": all(g == p.layout() for g in rep.grids),
        "expected_extractions": sc.params.replicas * len(p.squares),
    }
    return RunOutput(body)


def run_probability_game(sc: Scenario, jobs: int) -> RunOutput:
    p = sc.build_painting()
    n = sc.params.N
    trace = probability_game(p, n, sc.seed)
    labels = np.asarray(trace.labels)
    truth = factual_law(p)
    emp = empirical_law(labels, truth.support)
    schedule = sorted(set(sc.params.schedule) | {n}) if sc.params.schedule else _default_schedule(n)
    series = _convergence(labels, truth.support, schedule)
    dev = max(abs(emp.mass(j) - truth.mass(j)) for j in truth.support)
    body = {
        "N": n,
        "counts": {str(j): int((labels == j).sum()) for j in truth.support},
        "empirical_law": law_json(emp),
        "factual_law": law_json(truth),
        "max_deviation": dev,
        "max_deviation_decimal": fmt_decimal(dev),
        "l1": l1_distance(emp, truth),
        "convergence": _series_json(series),
    }
    return RunOutput(body, {"convergence.csv": (CONVERGENCE_HEADER, convergence_rows(series))})


def semint_report(res, ph) -> dict:
    body = {"grid": res.grid.to_json(), "N": res.replicas.trials, "saturated": res.saturated,
            "saturated_at": res.saturated_at}
    real = [m for m, v in zip(res.replicas.log_replicas, res.replicas.log_virtual) if not v]
    body["timeline"] = {"replica": real, "cells_on_Y1": res.cells_on_y1}
    if res.saturated:
        f, d = res.form, res.decomposition
        body |= {
            "form": {"cells": sorted(list(c) for c in f.cells), "K": f.K, "n_T": f.n_T,
                     "n_r": {str(r): f.n_r[r] for r in f.labels}},
            "estimate": law_json(res.estimate),
            "decomposition": {"N": d.N, "K": d.K, "n_T": d.n_T, "N_prime": d.N_prime,
                              "n": {str(r): v for r, v in d.n.items()},
                              "n_prime": {str(r): v for r, v in d.n_prime.items()},
                              "trials": d.trials, "virtual_slots": d.virtual},
            "residuals": {str(r): {"form7": a, "form7prime": b, "equal": a == b}
                          for r, (a, b) in res.residuals().items()},
            "retroactive_updates": [
                {"trial": e.trial, "cell": list(e.cell), "label": e.label, "K": e.K,
                 "virtual_slots": e.virtual_slots, "estimate_before": law_json(e.law_before),
                 "estimate_after": law_json(e.law_after)}
                for e in res.retro
            ],
            "k_track": res.k_track,
        }
        if ph.ground_truth is not None:
            body["oracle"] = {"ground_truth": law_json(ph.ground_truth),
                              "l1_to_truth": l1_distance(res.estimate, ph.ground_truth)}
    return body


def saturation_rows(report: dict) -> list:
    t = report["timeline"]
    return [[i + 1, m, c] for i, (m, c) in enumerate(zip(t["replica"], t["cells_on_Y1"]))]


def ktrack_rows(report: dict) -> list:
    return [[e["N"], e["K"], e["N_prime"], lab, v]
            for e in report.get("k_track", []) for lab, v in e["n_prime"].items()]


def run_semint_kind(sc: Scenario, jobs: int) -> RunOutput:
    ph = sc.build_phenomenon()
    cfg = SemintConfig(sc.params.window, sc.params.inflation)
    res = run_semint(ph, sc.params.N, sc.seed, cfg)
    body = semint_report(res, ph)
    tables = {"saturation.csv": (SATURATION_HEADER, saturation_rows(body))}
    if res.saturated:
        tables["k_track.csv"] = (KTRACK_HEADER, ktrack_rows(body))
    return RunOutput(body, tables)


def _lln_cfg(p) -> LLNConfig:
    return LLNConfig(p.epsilon, p.delta, p.M, p.N, p.label, p.schedule)


def _lln_rows(rep) -> list:
    return [[n, fmt_decimal(f)] for n, f in rep.by_N.items()]


def run_lln(sc: Scenario, jobs: int) -> RunOutput:
    ph = sc.build_phenomenon()
    rep = lln_check(ph, _lln_cfg(sc.params), ph.ground_truth, sc.seed, jobs)
    body = rep.to_json() | {"epsilon": sc.params.epsilon, "delta": sc.params.delta, "M": sc.params.M,
                            "N": sc.params.N, "label": sc.params.label}
    return RunOutput(body, {"lln.csv": (("N", "fraction"), _lln_rows(rep))})


def run_factualized_lln(sc: Scenario, jobs: int) -> RunOutput:
    ph = sc.build_phenomenon()
    cfg = SemintConfig(sc.params.window, sc.params.inflation)
    rep = factualized_lln_check(ph, _lln_cfg(sc.params), sc.seed, cfg, jobs)
    body = rep.to_json() | {"epsilon": sc.params.epsilon, "delta": sc.params.delta, "M": sc.params.M,
                            "N": sc.params.N, "label": sc.params.label}
    return RunOutput(body, {"lln.csv": (("N", "fraction"), _lln_rows(rep))})


def run_laplace(sc: Scenario, jobs: int) -> RunOutput:
    ph = sc.build_phenomenon()
    p = sc.params
    hist = laplace_oscillation(ph, p.rounds_max, p.N, p.level, sc.seed)
    body = hist.to_json()
    rows = [[r.round, "+".join(r.axes), r.universe_size, fmt_decimal(r.statistic), r.dof,
             fmt_decimal(r.critical), r.verdict, r.action] for r in hist.rounds]
    header = ("round", "axes", "universe_size", "statistic", "dof", "critical", "verdict", "action")
    return RunOutput(body, {"oscillation.csv": (header, rows)})


def compare_rows_from_json(rows: list) -> list:
    out = []
    for r in rows:
        l1 = None if r["l1"] is None else Fraction(r["l1"]["num"], r["l1"]["den"])
        sat = "" if r["saturated"] is None else str(r["saturated"]).lower()
        out.append([r["N"], r["estimator"], fmt_decimal(l1), sat, "" if r["K"] is None else r["K"]])
    return out


def run_compare(sc: Scenario, jobs: int) -> RunOutput:
    ph = sc.build_phenomenon()
    p = sc.params
    seeds = [sc.seed + i for i in range(p.runs)]
    rows = estimator_comparison(ph, p.schedule, seeds, SemintConfig(p.window, p.inflation),
                                p.rounds_max, p.level, jobs)
    body = {
        "seeds": seeds,
        "ground_truth": law_json(ph.ground_truth),
        "rows": [{"N": r.N, "estimator": r.estimator, "l1": r.l1, "saturated": r.saturated, "K": r.K}
                 for r in rows],
    }
    return RunOutput(body, {"compare.csv": (COMPARE_HEADER, [r.csv() for r in rows])})


def run_pre_tree(sc: Scenario, jobs: int) -> RunOutput:
    p = sc.params
    tree = build_pre_probability_tree(sc.build_channels(), p.schedule, sc.seed, p.trunk, p.threshold)
    branches, rows = [], []
    for b in tree.branches:
        st = b.stability
        branches.append({
            "channel": b.channel,
            "universe": list(b.universe),
            "schedule": list(b.schedule),
            "trials": b.trials,
            "pre_law": law_json(b.pre_law),
            "pre_law_sum": sum(m for _, m in b.pre_law.items()),
            "stability": {"metric": st.metric, "threshold": st.threshold, "stable": st.stable,
                          "frequencies": [list(f) for f in st.frequencies]},
        })
        for n, fr in zip(st.schedule, st.frequencies):
            rows += [[b.channel, n, u, fmt_decimal(f)] for u, f in zip(b.universe, fr)]
    body = {"trunk": tree.trunk, "total_trials": tree.total_trials, "branches": branches}
    return RunOutput(body, {"tree.csv": (("channel", "N", "outcome", "freq"), rows)})


RUNNERS = {
    "puzzle-coords": run_puzzle_coords,
    "puzzle-borders": run_puzzle_borders,
    "probability-game": run_probability_game,
    "semint-run": run_semint_kind,
    "lln-check": run_lln,
    "factualized-lln": run_factualized_lln,
    "laplace-oscillation": run_laplace,
    "compare": run_compare,
    "pre-tree": run_pre_tree,
}


def execute(sc: Scenario, jobs: int = 1) -> tuple[dict, dict]:
    """Report document for ``sc``; identical input gives an identical document."""
    out = RUNNERS[sc.kind](sc, jobs)
    return {"kind": sc.kind, "seed": sc.seed, "scenario_digest": sc.digest(),
            "tool_version": __version__, "result": out.report}, out.tables


def _now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


def run_to_dir(sc: Scenario, out_dir, jobs: int = 1) -> dict:
    """Write report, tables and manifest under ``out_dir``; returns the manifest."""
    started = _now()
    report, tables = execute(sc, jobs)
    written = [write_json(report, f"{out_dir}/report.json")]
    for name, (header, rows) in tables.items():
        written.append(write_csv(header, rows, f"{out_dir}/{name}"))
    manifest = {
        "tool_version": __version__,
        "python": platform.python_version(),
        "scenario": sc.name,
        "scenario_digest": sc.digest(),
        "seed": sc.seed,
        "jobs": jobs,
        "started": started,
        "finished": _now(),
        "outputs": [p.name for p in written],
    }
    write_json(manifest, f"{out_dir}/manifest.json")
    return manifest
