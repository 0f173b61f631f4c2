"""Acceptance suite: one test per criterion, each reported as a PASS/FAIL line
at the end of the pytest run (see ``conftest.py``)."""

import json
import time
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

from factprob.analysis import LLNConfig, empirical_law, estimator_comparison, factualized_lln_check, l1_distance, lln_check
from factprob.painting import factual_law, generate_painting, probability_game, reconstruct_by_borders, reconstruct_by_coordinates
from factprob.phenomena import (
    Channel,
    DicePhenomenon,
    FinitePhenomenon,
    build_pre_probability_tree,
    iid_sampler,
    switching_sampler,
    urn_from_painting,
)
from factprob.rng import make_rng
from factprob.runner import run_to_dir
from factprob.scenario import load_scenario
from factprob.semint import (
    Decomposition,
    PointsForm,
    residual_difference,
    retroactive_update,
    run_semint,
)

SCENARIOS = Path(__file__).resolve().parents[1] / "scripts" / "scenarios"
COUNTS = {1: 10, 2: 2, 3: 88}
DIE = DicePhenomenon(zone=(0, 10, 0, 10), unit=5, orientation_unit=None)
NONUNIFORM = FinitePhenomenon(
    [{"r": "A", "s": f"c{i}"} for i in range(4)] + [{"r": "B", "s": f"c{i}"} for i in range(4, 12)],
    [Fraction(1, 10)] * 4 + [Fraction(3, 40)] * 8,
)


@pytest.fixture
def crit(record_property):
    def mark(num, title):
        record_property("criterion", f"{num} {title}")

        def detail(text):
            record_property("detail", text)
            print(f"criterion {num}: {text}")

        return detail

    return mark


def test_c01_coordinate_puzzle(crit):
    say = crit(1, "coordinate puzzle")
    p = generate_painting(7, COUNTS)
    t = time.perf_counter()
    reports = [reconstruct_by_coordinates(p, s) for s in range(50)]
    dt = time.perf_counter() - t
    ok = all(r.extractions == 100 and r.misplacement_attempts == 0 and r.grids[0] == p.layout() for r in reports)
    say(f"50 seeds, all 100 extractions / 0 misplacements: {ok}; {dt:.3f}s (< 1s)")
    assert ok and dt < 1.0


def test_c02_border_puzzle_ten_replicas(crit):
    say = crit(2, "multi-replica border puzzle")
    p = generate_painting(7, COUNTS)
    t = time.perf_counter()
    r = reconstruct_by_borders(p, 10, seed=1)
    dt = time.perf_counter() - t
    equal = all(g == p.layout() for g in r.grids)
    say(f"R=10: extractions={r.extractions}, grids equal={equal}, misplacement attempts={r.misplacement_attempts}; "
        f"{dt:.3f}s (< 10s)")
    assert r.extractions == 1000 and r.completed_replicas == 10 and equal and dt < 10.0


def test_c03_probability_game(crit):
    say = crit(3, "probability game convergence")
    p = generate_painting(7, COUNTS)
    t = time.perf_counter()
    labels = np.asarray(probability_game(p, 100_000, seed=42).labels)
    dev = max(abs((labels == j).mean() - c / 100) for j, c in COUNTS.items())
    dt = time.perf_counter() - t
    say(f"max_j |n(j)/N - n_P(j)/100| = {dev:.5f} (<= 0.01); {dt:.3f}s (< 2s)")
    assert dev <= 0.01 and dt < 2.0


def test_c04_urn_estimate_equals_factual_law(crit):
    say = crit(4, "urn estimate equals factual law")
    p = generate_painting(7, COUNTS)
    t = time.perf_counter()
    res = run_semint(urn_from_painting(p), 10_000, seed=3)
    dt = time.perf_counter() - t
    est = res.estimate
    exact = est == factual_law(p)
    say(f"saturated at trial {res.saturated_at}, n_T={res.form.n_T}, K={res.form.K}, "
        f"estimate={dict(est.items())}, exact match={exact}; {dt:.3f}s (< 2s)")
    assert res.saturated and exact and all(est[j] == Fraction(c, 100) for j, c in COUNTS.items())
    assert dt < 2.0


def _recount_ok(res) -> bool:
    f, d, tr = res.form, res.decomposition, res.trace
    outside = sum(1 for m in tr.replicas if m > f.K)
    if d.N != len(tr.labels) or d.N_prime != outside or d.N != f.K * f.n_T + outside:
        return False
    for r in f.labels:
        n_r = sum(1 for lab in tr.labels if lab == r)
        n_pr = sum(1 for lab, m in zip(tr.labels, tr.replicas) if lab == r and m > f.K)
        if n_r != f.K * f.n_r[r] + n_pr or d.n[r] != n_r:
            return False
    return True


def test_c05_decomposition_identities(crit):
    say = crit(5, "decomposition identities")
    rare = FinitePhenomenon([{"r": r, "s": "c"} for r in (1, 2, 3)] + [{"r": 3, "s": "rare"}],
                            [Fraction(3333, 10000)] * 3 + [Fraction(1, 10000)])
    runs = [(DIE, 2000), (DicePhenomenon(zone=(0, 5, 0, 5), orientation_unit=None), 1000),
            (urn_from_painting(generate_painting(7, COUNTS)), 2500), (NONUNIFORM, 4000), (rare, 40_000),
            (FinitePhenomenon.deterministic(), 700)]
    results = []
    for i, (ph, n) in enumerate(runs):
        for seed in range(3):
            res = run_semint(ph, n, seed=100 + 10 * i + seed)
            assert res.saturated
            results.append(_recount_ok(res))
    say(f"{sum(results)}/{len(results)} runs satisfy N = K n_T + N' and n(r) = K n_r + n'(r) by recount")
    assert all(results)


def test_c06_eq7_identity(crit):
    say = crit(6, "residual forms agree exactly")
    rng = make_rng(2024, "eq7")
    agree = 0
    for _ in range(1000):
        n_T = int(rng.integers(1, 200))
        n_r = int(rng.integers(0, n_T + 1))
        K = int(rng.integers(1, 10_000))
        Np = int(rng.integers(0, 20 * n_T))
        npr = int(rng.integers(0, Np + 1))
        form = PointsForm(frozenset(range(n_T)), K, n_T, {"r": n_r, "o": n_T - n_r}, ("r", "o"))
        dec = Decomposition(K * n_T + Np, K, n_T, Np, {"r": K * n_r + npr, "o": K * (n_T - n_r) + Np - npr},
                            {"r": npr, "o": Np - npr})
        a, b = residual_difference(form, dec, "r")
        agree += isinstance(a, Fraction) and a == b
    say(f"{agree}/1000 random states with equal rational values")
    assert agree == 1000


def test_c07_lln_monte_carlo(crit):
    say = crit(7, "law of large numbers Monte-Carlo")
    t = time.perf_counter()
    hi = lln_check(DIE, LLNConfig(0.05, 0.05, 1000, 2000, 3), DIE.ground_truth, seed=11)
    lo = lln_check(DIE, LLNConfig(0.05, 0.05, 1000, 50, 3), DIE.ground_truth, seed=11)
    dt = time.perf_counter() - t
    say(f"N=2000 fraction {float(hi.fraction):.3f} (>= 0.95), N=50 fraction {float(lo.fraction):.3f} (< 0.95); "
        f"{dt:.2f}s (< 30s)")
    assert hi.passed and hi.fraction >= Fraction(95, 100)
    assert not lo.passed and lo.fraction < Fraction(95, 100)
    assert dt < 30.0


def test_c08_factualized_lln(crit):
    say = crit(8, "factualized law of large numbers")
    rep = factualized_lln_check(DIE, LLNConfig(0.05, 0.05, 1000, 2000, 3), seed=11)
    say(f"fraction {float(rep.fraction):.3f} (>= 0.95), identity held on every run: {rep.identity_holds}, "
        f"unsaturated runs: {rep.unsaturated_runs}")
    assert rep.passed and rep.identity_holds and rep.unsaturated_runs == 0


def test_c09_support_ratio_semantics(crit):
    say = crit(9, "support-ratio semantics")
    res = run_semint(NONUNIFORM, 20_000, seed=5)
    truth = NONUNIFORM.ground_truth
    # brute-force oracle: share of support cells per label
    supp = NONUNIFORM.complexified_support
    ratio = {r: Fraction(sum(1 for d in supp if d.value("r") == r), len(supp)) for r in NONUNIFORM.labels}
    gap = sum(abs(ratio[r] - truth.mass(r)) for r in NONUNIFORM.labels)
    emp = empirical_law(NONUNIFORM.sample_labels(make_rng(5, "emp"), 100_000), NONUNIFORM.labels)
    rows = estimator_comparison(NONUNIFORM, [1000, 10_000, 100_000], [0, 1, 2])
    sem_l1 = [r.l1 for r in rows if r.estimator == "semint"]
    emp_l1 = [r.l1 for r in rows if r.estimator == "empirical"]
    say(f"estimate {dict(res.estimate.items())}, empirical L1 {float(l1_distance(emp, truth)):.4f}, "
        f"semint plateau {[str(x) for x in sem_l1]} vs oracle gap {gap}")
    assert res.estimate.mass("A") == Fraction(4, 12) and res.estimate.mass("B") == Fraction(8, 12)
    assert dict(res.estimate.items()) == ratio
    assert float(l1_distance(emp, truth)) <= 0.02
    assert sem_l1 == [gap] * 3 and emp_l1[-1] < emp_l1[0]


def test_c10_retroactive_update(crit):
    say = crit(10, "retroactive update")
    ph = FinitePhenomenon([{"r": r, "s": "c"} for r in (1, 2, 3)] + [{"r": 3, "s": "rare"}],
                          [Fraction(3333, 10000)] * 3 + [Fraction(1, 10000)])
    res = run_semint(ph, 40_000, seed=11)
    ev = res.retro[0]
    rs, form = res.replicas, res.form
    on_all = all(ev.cell in rs.replica(k) for k in range(1, ev.K + 1))
    renorm = (ev.law_before.mass(3) == Fraction(1, 3) and ev.law_after.mass(3) == Fraction(1, 2)
              and sum(ev.law_after.masses.values()) == 1)
    slots = rs.slots
    again = retroactive_update(rs, form, ev.cell)
    idem = again == form and rs.slots == slots
    say(f"rare cell first seen at trial {ev.trial} (saturation at {res.saturated_at}); n_T 3 -> {form.n_T}; "
        f"on all K={ev.K} replicas: {on_all}; renormalized: {renorm}; idempotent: {idem}")
    assert len(res.retro) == 1 and ev.trial > res.saturated_at
    assert form.n_T == 4 and on_all and renorm and idem


def test_c11_pre_probability_tree(crit):
    say = crit(11, "pre-probability tree")
    half = [Fraction(1, 2)] * 2
    tree = build_pre_probability_tree(
        [Channel("B", ("b1", "b2"), iid_sampler(half)),
         Channel("C", ("c1", "c2", "c3"), iid_sampler([Fraction(1, 5), Fraction(3, 10), Fraction(1, 2)]))],
        (100, 1000, 4000), seed=9)
    control = build_pre_probability_tree(
        [Channel("D", ("d1", "d2"), switching_sampler([Fraction(4, 5), Fraction(1, 5)], half, 2000))],
        (100, 2000, 4000), seed=9)
    sums = [sum(b.pre_law.masses.values()) for b in tree.branches]
    metric = tree.branches[0].stability.metric[-2]
    say(f"branch sums {[str(s) for s in sums]}; iid penultimate drift {float(metric):.4f} (< 0.05); "
        f"control stable flag {control.branches[0].stability.stable}")
    assert len(tree.branches) == 2 and sums == [1, 1]
    assert metric < Fraction(1, 20) and all(b.stability.stable for b in tree.branches)
    assert not control.branches[0].stability.stable


def test_c12_determinism(crit, tmp_path):
    say = crit(12, "byte-identical reports")
    paths = sorted(SCENARIOS.glob("*.json"))
    same = []
    for p in paths:
        sc = load_scenario(p)
        outs = [tmp_path / p.stem / tag for tag in "ab"]
        mans = [run_to_dir(sc, o) for o in outs]
        files = [n for n in mans[0]["outputs"]]
        same.append(all((outs[0] / n).read_bytes() == (outs[1] / n).read_bytes() for n in files))
        json.loads((outs[0] / "report.json").read_text())
    say(f"{sum(same)}/{len(same)} scenarios reproduce byte-identical outputs")
    assert all(same) and len(same) >= 9
