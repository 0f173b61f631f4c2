"""Baseline estimators and law-of-large-numbers checks.

The meta-probability of the law of large numbers is realised as the observed
fraction of ``M`` independent seeded runs whose deviation stays within
``epsilon``.  Run ``i`` always draws from ``make_rng(seed, tag, i)``, so the
outcome does not depend on how runs are distributed over workers.
"""

from __future__ import annotations

from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from functools import partial
from typing import Sequence

import numpy as np
from scipy import stats

from .errors import ConfigError, EmptySampleError, InvariantError
from .rng import make_rng
from .semint import (
    Decomposition,
    SemanticIntegrator,
    SemintConfig,
    estimate,
    grid_for,
    residual_difference,
)
from .serialize import fmt_decimal, law_json
from .views import CATEGORICAL, ProbabilityLaw, TrialTrace, discretize_array, law_from_counts


def _fraction(x) -> Fraction:
    return Fraction(str(x)) if isinstance(x, float) else Fraction(x)


def empirical_law(trace, support: Sequence | None = None) -> ProbabilityLaw:
    labels = trace.labels if isinstance(trace, TrialTrace) else trace
    labels = np.asarray(labels).tolist()
    if not labels:
        raise EmptySampleError("empty trace")
    return law_from_counts(Counter(labels), support)


def l1_distance(p: ProbabilityLaw, q: ProbabilityLaw) -> Fraction:
    keys = list(dict.fromkeys([*p.support, *q.support]))
    return sum((abs(p.masses.get(k, 0) - q.masses.get(k, 0)) for k in keys), Fraction(0))


def _map(fn, items, jobs):
    items = list(items)
    if jobs is None or jobs <= 1 or len(items) < 2:
        return [fn(i) for i in items]
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(fn, items, chunksize=max(1, len(items) // (4 * jobs))))


@dataclass(frozen=True)
class LLNConfig:
    epsilon: float
    delta: float
    M: int
    N: int
    label: object
    schedule: tuple[int, ...] = ()

    def __post_init__(self):
        if not 0 < self.epsilon < 1:
            raise ConfigError("epsilon must lie in (0, 1)", "epsilon")
        if not 0 < self.delta < 1:
            raise ConfigError("delta must lie in (0, 1)", "delta")
        if self.M < 1 or self.N < 1:
            raise ConfigError("M and N must be >= 1", "M" if self.M < 1 else "N")
        sched = tuple(sorted({int(n) for n in (*self.schedule, self.N)}))
        if sched[0] < 1:
            raise ConfigError("schedule entries must be >= 1", "schedule")
        object.__setattr__(self, "schedule", sched)


@dataclass
class LLNReport:
    fraction: Fraction
    bound: Fraction
    passed: bool
    empirical_N0: int | None
    by_N: dict[int, Fraction] = field(default_factory=dict)
    reference: Fraction | None = None
    unsaturated_runs: int = 0
    identity_holds: bool | None = None

    def to_json(self) -> dict:
        out = {
            "fraction": self.fraction,
            "fraction_decimal": fmt_decimal(self.fraction),
            "bound": self.bound,
            "pass": self.passed,
            "empirical_N0": self.empirical_N0,
            "by_N": {str(n): f for n, f in self.by_N.items()},
        }
        if self.reference is not None:
            out["reference"] = self.reference
        if self.identity_holds is not None:
            out["identity_holds"] = self.identity_holds
            out["unsaturated_runs"] = self.unsaturated_runs
        return out


def _report(cfg: LLNConfig, hits: Sequence[Sequence[bool]], **extra) -> LLNReport:
    bound = 1 - _fraction(cfg.delta)
    by_n = {n: Fraction(sum(h[i] for h in hits), cfg.M) for i, n in enumerate(cfg.schedule)}
    ok = [by_n[n] >= bound for n in cfg.schedule]
    n0 = None
    for i in range(len(ok) - 1, -1, -1):
        if not ok[i]:
            break
        n0 = cfg.schedule[i]
    frac = by_n[cfg.N]
    return LLNReport(frac, bound, frac >= bound, n0, by_n, **extra)


def _lln_run(i, ph, cfg, p_ref, eps, seed):
    labels = ph.sample_labels(make_rng(seed, "lln", i), cfg.schedule[-1])
    hits = np.cumsum(labels == cfg.label)
    return [abs(Fraction(int(hits[n - 1]), n) - p_ref) <= eps for n in cfg.schedule]


def lln_check(ph, cfg: LLNConfig, reference: ProbabilityLaw, seed, jobs=1) -> LLNReport:
    """Fraction of runs with ``|n(r)/N - p_ref(r)| <= epsilon``, against ``1 - delta``."""
    if cfg.label not in reference.masses:
        raise ConfigError(f"label {cfg.label!r} absent from reference law", "label")
    p_ref = reference.mass(cfg.label)
    eps = _fraction(cfg.epsilon)
    hits = _map(partial(_lln_run, ph=ph, cfg=cfg, p_ref=p_ref, eps=eps, seed=seed), range(cfg.M), jobs)
    return _report(cfg, hits, reference=p_ref)


def _decomposition_now(integ: SemanticIntegrator) -> Decomposition:
    f, rs = integ.form, integ.rs
    n = dict(integ._n)
    n_prime = {r: n[r] - f.K * f.n_r[r] for r in f.labels}
    virtual = rs.slots - rs.trials
    return Decomposition(rs.slots, f.K, f.n_T, rs.slots - f.K * f.n_T, n, n_prime, rs.trials, virtual)


def _flln_run(i, ph, cfg, eps, seed, semint_cfg):
    grid = grid_for(ph, semint_cfg.inflation)
    cells = grid.cells(ph.sample_raw(make_rng(seed, "flln", i), cfg.schedule[-1]))
    integ = SemanticIntegrator(grid, semint_cfg)
    hits, identity_ok, start = [], True, 0
    for n in cfg.schedule:
        integ.feed(cells[start:n])
        start = n
        if integ.form is None:
            hits.append(False)
            continue
        dec = _decomposition_now(integ)
        direct, rearranged = residual_difference(integ.form, dec, cfg.label)
        identity_ok &= direct == rearranged
        hits.append(direct <= eps)
    saturated = integ.form is not None
    if saturated:
        # the counters used above must agree with a full recount of the trace
        res = integ.result()
        if res.decomposition != _decomposition_now(integ):
            raise InvariantError("running counters disagree with trace recount")
    return hits, identity_ok, saturated


def factualized_lln_check(ph, cfg: LLNConfig, seed, semint_cfg: SemintConfig = SemintConfig(),
                          jobs=1) -> LLNReport:
    """As :func:`lln_check`, with each run's own points-form estimate as the reference.

    The deviation is ``|n(r)/N - n_r/n_T|`` built from the decomposed counts;
    runs that never saturate count as failures.
    """
    if cfg.label not in ph.labels:
        raise ConfigError(f"label {cfg.label!r} not a label of the phenomenon", "label")
    eps = _fraction(cfg.epsilon)
    runs = _map(partial(_flln_run, ph=ph, cfg=cfg, eps=eps, seed=seed, semint_cfg=semint_cfg),
                range(cfg.M), jobs)
    hits = [h for h, _, _ in runs]
    identity = all(ok for _, ok, _ in runs)
    unsat = sum(not s for _, _, s in runs)
    return _report(cfg, hits, unsaturated_runs=unsat, identity_holds=identity)


# -- Laplace oscillation ----------------------------------------------------


@dataclass
class OscillationRound:
    round: int
    axes: tuple[str, ...]
    universe_size: int
    n: int
    statistic: float
    dof: int
    critical: float
    p_value: float
    verdict: str
    action: str


@dataclass
class OscillationHistory:
    rounds: list[OscillationRound]
    terminal: str
    level: float
    label_axis: str
    labels: tuple
    _universe: list = field(default_factory=list, repr=False)

    @property
    def final_axes(self) -> tuple[str, ...]:
        return self.rounds[-1].axes

    def final_label_law(self) -> ProbabilityLaw:
        """Uniform posit of the last round, pushed down to the labels."""
        counts = Counter(self.labels[cell[0] - 1] for cell in self._universe)
        return law_from_counts(counts, self.labels)

    def to_json(self) -> dict:
        return {
            "terminal": self.terminal,
            "level": self.level,
            "rounds": [vars(r) | {"axes": list(r.axes)} for r in self.rounds],
            "final_label_law": law_json(self.final_label_law()),
        }


def _project(ph, raw, axes) -> list[tuple]:
    cols = []
    for a_id in axes:
        a = ph.complexified_view.axis(a_id)
        v = np.asarray(raw[a_id])
        cols.append(v.astype(np.int64) if a.kind == CATEGORICAL else discretize_array(v, a))
    return list(zip(*(c.tolist() for c in cols)))


def chi_square_uniform(counts: Sequence[int]) -> tuple[float, int]:
    counts = np.asarray(counts, dtype=float)
    expected = counts.sum() / len(counts)
    return float(((counts - expected) ** 2 / expected).sum()), len(counts) - 1


def laplace_oscillation(ph, rounds_max: int, n: int, level: float = 0.01, seed=0,
                        keys=()) -> OscillationHistory:
    """Posit uniformity, test it on fresh samples, refine the universe on rejection.

    Round ``k`` works on the label axis plus the first ``k-1`` refinement axes
    of the phenomenon, each round with its own ``n`` samples.
    """
    if rounds_max < 1 or n < 1:
        raise ConfigError("rounds_max and N must be >= 1")
    if not 0 < level < 1:
        raise ConfigError("level must lie in (0, 1)", "level")
    rounds, terminal, universe = [], None, []
    for k in range(1, rounds_max + 1):
        if k - 1 > len(ph.refinement_axes):
            break
        axes = (ph.label_axis, *ph.refinement_axes[: k - 1])
        universe = ph.conceptual_universe(axes)
        index = {c: i for i, c in enumerate(universe)}
        obs = _project(ph, ph.sample_raw(make_rng(seed, "laplace", *keys, k), n), axes)
        counts = np.zeros(len(universe), dtype=np.int64)
        for c in obs:
            if c not in index:
                raise InvariantError(f"outcome {c} outside the posited universe")
            counts[index[c]] += 1
        if len(universe) == 1:
            stat, dof, crit, pval = 0.0, 0, 0.0, 1.0
        else:
            stat, dof = chi_square_uniform(counts)
            crit = float(stats.chi2.ppf(1 - level, dof))
            pval = float(stats.chi2.sf(stat, dof))
        accept = stat <= crit
        if accept:
            action = "stop"
            terminal = "accepted"
        elif k - 1 < len(ph.refinement_axes):
            action = f"refine:{ph.refinement_axes[k - 1]}"
        else:
            action = "unresolved"
            terminal = "unresolved"
        rounds.append(OscillationRound(k, axes, len(universe), n, stat, dof, crit, pval,
                                       "accept" if accept else "reject", action))
        if terminal:
            break
    if terminal is None:
        terminal = "rounds-exhausted"
    return OscillationHistory(rounds, terminal, level, ph.label_axis, ph.labels, universe)


# -- estimator comparison ---------------------------------------------------

COMPARE_HEADER = ("N", "estimator", "l1", "saturated", "K")


@dataclass
class CompareRow:
    N: int
    estimator: str
    l1: Fraction | None
    saturated: bool | None
    K: int | None

    def csv(self) -> list:
        sat = "" if self.saturated is None else str(self.saturated).lower()
        return [self.N, self.estimator, fmt_decimal(self.l1), sat, "" if self.K is None else self.K]


def _compare_seed(seed, ph, schedule, semint_cfg, rounds_max, level):
    truth = ph.ground_truth
    grid = grid_for(ph, semint_cfg.inflation)
    raw = ph.sample_raw(make_rng(seed, "compare"), schedule[-1])
    cells = grid.cells(raw)
    labels = [grid.label_of(c) for c in cells]
    integ = SemanticIntegrator(grid, semint_cfg)
    out, start = [], 0
    for n in schedule:
        integ.feed(cells[start:n])
        start = n
        if integ.form is not None:
            sem = (l1_distance(estimate(integ.form), truth), True, integ.form.K)
        else:
            sem = (None, False, None)
        emp = l1_distance(empirical_law(labels[:n], ph.labels), truth)
        hist = laplace_oscillation(ph, rounds_max, n, level, seed=seed, keys=("compare", n))
        lap = l1_distance(hist.final_label_law(), truth)
        out.append((n, sem, emp, lap))
    return out


def estimator_comparison(ph, schedule: Sequence[int], seeds: Sequence[int],
                         semint_cfg: SemintConfig = SemintConfig(), rounds_max=3, level=0.01,
                         jobs=1) -> list[CompareRow]:
    """L1 distance to the ground truth for three estimators over growing N.

    Values are averaged over ``seeds``.  The semint row averages saturated seeds
    only, is flagged saturated only when every seed is, and reports the
    smallest K among them.
    """
    if ph.ground_truth is None:
        raise ConfigError("comparison needs a phenomenon with ground truth")
    schedule = sorted({int(n) for n in schedule})
    if not schedule or schedule[0] < 1 or not seeds:
        raise ConfigError("need a positive schedule and at least one seed")
    per_seed = _map(partial(_compare_seed, ph=ph, schedule=schedule, semint_cfg=semint_cfg,
                            rounds_max=rounds_max, level=level), list(seeds), jobs)
    rows = []
    for i, n in enumerate(schedule):
        sems = [s[i][1] for s in per_seed]
        sat = [x for x in sems if x[1]]
        sem_l1 = sum((x[0] for x in sat), Fraction(0)) / len(sat) if sat else None
        rows.append(CompareRow(n, "semint", sem_l1, len(sat) == len(sems),
                               min(x[2] for x in sat) if sat else None))
        rows.append(CompareRow(n, "empirical", sum((s[i][2] for s in per_seed), Fraction(0)) / len(per_seed),
                               None, None))
        rows.append(CompareRow(n, "laplace-final", sum((s[i][3] for s in per_seed), Fraction(0)) / len(per_seed),
                               None, None))
    return rows
