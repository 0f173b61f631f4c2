"""Semantic integration: replicas of the points-grid, saturation, and the
support-ratio estimate.

Every observed outcome is a cell of the points-grid.  It is written on the
lowest-index replica where that cell is still free, so the replicas holding
a given cell are always ``1..m``.  Once replica 1 stops growing for a whole
window while later replicas keep filling, the occupied cells of replica 1 are
taken as the points-form, and each label's probability is its share of the
form's cells.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    ConfigError,
    ConsistencyError,
    EmptySampleError,
    GridBoundsError,
    InvariantError,
    MembershipError,
    RangeError,
)
from .rng import make_rng
from .views import (
    CATEGORICAL,
    MEASURABLE,
    AspectAxis,
    ProbabilityLaw,
    TrialTrace,
    View,
    discretize_array,
)

Cell = tuple


@dataclass(frozen=True)
class PointsGridSpec:
    """The complexified view with every spatial axis widened past the zone.

    Widening is done in whole units on each side so that zone bins and grid
    bins coincide; the resulting width is at least ``inflation`` times the zone.
    """

    view: View
    zone_view: View
    label_axis: str
    inflation: float = 1.5

    @classmethod
    def from_view(cls, zone_view: View, label_axis: str, inflation: float = 1.5) -> "PointsGridSpec":
        if inflation < 1.5:
            raise ConfigError(f"inflation {inflation} below 1.5", "inflation")
        if zone_view.axis(label_axis).kind != CATEGORICAL:
            raise ConfigError("label axis must be categorical", "label_axis")
        axes = []
        for a in zone_view.axes:
            if a.kind == MEASURABLE and a.spatial:
                width = a.upper - a.lower
                pad = math.ceil((inflation - 1) / 2 * width / a.unit - 1e-9)
                axes.append(
                    AspectAxis.measurable(a.id, a.lower - pad * a.unit, a.upper + pad * a.unit, a.unit, True)
                )
            else:
                axes.append(a)
        return cls(View(tuple(axes)), zone_view, label_axis, inflation)

    @property
    def cell_count(self) -> int:
        return self.view.cell_count

    @property
    def labels(self) -> tuple:
        return self.view.axis(self.label_axis).values

    def label_of(self, cell: Cell):
        return self.labels[cell[self.view.position(self.label_axis)] - 1]

    def cells(self, raw: Mapping[str, np.ndarray]) -> list[Cell]:
        """Grid cells of raw outcomes; anything outside the grid is a hard error."""
        cols = []
        for a in self.view.axes:
            v = np.asarray(raw[a.id])
            if a.kind == CATEGORICAL:
                v = v.astype(np.int64)
                if v.size and (v.min() < 1 or v.max() > a.nbins):
                    raise GridBoundsError(f"category index outside 1..{a.nbins} on axis {a.id!r}")
                cols.append(v)
            else:
                try:
                    cols.append(discretize_array(v, a))
                except RangeError as exc:
                    raise GridBoundsError(f"outcome outside the points-grid: {exc}") from exc
        return list(zip(*(c.tolist() for c in cols)))

    def to_json(self) -> dict:
        axes = []
        for a in self.view.axes:
            if a.kind == CATEGORICAL:
                axes.append({"id": a.id, "kind": a.kind, "values": list(a.values)})
            else:
                axes.append(
                    {"id": a.id, "kind": a.kind, "lower": a.lower, "upper": a.upper,
                     "unit": a.unit, "spatial": a.spatial, "bins": a.nbins}
                )
        return {"axes": axes, "label_axis": self.label_axis, "inflation": self.inflation,
                "cell_count": self.cell_count}


class ReplicaSet:
    """Occupancy of the stacked replicas of one points-grid.

    Because placement always fills the lowest free replica, the whole stack is
    captured by ``depth[cell]`` (the cell is occupied on replicas
    ``1..depth[cell]``) and ``sizes[k-1]`` (cells occupied on replica ``k``).
    Every filled slot is also logged in order for later recounts.
    """

    def __init__(self, grid: PointsGridSpec):
        self.grid = grid
        self.depth: dict[Cell, int] = {}
        self.sizes: list[int] = []
        self.label_cache: dict[Cell, object] = {}
        self.log_cells: list[Cell] = []
        self.log_replicas: list[int] = []
        self.log_virtual: list[bool] = []
        self.trials = 0
        self.y1_mark = 0
        self.last_upper = 0
        self._K = 0

    def _label(self, cell):
        lab = self.label_cache.get(cell)
        if lab is None:
            lab = self.label_cache[cell] = self.grid.label_of(cell)
        return lab

    def place(self, cell: Cell) -> int:
        """Record one observed outcome; returns the replica index it landed on."""
        cell = tuple(cell)
        if not self.grid.view.contains(cell):
            raise GridBoundsError(f"cell {cell} outside the points-grid")
        return self._place(cell)

    def _place(self, cell):
        m = self.depth.get(cell, 0) + 1
        self.depth[cell] = m
        if m > len(self.sizes):
            self.sizes.append(0)
        self.sizes[m - 1] += 1
        self.trials += 1
        self.log_cells.append(cell)
        self.log_replicas.append(m)
        self.log_virtual.append(False)
        if m == 1:
            self.y1_mark = self.trials
            self._K = 1
        else:
            self.last_upper = self.trials
            if m == self._K + 1 and self.sizes[m - 1] == self.sizes[0]:
                self._K = m
        self._label(cell)
        return m

    def fill_virtual(self, cell: Cell, upto: int) -> int:
        """Mark ``cell`` occupied on replicas ``1..upto`` without a trial; returns slots added."""
        m = self.depth.get(cell, 0)
        for k in range(m + 1, upto + 1):
            if k > len(self.sizes):
                self.sizes.append(0)
            self.sizes[k - 1] += 1
            self.log_cells.append(cell)
            self.log_replicas.append(k)
            self.log_virtual.append(True)
        if upto > m:
            self.depth[cell] = upto
        self._label(cell)
        self._K = self._count_complete()
        return max(0, upto - m)

    def _count_complete(self) -> int:
        if not self.sizes:
            return 0
        k = 1
        while k < len(self.sizes) and self.sizes[k] == self.sizes[0]:
            k += 1
        return k

    @property
    def K(self) -> int:
        """Number of replicas whose occupancy equals replica 1's."""
        return self._K

    @property
    def slots(self) -> int:
        return len(self.log_cells)

    def replica(self, k: int) -> frozenset:
        return frozenset(c for c, m in self.depth.items() if m >= k)

    def __len__(self):
        return len(self.sizes)

    def trace(self) -> TrialTrace:
        return TrialTrace(
            [self.label_cache[c] for c in self.log_cells],
            list(self.log_cells),
            list(self.log_replicas),
            list(self.log_virtual),
        )


@dataclass(frozen=True)
class PointsForm:
    cells: frozenset
    K: int
    n_T: int
    n_r: Mapping[object, int] = field(hash=False)
    labels: tuple = ()

    def __post_init__(self):
        if self.K < 1:
            raise InvariantError("a points-form needs K >= 1")
        if sum(self.n_r.values()) != self.n_T or len(self.cells) != self.n_T:
            raise InvariantError("label counts do not add up to the form size")


def _form(rs: ReplicaSet, cells, K) -> PointsForm:
    labels = rs.grid.labels
    n_r = {lab: 0 for lab in labels}
    for c in cells:
        n_r[rs.label_cache[c]] += 1
    return PointsForm(frozenset(cells), K, len(cells), n_r, labels)


def place(rs: ReplicaSet, cell: Cell) -> int:
    return rs.place(cell)


def default_window(rs: ReplicaSet) -> int:
    return max(5 * (rs.sizes[0] if rs.sizes else 0), 500)


def detect_saturation(rs: ReplicaSet, window: int | None = None) -> PointsForm | None:
    """Replica 1 as a points-form if it stayed unchanged for the last ``window`` trials
    while some of those trials went to higher replicas; otherwise None."""
    w = default_window(rs) if window is None else window
    if w < 1:
        raise ConfigError("window must be >= 1", "window")
    if rs.trials - rs.y1_mark >= w and rs.last_upper > rs.trials - w:
        return _form(rs, rs.replica(1), 1)
    return None


def complete_replicas(rs: ReplicaSet) -> PointsForm:
    if not rs.sizes:
        raise InvariantError("no placements yet")
    return _form(rs, rs.replica(1), rs.K)


def retroactive_update(rs: ReplicaSet, form: PointsForm, cell: Cell) -> PointsForm:
    """Adjoin a cell seen late to the form and to all ``form.K`` replicas.

    The extra slots on replicas the cell never actually reached are logged as
    virtual.  Applying the same update twice changes nothing.
    """
    cell = tuple(cell)
    if cell in form.cells:
        return form
    if not rs.grid.view.contains(cell):
        raise GridBoundsError(f"cell {cell} outside the points-grid")
    rs.fill_virtual(cell, form.K)
    rs.y1_mark = rs.trials
    return _form(rs, form.cells | {cell}, form.K)


def estimate(form: PointsForm) -> ProbabilityLaw:
    """Each label's share of the form's cells.  K cancels, so it plays no role."""
    if form.n_T < 1:
        raise EmptySampleError("empty points-form")
    support = form.labels or tuple(form.n_r)
    return ProbabilityLaw(support, {r: Fraction(form.n_r.get(r, 0), form.n_T) for r in support})


@dataclass(frozen=True)
class Decomposition:
    """``N = K n_T + N'`` and ``n(r) = K n_r + n'(r)``, recounted from a trace.

    ``N`` counts slots: observed trials plus retroactively filled ones.
    """

    N: int
    K: int
    n_T: int
    N_prime: int
    n: Mapping[object, int] = field(hash=False)
    n_prime: Mapping[object, int] = field(hash=False)
    trials: int = 0
    virtual: int = 0


def decompose(trace: TrialTrace, form: PointsForm) -> Decomposition:
    if trace.replicas is None or trace.cells is None:
        raise ConsistencyError("trace has no replica placements")
    K = form.K
    rep = np.asarray(trace.replicas, dtype=np.int64)
    labels = list(trace.labels)
    inside = rep <= K
    per_cell: dict = {}
    for c, ok in zip(trace.cells, inside.tolist()):
        if ok:
            per_cell[c] = per_cell.get(c, 0) + 1
    if set(per_cell) != set(form.cells) or any(v != K for v in per_cell.values()):
        raise ConsistencyError("replicas 1..K of the trace do not match the points-form")
    n = {lab: 0 for lab in form.n_r}
    n_prime = {lab: 0 for lab in form.n_r}
    for lab, ok in zip(labels, inside.tolist()):
        if lab not in n:
            raise ConsistencyError(f"label {lab!r} unknown to the points-form")
        n[lab] += 1
        if not ok:
            n_prime[lab] += 1
    N = len(labels)
    N_prime = int((~inside).sum())
    dec = Decomposition(
        N, K, form.n_T, N_prime, n, n_prime,
        trials=trace.trials, virtual=N - trace.trials,
    )
    if N != K * form.n_T + N_prime or any(n[r] != K * form.n_r[r] + n_prime[r] for r in n):
        raise ConsistencyError("decomposition identities fail")
    return dec


def residual_difference(form: PointsForm, dec: Decomposition, r) -> tuple[Fraction, Fraction]:
    """Deviation of ``n(r)/N`` from the estimate, computed two ways.

    The first form divides the decomposed counts directly; the second is the
    rearranged single-fraction expression in the residuals ``n'(r)`` and ``N'``.
    """
    if r not in form.n_r:
        raise MembershipError(f"label {r!r} not in form")
    K, nT, nr = dec.K, form.n_T, form.n_r[r]
    Np, npr = dec.N_prime, dec.n_prime[r]
    direct = abs(Fraction(K * nr + npr, K * nT + Np) - Fraction(nr, nT))
    rearranged = abs(Fraction(nT * npr - nr * Np, K * nT * nT + nT * Np))
    return direct, rearranged


# -- runs -------------------------------------------------------------------


@dataclass(frozen=True)
class SemintConfig:
    window: int | None = None
    inflation: float = 1.5

    def __post_init__(self):
        if self.window is not None and self.window < 1:
            raise ConfigError("window must be >= 1", "window")
        if self.inflation < 1.5:
            raise ConfigError("inflation must be >= 1.5", "inflation")


@dataclass
class RetroEvent:
    trial: int
    cell: Cell
    label: object
    K: int
    virtual_slots: int
    law_before: ProbabilityLaw
    law_after: ProbabilityLaw


class SemanticIntegrator:
    """Feeds grid cells through placement, saturation and retroactive updates."""

    def __init__(self, grid: PointsGridSpec, config: SemintConfig = SemintConfig()):
        self.grid = grid
        self.config = config
        self.rs = ReplicaSet(grid)
        self.form: PointsForm | None = None
        self.saturated_at: int | None = None
        self.retro: list[RetroEvent] = []
        self.cells_on_y1: list[int] = []
        self.k_track: list[dict] = []
        self._n = {lab: 0 for lab in grid.labels}

    def feed(self, cells: Iterable[Cell]):
        rs = self.rs
        window = self.config.window
        for cell in cells:
            k_before = rs.K
            m = rs._place(cell)
            lab = rs.label_cache[cell]
            self._n[lab] += 1
            if self.form is None:
                form = detect_saturation(rs, window)
                if form is not None:
                    self.form = complete_replicas(rs)
                    self.saturated_at = rs.trials
                    self._track()
            elif m == 1:
                before = estimate(self.form)
                prior = PointsForm(self.form.cells, max(k_before, 1), self.form.n_T,
                                   self.form.n_r, self.form.labels)
                slots = rs.slots
                self.form = retroactive_update(rs, prior, cell)
                self._n[lab] += rs.slots - slots
                self.retro.append(RetroEvent(rs.trials, cell, lab, prior.K, rs.slots - slots,
                                             before, estimate(self.form)))
            elif rs.K != self.form.K:
                self.form = PointsForm(self.form.cells, rs.K, self.form.n_T, self.form.n_r, self.form.labels)
                self._track()
            self.cells_on_y1.append(rs.sizes[0])
        return self

    def _track(self):
        f = self.form
        slots = self.rs.slots
        self.k_track.append({
            "N": slots,
            "trial": self.rs.trials,
            "K": f.K,
            "N_prime": slots - f.K * f.n_T,
            "n_prime": {str(r): self._n[r] - f.K * f.n_r[r] for r in f.labels},
        })

    @property
    def saturated(self) -> bool:
        return self.form is not None

    def result(self) -> "SemintResult":
        trace = self.rs.trace()
        form = self.form
        dec = decompose(trace, form) if form is not None else None
        return SemintResult(self.grid, self.config, self.rs, form, dec, self.saturated_at,
                            list(self.retro), list(self.k_track), list(self.cells_on_y1), trace)


@dataclass
class SemintResult:
    grid: PointsGridSpec
    config: SemintConfig
    replicas: ReplicaSet
    form: PointsForm | None
    decomposition: Decomposition | None
    saturated_at: int | None
    retro: list[RetroEvent]
    k_track: list[dict]
    cells_on_y1: list[int]
    trace: TrialTrace

    @property
    def saturated(self) -> bool:
        return self.form is not None

    @property
    def estimate(self) -> ProbabilityLaw | None:
        return estimate(self.form) if self.form is not None else None

    def residuals(self) -> dict:
        if self.form is None:
            return {}
        return {r: residual_difference(self.form, self.decomposition, r) for r in self.form.labels}


def grid_for(phenomenon, inflation: float = 1.5) -> PointsGridSpec:
    return PointsGridSpec.from_view(phenomenon.complexified_view, phenomenon.label_axis, inflation)


def run_semint(phenomenon, n: int, seed, config: SemintConfig = SemintConfig(), keys=()) -> SemintResult:
    """Run ``n`` trials of a phenomenon through a fresh integrator.

    Only the sampled raw outcomes and the view reach the integrator; the
    phenomenon's ground truth is never consulted.
    """
    if n < 1:
        raise ConfigError("N must be >= 1", "N")
    grid = grid_for(phenomenon, config.inflation)
    rng = make_rng(seed, "semint", *keys)
    cells = grid.cells(phenomenon.sample_raw(rng, n))
    return SemanticIntegrator(grid, config).feed(cells).result()


def form_from_cells(grid: PointsGridSpec, cells: Sequence[Cell], K: int = 1) -> PointsForm:
    """Points-form over a known cell set, e.g. an enumerated support."""
    rs = ReplicaSet(grid)
    for c in cells:
        rs.place(c)
    return _form(rs, rs.replica(1), K)
