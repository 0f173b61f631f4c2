"""Random phenomena with known ground truth, and the pre-probability tree.

A phenomenon produces raw outcomes: one array per axis of its complexified
view (floats for measurable axes, 1-based category indices otherwise).  The
``ground_truth`` and ``complexified_support`` attributes exist for test
oracles only; the estimators in :mod:`factprob.semint` never touch them.
"""

from __future__ import annotations

import itertools
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Mapping, Sequence

import numpy as np

from .errors import ConfigError
from .painting import Painting, factual_law
from .rng import make_rng
from .views import (
    CATEGORICAL,
    AspectAxis,
    Description,
    ProbabilityLaw,
    View,
    discretize_array,
    law_from_counts,
)


def _fractions(weights) -> tuple[Fraction, ...]:
    out = tuple(Fraction(str(w)) if isinstance(w, float) else Fraction(w) for w in weights)
    if any(w < 0 for w in out) or sum(out) != 1:
        raise ConfigError(f"weights {weights} must be non-negative and sum to 1")
    return out


def _probs(weights: Sequence[Fraction]) -> np.ndarray:
    p = np.array([float(w) for w in weights])
    return p / p.sum()


class RandomPhenomenon(ABC):
    """A repeatable procedure with a finite universe of labels."""

    label_axis: str
    complexified_view: View
    refinement_axes: tuple[str, ...] = ()

    @property
    def label_view(self) -> View:
        return self.complexified_view.sub([self.label_axis])

    @property
    def labels(self) -> tuple:
        return self.complexified_view.axis(self.label_axis).values

    @property
    def ground_truth(self) -> ProbabilityLaw | None:
        return None

    @property
    def complexified_support(self) -> frozenset[Description] | None:
        return None

    @abstractmethod
    def sample_raw(self, rng: np.random.Generator, n: int) -> dict[str, np.ndarray]:
        ...

    def sample_labels(self, rng, n) -> np.ndarray:
        raw = self.sample_raw(rng, n)
        return np.asarray(self.labels, dtype=object)[raw[self.label_axis] - 1]

    def describe(self, raw: Mapping[str, np.ndarray]) -> list[Description]:
        """Discretize raw outcomes on the complexified view (zone resolution)."""
        cols = []
        for a in self.complexified_view.axes:
            v = np.asarray(raw[a.id])
            cols.append(v.astype(np.int64) if a.kind == CATEGORICAL else discretize_array(v, a))
        return [Description(self.complexified_view, c) for c in zip(*(c.tolist() for c in cols))]

    def sample(self, rng) -> Description:
        return self.describe(self.sample_raw(rng, 1))[0]

    def conceptual_universe(self, axes: Sequence[str]) -> list[tuple[int, ...]]:
        """Every bin combination on ``axes`` the view can express."""
        return list(itertools.product(*(range(1, self.complexified_view.axis(a).nbins + 1) for a in axes)))


class DicePhenomenon(RandomPhenomenon):
    """A possibly loaded die thrown onto a rectangular zone of a tabletop.

    The complexified view holds the face, the landing point (mm) and, unless
    ``orientation_unit`` is None, the angle between a die edge and the table
    edge.  Position and angle are uniform.  With ``coupled`` the face weights
    depend on which side of ``split_x`` the die lands.
    """

    label_axis = "r"

    def __init__(
        self,
        face_weights=(Fraction(1, 6),) * 6,
        zone=(0.0, 100.0, 0.0, 100.0),
        unit=5.0,
        orientation_unit: float | None = 5.0,
        coupled: Mapping | None = None,
    ):
        self.face_weights = _fractions(face_weights)
        if len(self.face_weights) != 6:
            raise ConfigError("a die has 6 faces", "face_weights")
        x0, x1, y0, y1 = (float(z) for z in zone)
        self.zone = (x0, x1, y0, y1)
        axes = [
            AspectAxis.categorical("r", range(1, 7)),
            AspectAxis.measurable("x", x0, x1, unit, spatial=True),
            AspectAxis.measurable("y", y0, y1, unit, spatial=True),
        ]
        if orientation_unit is not None:
            axes.append(AspectAxis.measurable("alpha", 0.0, 360.0, orientation_unit))
        self.complexified_view = View(tuple(axes))
        self.refinement_axes = tuple(a.id for a in axes[1:])
        self.coupled = None
        if coupled is not None:
            split = float(coupled["split_x"])
            if not x0 < split < x1:
                raise ConfigError("split_x must lie strictly inside the zone", "coupled.split_x")
            off = (split - x0) / unit
            if abs(off - round(off)) > 1e-9:
                raise ConfigError("split_x must fall on a bin boundary", "coupled.split_x")
            self.coupled = {
                "split_x": split,
                "left": _fractions(coupled["left"]),
                "right": _fractions(coupled["right"]),
            }

    def _left_fraction(self) -> Fraction:
        x0, x1, _, _ = self.zone
        s = self.coupled["split_x"]
        return (Fraction(str(s)) - Fraction(str(x0))) / (Fraction(str(x1)) - Fraction(str(x0)))

    def sample_raw(self, rng, n):
        x0, x1, y0, y1 = self.zone
        # upper-closed draws: x in (x0, x1]
        x = x1 - rng.random(n) * (x1 - x0)
        y = y1 - rng.random(n) * (y1 - y0)
        raw = {"x": x, "y": y}
        if "alpha" in self.complexified_view.ids:
            raw["alpha"] = 360.0 - rng.random(n) * 360.0
        if self.coupled is None:
            raw["r"] = rng.choice(6, size=n, p=_probs(self.face_weights)) + 1
        else:
            u = rng.random(n)
            left = x <= self.coupled["split_x"]
            cl = np.cumsum(_probs(self.coupled["left"]))
            cr = np.cumsum(_probs(self.coupled["right"]))
            r = np.where(left, np.searchsorted(cl, u, side="right"), np.searchsorted(cr, u, side="right"))
            raw["r"] = np.minimum(r, 5) + 1
        return raw

    @property
    def ground_truth(self):
        if self.coupled is None:
            w = self.face_weights
        else:
            f = self._left_fraction()
            w = [f * a + (1 - f) * b for a, b in zip(self.coupled["left"], self.coupled["right"])]
        return ProbabilityLaw(tuple(range(1, 7)), dict(zip(range(1, 7), w)))

    @property
    def complexified_support(self):
        view = self.complexified_view
        x = view.axis("x")
        rest = [range(1, view.axis(a).nbins + 1) for a in view.ids[2:]]
        split_bin = None
        if self.coupled is not None:
            split_bin = round((self.coupled["split_x"] - x.lower) / x.unit)
        out = set()
        for r in range(1, 7):
            for xb, *tail in itertools.product(range(1, x.nbins + 1), *rest):
                if split_bin is None:
                    w = self.face_weights[r - 1]
                else:
                    w = self.coupled["left" if xb <= split_bin else "right"][r - 1]
                if w > 0:
                    out.add(Description(view, (r, xb, *tail)))
        return frozenset(out)


class FinitePhenomenon(RandomPhenomenon):
    """Draws from an explicit table of complexified cells.

    ``cells`` lists every conceptually constructible cell as a mapping
    axis-id -> category (the label under ``label_axis``); ``masses`` gives each
    cell's probability.  Zero-mass cells are conceivable but never occur.
    """

    def __init__(self, cells: Sequence[Mapping], masses: Sequence, label_axis="r", axis_order=None):
        if not cells or len(cells) != len(masses):
            raise ConfigError("need one mass per cell and at least one cell", "cells")
        self.masses = _fractions(masses)
        self.label_axis = label_axis
        keys = list(axis_order) if axis_order else [label_axis] + sorted(set().union(*cells) - {label_axis})
        for c in cells:
            if set(c) != set(keys):
                raise ConfigError(f"cell {dict(c)} does not define axes {keys}", "cells")
        values = {k: list(dict.fromkeys(c[k] for c in cells)) for k in keys}
        self.complexified_view = View(tuple(AspectAxis.categorical(k, values[k]) for k in keys))
        self.refinement_axes = tuple(k for k in keys if k != label_axis)
        view = self.complexified_view
        self.table = np.array(
            [[view.axis(k).index_of(c[k]) for k in keys] for c in cells], dtype=np.int64
        )
        if len({tuple(row) for row in self.table}) != len(cells):
            raise ConfigError("duplicate cells", "cells")
        self._p = _probs(self.masses)

    @classmethod
    def deterministic(cls, label="a"):
        return cls([{"r": label}], [1])

    def sample_raw(self, rng, n):
        idx = rng.choice(len(self.table), size=n, p=self._p)
        rows = self.table[idx]
        return {a: rows[:, i] for i, a in enumerate(self.complexified_view.ids)}

    @property
    def ground_truth(self):
        col = self.complexified_view.position(self.label_axis)
        acc = {lab: Fraction(0) for lab in self.labels}
        for row, m in zip(self.table, self.masses):
            acc[self.labels[row[col] - 1]] += m
        return ProbabilityLaw(self.labels, acc)

    @property
    def complexified_support(self):
        return frozenset(
            Description(self.complexified_view, tuple(row))
            for row, m in zip(self.table, self.masses)
            if m > 0
        )

    def conceptual_universe(self, axes):
        pos = [self.complexified_view.position(a) for a in axes]
        return list(dict.fromkeys(tuple(int(row[i]) for i in pos) for row in self.table))


class UrnPhenomenon(RandomPhenomenon):
    """The ballot box: uniform draws with replacement from a painting's squares."""

    label_axis = "ac"

    def __init__(self, painting: Painting):
        self.painting = painting
        forms = sorted(s.colour_form for s in painting.squares)
        self.complexified_view = View(
            (
                AspectAxis.categorical("ac", range(1, painting.q + 1)),
                AspectAxis.measurable("x", 0, painting.width, 1, spatial=True),
                AspectAxis.measurable("y", 0, painting.height, 1, spatial=True),
                AspectAxis.categorical("cf", forms),
            )
        )
        self.refinement_axes = ("x", "y", "cf")
        cf = self.complexified_view.axis("cf")
        sq = painting.squares
        self._ac = np.array([s.ac for s in sq])
        # square centres; discretization maps them back to column k / row h
        self._x = np.array([s.loc[0] - 0.5 for s in sq])
        self._y = np.array([s.loc[1] - 0.5 for s in sq])
        self._cf = np.array([cf.index_of(s.colour_form) for s in sq])

    def sample_raw(self, rng, n):
        idx = rng.integers(0, len(self._ac), size=n)
        return {"ac": self._ac[idx], "x": self._x[idx], "y": self._y[idx], "cf": self._cf[idx]}

    @property
    def ground_truth(self):
        return factual_law(self.painting)

    @property
    def complexified_support(self):
        raw = {"ac": self._ac, "x": self._x, "y": self._y, "cf": self._cf}
        return frozenset(self.describe(raw))


def urn_from_painting(p: Painting) -> UrnPhenomenon:
    return UrnPhenomenon(p)


# -- pre-probability tree ---------------------------------------------------

Sampler = Callable[[np.random.Generator, int], np.ndarray]


def iid_sampler(masses: Sequence) -> Sampler:
    p = _probs(_fractions(masses))

    def draw(rng, n):
        return rng.choice(len(p), size=n, p=p)

    return draw


def constant_sampler(index: int = 0) -> Sampler:
    def draw(rng, n):
        return np.full(n, index, dtype=np.int64)

    return draw


def switching_sampler(before: Sequence, after: Sequence, switch_at: int) -> Sampler:
    """Nonstationary source: law ``before`` for the first ``switch_at`` trials, then ``after``."""
    a, b = iid_sampler(before), iid_sampler(after)

    def draw(rng, n):
        k = min(switch_at, n)
        return np.concatenate([a(rng, k), b(rng, n - k)])

    return draw


@dataclass(frozen=True)
class Channel:
    id: str
    universe: tuple
    sampler: Sampler

    def __post_init__(self):
        object.__setattr__(self, "universe", tuple(self.universe))


@dataclass
class StabilityReport:
    schedule: tuple[int, ...]
    frequencies: list[tuple[Fraction, ...]]
    metric: list[Fraction]
    threshold: float
    stable: bool


def _counts_at(trace: np.ndarray, schedule, size) -> list[np.ndarray]:
    return [np.bincount(trace[:n], minlength=size) for n in schedule]


def stability_check(trace, schedule, universe_size=None, threshold=0.05) -> StabilityReport:
    """Largest per-outcome drift of each checkpoint's frequencies from the final ones.

    ``trace`` holds outcome indices ``0..universe_size-1``.
    """
    schedule = tuple(int(n) for n in schedule)
    if len(schedule) < 2:
        raise ConfigError("need at least two checkpoints", "schedule")
    if any(b <= a for a, b in zip(schedule, schedule[1:])) or schedule[0] < 1:
        raise ConfigError("schedule must be strictly increasing and positive", "schedule")
    trace = np.asarray(trace, dtype=np.int64)
    if len(trace) < schedule[-1]:
        raise ConfigError(f"trace has {len(trace)} trials, schedule needs {schedule[-1]}", "schedule")
    size = universe_size or int(trace.max()) + 1
    freqs = [
        tuple(Fraction(int(c), n) for c in counts)
        for counts, n in zip(_counts_at(trace, schedule, size), schedule)
    ]
    final = freqs[-1]
    metric = [max(abs(f - g) for f, g in zip(fr, final)) for fr in freqs]
    return StabilityReport(schedule, freqs, metric, threshold, bool(metric[-2] < threshold))


@dataclass
class Branch:
    channel: str
    universe: tuple
    schedule: tuple[int, ...]
    pre_law: ProbabilityLaw
    stability: StabilityReport
    trials: int


@dataclass
class PreProbabilityTree:
    trunk: str
    branches: list[Branch] = field(default_factory=list)

    @property
    def total_trials(self) -> int:
        return sum(b.trials for b in self.branches)


def build_pre_probability_tree(
    channels: Sequence[Channel], schedule, seed, trunk="G", threshold=0.05
) -> PreProbabilityTree:
    """One branch per measurement channel; each channel consumes its own trials."""
    if not channels:
        raise ConfigError("need at least one channel", "channels")
    schedule = tuple(int(n) for n in schedule)
    tree = PreProbabilityTree(trunk)
    for i, ch in enumerate(channels):
        if not ch.universe:
            raise ConfigError("empty universe", f"channels[{i}].universe")
        # separate stream per branch: a trial feeds exactly one channel
        trace = np.asarray(ch.sampler(make_rng(seed, "tree", i), schedule[-1]), dtype=np.int64)
        if trace.size and (trace.min() < 0 or trace.max() >= len(ch.universe)):
            raise ConfigError("sampler produced an outcome outside the universe", f"channels[{i}]")
        report = stability_check(trace, schedule, len(ch.universe), threshold)
        counts = np.bincount(trace, minlength=len(ch.universe))
        pre = law_from_counts({u: int(c) for u, c in zip(ch.universe, counts)}, ch.universe)
        tree.branches.append(Branch(ch.id, ch.universe, schedule, pre, report, len(trace)))
    return tree
