"""Views, descriptions and exact-rational probability laws.

A view is an ordered tuple of aspect axes.  Measurable axes are cut into
half-open unit intervals ``(lo + (k-1)u, lo + ku]`` numbered from 1, and a
value is represented by the upper end of its interval.  Categorical axes
number their values from 1 in declaration order.  A description assigns one
bin index to every axis of its view.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Hashable, Iterable, Mapping, Sequence

import numpy as np

from .errors import EmptySampleError, MembershipError, RangeError, SchemaError

MEASURABLE = "measurable"
CATEGORICAL = "categorical"

# relative slack used to snap values that sit on a bin boundary up to float noise
_SNAP = 1e-9


@dataclass(frozen=True)
class AspectAxis:
    id: str
    kind: str
    lower: float | None = None
    upper: float | None = None
    unit: float | None = None
    values: tuple = ()
    spatial: bool = False

    def __post_init__(self):
        if self.kind == MEASURABLE:
            if self.unit is None or self.unit <= 0:
                raise SchemaError(f"axis {self.id!r}: unit must be > 0")
            if self.lower is None or self.upper is None or not self.upper > self.lower:
                raise SchemaError(f"axis {self.id!r}: upper must exceed lower")
        elif self.kind == CATEGORICAL:
            object.__setattr__(self, "values", tuple(self.values))
            if not self.values:
                raise SchemaError(f"axis {self.id!r}: empty value list")
            if len(set(self.values)) != len(self.values):
                raise SchemaError(f"axis {self.id!r}: duplicate values")
            if self.spatial:
                raise SchemaError(f"axis {self.id!r}: categorical axes cannot be spatial")
        else:
            raise SchemaError(f"axis {self.id!r}: unknown kind {self.kind!r}")

    @classmethod
    def measurable(cls, id, lower, upper, unit, spatial=False):
        return cls(id, MEASURABLE, float(lower), float(upper), float(unit), spatial=spatial)

    @classmethod
    def categorical(cls, id, values):
        return cls(id, CATEGORICAL, values=tuple(values))

    @property
    def nbins(self) -> int:
        if self.kind == CATEGORICAL:
            return len(self.values)
        return _ceil_snapped((self.upper - self.lower) / self.unit)

    def representative(self, k: int):
        """Value standing for bin ``k``: upper interval end, or the category."""
        if not 1 <= k <= self.nbins:
            raise RangeError(f"bin {k} outside 1..{self.nbins}", path=self.id)
        if self.kind == CATEGORICAL:
            return self.values[k - 1]
        return self.lower + k * self.unit

    def index_of(self, value) -> int:
        if self.kind != CATEGORICAL:
            raise SchemaError(f"axis {self.id!r} is not categorical")
        try:
            return self.values.index(value) + 1
        except ValueError:
            raise RangeError(f"value {value!r} not in axis values", path=self.id) from None


def _ceil_snapped(q):
    r = round(q)
    if abs(q - r) <= _SNAP * max(1.0, abs(q)):
        return int(r)
    return math.ceil(q)


def discretize(value: float, axis: AspectAxis) -> int:
    """Bin index of ``value`` on a measurable axis (boundaries close the lower bin)."""
    if axis.kind != MEASURABLE:
        raise SchemaError(f"axis {axis.id!r} is not measurable")
    k = _ceil_snapped((value - axis.lower) / axis.unit)
    if not 1 <= k <= axis.nbins or not axis.lower < value:
        raise RangeError(
            f"value {value} outside ({axis.lower}, {axis.upper}]", path=axis.id
        )
    return k


def discretize_array(values: np.ndarray, axis: AspectAxis) -> np.ndarray:
    """Vectorised :func:`discretize`; raises on the first out-of-range value."""
    q = (np.asarray(values, dtype=float) - axis.lower) / axis.unit
    r = np.rint(q)
    snap = np.abs(q - r) <= _SNAP * np.maximum(1.0, np.abs(q))
    k = np.where(snap, r, np.ceil(q)).astype(np.int64)
    bad = (k < 1) | (k > axis.nbins) | ~(np.asarray(values) > axis.lower)
    if bad.any():
        v = np.asarray(values)[np.argmax(bad)]
        raise RangeError(f"value {v} outside ({axis.lower}, {axis.upper}]", path=axis.id)
    return k


@dataclass(frozen=True)
class View:
    axes: tuple[AspectAxis, ...]

    def __post_init__(self):
        object.__setattr__(self, "axes", tuple(self.axes))
        ids = [a.id for a in self.axes]
        if len(set(ids)) != len(ids):
            raise SchemaError(f"duplicate axis ids in view: {ids}")

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(a.id for a in self.axes)

    def axis(self, id: str) -> AspectAxis:
        for a in self.axes:
            if a.id == id:
                return a
        raise SchemaError(f"axis {id!r} not in view {self.ids}")

    def position(self, id: str) -> int:
        try:
            return self.ids.index(id)
        except ValueError:
            raise SchemaError(f"axis {id!r} not in view {self.ids}") from None

    @property
    def cell_count(self) -> int:
        return math.prod(a.nbins for a in self.axes)

    def sub(self, ids: Iterable[str]) -> "View":
        return View(tuple(self.axis(i) for i in ids))

    def contains(self, cell: Sequence[int]) -> bool:
        return len(cell) == len(self.axes) and all(
            1 <= k <= a.nbins for k, a in zip(cell, self.axes)
        )

    def describe(self, values: Mapping[str, int]) -> "Description":
        return Description(self, tuple(values[i] for i in self.ids))


@dataclass(frozen=True)
class Description:
    view: View
    values: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(int(v) for v in self.values))
        if len(self.values) != len(self.view.axes):
            raise SchemaError(
                f"description has {len(self.values)} values for {len(self.view.axes)} axes"
            )
        for k, a in zip(self.values, self.view.axes):
            if not 1 <= k <= a.nbins:
                raise SchemaError(f"bin {k} outside 1..{a.nbins}", path=a.id)

    def __getitem__(self, axis_id: str) -> int:
        return self.values[self.view.position(axis_id)]

    def as_dict(self) -> dict[str, int]:
        return dict(zip(self.view.ids, self.values))

    def value(self, axis_id: str):
        """Representative value (category or interval upper end) on one axis."""
        return self.view.axis(axis_id).representative(self[axis_id])


def project(d: Description, sub: View) -> Description:
    """Restrict ``d`` to the axes of ``sub``."""
    idx = []
    for a in sub.axes:
        i = d.view.position(a.id)
        if d.view.axes[i] != a:
            raise SchemaError(f"axis {a.id!r} differs between views")
        idx.append(i)
    return Description(sub, tuple(d.values[i] for i in idx))


def _as_fraction(x) -> Fraction:
    if isinstance(x, float):
        return Fraction(str(x))
    return Fraction(x)


@dataclass(frozen=True)
class ProbabilityLaw:
    """Exact-rational law over a finite ordered support.

    Construction checks the norm: masses are non-negative and sum to 1 exactly.
    """

    support: tuple
    masses: Mapping[Hashable, Fraction] = field(hash=False)

    def __post_init__(self):
        support = tuple(self.support)
        if len(set(support)) != len(support):
            raise SchemaError("duplicate labels in support")
        masses = {s: _as_fraction(self.masses.get(s, 0)) for s in support}
        extra = set(self.masses) - set(support)
        if extra:
            raise MembershipError(f"masses given for labels outside support: {sorted(map(str, extra))}")
        if any(m < 0 for m in masses.values()):
            raise SchemaError("negative mass")
        if sum(masses.values()) != 1:
            raise SchemaError(f"masses sum to {sum(masses.values())}, not 1")
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "masses", masses)

    def mass(self, label) -> Fraction:
        try:
            return self.masses[label]
        except KeyError:
            raise MembershipError(f"label {label!r} not in support") from None

    def __getitem__(self, label) -> Fraction:
        return self.mass(label)

    def items(self):
        return ((s, self.masses[s]) for s in self.support)

    def as_floats(self) -> dict:
        return {s: float(m) for s, m in self.items()}

    def __eq__(self, other):
        if not isinstance(other, ProbabilityLaw):
            return NotImplemented
        return set(self.support) == set(other.support) and all(
            self.masses[s] == other.masses[s] for s in self.support
        )

    def __hash__(self):
        return hash(frozenset(self.masses.items()))


@dataclass(frozen=True)
class EventSet:
    labels: frozenset

    def __init__(self, labels=()):
        object.__setattr__(self, "labels", frozenset(labels))


def law_from_counts(counts: Mapping[Hashable, int], support: Sequence | None = None) -> ProbabilityLaw:
    """Relative frequencies as exact rationals; ``support`` may add zero-count labels."""
    if any(int(c) < 0 for c in counts.values()):
        raise SchemaError("negative count")
    total = sum(int(c) for c in counts.values())
    if total < 1:
        raise EmptySampleError("counts sum to zero")
    if support is None:
        support = tuple(counts)
    return ProbabilityLaw(
        tuple(support), {s: Fraction(int(counts.get(s, 0)), total) for s in support}
    )


def event_probability(law: ProbabilityLaw, e: EventSet | Iterable) -> Fraction:
    labels = e.labels if isinstance(e, EventSet) else frozenset(e)
    outside = labels - set(law.support)
    if outside:
        raise MembershipError(f"labels outside support: {sorted(map(str, outside))}")
    return sum((law.masses[s] for s in labels), Fraction(0))


@dataclass
class TrialTrace:
    """Ordered log of a run.

    ``labels[i]`` is the label of slot ``i``; ``cells`` and ``replicas`` record
    where a points-grid run put it.  ``virtual[i]`` marks slots that were filled
    retroactively rather than by an observed trial.
    """

    labels: Sequence
    cells: Sequence | None = None
    replicas: Sequence[int] | None = None
    virtual: Sequence[bool] | None = None

    def __len__(self):
        return len(self.labels)

    @property
    def trials(self) -> int:
        if self.virtual is None:
            return len(self.labels)
        return len(self.labels) - int(sum(self.virtual))
