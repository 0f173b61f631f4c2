from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from factprob.errors import EmptySampleError, MembershipError, RangeError, SchemaError
from factprob.views import (
    AspectAxis,
    Description,
    EventSet,
    ProbabilityLaw,
    View,
    discretize,
    discretize_array,
    event_probability,
    law_from_counts,
    project,
)

MM = AspectAxis.measurable("x", 0, 50, 5)
DEG = AspectAxis.measurable("alpha", 0, 360, 5)


def test_discretize_interior_value():
    assert discretize(12, MM) == 3
    assert MM.representative(3) == 15


def test_boundary_joins_lower_interval():
    assert discretize(10, MM) == 2
    assert discretize(50, MM) == 10


def test_degrees():
    assert discretize(7, DEG) == 2


@pytest.mark.parametrize("v", [0, -1, 50.0001, 1e9])
def test_out_of_range_names_axis(v):
    with pytest.raises(RangeError, match="^x:"):
        discretize(v, MM)


def test_float_noise_on_boundary_snaps():
    assert discretize(0.1 + 0.2, AspectAxis.measurable("t", 0, 1, 0.3)) == 1


def test_array_matches_scalar():
    vals = np.linspace(0.01, 50, 997)
    assert discretize_array(vals, MM).tolist() == [discretize(v, MM) for v in vals]


@pytest.mark.parametrize(
    "kw",
    [dict(kind="measurable", lower=0, upper=1, unit=0), dict(kind="measurable", lower=1, upper=1, unit=1),
     dict(kind="categorical", values=()), dict(kind="categorical", values=(1, 1)), dict(kind="ordinal")],
)
def test_axis_invariants(kw):
    with pytest.raises(SchemaError):
        AspectAxis("a", **kw)


def test_view_rejects_duplicate_ids():
    with pytest.raises(SchemaError):
        View((MM, MM))


@given(lo=st.integers(-100, 100), width=st.integers(1, 40), unit=st.sampled_from([0.5, 1, 2.5, 5, 7]),
       data=st.data())
def test_representative_rediscretizes_to_same_bin(lo, width, unit, data):
    a = AspectAxis.measurable("a", lo, lo + width * unit, unit)
    k = data.draw(st.integers(1, a.nbins))
    assert discretize(a.representative(k), a) == k


def _dice_view():
    return View((AspectAxis.categorical("r", range(1, 7)), AspectAxis.measurable("x", 0, 50, 5),
                 AspectAxis.measurable("y", 0, 50, 5), DEG))


def test_project_examples():
    v = _dice_view()
    d = Description(v, (3, 7, 2, 12))
    assert project(d, v.sub(["r"])).as_dict() == {"r": 3}
    assert project(d, v) == d


def test_project_painting_square():
    v = View((AspectAxis.categorical("loc", [(4, 9)]), AspectAxis.categorical("cf", ["F17"]),
              AspectAxis.categorical("ac", [1, 2])))
    d = v.describe({"loc": 1, "cf": 1, "ac": 2})
    assert project(d, v.sub(["ac"])).value("ac") == 2


def test_project_missing_axis():
    v = _dice_view()
    with pytest.raises(SchemaError):
        project(Description(v.sub(["r"]), (1,)), v.sub(["x"]))


@given(st.tuples(st.integers(1, 6), st.integers(1, 10), st.integers(1, 10), st.integers(1, 72)),
       st.sets(st.sampled_from(["r", "x", "y", "alpha"]), min_size=1))
def test_project_is_a_retraction(vals, ids):
    v = _dice_view()
    sub = v.sub([i for i in v.ids if i in ids])
    d = Description(v, vals)
    once = project(d, sub)
    assert project(once, sub) == once


def test_description_checks_ranges():
    with pytest.raises(SchemaError):
        Description(_dice_view(), (7, 1, 1, 1))


def test_law_from_counts_examples():
    law = law_from_counts({2: 10, 1: 40, 3: 50})
    assert law[2] == Fraction(10, 100)
    assert law_from_counts({"a": 5})["a"] == 1
    assert [m for _, m in law_from_counts({1: 1, 2: 2, 3: 3}).items()] == [Fraction(1, 6), Fraction(2, 6),
                                                                            Fraction(3, 6)]


def test_law_from_counts_empty():
    with pytest.raises(EmptySampleError):
        law_from_counts({1: 0, 2: 0})


def test_law_rejects_bad_norm_and_negative():
    with pytest.raises(SchemaError):
        ProbabilityLaw((1, 2), {1: Fraction(1, 2), 2: Fraction(1, 3)})
    with pytest.raises(SchemaError):
        ProbabilityLaw((1, 2), {1: Fraction(3, 2), 2: Fraction(-1, 2)})
    with pytest.raises(MembershipError):
        ProbabilityLaw((1,), {1: 1, 2: 0})


FAIR = ProbabilityLaw(tuple(range(1, 7)), {i: Fraction(1, 6) for i in range(1, 7)})


def test_event_probability_examples():
    assert event_probability(FAIR, EventSet(range(1, 7))) == 1
    assert event_probability(FAIR, EventSet()) == 0
    assert event_probability(FAIR, EventSet({1, 2})) == Fraction(2, 6)
    with pytest.raises(MembershipError):
        event_probability(FAIR, {7})


@given(st.lists(st.integers(0, 30), min_size=2, max_size=12).filter(lambda c: sum(c) > 0), st.data())
def test_event_probability_is_additive(counts, data):
    law = law_from_counts(dict(enumerate(counts)))
    side = data.draw(st.lists(st.sampled_from([0, 1, 2]), min_size=len(counts), max_size=len(counts)))
    e1 = {i for i, s in enumerate(side) if s == 1}
    e2 = {i for i, s in enumerate(side) if s == 2}
    assert event_probability(law, e1 | e2) == event_probability(law, e1) + event_probability(law, e2)
    assert sum(m for _, m in law.items()) == 1
