from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from mckit.series import (
    Series,
    SeriesError,
    SeriesRingSpec,
    SkeinValue,
    exp,
    log,
    reflection,
    series_exp_log,
    series_mul,
    substitute_bulk_shift,
)

SPEC = SeriesRingSpec.standard(0, 0, {"g_s": 4, "a": 3, "T": 3}, 0)
SPEC_LOW = SeriesRingSpec.standard(0, 0, {"g_s": 4, "a": 3}, -2)


def gs(spec=SPEC):
    return Series.var(spec, "g_s")


def polys(spec, max_terms=4, min_degree=0):
    mono = st.fixed_dictionaries(
        {"g_s": st.integers(min_degree, 3), "a": st.integers(0, 2), "T": st.integers(0, 2)}
    )
    term = st.tuples(mono, st.integers(-3, 3))

    def build(items):
        total = Series.zero(spec)
        for exps, c in items:
            total = total + Series.monomial(spec, exps, c)
        return total

    return st.lists(term, max_size=max_terms).map(build)


def test_product_examples():
    one = Series.constant(SPEC.with_truncation({"g_s": 2}), 1)
    g = Series.var(one.spec, "g_s")
    assert series_mul(one + g, one - g) == one - g * g
    f = Series.monomial(SPEC, {"g_s": 1, "a": 2}, 3)
    assert f * Series.constant(SPEC, 1) == f


def test_geometric_sum_truncates_to_one():
    spec = SeriesRingSpec.standard(0, 0, {"g_s": 4}, 0)
    g = Series.var(spec, "g_s")
    s = sum((g**n for n in range(5)), Series.zero(spec))
    assert s * (Series.constant(spec, 1) - g) == Series.constant(spec, 1)


def test_exp_and_log_examples():
    assert exp(Series.zero(SPEC)) == Series.constant(SPEC, 1)
    spec = SeriesRingSpec.standard(0, 0, {"g_s": 3}, 0)
    g = Series.var(spec, "g_s")
    expected = g - (g**2).scale(Fraction(1, 2)) + (g**3).scale(Fraction(1, 3))
    assert log(Series.constant(spec, 1) + g) == expected
    f = Series.constant(SPEC, 1) + Series.var(SPEC, "a") * gs() + Series.var(SPEC, "T")
    assert exp(log(f)) == f
    assert series_exp_log(f, "log") == log(f)
    with pytest.raises(SeriesError):
        series_exp_log(f, "sqrt")


def test_exp_needs_nilpotent_argument():
    with pytest.raises(SeriesError):
        exp(Series.constant(SPEC, 1))
    with pytest.raises(SeriesError):
        log(Series.var(SPEC, "a"))


def test_reflection_examples():
    f = gs() ** 2 + Series.var(SPEC, "a")
    assert reflection(f) == f
    assert reflection(gs()) == -gs()
    beta_a = SkeinValue.gen("beta") * SkeinValue.gen("A")
    assert reflection(beta_a) == -(SkeinValue.gen("beta", -1) * SkeinValue.gen("A"))
    x = SkeinValue.gen("A", 3) * SkeinValue.gen("beta", 2)
    assert reflection(reflection(x)) == x


def test_spec_mismatch_and_floor():
    other = SeriesRingSpec.standard(0, 0, {"g_s": 2}, 0)
    with pytest.raises(SeriesError):
        _ = gs() * Series.var(other, "g_s")
    # below the floor nothing is stored
    assert Series.monomial(SPEC, {"g_s": -1}).is_zero()
    low = Series.monomial(SPEC_LOW, {"g_s": -2})
    assert (low * Series.var(SPEC_LOW, "g_s") ** 2) == Series.constant(SPEC_LOW, 1)


def test_bulk_shift():
    b = Series.var(SPEC, "b")
    assert substitute_bulk_shift(b * b, 1) == b * b + (b * gs()).scale(2) + gs() * gs()


def test_json_round_trip():
    f = Series.monomial(SPEC, {"g_s": 2, "a": 1}, Fraction(-3, 7)) + Series.constant(SPEC, 5)
    assert Series.from_json(f.to_json()) == f
    v = SkeinValue.gen("alpha", -1) * SkeinValue.gen("r") + SkeinValue.gen("theta")
    assert SkeinValue.from_json(v.to_json()) == v


@given(polys(SPEC), polys(SPEC), polys(SPEC))
def test_ring_axioms(f, g, h):
    assert f * g == g * f
    assert (f * g) * h == f * (g * h)
    assert f * (g + h) == f * g + f * h
    assert f - f == Series.zero(SPEC)


@given(polys(SPEC, min_degree=1))
def test_exp_log_round_trip(f):
    one = Series.constant(SPEC, 1)
    assert log(exp(f)) == f
    assert exp(log(one + f)) == one + f
    assert exp(f + f) == exp(f) * exp(f)


@given(polys(SPEC), polys(SPEC))
def test_reflection_is_an_involutive_ring_map(f, g):
    assert reflection(f * g) == reflection(f) * reflection(g)
    assert reflection(reflection(f)) == f


skein_values = st.lists(
    st.tuples(
        st.tuples(st.integers(-2, 2), st.integers(0, 2), st.integers(-2, 2), st.integers(0, 2), st.integers(0, 1)),
        st.integers(-3, 3),
    ),
    max_size=4,
).map(SkeinValue.from_terms)


@given(skein_values, skein_values)
def test_skein_reflection_ring_map(u, v):
    assert reflection(u * v) == reflection(u) * reflection(v)
    assert reflection(u + v) == reflection(u) + reflection(v)
    assert reflection(reflection(u)) == u


def test_skein_expansion_inverts_laurent_generators():
    spec = SeriesRingSpec.standard(0, 0, {"g_s": 4}, 0)
    g = Series.var(spec, "g_s")
    one = Series.constant(spec, 1)
    expansion = {"beta": one + g, "A": g, "alpha": one - g, "r": one, "theta": one}
    value = SkeinValue.gen("beta") * SkeinValue.gen("beta", -1)
    assert value.expand(expansion) == one
    with pytest.raises(SeriesError):
        SkeinValue.one().expand({"beta": one})
