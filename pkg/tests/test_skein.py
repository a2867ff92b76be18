import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mckit import skein as sk
from mckit.series import SkeinValue

alpha, beta, r, theta, A = (SkeinValue.gen(n) for n in ("alpha", "beta", "r", "theta", "A"))
DIAGRAMS = sk.enumerate_diagrams(3)


def inv(x: str, k: int = 1) -> SkeinValue:
    return SkeinValue.gen(x, -k)


def test_unknot_values():
    assert sk.evaluate(sk.unknot()) == r
    assert sk.evaluate(sk.unknot(framing=1)) == alpha * r
    assert sk.evaluate(sk.unknot(offset=1)) == r * theta
    assert sk.evaluate(sk.unknot(framing=-2)) == inv("alpha", 2) * r


def test_unlink_is_multiplicative():
    assert sk.evaluate(sk.unlink(2)) == r * r
    assert sk.evaluate(sk.unlink(3)) == r * r * r


def test_negative_offset_is_rejected():
    with pytest.raises(sk.SkeinError):
        sk.evaluate(sk.unknot(offset=-1))


def test_hopf_link_hand_tree():
    # one crossing resolved: beta^-2 * unlink + beta^-1 A * (kinked unknot), then A r eliminated
    hopf = sk.braid_closure([1, 1], 2)
    assert [c[4] for c in hopf.crossings] == [1, 1]
    expected = alpha * alpha - inv("beta", 2) + inv("beta", 2) * r * r
    assert sk.evaluate(hopf) == expected


def test_trefoil_hand_tree():
    hopf_value = alpha * alpha - inv("beta", 2) + inv("beta", 2) * r * r
    tree = inv("beta", 2) * alpha * r + inv("beta") * A * hopf_value
    assert sk.evaluate(sk.braid_closure([1, 1, 1], 2)) == sk.reduce_value(tree)


def test_kink_resolves_consistently():
    curl = sk.braid_closure([1], 2)
    assert sk.evaluate(curl) == alpha * r
    total = SkeinValue.zero()
    for coeff, piece in sk.resolve_crossing(curl, 0):
        total = total + coeff * sk.evaluate(piece)
    assert sk.reduce_value(total) == alpha * r


def test_switching_twice_is_identity():
    hopf = sk.braid_closure([1, 1, -2], 3)
    for k in range(len(hopf.crossings)):
        assert sk.relabel(hopf.switch(k).switch(k)) == sk.relabel(hopf)


@pytest.mark.parametrize("word,strands", [([1, 1], 2), ([1, 1, 1], 2), ([1, -2, 1, -2], 3)])
def test_mirror_matches_reflection(word, strands):
    D = sk.braid_closure(word, strands)
    assert sk.mirror_reflection(sk.evaluate(D)) == sk.evaluate(D.mirror())
    assert sk.relabel(D.mirror().mirror()) == sk.relabel(D)


def test_unknot_is_mirror_fixed():
    assert sk.mirror_reflection(sk.evaluate(sk.unknot())) == r


def test_small_diagram_count():
    # oriented planar codes up to relabeling, at most three crossings
    assert len(DIAGRAMS) == 140


def test_confluence_on_small_diagrams():
    memo: dict = {}
    for D in DIAGRAMS:
        values = sk.evaluation_set(D, memo)
        assert values == {sk.evaluate(D)}


def test_crossing_relation_holds_on_small_diagrams():
    for D in DIAGRAMS:
        for k in range(len(D.crossings)):
            total = SkeinValue.zero()
            for coeff, piece in sk.resolve_crossing(D, k):
                total = total + coeff * sk.evaluate(piece)
            assert sk.reduce_value(total) == sk.evaluate(D)


def test_depth_bound():
    with pytest.raises(sk.SkeinError):
        sk.evaluate(sk.braid_closure([1, 1, 1, 1, 1], 2), max_depth=0)


def test_json_round_trip():
    D = sk.braid_closure([1, -2, 1], 3).with_extras(framing={0: 2}, offsets={0: 1})
    assert sk.LinkDiagram.from_json(D.to_json()) == D
    v = sk.evaluate(D)
    assert SkeinValue.from_json(v.to_json()) == v


braid_words = st.integers(2, 4).flatmap(
    lambda n: st.tuples(
        st.just(n),
        st.lists(st.integers(1, n - 1).flatmap(lambda g: st.sampled_from([g, -g])), min_size=0, max_size=4),
    )
)


@settings(max_examples=40)
@given(braid_words, st.data())
def test_reidemeister_two(word_strands, data):
    n, word = word_strands
    pos = data.draw(st.integers(0, len(word)))
    g = data.draw(st.integers(1, n - 1)) * data.draw(st.sampled_from([1, -1]))
    longer = sk.reidemeister_two(word, pos, g)
    assert sk.evaluate(sk.braid_closure(longer, n)) == sk.evaluate(sk.braid_closure(word, n))


@settings(max_examples=40)
@given(braid_words, st.data())
def test_reidemeister_three(word_strands, data):
    n, word = word_strands
    n = max(n, 3)
    pos = data.draw(st.integers(0, len(word)))
    base = data.draw(st.integers(1, n - 2))
    pattern = data.draw(st.integers(0, len(sk.R3_PATTERNS) - 1))
    lhs, rhs = sk.reidemeister_three(word, pos, base, pattern)
    assert sk.evaluate(sk.braid_closure(lhs, n)) == sk.evaluate(sk.braid_closure(rhs, n))


@settings(max_examples=30)
@given(braid_words, st.sampled_from([1, -1]))
def test_markov_stabilization_scales_by_alpha(word_strands, sign):
    n, word = word_strands
    stabilized = sk.braid_closure(list(word) + [sign * n], n + 1)
    factor = alpha if sign > 0 else inv("alpha")
    assert sk.evaluate(stabilized) == sk.reduce_value(factor * sk.evaluate(sk.braid_closure(word, n)))


@settings(max_examples=30)
@given(braid_words, st.integers(-2, 2), st.integers(0, 2))
def test_framing_and_offset_scaling(word_strands, framing, offset):
    n, word = word_strands
    D = sk.braid_closure(word, n)
    base = sk.evaluate(D)
    shifted = sk.evaluate(D.with_extras(framing={0: framing}, offsets={0: offset}))
    assert shifted == sk.reduce_value(SkeinValue.gen("alpha", framing) * SkeinValue.gen("theta", offset) * base)
