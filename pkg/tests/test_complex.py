import json
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mckit import discrete_geometry as dg
from mckit.complex import (
    ChainError,
    MCChain,
    Marking,
    embed,
    equivariant_projection,
    hat_boundary,
    is_mc_cycle,
    op_boundary,
    op_delta,
    op_eth,
    random_chain,
    six_identities,
    strict_flags,
)
from mckit.graph_ops import delta_edge
from mckit.graphs import Component, DecoratedGraph, canonicalize

K = dg.simplex_boundary_sphere()


def chain(seed, **kw):
    return random_chain(random.Random(seed), K, n_graphs=2, max_half_edges=kw.pop("max_half_edges", 5), max_length=2, **kw)


def test_face_examples():
    E0, E1 = [(0,)], [(0,), (1, 2)]
    m = Marking.of([E0, E1])
    assert m.face(0) == Marking.of([E1])
    empty = Marking.of([E0]).face(0)
    assert empty.length == -1
    G = DecoratedGraph.build([Component((1,), 0, (0,))], {0: [0, 1, 2]}, [[0], [1, 2]])
    with pytest.raises(ChainError):
        empty.validate(G)
    with pytest.raises(ChainError):
        m.face(2)


@given(st.integers(0, 10**6))
def test_simplicial_face_identity(seed):
    rng = random.Random(seed)
    G = DecoratedGraph.build([Component((1,), 0, (0,))], {0: list(range(8))}, [[0], [1, 2], [3, 4], [5, 6], [7]])
    flags = [f for f in strict_flags(G, 3) if f.length >= 1]
    m = rng.choice(flags)
    for i in range(len(m.levels)):
        for j in range(i, len(m.levels) - 1):
            assert m.face(j + 1).face(i) == m.face(i).face(j)


def test_delta_vanishes_without_contractible_edges():
    G = DecoratedGraph.build([Component((1,), 0, (0,))], {0: [0, 1]}, [[0], [1]])
    C = embed(K, G, Marking.of([[(0,), (1,)]]), {(0, 1): Fraction(1)})
    assert op_delta(C).is_zero()


def test_single_edge_contraction_coefficient():
    G = DecoratedGraph.build(
        [Component((1,), 0, (0,)), Component((2,), 0, (1,))], {0: [0], 1: [1]}, [[0, 1]]
    )
    diag = dg.diagonal_cocycle(K)
    (u, v), value = next(iter(sorted(diag.items())))
    C = embed(K, G, Marking.of([[]]), {(u, v): Fraction(1)})
    out = op_delta(C)
    target = canonicalize(delta_edge(G, (0, 1))).graph
    assert out.terms == {(target, Marking.of([[]])): {(): -value}}


def test_closed_tensor_has_no_boundary():
    G = DecoratedGraph.build([Component((1,), 0, (0,))], {0: [0, 1]}, [[0], [1]])
    points = K.cells(0)
    C = embed(K, G, Marking.of([[(0,), (1,)]]), {(points[0], points[1]): Fraction(1)})
    assert op_boundary(C).is_zero()


def test_cycle_predicate():
    assert is_mc_cycle(MCChain(K))
    G = DecoratedGraph.build([Component((1,), 0, (0,))], {0: [0]}, [[0]])
    edge = K.cells(1)[0]
    assert not is_mc_cycle(embed(K, G, Marking.of([[(0,)]]), {(edge,): Fraction(1)}))


def test_internal_edge_in_first_level_is_cut():
    G = DecoratedGraph.build([Component((1,), 0, (0,))], {0: [0, 1, 2]}, [[0], [1, 2]])
    C = embed(K, G, Marking.of([[(0,), (1, 2)]]), {(0, 1, 2): Fraction(1)})
    ((H, m),) = C.terms
    assert len(H.external_edges) == 3 and m.levels[0] == frozenset(H.external_edges)


@settings(max_examples=25)
@given(st.integers(0, 10**6))
def test_hat_boundary_squares_to_zero(seed):
    C = chain(seed)
    assert hat_boundary(hat_boundary(C)).is_zero()


@settings(max_examples=15)
@given(st.integers(0, 10**6))
def test_six_identities(seed):
    C = chain(seed, max_half_edges=4)
    for name, value in six_identities(C).items():
        assert value.is_zero(), name


@settings(max_examples=15)
@given(st.integers(0, 10**6))
def test_operators_preserve_equivariance(seed):
    C = chain(seed, max_half_edges=4)
    assert C.is_equivariant()
    for op in (op_boundary, op_delta, op_eth):
        assert op(C).is_equivariant()


@settings(max_examples=15)
@given(st.integers(0, 10**6))
def test_projection_is_idempotent(seed):
    C = chain(seed, max_half_edges=4)
    assert equivariant_projection(C) == C


@settings(max_examples=15)
@given(st.integers(0, 10**6))
def test_chain_json_round_trip(seed):
    C = chain(seed, max_half_edges=4)
    data = json.loads(json.dumps(C.to_json()))
    assert MCChain.from_json(data, K) == C
