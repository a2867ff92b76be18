import itertools
import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from mckit.complex import random_graph
from mckit.graphs import Component, DecoratedGraph
from mckit.series import Series
from mckit.traces import (
    TraceError,
    dual_index,
    external_trace,
    ribbon_structure,
    trv_faces,
    trv_numeric,
    trv_with_externals,
)
from oracles import matrix_trace_weight, matrix_trace_with_legs, one_component, tadpole, theta


@pytest.mark.parametrize("N", [1, 2, 3])
def test_named_closed_graphs(N):
    cases = [(tadpole(), 2), (theta(planar=True), 3), (theta(planar=False), 1)]
    for G, faces in cases:
        # the face count itself is recomputed from the matrix oracle
        assert matrix_trace_weight(G, N) == N**faces
        assert trv_numeric(G, N) == N**faces
        assert trv_faces(G) == faces


def test_tadpole_and_theta_at_two():
    assert trv_numeric(tadpole(), 2) == 4
    assert trv_numeric(theta(True), 2) == 8
    assert trv_numeric(theta(False), 2) == 2


def test_closed_only():
    G = one_component({0: [0, 1, 2]}, [[0, 1], [2]])
    with pytest.raises(TraceError):
        trv_faces(G)
    with pytest.raises(TraceError):
        trv_numeric(G, 2)


def test_empty_vertex_is_one_face():
    G = DecoratedGraph.build([Component((0,), 1, (0,))], {0: []}, [])
    assert trv_faces(G) == 1 and trv_numeric(G, 3) == 3 == matrix_trace_weight(G, 3)


def test_faces_partition_half_edges():
    G = theta()
    faces = ribbon_structure(G).faces
    assert sorted(h for f in faces for h in f) == list(G.half_edges)


def test_single_leg_is_the_trace_of_the_basis():
    G = one_component({0: [0]}, [[0]])
    poly = trv_with_externals(G, 2)
    spec = poly.spec
    # tr(E_ij) = delta_ij: only the diagonal basis elements survive
    assert poly == Series.var(spec, "x0[0]") + Series.var(spec, "x0[3]")


def test_two_legs_give_the_trace_form():
    N = 2
    G = one_component({0: [0, 1]}, [[0], [1]])
    poly = trv_with_externals(G, N)
    spec = poly.spec
    expected = Series.zero(spec)
    for k, l in itertools.product(range(N * N), repeat=2):
        value = matrix_trace_with_legs(G, N, {0: k, 1: l})
        if value:
            expected = expected + Series.var(spec, f"x0[{k}]") * Series.var(spec, f"x0[{l}]") * value
    assert poly == expected


def test_transposed_leg_pairs_with_the_dual_element():
    N = 2
    G = one_component({0: [0, 1]}, [[0], [1]])
    for k in range(N * N):
        # <E_k, E_k^dual> = tr(E_k E_k^T-dual) = 1
        assert external_trace(G, N, {0: k, 1: dual_index(N, k)}) == 1


def test_no_legs_matches_numeric():
    G = theta()
    poly = trv_with_externals(G, 2)
    assert poly == Series.constant(poly.spec, trv_numeric(G, 2))


@given(st.integers(0, 10**6))
def test_closed_faces_match_numeric(seed):
    rng = random.Random(seed)
    G = random_graph(rng, max_half_edges=6)
    # pair up the legs so the graph becomes closed
    legs = sorted(G.external_half_edges)
    if len(legs) % 2:
        return
    rng.shuffle(legs)
    edges = list(G.internal_edges) + [legs[i:i + 2] for i in range(0, len(legs), 2)]
    closed = DecoratedGraph.build(G.components, dict(G.orders), edges)
    assert trv_numeric(closed, 2) == 2 ** trv_faces(closed)


@given(st.integers(0, 10**6))
def test_external_trace_matches_matrix_products(seed):
    rng = random.Random(seed)
    G = random_graph(rng, max_half_edges=5)
    ext = sorted(G.external_half_edges)
    N = 2
    for labels in itertools.product(range(N * N), repeat=len(ext)):
        legs = dict(zip(ext, labels))
        assert external_trace(G, N, legs) == matrix_trace_with_legs(G, N, legs)
