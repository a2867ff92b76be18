import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from mckit.complex import random_graph
from mckit.graph_ops import (
    NOT_REMOVABLE,
    ZERO,
    EdgeOpError,
    contractible_handles,
    cut,
    dagger,
    dagger_normalize,
    delta_dagger,
    delta_edge,
    forget_edge,
    precedes,
    quotient,
    sigma,
    topological_order,
)
from mckit.graphs import ChargeSpec, Component, DecoratedGraph, canonicalize, enumerate_graphs, is_isomorphic
from oracles import one_component, theta

DEMO = ChargeSpec.rank_one_demo()


def canon(G):
    return canonicalize(G).graph


def test_self_loop_splits_the_vertex():
    G = one_component({0: [1, 2, 3, 4]}, [[1, 3], [2], [4]])
    out = delta_edge(G, (1, 3))
    assert sorted(hs for _, hs in out.orders) == [(2,), (4,)]
    assert len(out.components) == 1 and out.components[0].genus == 0


def test_bridge_between_components_adds_genus():
    G = DecoratedGraph.build(
        [Component((0,), 1, (0,)), Component((0,), 1, (1,))], {0: [0], 1: [1]}, [[0, 1]]
    )
    out = delta_edge(G, (0, 1))
    assert len(out.components) == 1
    assert out.components[0].genus == 2 and len(out.components[0].vertices) == 1


def test_edge_errors():
    G = one_component({0: [1, 2, 3]}, [[1, 2], [3]])
    with pytest.raises(EdgeOpError):
        delta_edge(G, (3,))
    with pytest.raises(EdgeOpError):
        delta_edge(G, (1, 3))


def test_degenerate_vertex_becomes_empty_vertex():
    G = one_component({0: [0, 1, 2]}, [[0], [1], [2]], degenerate=(5,))
    out = delta_edge(G, 5)
    assert out.order_map[5] == () and out.num_degenerate() == 0


def test_sigma_examples():
    bare = DecoratedGraph.build(
        [Component((0,), 0, (0, 1))], {0: [0, 1, 2], 1: [3, 4, 5]}, [[h] for h in range(6)]
    )
    s = sigma(bare)
    assert s.graph == bare and s.boundary_components == (2,)
    loop = one_component({0: [1, 2]}, [[1, 2]])
    s = sigma(loop)
    assert s.boundary_components == (2,) and s.genus == 0
    # the first band joins two boundary circles (genus + 1), the second has
    # both ends on one circle and splits it again
    double = one_component({0: [0, 1], 1: [2, 3]}, [[0, 3], [1, 2]])
    s = sigma(double)
    assert s.genus == 1 and s.boundary_components == (2,)


def test_cut_examples():
    G = theta()
    assert cut(G, []) == G
    out = cut(G, [(0, 3)])
    assert len(out.internal_edges) == 2 and len(out.external_edges) == 2 and len(out.orders) == 2
    with pytest.raises(EdgeOpError):
        cut(out, [(0,)])


def test_forget_on_stable_graph_drops_the_leg():
    G = one_component({0: [0, 1, 2, 3]}, [[0], [1], [2], [3]])
    out, marking = forget_edge(G, [[(0,), (1,), (2,), (3,)]], 0)
    assert out.order_map[0] == (1, 2, 3)
    assert marking == (frozenset({(1,), (2,), (3,)}),)


def _disk_attached():
    return DecoratedGraph.build(
        [Component((1,), 0, (0,)), Component((0,), 0, (1,))],
        {0: [10, 11], 1: [1, 2, 5]},
        [[1, 10], [2, 11], [5]],
    )


def test_forget_splices_through_a_disk():
    out, _ = forget_edge(_disk_attached(), [[(5,)]], 5)
    assert (10, 11) in out.internal_edges and len(out.components) == 1


def test_forget_deletes_an_annulus():
    G = DecoratedGraph.build(
        [Component((1,), 0, (0,)), Component((0,), 0, (1, 2))], {0: [0], 1: [5], 2: []}, [[0], [5]]
    )
    out, _ = forget_edge(G, [[(0,), (5,)]], 5)
    assert len(out.components) == 1 and out.components[0].beta == (1,)


def test_forget_blocked_by_marked_loop():
    G = DecoratedGraph.build(
        [Component((1,), 0, (0,)), Component((0,), 0, (1,))], {0: [0], 1: [1, 2, 5]}, [[0], [1, 2], [5]]
    )
    assert forget_edge(G, [[(0,), (5,)], [(0,), (5,), (1, 2)]], 5) == NOT_REMOVABLE


def test_dagger_examples():
    charged = DecoratedGraph.build([Component((1,), 0, (0,))], {0: [0, 1]}, [[0], [1]])
    Gd = dagger(charged)
    assert Gd.comp0 == () and Gd.kappa_star == -charged.chi("plain") and Gd.d_star == 0
    torus_d = DecoratedGraph.build(
        [Component((1,), 0, (0,)), Component((0,), 1, (), (7,))], {0: [0]}, [[0]]
    )
    Gd = dagger(torus_d)
    out = dagger_normalize(Gd)
    assert out.comp0 == ()
    assert out.kappa_star == Gd.kappa_star + 1 and out.d_star == Gd.d_star + 1
    assert dagger_normalize(Gd, normalized=True) == ZERO


def test_precedes_examples():
    small = enumerate_graphs(DEMO, (1,), -1)[0]
    G1 = one_component({0: [0]}, [[0]], beta=(1,))
    G2 = one_component({0: [0]}, [[0]], beta=(2,))
    assert precedes(G1, G2, spec=DEMO) and not precedes(G2, G1, spec=DEMO)
    assert not precedes(small, small, spec=DEMO)
    loop = one_component({0: [0, 1, 2]}, [[0, 1], [2]], beta=(1,))
    assert precedes(loop, delta_edge(loop, (0, 1)), spec=DEMO)
    assert not precedes(delta_edge(loop, (0, 1)), loop, spec=DEMO)
    with pytest.raises(EdgeOpError):
        precedes(G1, G2)


def test_topological_order_on_enumerated_set():
    graphs = enumerate_graphs(DEMO, (1,), -1)
    order = topological_order(graphs, spec=DEMO)
    assert sorted(order) == list(range(len(graphs)))
    pos = {g: i for i, g in enumerate(order)}
    for i, a in enumerate(graphs):
        for j, b in enumerate(graphs):
            if i != j and precedes(a, b, spec=DEMO):
                assert pos[i] < pos[j]


seeds = st.integers(0, 10**6)


@given(seeds)
def test_delta_commutes(seed):
    G = random_graph(random.Random(seed), 6)
    hs = contractible_handles(G)
    for i in range(len(hs)):
        for j in range(i + 1, len(hs)):
            a = delta_edge(delta_edge(G, hs[i]), hs[j])
            b = delta_edge(delta_edge(G, hs[j]), hs[i])
            assert canon(a) == canon(b)


@given(seeds, seeds)
def test_quotient_is_order_independent(seed, order_seed):
    G = random_graph(random.Random(seed), 6)
    hs = contractible_handles(G)
    shuffled = list(hs)
    random.Random(order_seed).shuffle(shuffled)
    assert is_isomorphic(quotient(G, hs), quotient(G, shuffled))


@given(seeds)
def test_contraction_preserves_kappa_and_charge(seed):
    G = random_graph(random.Random(seed), 6)
    for e in contractible_handles(G):
        out = delta_edge(G, e)
        assert out.kappa() == G.kappa() and out.total_beta(1) == G.total_beta(1)


@given(seeds)
def test_dagger_contraction_tracks_kappa(seed):
    G = random_graph(random.Random(seed), 6)
    Gd = dagger(G)
    for e in Gd.as_decorated().internal_edges:
        assert delta_dagger(Gd, e).kappa() == Gd.kappa()
