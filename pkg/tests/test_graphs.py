import random
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from mckit.complex import random_graph
from mckit.graphs import (
    ChargeSpec,
    Component,
    DecoratedGraph,
    GraphError,
    automorphisms,
    canonicalize,
    disjoint_union,
    enumerate_graphs,
    is_automorphism,
    is_isomorphic,
    is_stable,
    validate,
)
from oracles import brute_force_automorphism_count, naive_enumeration, one_component, shape_of, theta

DEMO = ChargeSpec.rank_one_demo()
seeds = st.integers(0, 10**6)


def graph_from_seed(seed: int, max_half_edges: int = 6) -> DecoratedGraph:
    return random_graph(random.Random(seed), max_half_edges)


def shuffled(G: DecoratedGraph, rng: random.Random) -> tuple:
    hs = list(G.half_edges)
    image = list(range(100, 100 + len(hs)))
    rng.shuffle(image)
    hmap = dict(zip(hs, image))
    vs = sorted(G.all_ids())
    vimage = list(range(500, 500 + len(vs)))
    rng.shuffle(vimage)
    return G.relabel(hmap, dict(zip(vs, vimage))), hmap


def test_stability_examples():
    trivalent = one_component({0: [0, 1, 2]}, [[0], [1], [2]])
    assert validate(trivalent) and is_stable(trivalent)
    univalent = one_component({0: [0]}, [[0]])
    report = validate(univalent)
    assert not report and report.violation == "unstable_component"
    assert validate(univalent, require_stable=False)


def test_support_violation():
    heavy = ChargeSpec(rank=1, norm=((4,),), omega=(1,), C_supp=Fraction(1))
    G = one_component({0: [0]}, [[0]], beta=(1,))
    assert validate(G, DEMO)
    report = validate(G, heavy)
    assert report.violation == "support_bound"


def test_structural_violations():
    orphan = DecoratedGraph.build([Component((0,), 0, (0,))], {0: [0, 1, 2]}, [[0], [1]])
    assert validate(orphan).violation == "half_edge_orphan"
    doubled = DecoratedGraph.build([Component((0,), 0, (0,))], {0: [0, 1, 2]}, [[0, 1], [1], [2]])
    assert validate(doubled).violation == "edge_overlap"


def test_degenerate_norm_is_rejected():
    with pytest.raises(GraphError):
        ChargeSpec(rank=2, norm=((1, 0), (0, 0)), omega=(1, 0), C_supp=Fraction(1))


def test_theta_presentations_share_a_canonical_form():
    a = theta()
    b = one_component({0: [1, 2, 0], 1: [3, 5, 4]}, [[0, 3], [1, 4], [2, 5]])
    assert canonicalize(a).graph == canonicalize(b).graph


def test_theta_automorphisms_match_brute_force():
    G = theta()
    assert brute_force_automorphism_count(G) == 6
    assert automorphisms(G).order == 6
    assert all(is_automorphism(G, g) for g in automorphisms(G).permutations)


def test_trivial_group_on_empty_vertex():
    G = DecoratedGraph.build([Component((0,), 2, (0,))], {0: []}, [])
    assert automorphisms(G).order == 1 == brute_force_automorphism_count(G)


def test_disjoint_union_of_equal_components():
    piece = one_component({0: [0, 1]}, [[0], [1]], genus=1)
    U, _ = disjoint_union(piece, piece)
    single = brute_force_automorphism_count(piece)
    assert single == 2
    assert automorphisms(U).order == brute_force_automorphism_count(U) == 2 * single**2


def test_transposition_flips_the_sign():
    G = theta()
    swapped = G.relabel({0: 1, 1: 0})
    c1, c2 = canonicalize(G), canonicalize(swapped)
    assert c1.graph == c2.graph
    assert c1.sign == -c2.sign


@given(seeds)
def test_canonical_form_is_idempotent(seed):
    cf = canonicalize(graph_from_seed(seed))
    again = canonicalize(cf.graph)
    assert again.graph == cf.graph and again.sign == 1


@given(seeds, seeds)
def test_canonical_form_ignores_labels(seed, shuffle_seed):
    G = graph_from_seed(seed)
    H, _ = shuffled(G, random.Random(shuffle_seed))
    assert is_isomorphic(G, H)


@given(seeds)
def test_sign_tracks_half_edge_parity(seed):
    G = graph_from_seed(seed)
    if len(G.half_edges) < 2 or automorphisms(G).order_half_edges > 1:
        return
    a, b = G.half_edges[:2]
    H = G.relabel({a: b, b: a})
    assert canonicalize(G).sign == -canonicalize(H).sign


@given(st.integers(0, 10**6))
def test_automorphism_order_matches_brute_force(seed):
    G = random_graph(random.Random(seed), max_half_edges=5)
    assert automorphisms(G).order == brute_force_automorphism_count(G)


@given(seeds)
def test_json_round_trip(seed):
    G = graph_from_seed(seed)
    assert DecoratedGraph.from_json(G.to_json()) == G


def test_uncharged_sphere_set_is_empty():
    zero = ChargeSpec(rank=1, norm=((1,),), omega=(1,), C_supp=Fraction(1))
    assert enumerate_graphs(zero, (0,), -2) == []


@pytest.mark.parametrize("beta,kappa", [((1,), -2), ((1,), -1), ((2,), -4), ((2,), -3)])
def test_enumeration_matches_orbit_counting(beta, kappa):
    found = enumerate_graphs(DEMO, beta, kappa)
    by_shape: dict = {}
    for G in found:
        assert validate(G, DEMO)
        assert G.kappa() == kappa and G.total_beta(1) == beta
        by_shape.setdefault(shape_of(G), []).append(automorphisms(G).order)
    assert {k: sorted(v) for k, v in by_shape.items()} == naive_enumeration(DEMO, beta, kappa)


def test_enumeration_order_independence():
    assert enumerate_graphs(DEMO, (2,), -3) == enumerate_graphs(DEMO, (2,), -3, shape_order="reverse")
