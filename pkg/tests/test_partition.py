import random
from fractions import Fraction

from hypothesis import given, settings
from hypothesis import strategies as st

from mckit import discrete_geometry as dg
from mckit import fixtures as fx
from mckit import partition as pt
from mckit.complex import MCChain, Marking, embed, equivariant_projection, random_chain
from mckit.graphs import ChargeSpec, Component, DecoratedGraph, automorphisms
from mckit.series import Series

K = dg.simplex_boundary_sphere()
P = dg.solve_propagator(K).cochain
DEMO = ChargeSpec.rank_one_demo()
OPTS = pt.PartitionOptions(N=2, truncation=(("g_s", 4), ("T", 3)), charge_spec=DEMO)


def test_zero_chain():
    assert pt.partition_function(MCChain(K), OPTS).is_zero()
    assert pt.potential(MCChain(K), OPTS).is_zero()


def test_closed_tadpole_weight():
    opts = pt.PartitionOptions(symbolic_faces=True)
    G = DecoratedGraph.build([Component((0,), 0, (0,))], {0: [0, 1]}, [[0, 1]])
    Z = {key: Fraction(i + 1) for i, key in enumerate(sorted(P)[:3])}
    C = equivariant_projection(embed(K, G, Marking.of([[]]), Z))
    value = pt.partition_function(C, opts)
    order = automorphisms(G).order
    # nodal chi of the tadpole is 0; the face weight is N^2
    expected = Series.monomial(value.spec, {"N": 2}, dg.pair(P, Z) / order)
    assert value == expected


def test_single_leg_is_linear_in_x():
    opts = pt.PartitionOptions(N=1, truncation=(("g_s", 4), ("T", 3)), charge_spec=DEMO)
    G = DecoratedGraph.build([Component((1,), 0, (0,))], {0: [0]}, [[0]])
    Z = {(c,): v for c, v in K.fundamental.items()}
    C = embed(K, G, Marking.of([[(0,)]]), Z)
    value = pt.partition_function(C, opts)
    alpha = K.classes[0].alpha
    period = sum(alpha.get(c, 0) * v for c, v in K.fundamental.items())
    # one vertex, genus 0: chi = 1; omega(beta) = 1
    assert value == Series.monomial(value.spec, {"g_s": -1, "T": 1, "x0[0]": 1}, period)
    assert pt.potential(C, opts) == Series.monomial(value.spec, {"T": 1, "x0[0]": 1}, period)


def test_closed_components_are_excluded_from_the_potential():
    G = DecoratedGraph.build([Component((0,), 2, ())], {}, [])
    C = embed(K, G, Marking.of([[]]), {(): Fraction(1)})
    spec = OPTS.ring(K)
    # vertex-free genus 2 surface: chi = -2
    assert pt.partition_function(C, OPTS) == Series.monomial(spec, {"g_s": 2}, 1)
    assert pt.potential(C, OPTS).is_zero()


def test_open_tadpole_potential_is_gs_times_weight():
    G = DecoratedGraph.build([Component((0,), 0, (0,))], {0: [0, 1]}, [[0, 1]])
    C = equivariant_projection(embed(K, G, Marking.of([[]]), {sorted(P)[0]: Fraction(1)}))
    spec = OPTS.ring(K)
    assert pt.potential(C, OPTS) == pt.partition_function(C, OPTS) * Series.var(spec, "g_s")


def test_bv_delta_examples():
    spec = OPTS.ring(K)
    xy = Series.var(spec, "x0[0]") * Series.var(spec, "y0[0]")
    assert pt.bv_delta(xy) == Series.constant(spec, 1)
    assert pt.bv_delta(Series.constant(spec, 7)).is_zero()
    mixed = Series.var(spec, "x0[1]") * Series.var(spec, "y0[2]")
    assert pt.bv_delta(mixed).is_zero()


def test_bulk_shift_tracks_punctures():
    spec = OPTS.ring(K)
    b = Series.var(spec, "b")
    gs = Series.var(spec, "g_s")
    assert pt.bulk_shift(b, 2) == b + gs.scale(2)


@settings(max_examples=12)
@given(st.integers(0, 10**6))
def test_weight_cochain_agrees_with_termwise_pairing(seed):
    opts = pt.PartitionOptions(N=1, truncation=(("g_s", 4), ("T", 3)), charge_spec=DEMO)
    C = fx.supported_chain(random.Random(seed), K, P, n_graphs=2, max_half_edges=3, max_length=1)
    amps = pt.amplitudes(C, opts)
    spec = opts.ring(K)
    for (G, m), tensor in C.terms.items():
        omega = pt.omega_cochain(G, m, K, options=opts)
        direct = pt.pair(omega, tensor, spec)
        assert direct == amps.values.get((G, m), Series.zero(spec))


@settings(max_examples=30)
@given(st.integers(0, 10**6))
def test_quantum_master_equation(seed):
    rng = random.Random(seed)
    if seed % 2:
        B = fx.supported_chain(rng, K, P, n_graphs=2, max_half_edges=4, max_length=2)
    else:
        B = random_chain(rng, K, n_graphs=2, max_half_edges=6, max_length=2, weight_degrees=True)
    assert pt.qme_check(B, OPTS).is_zero()


@settings(max_examples=20)
@given(st.integers(0, 10**6))
def test_bracket_is_graded_symmetric_on_even_elements(seed):
    rng = random.Random(seed)
    spec = pt.PartitionOptions(N=1, truncation=(("g_s", 4),)).ring(K)
    names = ["x0[0]", "y0[0]", "g_s", "a"]

    def rand():
        total = Series.zero(spec)
        for _ in range(3):
            exps = {n: rng.randint(0, 1) for n in names}
            total = total + Series.monomial(spec, exps, rng.randint(-2, 2))
        even, _ = total.parity_parts()
        return even

    f, g = rand(), rand()
    assert pt.bracket(f, g) == pt.bracket(g, f)
