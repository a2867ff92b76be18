import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mckit import discrete_geometry as dg
from mckit import factorization as fz
from mckit import fixtures as fx
from mckit import partition as pt
from mckit.complex import MCChain, random_chain
from mckit.graphs import ChargeSpec

K = dg.simplex_boundary_sphere()
P = dg.solve_propagator(K).cochain
OPTS = pt.PartitionOptions(N=1, truncation=(("g_s", 4), ("T", 4)), charge_spec=ChargeSpec.rank_one_demo())


def _pair(seed):
    rng = random.Random(seed)
    Z1 = random_chain(rng, K, n_graphs=2, max_half_edges=3, max_length=1, terms_per_flag=2, weight_degrees=True)
    Z2 = random_chain(rng, K, n_graphs=2, max_half_edges=3, max_length=1, terms_per_flag=2, weight_degrees=True)
    return Z1, Z2


def test_zero_factor_gives_zero_product():
    Z1, _ = _pair(0)
    assert fz.boxtimes(Z1, MCChain(K)).is_zero()
    assert fz.boxtimes(MCChain(K), Z1).is_zero()
    assert fz.factorization_check(Z1, MCChain(K), OPTS).is_zero()


def test_unit_chain_is_neutral():
    Z1, _ = _pair(3)
    unit = fz.unit_chain(K)
    assert fz.to_union(fz.boxtimes(unit, Z1)) == Z1
    assert fz.to_union(fz.boxtimes(Z1, unit)) == Z1
    assert pt.partition_function(unit, OPTS) == pt.partition_function(MCChain(K), OPTS).__class__.constant(
        OPTS.ring(K), 1
    )


def test_charge_split_must_add_up():
    z = fx.connected_generator(random.Random(1), K, P)
    G, _ = next(iter(z.terms))
    total = G.total_beta(1)
    with pytest.raises(fz.FactorizationError):
        fz.fact(z, (total[0] + 1,), (0,))


def test_connected_chain_has_no_proper_split():
    z = fx.connected_generator(random.Random(4), K, P, n_pieces=1)
    G, _ = next(iter(z.terms))
    (b,) = G.total_beta(1)
    for left in range(1, b):
        assert fz.fact(z, (left,), (b - left,)).is_zero()


def test_fact_recovers_the_product():
    z1 = fx.connected_generator(random.Random(5), K, P, n_pieces=1)
    z2 = fx.connected_generator(random.Random(6), K, P, n_pieces=1)
    X = fz.boxtimes(z1, z2)
    (b1,) = next(iter(z1.terms))[0].total_beta(1)
    (b2,) = next(iter(z2.terms))[0].total_beta(1)
    split = fz.fact(fz.to_union(X), (b1,), (b2,))
    for key, value in X.terms.items():
        assert key in split.terms
        assert split.terms[key] == value


@settings(max_examples=25)
@given(st.integers(0, 10**6))
def test_partition_function_is_multiplicative(seed):
    Z1, Z2 = _pair(seed)
    assert fz.factorization_check(Z1, Z2, OPTS).is_zero()


@settings(max_examples=15)
@given(st.integers(0, 10**6))
def test_leibniz_rule(seed):
    rng = random.Random(seed)
    C1 = random_chain(rng, K, n_graphs=1, max_half_edges=3, max_length=1, terms_per_flag=1)
    C2 = random_chain(rng, K, n_graphs=1, max_half_edges=3, max_length=1, terms_per_flag=1)
    assert fz.leibniz_residual(C1, C2).is_zero()


@settings(max_examples=15)
@given(st.integers(0, 10**6))
def test_swap_is_an_involution(seed):
    Z1, Z2 = _pair(seed)
    X = fz.boxtimes(Z1, Z2)
    assert fz.swap(fz.swap(X)) == X


@pytest.mark.parametrize("seed", [0, 1, 3])
def test_exponential_of_potential(seed):
    z = fx.connected_generator(random.Random(seed), K, P, n_pieces=2, max_half_edges=3)
    opts = pt.PartitionOptions(N=2, truncation=(("T", 3), ("g_s", 4)), charge_spec=ChargeSpec.rank_one_demo())
    assert fz.exponential_check(z, 3, opts).is_zero()


def test_exponential_family_potential_is_the_generator():
    z = fx.connected_generator(random.Random(7), K, P, n_pieces=1, max_half_edges=3)
    opts = pt.PartitionOptions(N=2, truncation=(("T", 3), ("g_s", 4)), charge_spec=ChargeSpec.rank_one_demo())
    Z = fz.exponential_family(z, 3)
    assert pt.potential(Z, opts) == pt.potential(z, opts)
