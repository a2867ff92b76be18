import json
import random
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from mckit import discrete_geometry as dg

SPHERE = dg.simplex_boundary_sphere()
TORUS = dg.circle_product_torus()


def two_factor_basis(K, degree):
    return [(a, b) for a in range(K.size) for b in range(K.size) if K.degrees[a] + K.degrees[b] == degree]


def test_sphere_cell_counts():
    assert [len(SPHERE.cells(d)) for d in range(4)] == [5, 10, 10, 5]


def test_sphere_propagator_satisfies_its_equation_through_both_routes():
    P = dg.solve_propagator(SPHERE)
    rhs = dict(dg.diagonal_cocycle(SPHERE))
    for key, v in dg.correction_term(SPHERE).items():
        rhs[key] = rhs.get(key, 0) - v
    # coboundary route
    dP = dg.cochain_coboundary(SPHERE, P.cochain)
    assert {k: v for k, v in dP.items() if v} == {k: v for k, v in rhs.items() if v}
    # adjoint route: <P, boundary(c)> on every degree-3 basis pair
    for c in two_factor_basis(SPHERE, 3):
        value = dg.pair(P.cochain, dg.tensor_boundary(SPHERE, {c: Fraction(1)}))
        assert value == rhs.get(c, 0)


def test_propagator_is_switch_anti_invariant():
    P = dg.solve_propagator(SPHERE).cochain
    swapped = dg.switch_pullback(SPHERE, P, koszul="plain")
    assert {k: -v for k, v in P.items()} == swapped


def test_diagonal_is_normalized_and_exact_after_correction():
    diag = dg.diagonal_cocycle(SPHERE)
    probe = dg.tensor_product({(c,): v for c, v in SPHERE.fundamental.items()}, {(SPHERE.point,): Fraction(1)})
    assert dg.pair(diag, probe) == 1
    rhs = dict(diag)
    for key, v in dg.correction_term(SPHERE).items():
        rhs[key] = rhs.get(key, 0) - v
    assert dg.obstruction_components(SPHERE, rhs, SPHERE.dim) == []


def test_torus_without_h1_correction_is_obstructed_in_degree_two():
    with pytest.raises(dg.PropagatorObstruction) as info:
        dg.solve_propagator(TORUS)
    assert info.value.degree == 2
    assert {(p, q) for p, q, _ in info.value.components} == {(1, 1)}


def test_rank_one_contraction():
    p = SPHERE.point
    other = SPHERE.cells(3)[0]
    out = dg.contract_diagonal(SPHERE, {(p, p, other): Fraction(1)}, 0, 1, diag={(p, p): Fraction(1)})
    assert out == {(other,): Fraction(-1)}


def test_degree_mismatch_contracts_to_zero():
    a, b = SPHERE.cells(0)[:2]
    assert dg.contract_diagonal(SPHERE, {(a, b): Fraction(1)}, 0, 1) == {}


def test_geometry_json_round_trip():
    data = json.loads(dg.geometry_to_json(SPHERE))
    K = dg.FiniteComplex.from_json(data)
    assert K.degrees == SPHERE.degrees and K.boundary == SPHERE.boundary
    assert dg.diagonal_cocycle(K) == dg.diagonal_cocycle(SPHERE)


def test_invalid_complex_is_rejected():
    with pytest.raises(dg.GeometryError):
        dg.FiniteComplex(dim=1, degrees=(0, 1), boundary=({}, {0: 1}), names=("v", "e"), point=0, fundamental={1: 1})


def random_tensor(seed, n_factors=2):
    rng = random.Random(seed)
    return {
        tuple(rng.randrange(SPHERE.size) for _ in range(n_factors)): Fraction(rng.randint(-3, 3))
        for _ in range(4)
    }


@given(st.integers(0, 10**6), st.integers(1, 3))
def test_tensor_boundary_squares_to_zero(seed, n):
    chain = random_tensor(seed, n)
    assert dg.tensor_boundary(SPHERE, dg.tensor_boundary(SPHERE, chain)) == {}


@given(st.integers(0, 10**6), st.integers(0, 10**6))
def test_coboundary_is_adjoint_to_boundary(seed_w, seed_c):
    w = random_tensor(seed_w)
    c = random_tensor(seed_c)
    lhs = dg.pair(dg.cochain_coboundary(SPHERE, w), c)
    rhs = dg.pair(w, dg.tensor_boundary(SPHERE, c))
    assert lhs == rhs
