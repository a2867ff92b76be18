"""Seeded generators for chains whose pairing with the weight cochain is nonzero."""

from __future__ import annotations

import random
from fractions import Fraction
from typing import Mapping

from . import discrete_geometry as dg
from .complex import MCChain, Marking, equivariant_projection, random_graph
from .graphs import DecoratedGraph, automorphisms, canonicalize


def _supports(K: dg.FiniteComplex, propagator: Mapping) -> tuple:
    corr = dg.correction_term(K)
    legs = sorted({c for pair in K.classes for c in list(pair.alpha) + list(pair.beta)})
    return sorted(propagator), sorted(corr), legs


def supported_tensor(
    rng: random.Random,
    K: dg.FiniteComplex,
    G: DecoratedGraph,
    m: Marking,
    propagator: Mapping,
    n_terms: int = 1,
) -> dict:
    """Basis terms drawn from the supports of the propagator, the correction term and the leg classes."""
    prop_support, corr_support, leg_support = _supports(K, propagator)
    pos = G.position
    top = m.top
    out: dict = {}
    for _ in range(n_terms):
        cells = [0] * len(G.half_edges)
        for e in G.internal_edges:
            a, b = rng.choice(corr_support if e in top else prop_support)
            cells[pos[e[0]]], cells[pos[e[1]]] = a, b
        for (h,) in G.external_edges:
            cells[pos[h]] = rng.choice(leg_support)
        key = tuple(cells)
        out[key] = out.get(key, 0) + Fraction(rng.choice([-2, -1, 1, 2, 3]))
    return {k: v for k, v in out.items() if v}


def random_piece(rng: random.Random, max_half_edges: int = 3, min_legs: int = 1, rigid: bool = False) -> DecoratedGraph:
    """A canonical connected charged graph with external legs and no closed component."""
    while True:
        G = canonicalize(random_graph(rng, max_half_edges)).graph
        if not (G.is_connected() and len(G.external_edges) >= min_legs and sum(G.total_beta(1)) >= 1):
            continue
        if G.has_closed_component():
            continue
        if rigid and automorphisms(G).order != 1:
            continue
        return G


def connected_generator(
    rng: random.Random,
    K: dg.FiniteComplex,
    propagator: Mapping,
    n_pieces: int = 2,
    max_half_edges: int = 3,
    n_terms: int = 1,
) -> MCChain:
    """An equivariant l = 0 chain on connected graphs (the generator of a factorizing family)."""
    raw = MCChain(K)
    for _ in range(n_pieces):
        G = random_piece(rng, max_half_edges)
        m = Marking((frozenset(G.external_edges),))
        tensor = supported_tensor(rng, K, G, m, propagator, n_terms)
        if tensor:
            raw.add_term(G, m, tensor)
    return equivariant_projection(raw)


def supported_chain(
    rng: random.Random,
    K: dg.FiniteComplex,
    propagator: Mapping,
    n_graphs: int = 2,
    max_half_edges: int = 4,
    max_length: int = 2,
    n_terms: int = 2,
) -> MCChain:
    """An equivariant chain with non-degenerate flags and weight-supported tensors."""
    from .complex import nondegenerate_flags

    raw = MCChain(K)
    for _ in range(n_graphs):
        G = canonicalize(random_graph(rng, max_half_edges)).graph
        flags = nondegenerate_flags(G, max_length)
        for m in rng.sample(flags, min(len(flags), 2)):
            tensor = supported_tensor(rng, K, G, m, propagator, n_terms)
            if tensor:
                raw.add_term(G, m, tensor)
    return equivariant_projection(raw)
