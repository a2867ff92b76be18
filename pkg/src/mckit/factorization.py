"""Pair-graph chains, the factorization map and the shuffle product.

A pair chain assigns a tensor to every pair ``((G1, m1), (G2, m2))`` of
canonical graphs with flags of equal length that are jointly strict (at each
step at least one side grows).  Tensor factors list the half-edges of ``G1``
and then those of ``G2``, each side in sorted order.  Pair chains are stored
equivariantly under ``Aut(G1) x Aut(G2)``.

The product is the front/back slicing formula: the value at a pair of flags
of length ``l`` is the sum over ``r`` of ``C1`` at the first ``r + 1`` levels of
``m1`` times ``C2`` at the last ``l - r + 1`` levels of ``m2``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Mapping, Sequence

from . import discrete_geometry as dg
from .complex import (
    MCChain,
    Marking,
    _add_into,
    _pairings,
    _split,
    hat_boundary,
    transport,
)
from .graph_ops import cut, delta_edge
from .graphs import DecoratedGraph, EMPTY_GRAPH, automorphisms, canonicalize, disjoint_union
from .series import Series


class FactorizationError(ValueError):
    pass


# the r flag steps of the left factor pass the right factor's degree
BOX_SIGN = "mc"


def _jointly_strict(m1: Marking, m2: Marking) -> bool:
    if len(m1.levels) != len(m2.levels):
        return False
    for i in range(1, len(m1.levels)):
        a1, b1 = m1.levels[i - 1], m1.levels[i]
        a2, b2 = m2.levels[i - 1], m2.levels[i]
        if not (a1 <= b1 and a2 <= b2) or (a1 == b1 and a2 == b2):
            return False
    return True


def _tagged(G1: DecoratedGraph, G2: DecoratedGraph) -> list:
    return [(0, h) for h in G1.half_edges] + [(1, h) for h in G2.half_edges]


@dataclass
class PairChain:
    geometry: dg.FiniteComplex
    terms: dict = field(default_factory=dict)  # (G1, m1, G2, m2) -> {cells: Fraction}

    def add_term(self, G1, m1, G2, m2, tensor: Mapping, factor=1) -> None:
        key = (G1, m1, G2, m2)
        slot = self.terms.setdefault(key, {})
        _add_into(slot, tensor, factor)
        if not slot:
            del self.terms[key]

    def get(self, G1, m1, G2, m2) -> dict:
        return self.terms.get((G1, m1, G2, m2), {})

    def copy(self) -> "PairChain":
        return PairChain(self.geometry, {k: dict(v) for k, v in self.terms.items()})

    def __add__(self, other: "PairChain") -> "PairChain":
        out = self.copy()
        for (G1, m1, G2, m2), t in other.terms.items():
            out.add_term(G1, m1, G2, m2, t)
        return out

    def scale(self, factor) -> "PairChain":
        out = PairChain(self.geometry)
        for (G1, m1, G2, m2), t in self.terms.items():
            out.add_term(G1, m1, G2, m2, t, factor)
        return out

    def __neg__(self) -> "PairChain":
        return self.scale(-1)

    def __sub__(self, other: "PairChain") -> "PairChain":
        return self + (-other)

    def is_zero(self) -> bool:
        return not any(self.terms.values())

    def __eq__(self, other) -> bool:
        return isinstance(other, PairChain) and (self - other).is_zero()

    def size(self) -> int:
        return sum(len(t) for t in self.terms.values())

    def is_equivariant(self) -> bool:
        K = self.geometry
        for (G1, m1, G2, m2), tensor in self.terms.items():
            ids = _tagged(G1, G2)
            for g1 in automorphisms(G1).permutations:
                for g2 in automorphisms(G2).permutations:
                    hmap = {(0, h): (0, g1[h]) for h in G1.half_edges}
                    hmap.update({(1, h): (1, g2[h]) for h in G2.half_edges})
                    moved = transport(K, tensor, ids, ids, hmap)
                    image = self.get(G1, m1.relabel(g1), G2, m2.relabel(g2))
                    if any(moved.get(k, 0) != image.get(k, 0) for k in set(moved) | set(image)):
                        return False
        return True


# ---------------------------------------------------------------------------
# product


def read_chain(C: MCChain, G: DecoratedGraph, m: Marking) -> dict:
    """C at (G, m) for any strict flag: internal edges of the first level are cut first."""
    if not m.is_strict():
        return {}
    extra = [e for e in m.levels[0] if len(e) == 2]
    if not extra:
        if m.levels[0] != frozenset(G.external_edges):
            return {}
        return C.get(G, m)
    Gc = cut(G, extra)
    flag = Marking(tuple(frozenset(_split(level, set(extra))) for level in m.levels))
    if flag.levels[0] != frozenset(Gc.external_edges):
        return {}
    cf = canonicalize(Gc)
    stored = C.get(cf.graph, flag.relabel(cf.half_edge_map))
    if not stored:
        return {}
    inverse = {v: k for k, v in cf.half_edge_map.items()}
    return transport(C.geometry, stored, cf.graph.half_edges, Gc.half_edges, inverse)


def _slice(m: Marking, a: int, b: int) -> Marking:
    return Marking(m.levels[a:b + 1])


def boxtimes_value(C1: MCChain, C2: MCChain, G1, M1: Marking, G2, M2: Marking) -> dict:
    """sum_r C1(G1, M1[0, r]) x C2(G2, M2[r, l]) with the sign (-1)^(r d2), d2 the MC degree of the right slice."""
    K = C1.geometry
    n2 = len(G2.half_edges)
    total: dict = {}
    for r in range(len(M1.levels)):
        left = read_chain(C1, G1, _slice(M1, 0, r))
        if not left:
            continue
        right_flag = _slice(M2, r, M2.length)
        right = read_chain(C2, G2, right_flag)
        if not right:
            continue
        for c1, v1 in left.items():
            for c2, v2 in right.items():
                d2 = dg.tensor_degree(K, c2) - n2 - (right_flag.length if BOX_SIGN == "mc" else 0)
                sign = -1 if (r * d2) % 2 else 1
                key = c1 + c2
                total[key] = total.get(key, 0) + sign * v1 * v2
    return {k: v for k, v in total.items() if v}


def _chains_between(G: DecoratedGraph, low: frozenset, high: frozenset, steps: int) -> Iterator[list]:
    """Non-decreasing sequences of ``steps`` edge sets between ``low`` and ``high``."""
    if steps == 0:
        yield []
        return
    free = sorted(high - low)
    for r in range(len(free) + 1):
        for add in itertools.combinations(free, r):
            level = low | frozenset(add)
            for rest in _chains_between(G, level, high, steps - 1):
                yield [level] + rest


def _boxtimes_candidates(C1: MCChain, C2: MCChain) -> set:
    found: set = set()
    for (G1, m1), _ in C1.terms.items():
        r = m1.length
        for (G2, m2), _ in C2.terms.items():
            s = m2.length
            tails = list(_chains_between(G1, m1.top, frozenset(G1.edges), s))
            for A2, pairs, singles in _glue_side(G2, m2):
                if r == 0 and pairs:
                    continue
                body = [frozenset([e for e in level if e not in singles] + pairs) for level in m2.levels]
                base = frozenset(A2.external_edges)
                heads = [[base] + mid for mid in _chains_between(A2, base, body[0], r - 1)] if r else [[]]
                cf = canonicalize(A2)
                for head in heads:
                    M2 = Marking(tuple(head + body)).relabel(cf.half_edge_map)
                    for tail in tails:
                        M1 = Marking(m1.levels + tuple(tail))
                        if _jointly_strict(M1, M2):
                            found.add((G1, M1, cf.graph, M2))
    closed: set = set()
    for G1, M1, G2, M2 in found:
        for g1 in automorphisms(G1).permutations:
            for g2 in automorphisms(G2).permutations:
                closed.add((G1, M1.relabel(g1), G2, M2.relabel(g2)))
    return closed


def boxtimes(C1: MCChain, C2: MCChain) -> PairChain:
    """The slicing product, evaluated at every pair of flags where some slice pair is nonzero."""
    if C1.geometry is not C2.geometry and C1.geometry != C2.geometry:
        raise FactorizationError("chains over different geometries")
    out = PairChain(C1.geometry)
    for G1, M1, G2, M2 in _boxtimes_candidates(C1, C2):
        value = boxtimes_value(C1, C2, G1, M1, G2, M2)
        if value:
            out.add_term(G1, M1, G2, M2, value)
    return out


def unit_chain(K: dg.FiniteComplex) -> MCChain:
    """The empty graph with the empty tensor and coefficient 1."""
    G = canonicalize(EMPTY_GRAPH).graph
    return MCChain(K, {(G, Marking((frozenset(),))): {(): Fraction(1)}})


def swap(X: PairChain) -> PairChain:
    """Exchange the two sides, moving factor blocks with the shifted Koszul sign."""
    K = X.geometry
    out = PairChain(K)
    for (G1, m1, G2, m2), t in X.terms.items():
        n1 = len(G1.half_edges)
        n2 = len(G2.half_edges)
        order = list(range(n1, n1 + n2)) + list(range(n1))
        out.add_term(G2, m2, G1, m1, dg.reorder(K, t, order))
    return out


# ---------------------------------------------------------------------------
# restriction to disjoint unions and back


def _split_pieces(G: DecoratedGraph, side: Sequence[int]) -> tuple:
    """Sub-graph on the components with indices in ``side``."""
    comps = [G.components[i] for i in side]
    vertices = {v for c in comps for v in c.vertices}
    orders = {v: hs for v, hs in G.orders if v in vertices}
    hs = {h for v in vertices for h in dict(G.orders)[v]}
    edges = [e for e in G.edges if e[0] in hs]
    return DecoratedGraph.build(comps, orders, edges)


def fact(C: MCChain, beta1: Sequence[int], beta2: Sequence[int]) -> PairChain:
    """Read C at disjoint unions: the entry at ((G1, m1), (G2, m2)) is C at G1 + G2 with the merged flag."""
    K = C.geometry
    out = PairChain(K)
    rank = len(beta1)
    for (G, m), tensor in C.terms.items():
        if tuple(a + b for a, b in zip(beta1, beta2)) != G.total_beta(rank):
            raise FactorizationError("charge split does not add up to the chain's charge")
        pieces = G.connected_pieces()
        for mask in itertools.product((0, 1), repeat=len(pieces)):
            side1 = sorted(i for p, b in zip(pieces, mask) if b == 0 for i in p)
            side2 = sorted(i for p, b in zip(pieces, mask) if b == 1 for i in p)
            H1, H2 = _split_pieces(G, side1), _split_pieces(G, side2)
            if H1.total_beta(rank) != tuple(beta1) or H2.total_beta(rank) != tuple(beta2):
                continue
            edges1, edges2 = set(H1.edges), set(H2.edges)
            m1 = Marking(tuple(frozenset(e for e in level if e in edges1) for level in m.levels))
            m2 = Marking(tuple(frozenset(e for e in level if e in edges2) for level in m.levels))
            cf1, cf2 = canonicalize(H1), canonicalize(H2)
            source = [(0 if h in H1.position else 1, h) for h in G.half_edges]
            hmap = {(0, h): (0, cf1.half_edge_map[h]) for h in H1.half_edges}
            hmap.update({(1, h): (1, cf2.half_edge_map[h]) for h in H2.half_edges})
            target = _tagged(cf1.graph, cf2.graph)
            moved = transport(K, tensor, source, target, hmap)
            key = (cf1.graph, m1.relabel(cf1.half_edge_map), cf2.graph, m2.relabel(cf2.half_edge_map))
            out.terms[key] = moved  # a restriction: every split reads the same stored value
    return PairChain(K, {k: v for k, v in out.terms.items() if v})


def to_union(X: PairChain) -> MCChain:
    """Push a pair chain onto disjoint unions, spread over the union's half-edge automorphisms.

    The weight |Aut_triv(G1 + G2)| / (|Aut G1| |Aut G2|) makes the partition
    function of the image equal to the pair sum with weights 1/(|Aut G1||Aut G2|).
    """
    K = X.geometry
    out = MCChain(K)
    for (G1, m1, G2, m2), tensor in X.terms.items():
        U, hmap2 = disjoint_union(G1, G2)
        levels = tuple(a | frozenset(tuple(sorted(hmap2[h] for h in e)) for e in b) for a, b in zip(m1.levels, m2.levels))
        m = Marking(levels)
        cf = canonicalize(U)
        moved = transport(K, tensor, U.half_edges, cf.graph.half_edges, cf.half_edge_map)
        flag = m.relabel(cf.half_edge_map)
        group = automorphisms(cf.graph)
        weight = Fraction(group.order_trivial, automorphisms(G1).order * automorphisms(G2).order)
        for g in group.permutations:
            out.add_term(cf.graph, flag.relabel(g), transport(K, moved, cf.graph.half_edges, cf.graph.half_edges, g), weight)
    return out


# ---------------------------------------------------------------------------
# the pair differential


def pair_boundary(X: PairChain) -> PairChain:
    K = X.geometry
    out = PairChain(K)
    for (G1, m1, G2, m2), t in X.terms.items():
        out.add_term(G1, m1, G2, m2, dg.tensor_boundary(K, t))
    return out


def pair_delta(X: PairChain) -> PairChain:
    K = X.geometry
    diag = dg.diagonal_cocycle(K)
    out = PairChain(K)
    for (G1, m1, G2, m2), tensor in X.terms.items():
        sides = [(G1, m1), (G2, m2)]
        offset = len(G1.half_edges)
        for s, (G, m) in enumerate(sides):
            other = sides[1 - s][0]
            source_order = automorphisms(G).order
            base = 0 if s == 0 else offset
            pos = G.position
            for e in [e for e in G.internal_edges if e not in m.top]:
                contracted = dg.contract_diagonal(K, tensor, base + pos[e[0]], base + pos[e[1]], diag)
                if not contracted:
                    continue
                H = delta_edge(G, e)
                cf = canonicalize(H)
                T = cf.graph
                flag = m.relabel(cf.half_edge_map)
                pair_src = (H, other) if s == 0 else (other, H)
                pair_tgt = (T, other) if s == 0 else (other, T)
                src_ids = _tagged(*pair_src)
                tgt_ids = _tagged(*pair_tgt)
                hmap = {(s, h): (s, cf.half_edge_map[h]) for h in H.half_edges}
                hmap.update({(1 - s, h): (1 - s, h) for h in other.half_edges})
                moved = transport(K, contracted, src_ids, tgt_ids, hmap)
                group = automorphisms(T)
                weight = Fraction(group.order_trivial, source_order)
                for g in group.permutations:
                    gmap = {(s, h): (s, g[h]) for h in T.half_edges}
                    gmap.update({(1 - s, h): (1 - s, h) for h in other.half_edges})
                    image = transport(K, moved, tgt_ids, tgt_ids, gmap)
                    if s == 0:
                        out.add_term(T, flag.relabel(g), G2, m2, image, weight)
                    else:
                        out.add_term(G1, m1, T, flag.relabel(g), image, weight)
    return out


def _pair_insert_targets(G1, m1, G2, m2) -> Iterator[tuple]:
    levels = list(zip(m1.levels, m2.levels))
    n = len(levels)
    for i in range(1, n + 1):
        low1, low2 = levels[i - 1]
        if i < n:
            high1, high2 = levels[i]
        else:
            high1, high2 = frozenset(G1.edges), frozenset(G2.edges)
        free1, free2 = sorted(high1 - low1), sorted(high2 - low2)
        for r1 in range(len(free1) + 1):
            for add1 in itertools.combinations(free1, r1):
                for r2 in range(len(free2) + 1):
                    for add2 in itertools.combinations(free2, r2):
                        B1, B2 = low1 | frozenset(add1), low2 | frozenset(add2)
                        if (B1, B2) == (low1, low2):
                            continue
                        if i < n and (B1, B2) == (high1, high2):
                            continue
                        new = levels[:i] + [(B1, B2)] + levels[i:]
                        yield Marking(tuple(a for a, _ in new)), Marking(tuple(b for _, b in new))


def _glue_side(G: DecoratedGraph, m: Marking) -> Iterator[tuple]:
    """(glued graph, glued pairs, singles) for every partial matching of external legs (including none)."""
    ext = sorted(h for (h,) in G.external_edges)
    for pairs in _pairings(ext):
        if not pairs:
            yield G, [], set()
            continue
        singles = {(a,) for a, b in pairs} | {(b,) for a, b in pairs}
        edges = [e for e in G.edges if e not in singles] + list(pairs)
        yield DecoratedGraph.build(G.components, dict(G.orders), edges), list(pairs), singles


def _pair_glue_targets(G1, m1, G2, m2) -> Iterator[tuple]:
    for A1, pairs1, singles1 in _glue_side(G1, m1):
        for A2, pairs2, singles2 in _glue_side(G2, m2):
            if not pairs1 and not pairs2:
                continue
            lv1 = [frozenset(A1.external_edges)]
            lv2 = [frozenset(A2.external_edges)]
            for level in m1.levels:
                lv1.append(frozenset([e for e in level if e not in singles1] + pairs1))
            for level in m2.levels:
                lv2.append(frozenset([e for e in level if e not in singles2] + pairs2))
            yield A1, Marking(tuple(lv1)), A2, Marking(tuple(lv2))


def _pair_face_value(X: PairChain, G1, m1, G2, m2, i: int) -> dict:
    K = X.geometry
    f1, f2 = m1.face(i), m2.face(i)
    if f1.length < 0:
        return {}
    if i > 0:
        return X.get(G1, f1, G2, f2)
    graphs, flags, hmaps = [], [], []
    for G, m, f in ((G1, m1, f1), (G2, m2, f2)):
        new_cut = [e for e in m.levels[1] - m.levels[0] if len(e) == 2]
        Gc = cut(G, new_cut) if new_cut else G
        flag = Marking(tuple(frozenset(_split(level, set(new_cut))) for level in f.levels))
        cf = canonicalize(Gc)
        graphs.append((Gc, cf.graph))
        flags.append(flag.relabel(cf.half_edge_map))
        hmaps.append(cf.half_edge_map)
    stored = X.get(graphs[0][1], flags[0], graphs[1][1], flags[1])
    if not stored:
        return {}
    inverse = {}
    for s in (0, 1):
        for h, c in hmaps[s].items():
            inverse[(s, c)] = (s, h)
    return transport(K, stored, _tagged(graphs[0][1], graphs[1][1]), _tagged(graphs[0][0], graphs[1][0]), inverse)


def pair_eth(X: PairChain) -> PairChain:
    K = X.geometry
    targets: set = set()
    for (G1, m1, G2, m2) in X.terms:
        for n1, n2 in _pair_insert_targets(G1, m1, G2, m2):
            targets.add((G1, n1, G2, n2))
        for A1, n1, A2, n2 in _pair_glue_targets(G1, m1, G2, m2):
            c1, c2 = canonicalize(A1), canonicalize(A2)
            f1, f2 = n1.relabel(c1.half_edge_map), n2.relabel(c2.half_edge_map)
            for g1 in automorphisms(c1.graph).permutations:
                for g2 in automorphisms(c2.graph).permutations:
                    targets.add((c1.graph, f1.relabel(g1), c2.graph, f2.relabel(g2)))
    out = PairChain(K)
    for G1, m1, G2, m2 in targets:
        if not _jointly_strict(m1, m2):
            continue
        n_half = len(G1.half_edges) + len(G2.half_edges)
        total: dict = {}
        for i in range(len(m1.levels)):
            value = _pair_face_value(X, G1, m1, G2, m2, i)
            if not value:
                continue
            length = m1.length - 1
            signed = {}
            for cells, v in value.items():
                d = dg.tensor_degree(K, cells) - n_half - length
                signed[cells] = -v if d % 2 == 0 else v
            _add_into(total, signed, -1 if i % 2 else 1)
        if total:
            out.add_term(G1, m1, G2, m2, total)
    return out


def pair_hat_boundary(X: PairChain) -> PairChain:
    return pair_boundary(X) + pair_delta(X) + pair_eth(X)


def degree_twist(C: MCChain) -> MCChain:
    """Multiply every basis term by (-1)^d, d its MC degree."""
    K = C.geometry
    out = MCChain(K)
    for (G, m), t in C.terms.items():
        n = len(G.half_edges)
        out.add_term(G, m, {cells: (-v if (dg.tensor_degree(K, cells) - n - m.length) % 2 else v) for cells, v in t.items()})
    return out


def leibniz_residual(C1: MCChain, C2: MCChain) -> PairChain:
    """hat(C1 x C2) - hat(C1) x C2 - (-1)^|C1| C1 x hat(C2)."""
    lhs = pair_hat_boundary(boxtimes(C1, C2))
    rhs = boxtimes(hat_boundary(C1), C2) + boxtimes(degree_twist(C1), hat_boundary(C2))
    return lhs - rhs


# ---------------------------------------------------------------------------
# partition-function identities


def factorization_check(Z1: MCChain, Z2: MCChain, options=None, propagator=None) -> Series:
    """P(Z1 x Z2) - P(Z1) P(Z2), with the product pushed to disjoint unions."""
    from .partition import PartitionOptions, partition_function

    options = options or PartitionOptions()
    lhs = partition_function(to_union(boxtimes(Z1, Z2)), options, propagator)
    return lhs - partition_function(Z1, options, propagator) * partition_function(Z2, options, propagator)


def exponential_family(z: MCChain, max_pieces: int) -> MCChain:
    """sum_{n <= max_pieces} z^{x n} / n! pushed to disjoint unions (a factorizing family)."""
    K = z.geometry
    total = unit_chain(K)
    power = unit_chain(K)
    factorial = 1
    for n in range(1, max_pieces + 1):
        power = to_union(boxtimes(power, z))
        factorial *= n
        total = total + power.scale(Fraction(1, factorial))
    return total


def exponential_check(z: MCChain, max_pieces: int, options=None, propagator=None) -> Series:
    """P(Z) - exp(W(Z) / g_s) for Z the exponential family generated by the connected chain z."""
    from .partition import PartitionOptions, partition_function, potential

    options = options or PartitionOptions()
    Z = exponential_family(z, max_pieces)
    P = partition_function(Z, options, propagator)
    W = potential(Z, options, propagator)
    return P - (W * Series.monomial(W.spec, {"g_s": -1})).exp()
