"""Marked chain complex over a finite geometry: markings, chains and the operators of the total differential.

Storage conventions
-------------------
* Graphs are stored in canonical form; tensor factors follow sorted half-edge ids.
* Markings are strict flags ``E_0 < E_1 < ... < E_l`` of edge sets with
  ``E_0`` equal to the external edges (chains are kept on the cut-normal form,
  so cutting the ``E_0`` edges is already done).
* Chains at a graph are equivariant: for an automorphism ``g`` one has
  ``C[G, g m] = g_* C[G, m]``, where ``g_*`` moves tensor factors with the
  shifted Koszul sign.
* Graphs with degenerate vertices are folded onto their vertex-converted form
  on input (``normalize_degenerate``).
"""

from __future__ import annotations

import itertools
import json
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Iterator, Mapping, Sequence

from . import discrete_geometry as dg
from .graph_ops import cut, delta_edge
from .graphs import (
    AutomorphismGroup,
    Component,
    DecoratedGraph,
    automorphisms,
    canonicalize,
    is_stable,
    validate,
)


class ChainError(ValueError):
    pass


# ---------------------------------------------------------------------------
# markings


def _edge_key(e: Iterable[int]) -> tuple:
    return tuple(sorted(e))


@dataclass(frozen=True)
class Marking:
    levels: tuple  # tuple of frozensets of edges (sorted half-edge tuples)

    @classmethod
    def of(cls, levels: Iterable[Iterable[Sequence[int]]]) -> "Marking":
        return cls(tuple(frozenset(_edge_key(e) for e in level) for level in levels))

    @property
    def length(self) -> int:
        """l = |m|; the empty flag has length -1."""
        return len(self.levels) - 1

    @property
    def top(self) -> frozenset:
        return self.levels[-1] if self.levels else frozenset()

    def face(self, i: int) -> "Marking":
        if not 0 <= i < len(self.levels):
            raise ChainError(f"face index {i} out of range for a flag of length {self.length}")
        return Marking(self.levels[:i] + self.levels[i + 1:])

    def is_strict(self) -> bool:
        return all(a < b for a, b in zip(self.levels, self.levels[1:]))

    def is_nondegenerate(self) -> bool:
        return all(a <= b and len(b) == len(a) + 1 for a, b in zip(self.levels, self.levels[1:]))

    def step_edges(self) -> list:
        """The single new edge at each step (requires a non-degenerate flag)."""
        return [next(iter(b - a)) for a, b in zip(self.levels, self.levels[1:])]

    def relabel(self, half_edge_map: Mapping[int, int]) -> "Marking":
        return Marking(tuple(frozenset(_edge_key(half_edge_map[h] for h in e) for e in level) for level in self.levels))

    def validate(self, G: DecoratedGraph, require_cut_normal: bool = True) -> None:
        if not self.levels:
            raise ChainError("empty flag")
        edges = set(G.edges)
        for level in self.levels:
            if not level <= edges:
                raise ChainError("flag level contains an edge not in the graph")
        if not self.is_strict():
            raise ChainError("flag is not strictly increasing")
        if require_cut_normal and self.levels[0] != frozenset(G.external_edges):
            raise ChainError("first flag level must be the set of external edges")

    def to_json(self) -> list:
        return [sorted(list(e) for e in level) for level in self.levels]

    @classmethod
    def from_json(cls, data) -> "Marking":
        return cls.of(data)


def strict_flags(G: DecoratedGraph, max_length: int) -> list:
    """All cut-normal strict flags on G of length at most ``max_length``."""
    base = frozenset(G.external_edges)
    internal = list(G.internal_edges)
    flags = []

    def extend(levels, remaining):
        flags.append(Marking(tuple(levels)))
        if len(levels) - 1 >= max_length:
            return
        for r in range(1, len(remaining) + 1):
            for add in itertools.combinations(remaining, r):
                rest = [e for e in remaining if e not in add]
                extend(levels + [levels[-1] | frozenset(add)], rest)

    extend([base], internal)
    return flags


def nondegenerate_flags(G: DecoratedGraph, max_length: int) -> list:
    return [m for m in strict_flags(G, max_length) if m.is_nondegenerate()]


# ---------------------------------------------------------------------------
# transport of tensors along half-edge bijections


def transport(K: dg.FiniteComplex, tensor: Mapping, source: Sequence[int], target: Sequence[int], hmap: Mapping[int, int]) -> dict:
    """Push a tensor on factors ``source`` (sorted ids) to factors ``target`` via h -> hmap[h]."""
    pos = {h: i for i, h in enumerate(source)}
    inverse = {v: k for k, v in hmap.items()}
    order = [pos[inverse[h]] for h in target]
    if order == list(range(len(order))):
        return dict(tensor)
    return dg.reorder(K, tensor, order)


def _add_into(target: dict, tensor: Mapping, factor=1) -> None:
    for k, v in tensor.items():
        nv = target.get(k, 0) + factor * v
        if nv:
            target[k] = nv
        else:
            target.pop(k, None)


# ---------------------------------------------------------------------------
# chains


@dataclass
class MCChain:
    geometry: dg.FiniteComplex
    terms: dict = field(default_factory=dict)  # (canonical graph, Marking) -> {cells: Fraction}

    def copy(self) -> "MCChain":
        return MCChain(self.geometry, {k: dict(v) for k, v in self.terms.items()})

    def add_term(self, G: DecoratedGraph, m: Marking, tensor: Mapping, factor=1) -> None:
        slot = self.terms.setdefault((G, m), {})
        _add_into(slot, tensor, factor)
        if not slot:
            del self.terms[(G, m)]

    def get(self, G: DecoratedGraph, m: Marking) -> dict:
        return self.terms.get((G, m), {})

    def __add__(self, other: "MCChain") -> "MCChain":
        out = self.copy()
        for (G, m), t in other.terms.items():
            out.add_term(G, m, t)
        return out

    def __neg__(self) -> "MCChain":
        return self.scale(-1)

    def __sub__(self, other: "MCChain") -> "MCChain":
        return self + (-other)

    def scale(self, factor) -> "MCChain":
        out = MCChain(self.geometry)
        for (G, m), t in self.terms.items():
            out.add_term(G, m, t, factor)
        return out

    def is_zero(self) -> bool:
        return not any(self.terms.values())

    def __eq__(self, other) -> bool:
        return isinstance(other, MCChain) and (self - other).is_zero()

    def graphs(self) -> set:
        return {G for G, _ in self.terms}

    def size(self) -> int:
        return sum(len(t) for t in self.terms.values())

    def degree_of(self, G: DecoratedGraph, m: Marking, cells: Sequence[int]) -> int:
        """MC degree of one basis term: chain degree - |H| - l."""
        return dg.tensor_degree(self.geometry, cells) - len(G.half_edges) - m.length

    def is_equivariant(self) -> bool:
        K = self.geometry
        for (G, m), tensor in self.terms.items():
            group = automorphisms(G)
            for g in group.permutations:
                image = self.get(G, m.relabel(g))
                moved = transport(K, tensor, G.half_edges, G.half_edges, g)
                if any(moved.get(k, 0) != image.get(k, 0) for k in set(moved) | set(image)):
                    return False
        return True

    def to_json(self) -> dict:
        out = []
        for (G, m), tensor in sorted(self.terms.items(), key=lambda kv: (kv[0][0].dumps(), repr(kv[0][1].to_json()))):
            out.append(
                {
                    "graph": G.to_json(),
                    "marking": m.to_json(),
                    "tensor": [[list(cells), str(v)] for cells, v in sorted(tensor.items())],
                }
            )
        return {"terms": out}

    @classmethod
    def from_json(cls, data: Mapping, K: dg.FiniteComplex, symmetrize: bool = True) -> "MCChain":
        raw = MCChain(K)
        for item in data["terms"]:
            G = DecoratedGraph.from_json(item["graph"])
            m = Marking.from_json(item["marking"]) if "marking" in item else Marking.of([[e for e in G.external_edges]])
            tensor = {tuple(cells): Fraction(str(v)) for cells, v in item["tensor"]}
            raw = raw + embed(K, G, m, tensor)
        return equivariant_projection(raw) if symmetrize else raw


def embed(K: dg.FiniteComplex, G: DecoratedGraph, m: Marking, tensor: Mapping) -> MCChain:
    """Place a tensor on an arbitrary presentation (G, m): cut E_0, fold D, canonicalize."""
    extra = [e for e in m.levels[0] if len(e) == 2] if m.levels else []
    if extra:
        G = cut(G, extra)
        m = Marking(tuple(frozenset(_split(level, set(extra))) for level in m.levels))
    out = MCChain(K)
    if G.num_degenerate():
        G, tensor, factor = normalize_degenerate(K, G, tensor)
    else:
        factor = Fraction(1)
    m.validate(G)
    cf = canonicalize(G)
    moved = transport(K, tensor, G.half_edges, cf.graph.half_edges, cf.half_edge_map)
    out.add_term(cf.graph, m.relabel(cf.half_edge_map), moved, factor)
    return out


def _split(level: Iterable, cut_edges: set) -> list:
    out = []
    for e in level:
        if e in cut_edges:
            out.extend([(e[0],), (e[1],)])
        else:
            out.append(e)
    return out


def normalize_degenerate(K: dg.FiniteComplex, G: DecoratedGraph, tensor: Mapping) -> tuple:
    """Fold a graph with degenerate vertices onto its vertex-converted form.

    The relation C[delta_d G] + C[G] = 0 gives the sign (-1)^|D|; the ratio of
    automorphism orders keeps the partition function unchanged.
    """
    from .graph_ops import quotient

    handles = [d for c in G.components for d in c.degenerate]
    converted = quotient(G, handles)
    ratio = Fraction(automorphisms(converted).order, automorphisms(G).order)
    return converted, dict(tensor), (-1) ** len(handles) * ratio


def equivariant_projection(C: MCChain) -> MCChain:
    """Average over half-edge automorphisms: C[G, m] <- mean_g g_* C[G, g^-1 m]."""
    K = C.geometry
    out = MCChain(K)
    for (G, m), tensor in C.terms.items():
        group = automorphisms(G)
        weight = Fraction(1, group.order_half_edges)
        for g in group.permutations:
            out.add_term(G, m.relabel(g), transport(K, tensor, G.half_edges, G.half_edges, g), weight)
    return out


# ---------------------------------------------------------------------------
# operators


def op_boundary(C: MCChain) -> MCChain:
    K = C.geometry
    out = MCChain(K)
    for (G, m), tensor in C.terms.items():
        out.add_term(G, m, dg.tensor_boundary(K, tensor))
    return out


def contractible_internal(G: DecoratedGraph, m: Marking) -> list:
    top = m.top
    return [e for e in G.internal_edges if e not in top]


def op_delta(C: MCChain) -> MCChain:
    """Sum over edges outside E_l of the diagonal contraction, pushed to the contracted graph.

    Each contribution is spread over the target's half-edge automorphisms with
    weight |Aut_triv(target)| / |Aut(source)|, which realizes the orbifold
    averaging map.
    """
    K = C.geometry
    diag = dg.diagonal_cocycle(K)
    out = MCChain(K)
    for (G, m), tensor in C.terms.items():
        source_order = automorphisms(G).order
        pos = G.position
        for e in contractible_internal(G, m):
            X = dg.contract_diagonal(K, tensor, pos[e[0]], pos[e[1]], diag)
            if not X:
                continue
            H = delta_edge(G, e)
            cf = canonicalize(H)
            target = cf.graph
            moved = transport(K, X, H.half_edges, target.half_edges, cf.half_edge_map)
            flag = m.relabel(cf.half_edge_map)
            group = automorphisms(target)
            weight = Fraction(group.order_trivial, source_order)
            for g in group.permutations:
                out.add_term(target, flag.relabel(g), transport(K, moved, target.half_edges, target.half_edges, g), weight)
    return out


def _term_signs(C: MCChain, G: DecoratedGraph, m_source: Marking, tensor: Mapping, n_half: int) -> dict:
    """Multiply each basis term by (-1)^(d+1) with d its MC degree."""
    K = C.geometry
    out = {}
    for cells, v in tensor.items():
        d = dg.tensor_degree(K, cells) - n_half - m_source.length
        out[cells] = -v if d % 2 == 0 else v
    return out


def _glue_targets(G: DecoratedGraph, m: Marking) -> Iterator[tuple]:
    """Graphs/flags (G2, m2) whose face 0 (after cutting E_1 - E_0) is (G, m)."""
    ext = sorted(h for (h,) in G.external_edges)
    for pairs in _pairings(ext):
        if not pairs:
            continue
        glued = set(pairs)
        singles = {(a,) for a, b in pairs} | {(b,) for a, b in pairs}
        edges = [e for e in G.edges if e not in singles] + list(pairs)
        G2 = DecoratedGraph.build(G.components, dict(G.orders), edges)
        levels = [frozenset(G2.external_edges)]
        for level in m.levels:
            levels.append(frozenset([e for e in level if e not in singles] + list(glued)))
        yield G2, Marking(tuple(levels))


def _pairings(items: list) -> Iterator[list]:
    """All sets of disjoint pairs (partial matchings) on ``items``."""
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for m in _pairings(rest):
        yield m
    for j, other in enumerate(rest):
        for m in _pairings(rest[:j] + rest[j + 1:]):
            yield [(first, other)] + m


def _insert_targets(G: DecoratedGraph, m: Marking) -> Iterator[Marking]:
    """Flags m2 on G with a face of index >= 1 equal to m."""
    levels = list(m.levels)
    for i in range(1, len(levels) + 1):
        low = levels[i - 1]
        if i < len(levels):
            high = levels[i]
            free = sorted(high - low)
            for r in range(1, len(free)):
                for add in itertools.combinations(free, r):
                    yield Marking(tuple(levels[:i] + [low | frozenset(add)] + levels[i:]))
        else:
            free = sorted(set(G.edges) - low)
            for r in range(1, len(free) + 1):
                for add in itertools.combinations(free, r):
                    yield Marking(tuple(levels + [low | frozenset(add)]))


def face_value(C: MCChain, G: DecoratedGraph, m: Marking, i: int) -> dict:
    """C[G, face_i m] as a tensor on G's factors; face 0 reads the chain at the graph cut along E_1 - E_0."""
    K = C.geometry
    fm = m.face(i)
    if fm.length < 0:
        return {}
    if i > 0:
        return C.get(G, fm)
    new_cut = [e for e in m.levels[1] - m.levels[0] if len(e) == 2]
    Gc = cut(G, new_cut)
    flag = Marking(tuple(frozenset(_split(level, set(new_cut))) for level in fm.levels))
    cf = canonicalize(Gc)
    stored = C.get(cf.graph, flag.relabel(cf.half_edge_map))
    if not stored:
        return {}
    inverse = {v: k for k, v in cf.half_edge_map.items()}
    return transport(K, stored, cf.graph.half_edges, Gc.half_edges, inverse)


def op_eth(C: MCChain) -> MCChain:
    """(eth C)[G, m] = sum_i (-1)^i (-1)^(d+1) C[G, face_i m], evaluated at every reachable target."""
    K = C.geometry
    targets: set = set()
    for (G, m) in C.terms:
        for m2 in _insert_targets(G, m):
            targets.add((G, m2))
        for G2, m2 in _glue_targets(G, m):
            cf = canonicalize(G2)
            flag = m2.relabel(cf.half_edge_map)
            for g in automorphisms(cf.graph).permutations:
                targets.add((cf.graph, flag.relabel(g)))
    out = MCChain(K)
    for G, m in targets:
        total: dict = {}
        for i in range(len(m.levels)):
            value = face_value(C, G, m, i)
            if value:
                signed = _term_signs(C, G, m.face(i), value, len(G.half_edges))
                _add_into(total, signed, -1 if i % 2 else 1)
        if total:
            out.add_term(G, m, total)
    return out


def hat_boundary(C: MCChain) -> MCChain:
    return op_boundary(C) + op_delta(C) + op_eth(C)


def is_mc_cycle(C: MCChain) -> bool:
    return hat_boundary(C).is_zero()


def six_identities(C: MCChain) -> dict:
    """The squares and pairwise anticommutators of the three operators, each as a chain."""
    b, d, e = op_boundary(C), op_delta(C), op_eth(C)
    return {
        "boundary^2": op_boundary(b),
        "delta^2": op_delta(d),
        "eth^2": op_eth(e),
        "[boundary,delta]": op_boundary(d) + op_delta(b),
        "[boundary,eth]": op_boundary(e) + op_eth(b),
        "[delta,eth]": op_delta(e) + op_eth(d),
    }


# ---------------------------------------------------------------------------
# random chains


def random_graph(rng: random.Random, max_half_edges: int = 6, max_vertices: int = 3, charge_rank: int = 1) -> DecoratedGraph:
    """A random stable uncharged-or-charged graph with at most ``max_half_edges`` half-edges."""
    while True:
        n_vertices = rng.randint(1, max_vertices)
        n_half = rng.randint(0, max_half_edges)
        n_comps = rng.randint(1, n_vertices)
        vertex_comp = [i if i < n_comps else rng.randrange(n_comps) for i in range(n_vertices)]
        orders = {v: [] for v in range(n_vertices)}
        for h in range(n_half):
            orders[rng.randrange(n_vertices)].append(h)
        for v in orders:
            rng.shuffle(orders[v])
        halves = list(range(n_half))
        rng.shuffle(halves)
        n_pairs = rng.randint(0, n_half // 2)
        edges = [halves[2 * k: 2 * k + 2] for k in range(n_pairs)] + [[h] for h in halves[2 * n_pairs:]]
        comps = []
        for c in range(n_comps):
            beta = tuple([rng.choice([0, 0, 1])] + [0] * (charge_rank - 1))
            comps.append(Component(beta, rng.choice([0, 0, 1]), tuple(v for v in range(n_vertices) if vertex_comp[v] == c)))
        G = DecoratedGraph.build(comps, orders, edges)
        if validate(G):
            return G


def _cells_by_degree(K: dg.FiniteComplex) -> dict:
    out: dict = {}
    for c, d in enumerate(K.degrees):
        out.setdefault(d, []).append(c)
    return out


def random_tensor(rng: random.Random, K: dg.FiniteComplex, n_factors: int, n_terms: int, degrees: Sequence[int] | None = None) -> dict:
    by_deg = _cells_by_degree(K)
    out: dict = {}
    for _ in range(n_terms):
        if degrees is None:
            cells = tuple(rng.randrange(K.size) for _ in range(n_factors))
        else:
            cells = tuple(rng.choice(by_deg[d]) for d in degrees)
        v = Fraction(rng.randint(-3, 3))
        if v:
            out[cells] = out.get(cells, 0) + v
    return {k: v for k, v in out.items() if v}


def _diagonal_biased_term(rng: random.Random, K: dg.FiniteComplex, G: DecoratedGraph) -> dict:
    """One random basis term whose internal-edge factor pairs often meet the diagonal support."""
    support = sorted(dg.diagonal_cocycle(K))
    cells = [rng.randrange(K.size) for _ in G.half_edges]
    pos = G.position
    for e in G.internal_edges:
        if rng.random() < 0.7:
            a, b = rng.choice(support)
            cells[pos[e[0]]], cells[pos[e[1]]] = a, b
    v = Fraction(rng.choice([-2, -1, 1, 2, 3]))
    return {tuple(cells): v}


def _omega_degrees(rng: random.Random, K: dg.FiniteComplex, G: DecoratedGraph, m: Marking, raise_one: bool = True) -> list:
    """Per-factor degrees matching a nonzero weight cochain, optionally one degree above it."""
    pos = G.position
    degrees = [0] * len(G.half_edges)
    top = m.top
    for e in G.internal_edges:
        a, b = pos[e[0]], pos[e[1]]
        if e in top:
            degrees[a], degrees[b] = rng.choice([(0, K.dim), (K.dim, 0)])
        else:
            x = rng.randint(0, K.dim - 1)
            degrees[a], degrees[b] = x, K.dim - 1 - x
    for (h,) in G.external_edges:
        degrees[pos[h]] = rng.choice([0, K.dim])
    # raise one factor so the term is a boundary candidate
    candidates = [i for i, d in enumerate(degrees) if d < K.dim]
    if raise_one and candidates:
        degrees[rng.choice(candidates)] += 1
    return degrees


def random_chain(
    rng: random.Random,
    K: dg.FiniteComplex,
    n_graphs: int = 3,
    max_half_edges: int = 6,
    max_length: int = 2,
    terms_per_flag: int = 2,
    weight_degrees: bool = False,
) -> MCChain:
    """A random equivariant chain; with ``weight_degrees`` the degrees sit one above the weight cochain."""
    raw = MCChain(K)
    for _ in range(n_graphs):
        G = canonicalize(random_graph(rng, max_half_edges)).graph
        flags = strict_flags(G, max_length)
        if weight_degrees:
            flags = [m for m in flags if m.is_nondegenerate()] or flags
        for m in rng.sample(flags, min(len(flags), 3)):
            if weight_degrees:
                tensor = {}
                for _ in range(terms_per_flag):
                    _add_into(tensor, random_tensor(rng, K, len(G.half_edges), 1, _omega_degrees(rng, K, G, m, rng.random() < 0.5)))
            else:
                tensor = {}
                for _ in range(terms_per_flag):
                    _add_into(tensor, _diagonal_biased_term(rng, K, G))
            if tensor:
                raw.add_term(G, m, tensor)
    return equivariant_projection(raw)
