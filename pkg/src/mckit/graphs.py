"""Decorated graphs: data model, validation, canonical form, automorphisms, enumeration.

Euler characteristics
---------------------
``chi_plain(c) = 2 - 2g - |V_c|`` and ``chi_with_D(c) = chi_plain(c) - |D_c|``.
The Euler characteristic of a whole graph is the nodal one,
``chi(G) = sum_c chi_c - |E_in(G)|``: every internal edge glues two boundary
points.  It is invariant under every edge contraction and, with the
``with_D`` variant, under degenerate-vertex conversion, and it makes the
graded sets of stable graphs finite.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Any, Iterable, Iterator, Mapping, Sequence

import pynauty


class GraphError(ValueError):
    pass


# ---------------------------------------------------------------------------
# charges


def _frac_matrix(rows) -> tuple:
    return tuple(tuple(Fraction(x) for x in row) for row in rows)


def _leading_minors_positive(matrix: tuple) -> bool:
    n = len(matrix)
    for k in range(1, n + 1):
        sub = [list(row[:k]) for row in matrix[:k]]
        if _det(sub) <= 0:
            return False
    return True


def _det(m: list) -> Fraction:
    m = [row[:] for row in m]
    n = len(m)
    det = Fraction(1)
    for col in range(n):
        pivot = next((r for r in range(col, n) if m[r][col] != 0), None)
        if pivot is None:
            return Fraction(0)
        if pivot != col:
            m[col], m[pivot] = m[pivot], m[col]
            det = -det
        det *= m[col][col]
        for r in range(col + 1, n):
            f = m[r][col] / m[col][col]
            for c in range(col, n):
                m[r][c] -= f * m[col][c]
    return det


def _inverse(m: tuple) -> list:
    n = len(m)
    aug = [list(row) + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(m)]
    for col in range(n):
        pivot = next(r for r in range(col, n) if aug[r][col] != 0)
        aug[col], aug[pivot] = aug[pivot], aug[col]
        p = aug[col][col]
        aug[col] = [x / p for x in aug[col]]
        for r in range(n):
            if r != col and aug[r][col] != 0:
                f = aug[r][col]
                aug[r] = [x - f * y for x, y in zip(aug[r], aug[col])]
    return [row[n:] for row in aug]


@dataclass(frozen=True)
class ChargeSpec:
    """Free lattice Gamma with a rational norm form, symplectic area and support constant."""

    rank: int
    norm: tuple
    omega: tuple
    C_supp: Fraction
    boundary_map: tuple = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "norm", _frac_matrix(self.norm))
        object.__setattr__(self, "omega", tuple(Fraction(x) for x in self.omega))
        object.__setattr__(self, "C_supp", Fraction(self.C_supp))
        if len(self.norm) != self.rank or any(len(r) != self.rank for r in self.norm):
            raise GraphError("norm matrix has the wrong shape")
        if len(self.omega) != self.rank:
            raise GraphError("omega has the wrong length")
        if any(self.norm[i][j] != self.norm[j][i] for i in range(self.rank) for j in range(self.rank)):
            raise GraphError("norm matrix is not symmetric")
        if self.rank and not _leading_minors_positive(self.norm):
            # A degenerate norm admits nonzero charges of zero length, hence
            # infinitely many components passing the support bound.
            raise GraphError("norm matrix is not positive definite: enumeration would not terminate")
        if self.C_supp <= 0:
            raise GraphError("C_supp must be positive")

    def omega_of(self, beta: Sequence[int]) -> Fraction:
        return sum((w * b for w, b in zip(self.omega, beta)), Fraction(0))

    def norm_sq(self, beta: Sequence[int]) -> Fraction:
        return sum(
            (self.norm[i][j] * beta[i] * beta[j] for i in range(self.rank) for j in range(self.rank)),
            Fraction(0),
        )

    def supports(self, beta: Sequence[int]) -> bool:
        """Support bound ||beta|| <= C omega(beta), compared in squares (omega must be >= 0)."""
        if not any(beta):
            return True
        w = self.omega_of(beta)
        return w > 0 and self.norm_sq(beta) <= (self.C_supp * w) ** 2

    def candidate_charges(self, total: Sequence[int]) -> list:
        """Nonzero charges passing the support bound with omega at most omega(total)."""
        limit = self.omega_of(total)
        if limit <= 0:
            return []
        radius_sq = (self.C_supp * limit) ** 2
        inverse = _inverse(self.norm)
        bounds = [math.isqrt(int(radius_sq * inverse[i][i]) + 1) + 1 for i in range(self.rank)]
        found = []
        for beta in itertools.product(*(range(-b, b + 1) for b in bounds)):
            if any(beta) and self.supports(beta) and self.omega_of(beta) <= limit:
                found.append(tuple(beta))
        return sorted(found, key=lambda b: (self.omega_of(b), b))

    def to_json(self) -> dict:
        return {
            "rank": self.rank,
            "norm": [[str(x) for x in row] for row in self.norm],
            "omega": [str(x) for x in self.omega],
            "C_supp": str(self.C_supp),
            "boundary_map": [list(r) for r in self.boundary_map],
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "ChargeSpec":
        return cls(
            rank=int(data["rank"]),
            norm=data["norm"],
            omega=data["omega"],
            C_supp=Fraction(str(data["C_supp"])),
            boundary_map=tuple(tuple(int(x) for x in r) for r in data.get("boundary_map", [])),
        )

    @classmethod
    def rank_one_demo(cls) -> "ChargeSpec":
        return cls(rank=1, norm=((1,),), omega=(1,), C_supp=Fraction(1), boundary_map=((0,),))


# ---------------------------------------------------------------------------
# graphs


@dataclass(frozen=True)
class Component:
    beta: tuple
    genus: int
    vertices: tuple
    degenerate: tuple = ()
    punctures: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "beta", tuple(int(b) for b in self.beta))
        object.__setattr__(self, "vertices", tuple(sorted(self.vertices)))
        object.__setattr__(self, "degenerate", tuple(sorted(self.degenerate)))

    @property
    def charged(self) -> bool:
        return any(self.beta)

    def decoration(self) -> tuple:
        return (self.beta, self.genus, len(self.degenerate), self.punctures)


def _rotate_min(seq: Sequence) -> tuple:
    if not seq:
        return ()
    i = min(range(len(seq)), key=lambda k: seq[k])
    return tuple(seq[i:]) + tuple(seq[:i])


@dataclass(frozen=True)
class DecoratedGraph:
    """Components, cyclic half-edge orders per vertex, and the edge partition.

    Half-edge, vertex and degenerate-vertex ids are integers.
    """

    components: tuple
    orders: tuple  # ((vertex, (h, ...)), ...) sorted by vertex
    edges: tuple  # ((h,), (h1, h2), ...) sorted

    @classmethod
    def build(
        cls,
        components: Iterable[Component],
        orders: Mapping[int, Sequence[int]],
        edges: Iterable[Sequence[int]],
    ) -> "DecoratedGraph":
        comps = tuple(components)
        ords = tuple(sorted((v, _rotate_min(tuple(hs))) for v, hs in orders.items()))
        edge_list = tuple(sorted(tuple(sorted(e)) for e in edges))
        return cls(comps, ords, edge_list)

    # derived data -----------------------------------------------------
    @cached_property
    def order_map(self) -> dict:
        return dict(self.orders)

    @cached_property
    def half_edges(self) -> tuple:
        return tuple(sorted(h for _, hs in self.orders for h in hs))

    @cached_property
    def vertex_of(self) -> dict:
        return {h: v for v, hs in self.orders for h in hs}

    @cached_property
    def component_of_vertex(self) -> dict:
        return {v: i for i, c in enumerate(self.components) for v in c.vertices}

    @cached_property
    def partner(self) -> dict:
        out = {}
        for e in self.edges:
            if len(e) == 2:
                out[e[0]] = e[1]
                out[e[1]] = e[0]
        return out

    @cached_property
    def internal_edges(self) -> tuple:
        return tuple(e for e in self.edges if len(e) == 2)

    @cached_property
    def external_edges(self) -> tuple:
        return tuple(e for e in self.edges if len(e) == 1)

    @cached_property
    def external_half_edges(self) -> frozenset:
        return frozenset(e[0] for e in self.external_edges)

    @cached_property
    def position(self) -> dict:
        """Index of each half-edge in the sorted half-edge list (tensor factor position)."""
        return {h: i for i, h in enumerate(self.half_edges)}

    def component_half_edges(self, index: int) -> list:
        comp = self.components[index]
        return [h for v in comp.vertices for h in self.order_map.get(v, ())]

    def next_half_edge(self, h: int) -> int:
        hs = self.order_map[self.vertex_of[h]]
        return hs[(hs.index(h) + 1) % len(hs)]

    @property
    def beta(self) -> tuple:
        if not self.components:
            return ()
        total = [0] * len(self.components[0].beta)
        for c in self.components:
            total = [a + b for a, b in zip(total, c.beta)]
        return tuple(total)

    def total_beta(self, rank: int) -> tuple:
        total = [0] * rank
        for c in self.components:
            total = [a + b for a, b in zip(total, c.beta)]
        return tuple(total)

    def num_degenerate(self) -> int:
        return sum(len(c.degenerate) for c in self.components)

    def num_punctures(self) -> int:
        return sum(c.punctures for c in self.components)

    def chi_component(self, index: int, variant: str = "plain") -> int:
        c = self.components[index]
        chi = 2 - 2 * c.genus - len(c.vertices)
        if variant == "with_D":
            chi -= len(c.degenerate)
        elif variant != "plain":
            raise GraphError(f"unknown Euler characteristic variant {variant!r}")
        return chi

    def chi(self, variant: str = "with_D") -> int:
        """Nodal Euler characteristic: sum of component chi minus the internal edges."""
        return sum(self.chi_component(i, variant) for i in range(len(self.components))) - len(self.internal_edges)

    def kappa(self, variant: str = "with_D") -> int:
        return len(self.external_edges) - self.chi(variant)

    def is_connected(self) -> bool:
        """Connected through internal edges (components linked by edges form one piece)."""
        if len(self.components) <= 1:
            return True
        parent = list(range(len(self.components)))

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for h1, h2 in self.internal_edges:
            a = find(self.component_of_vertex[self.vertex_of[h1]])
            b = find(self.component_of_vertex[self.vertex_of[h2]])
            parent[a] = b
        return len({find(i) for i in range(len(self.components))}) == 1

    def connected_pieces(self) -> list:
        """Lists of component indices linked by internal edges."""
        parent = list(range(len(self.components)))

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for h1, h2 in self.internal_edges:
            parent[find(self.component_of_vertex[self.vertex_of[h1]])] = find(
                self.component_of_vertex[self.vertex_of[h2]]
            )
        pieces: dict = {}
        for i in range(len(self.components)):
            pieces.setdefault(find(i), []).append(i)
        return sorted(pieces.values())

    def has_closed_component(self) -> bool:
        return any(not c.vertices and not c.degenerate for c in self.components)

    # relabeling -------------------------------------------------------
    def relabel(self, half_edge_map: Mapping[int, int], vertex_map: Mapping[int, int] | None = None) -> "DecoratedGraph":
        vm = vertex_map or {}
        comps = tuple(
            Component(c.beta, c.genus, tuple(vm.get(v, v) for v in c.vertices), tuple(vm.get(d, d) for d in c.degenerate), c.punctures)
            for c in self.components
        )
        orders = {vm.get(v, v): [half_edge_map.get(h, h) for h in hs] for v, hs in self.orders}
        edges = [[half_edge_map.get(h, h) for h in e] for e in self.edges]
        return DecoratedGraph.build(comps, orders, edges)

    def all_ids(self) -> set:
        ids = set(self.order_map)
        for c in self.components:
            ids.update(c.degenerate)
        return ids

    def fresh_id(self) -> int:
        ids = self.all_ids()
        return max(ids) + 1 if ids else 0

    # JSON ---------------------------------------------------------------
    def to_json(self) -> dict:
        return {
            "components": [
                {
                    "beta": list(c.beta),
                    "genus": c.genus,
                    "vertices": list(c.vertices),
                    "degenerate_vertices": list(c.degenerate),
                    "punctures": c.punctures,
                }
                for c in self.components
            ],
            "half_edge_orders": {str(v): list(hs) for v, hs in self.orders},
            "edges": [list(e) for e in self.edges],
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "DecoratedGraph":
        ids: dict = {}

        def key(x):
            if isinstance(x, int):
                return x
            text = str(x)
            if text.lstrip("-").isdigit():
                return int(text)
            return ids.setdefault(("s", text), None) or _string_id(ids, text)

        comps = [
            Component(
                tuple(c.get("beta", [])),
                int(c.get("genus", 0)),
                tuple(key(v) for v in c.get("vertices", [])),
                tuple(key(d) for d in c.get("degenerate_vertices", [])),
                int(c.get("punctures", 0)),
            )
            for c in data["components"]
        ]
        orders = {key(v): [key(h) for h in hs] for v, hs in data.get("half_edge_orders", {}).items()}
        for c in comps:
            for v in c.vertices:
                orders.setdefault(v, [])
        edges = [[key(h) for h in e] for e in data.get("edges", [])]
        return cls.build(comps, orders, edges)

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


def _string_id(ids: dict, text: str) -> int:
    """Map non-numeric ids to large integers, deterministically per load."""
    value = 10**9 + len([k for k in ids if isinstance(k, tuple)])
    ids[("s", text)] = value
    return value


# ---------------------------------------------------------------------------
# validation


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    violation: str | None = None
    detail: str = ""

    def __bool__(self) -> bool:
        return self.ok


def validate(G: DecoratedGraph, spec: ChargeSpec | None = None, require_stable: bool = True) -> ValidationReport:
    """Check structural invariants, stability and the support bound; report the first failure."""
    seen_vertices: dict = {}
    for i, c in enumerate(G.components):
        for v in c.vertices:
            if v in seen_vertices:
                return ValidationReport(False, "vertex_partition", f"vertex {v} in two components")
            seen_vertices[v] = i
        overlap = set(c.vertices) & set(c.degenerate)
        if overlap:
            return ValidationReport(False, "degenerate_overlap", f"ids {sorted(overlap)} are both vertices and degenerate")
        if c.genus < 0 or c.punctures < 0:
            return ValidationReport(False, "negative_decoration", f"component {i}")
        if spec is not None and len(c.beta) != spec.rank:
            return ValidationReport(False, "charge_rank", f"component {i} charge has length {len(c.beta)}")
    all_degenerate = [d for c in G.components for d in c.degenerate]
    if len(set(all_degenerate)) != len(all_degenerate):
        return ValidationReport(False, "degenerate_duplicate", "degenerate ids repeat")
    if set(all_degenerate) & set(seen_vertices):
        return ValidationReport(False, "degenerate_overlap", "degenerate id reused as a vertex")
    for v in G.order_map:
        if v not in seen_vertices:
            return ValidationReport(False, "vertex_orphan", f"vertex {v} has no component")
    hs = [h for _, seq in G.orders for h in seq]
    if len(set(hs)) != len(hs):
        return ValidationReport(False, "half_edge_duplicate", "a half-edge occurs twice in the cyclic orders")
    in_edges = [h for e in G.edges for h in e]
    if len(set(in_edges)) != len(in_edges):
        return ValidationReport(False, "edge_overlap", "a half-edge lies in two edges")
    if set(in_edges) != set(hs):
        orphan = sorted(set(hs) ^ set(in_edges))
        return ValidationReport(False, "half_edge_orphan", f"half-edges {orphan} miss a vertex or an edge")
    if any(len(e) not in (1, 2) for e in G.edges):
        return ValidationReport(False, "edge_size", "edges must have one or two half-edges")
    # torsion clause: Gamma is free, so a torsion charge is already zero
    if require_stable:
        for i, c in enumerate(G.components):
            if not c.charged and 2 * G.chi_component(i, "plain") - len(G.component_half_edges(i)) >= 0:
                return ValidationReport(False, "unstable_component", f"component {i}")
    if spec is not None:
        for i, c in enumerate(G.components):
            if not spec.supports(c.beta):
                return ValidationReport(False, "support_bound", f"component {i} charge {c.beta}")
    return ValidationReport(True)


def is_stable(G: DecoratedGraph) -> bool:
    return all(
        c.charged or 2 * G.chi_component(i, "plain") - len(G.component_half_edges(i)) < 0
        for i, c in enumerate(G.components)
    )


# ---------------------------------------------------------------------------
# canonical form and automorphisms


def permutation_parity(seq: Sequence[int]) -> int:
    """Sign of the permutation given as a sequence of distinct comparable items."""
    order = sorted(range(len(seq)), key=lambda i: seq[i])
    seen = [False] * len(seq)
    sign = 1
    for i in range(len(seq)):
        if seen[i]:
            continue
        j, length = i, 0
        while not seen[j]:
            seen[j] = True
            j = order[j]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign


@dataclass(frozen=True)
class CanonicalForm:
    graph: DecoratedGraph
    half_edge_map: Mapping  # input half-edge -> canonical half-edge
    vertex_map: Mapping
    sign: int

    def transport_order(self, source: DecoratedGraph) -> list:
        """Positions of source factors listed in canonical half-edge order."""
        inverse = {v: k for k, v in self.half_edge_map.items()}
        return [source.position[inverse[h]] for h in self.graph.half_edges]


@dataclass
class _Encoding:
    graph: Any
    half_nodes: list
    vertex_nodes: list
    component_nodes: list
    edge_nodes: list
    cells: list
    colors: list


def _encode(G: DecoratedGraph) -> _Encoding:
    nodes: list = []
    colors: list = []
    index: dict = {}

    def add(tag, color):
        index[tag] = len(nodes)
        nodes.append(tag)
        colors.append(color)

    ext = G.external_half_edges
    for h in G.half_edges:
        add(("h", h), ("a", 1 if h in ext else 0))
    for e in G.internal_edges:
        add(("e", e), ("b",))
    for v, _ in G.orders:
        add(("v", v), ("c",))
    for i, c in enumerate(G.components):
        add(("c", i), ("d", c.beta, c.genus, len(c.degenerate), c.punctures))
    adjacency: dict = {i: [] for i in range(len(nodes))}
    for e in G.internal_edges:
        en = index[("e", e)]
        for h in e:
            adjacency[index[("h", h)]].append(en)
    for v, hs in G.orders:
        vn = index[("v", v)]
        for h in hs:
            adjacency[index[("h", h)]].append(vn)
        if len(hs) > 1:
            for k, h in enumerate(hs):
                adjacency[index[("h", h)]].append(index[("h", hs[(k + 1) % len(hs)])])
    for i, c in enumerate(G.components):
        cn = index[("c", i)]
        for v in c.vertices:
            adjacency[index[("v", v)]].append(cn)
    keys = sorted(set(colors), key=repr)
    cells = [set(i for i, col in enumerate(colors) if col == k) for k in keys]
    graph = pynauty.Graph(
        len(nodes), directed=True, adjacency_dict={k: sorted(set(v)) for k, v in adjacency.items() if v}, vertex_coloring=cells
    )
    return _Encoding(
        graph,
        [index[("h", h)] for h in G.half_edges],
        [index[("v", v)] for v, _ in G.orders],
        [index[("c", i)] for i in range(len(G.components))],
        [index[("e", e)] for e in G.internal_edges],
        cells,
        [(k, len(c)) for k, c in zip(keys, cells)],
    )


_CANON_CACHE: dict = {}
_AUT_CACHE: dict = {}


def canonicalize(G: DecoratedGraph) -> CanonicalForm:
    """Canonical relabeling via nauty; equal canonical graphs iff isomorphic."""
    cached = _CANON_CACHE.get(G)
    if cached is not None:
        return cached
    if len(G.components) == 0:
        result = CanonicalForm(G, {}, {}, 1)
        _CANON_CACHE[G] = result
        return result
    enc = _encode(G)
    lab = pynauty.canon_label(enc.graph)
    inverse = [0] * len(lab)
    for pos, node in enumerate(lab):
        inverse[node] = pos
    n_half = len(G.half_edges)
    half_map = {h: inverse[node] for h, node in zip(G.half_edges, enc.half_nodes)}
    if sorted(half_map.values()) != list(range(n_half)):
        raise GraphError("canonical labeling did not respect the half-edge colour cells")
    vertex_positions = sorted(inverse[n] for n in enc.vertex_nodes)
    base = vertex_positions[0] if vertex_positions else 0
    vertex_map = {v: inverse[node] - base for (v, _), node in zip(G.orders, enc.vertex_nodes)}
    comp_order = sorted(range(len(G.components)), key=lambda i: inverse[enc.component_nodes[i]])
    n_vertices = len(G.orders)
    next_id = n_vertices
    comps = []
    for i in comp_order:
        c = G.components[i]
        degenerate = tuple(range(next_id, next_id + len(c.degenerate)))
        next_id += len(c.degenerate)
        for old, new in zip(c.degenerate, degenerate):
            vertex_map[old] = new
        comps.append(Component(c.beta, c.genus, tuple(vertex_map[v] for v in c.vertices), degenerate, c.punctures))
    orders = {vertex_map[v]: [half_map[h] for h in hs] for v, hs in G.orders}
    edges = [[half_map[h] for h in e] for e in G.edges]
    canon = DecoratedGraph.build(comps, orders, edges)
    if canon == G:
        half_map = {h: h for h in G.half_edges}
        vertex_map = {v: v for v in G.all_ids()}
    sign = permutation_parity([half_map[h] for h in G.half_edges])
    result = CanonicalForm(canon, half_map, vertex_map, sign)
    if len(_CANON_CACHE) > 200000:
        _CANON_CACHE.clear()
    _CANON_CACHE[G] = result
    return result


def is_isomorphic(G1: DecoratedGraph, G2: DecoratedGraph) -> bool:
    return canonicalize(G1).graph == canonicalize(G2).graph


@dataclass(frozen=True)
class AutomorphismGroup:
    """Half-edge permutations (as dicts) of Aut(G) plus orders of Aut, Aut_H and the trivial part."""

    permutations: tuple
    order: int
    order_half_edges: int

    @property
    def order_trivial(self) -> int:
        return self.order // self.order_half_edges


def _closure(generators: list, identity: tuple) -> list:
    group = {identity}
    frontier = [identity]
    while frontier:
        nxt = []
        for g in frontier:
            for s in generators:
                h = tuple(s[i] for i in g)
                if h not in group:
                    group.add(h)
                    nxt.append(h)
        frontier = nxt
    return sorted(group)


def automorphisms(G: DecoratedGraph) -> AutomorphismGroup:
    cached = _AUT_CACHE.get(G)
    if cached is not None:
        return cached
    d_factor = math.prod(math.factorial(len(c.degenerate)) for c in G.components)
    if not G.components:
        result = AutomorphismGroup(({},), 1, 1)
        _AUT_CACHE[G] = result
        return result
    enc = _encode(G)
    generators, size1, size2, _, _ = pynauty.autgrp(enc.graph)
    order = int(round(size1)) * 10 ** int(size2) * d_factor
    n = len(G.half_edges)
    node_to_pos = {node: i for i, node in enumerate(enc.half_nodes)}
    gens = []
    for gen in generators:
        perm = tuple(node_to_pos[gen[node]] for node in enc.half_nodes)
        if perm != tuple(range(n)):
            gens.append(perm)
    elements = _closure(gens, tuple(range(n)))
    perms = tuple({G.half_edges[i]: G.half_edges[p[i]] for i in range(n)} for p in elements)
    result = AutomorphismGroup(perms, order, len(elements))
    if len(_AUT_CACHE) > 200000:
        _AUT_CACHE.clear()
    _AUT_CACHE[G] = result
    return result


def is_automorphism(G: DecoratedGraph, perm: Mapping[int, int]) -> bool:
    """Check a half-edge bijection against cyclic orders, edges and component decorations."""
    mapped_edges = sorted(tuple(sorted(perm[h] for h in e)) for e in G.edges)
    if mapped_edges != sorted(G.edges):
        return False
    rotations = {}
    for v, hs in G.orders:
        if hs:
            rotations[_rotate_min([perm[h] for h in hs])] = v
    target = {hs: v for v, hs in G.orders if hs}
    vmap = {}
    for hs, v in rotations.items():
        if hs not in target:
            return False
        vmap[v] = target[hs]
    comp_of = G.component_of_vertex
    cmap: dict = {}
    for v, w in vmap.items():
        a, b = comp_of[v], comp_of[w]
        if cmap.setdefault(a, b) != b:
            return False
        if G.components[a].decoration() != G.components[b].decoration():
            return False
    return True


# ---------------------------------------------------------------------------
# enumeration


@dataclass(frozen=True)
class ComponentShape:
    beta: tuple
    genus: int
    valences: tuple  # per vertex, non-increasing
    degenerate: int

    @property
    def n_half(self) -> int:
        return sum(self.valences)

    def cost2(self) -> int:
        """Twice the contribution |H_c|/2 - chi_with_D(c) to kappa."""
        return self.n_half + 2 * (2 * self.genus + len(self.valences) + self.degenerate - 2)

    def stable(self) -> bool:
        if any(self.beta):
            return True
        return 2 * (2 - 2 * self.genus - len(self.valences)) - self.n_half < 0


def _partitions_nonincreasing(total: int, parts: int, cap: int | None = None) -> Iterator[tuple]:
    if parts == 0:
        if total == 0:
            yield ()
        return
    cap = total if cap is None else min(cap, total)
    for first in range(cap, -1, -1):
        if first * parts < total:
            break
        for rest in _partitions_nonincreasing(total - first, parts - 1, first):
            yield (first,) + rest


def component_shapes(beta: tuple, max_cost2: int) -> list:
    """All stable shapes with the given charge whose doubled kappa contribution is <= max_cost2."""
    shapes = []
    # cost2 = H + 4g + 2V + 2D - 4  with H, g, V, D >= 0
    for genus in range(0, (max_cost2 + 4) // 4 + 1):
        for nv in range(0, (max_cost2 + 4 - 4 * genus) // 2 + 1):
            for nd in range(0, (max_cost2 + 4 - 4 * genus - 2 * nv) // 2 + 1):
                room = max_cost2 + 4 - 4 * genus - 2 * nv - 2 * nd
                if room < 0:
                    continue
                max_h = room if nv else 0
                for h in range(0, max_h + 1):
                    for vals in _partitions_nonincreasing(h, nv):
                        shape = ComponentShape(beta, genus, vals, nd)
                        if shape.stable() and shape.cost2() <= max_cost2:
                            shapes.append(shape)
    return shapes


def _charge_partitions(spec: ChargeSpec, total: tuple, candidates: list, start: int = 0) -> Iterator[tuple]:
    if not any(total):
        yield ()
        return
    for i in range(start, len(candidates)):
        b = candidates[i]
        rest = tuple(t - x for t, x in zip(total, b))
        if spec.omega_of(rest) < 0:
            continue
        for tail in _charge_partitions(spec, rest, candidates, i):
            yield (b,) + tail


def _matchings(items: list, pairs: int) -> Iterator[list]:
    """All sets of ``pairs`` disjoint pairs drawn from ``items``."""
    if pairs == 0:
        yield []
        return
    if len(items) < 2 * pairs:
        return
    first, rest = items[0], items[1:]
    # first unpaired
    yield from _matchings(rest, pairs)
    for j, other in enumerate(rest):
        remaining = rest[:j] + rest[j + 1:]
        for m in _matchings(remaining, pairs - 1):
            yield [(first, other)] + m


def _graphs_from_shapes(shapes: Sequence[ComponentShape], n_internal: int) -> Iterator[DecoratedGraph]:
    comps = []
    orders: dict = {}
    next_h = 0
    next_v = 0
    for shape in shapes:
        vids = []
        for val in shape.valences:
            orders[next_v] = list(range(next_h, next_h + val))
            next_h += val
            vids.append(next_v)
            next_v += 1
        dids = list(range(next_v, next_v + shape.degenerate))
        next_v += shape.degenerate
        comps.append(Component(shape.beta, shape.genus, tuple(vids), tuple(dids)))
    halves = list(range(next_h))
    for matching in _matchings(halves, n_internal):
        paired = {h for p in matching for h in p}
        edges = [list(p) for p in matching] + [[h] for h in halves if h not in paired]
        yield DecoratedGraph.build(comps, orders, edges)


def enumerate_graphs(spec: ChargeSpec, beta: Sequence[int], kappa: int, shape_order: str = "forward") -> list:
    """The stable graphs of charge ``beta`` and invariant ``kappa`` (nodal chi with D), canonical and sorted.

    Bounds (see docs/enumeration_bounds.md): with ``t_c = |H_c|/2 - chi_with_D(c)``
    one has ``kappa = |E_ex|/2 + sum_c t_c``; charged components have
    ``t_c >= -2`` and are at most ``omega(beta)/min omega`` in number; stable
    uncharged components have ``t_c >= 1/2``.
    """
    beta = tuple(int(b) for b in beta)
    if len(beta) != spec.rank:
        raise GraphError("charge has the wrong rank")
    if any(beta) and not spec.omega_of(beta) > 0:
        return []
    candidates = spec.candidate_charges(beta)
    zero = tuple([0] * spec.rank)
    results: set = set()
    for charges in _charge_partitions(spec, beta, candidates):
        k = len(charges)
        # doubled budget available beyond the minimal charged cost
        budget2 = 2 * kappa + 4 * k
        if budget2 < 0:
            continue
        charged_shapes = {b: component_shapes(b, budget2 - 4 * (k - 1) - 4 + 4) for b in set(charges)}
        uncharged = component_shapes(zero, budget2 - 0)
        # choose one shape per charged component (multiset per repeated charge)
        groups: dict = {}
        for b in charges:
            groups[b] = groups.get(b, 0) + 1
        group_items = sorted(groups.items())

        def charged_choices(idx: int, spent2: int):
            if idx == len(group_items):
                yield (), spent2
                return
            b, count = group_items[idx]
            opts = sorted(charged_shapes[b], key=repr)
            for combo in itertools.combinations_with_replacement(range(len(opts)), count):
                picked = tuple(opts[i] for i in combo)
                cost = sum(s.cost2() for s in picked)
                if spent2 + cost > 2 * kappa:
                    # other charged groups still contribute at least -4 each
                    remaining_min = -4 * sum(c for _, c in group_items[idx + 1:])
                    if spent2 + cost + remaining_min > 2 * kappa:
                        continue
                for tail, total in charged_choices(idx + 1, spent2 + cost):
                    yield picked + tail, total

        unc = sorted(uncharged, key=repr)
        if shape_order == "reverse":
            unc = unc[::-1]

        def uncharged_choices(start: int, spent2: int):
            yield (), spent2
            for i in range(start, len(unc)):
                cost = unc[i].cost2()
                if spent2 + cost > 2 * kappa:
                    continue
                for tail, total in uncharged_choices(i, spent2 + cost):
                    yield (unc[i],) + tail, total

        for charged, spent in charged_choices(0, 0):
            for extra, total2 in uncharged_choices(0, spent):
                n_ext = 2 * kappa - total2  # |E_ex| = 2 (kappa - sum t_c)
                shapes = charged + extra
                n_half = sum(s.n_half for s in shapes)
                if n_ext < 0 or n_ext > n_half or (n_half - n_ext) % 2:
                    continue
                for G in _graphs_from_shapes(shapes, (n_half - n_ext) // 2):
                    results.add(canonicalize(G).graph)
    return sorted(results, key=graph_sort_key)


def graph_sort_key(G: DecoratedGraph):
    return (len(G.half_edges), len(G.components), G.dumps())


def disjoint_union(G1: DecoratedGraph, G2: DecoratedGraph) -> tuple:
    """Disjoint union with G2's ids shifted; returns (graph, half-edge map of G2)."""
    shift_h = (max(G1.half_edges) + 1) if G1.half_edges else 0
    shift_v = G1.fresh_id()
    hmap = {h: h + shift_h for h in G2.half_edges}
    vmap = {v: v + shift_v for v in G2.all_ids()}
    moved = G2.relabel(hmap, vmap)
    orders = dict(G1.orders)
    orders.update(dict(moved.orders))
    return DecoratedGraph.build(G1.components + moved.components, orders, list(G1.edges) + list(moved.edges)), hmap


EMPTY_GRAPH = DecoratedGraph((), (), ())
