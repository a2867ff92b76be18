"""Edge calculus on decorated graphs: contraction, quotients, cutting, forgetting edges,
the degree-forgetting class and the two partial orders."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence, Union

from .graphs import (
    ChargeSpec,
    Component,
    DecoratedGraph,
    GraphError,
    canonicalize,
    enumerate_graphs,
    is_isomorphic,
)

# An edge handle is either a pair of half-edge ids (internal edge) or an int (degenerate vertex id).
EdgeHandle = Union[tuple, int]


class EdgeOpError(GraphError):
    pass


def normalize_handle(G: DecoratedGraph, e) -> EdgeHandle:
    if isinstance(e, int):
        if not any(e in c.degenerate for c in G.components):
            raise EdgeOpError(f"{e} is not a degenerate vertex")
        return e
    pair = tuple(sorted(e))
    if len(pair) == 1:
        raise EdgeOpError(f"edge {pair} is external")
    if pair not in G.internal_edges:
        raise EdgeOpError(f"edge {pair} is not an internal edge")
    return pair


def contractible_handles(G: DecoratedGraph) -> list:
    handles: list = list(G.internal_edges)
    for c in G.components:
        handles.extend(c.degenerate)
    return handles


def _after(seq: Sequence[int], h: int) -> list:
    i = seq.index(h)
    return list(seq[i + 1:]) + list(seq[:i])


def delta_edge(G: DecoratedGraph, e: EdgeHandle) -> DecoratedGraph:
    """Contract an internal edge, or turn a degenerate vertex into an empty vertex."""
    e = normalize_handle(G, e)
    comps = list(G.components)
    orders = dict(G.orders)
    if isinstance(e, int):
        i = next(k for k, c in enumerate(comps) if e in c.degenerate)
        c = comps[i]
        comps[i] = Component(c.beta, c.genus, c.vertices + (e,), tuple(d for d in c.degenerate if d != e), c.punctures)
        orders[e] = ()
        return DecoratedGraph.build(comps, orders, G.edges)
    h1, h2 = e
    v1, v2 = G.vertex_of[h1], G.vertex_of[h2]
    edges = [x for x in G.edges if x != e]
    if v1 != v2:
        merged = _after(orders[v1], h1) + _after(orders[v2], h2)
        del orders[v2]
        orders[v1] = tuple(merged)
        i1, i2 = G.component_of_vertex[v1], G.component_of_vertex[v2]
        c1 = comps[i1]
        if i1 != i2:
            c2 = comps[i2]
            new = Component(
                tuple(a + b for a, b in zip(c1.beta, c2.beta)),
                c1.genus + c2.genus,
                tuple(v for v in c1.vertices + c2.vertices if v != v2),
                c1.degenerate + c2.degenerate,
                c1.punctures + c2.punctures,
            )
            comps = [c for k, c in enumerate(comps) if k not in (i1, i2)] + [new]
        else:
            comps[i1] = Component(c1.beta, c1.genus + 1, tuple(v for v in c1.vertices if v != v2), c1.degenerate, c1.punctures)
        return DecoratedGraph.build(comps, orders, edges)
    seq = orders[v1]
    rest = _after(seq, h1)
    k = rest.index(h2)
    first, second = rest[:k], rest[k + 1:]
    fresh = G.fresh_id()
    orders[v1] = tuple(first)
    orders[fresh] = tuple(second)
    i = G.component_of_vertex[v1]
    c = comps[i]
    comps[i] = Component(c.beta, c.genus, c.vertices + (fresh,), c.degenerate, c.punctures)
    return DecoratedGraph.build(comps, orders, edges)


def quotient(G: DecoratedGraph, handles: Iterable[EdgeHandle]) -> DecoratedGraph:
    """Contract a set of internal edges and degenerate vertices (in the given order)."""
    handles = [normalize_handle(G, e) for e in handles]
    if len(set(handles)) != len(handles):
        raise EdgeOpError("repeated edge in quotient")
    out = G
    for e in handles:
        out = delta_edge(out, e)
    return out


@dataclass(frozen=True)
class SurfaceInvariants:
    genus: int
    boundary_components: tuple  # per connected piece
    components: tuple  # (beta, genus, boundary count, marks per boundary vertex)
    beta: tuple
    external_edges: tuple
    graph: DecoratedGraph


def sigma(G: DecoratedGraph) -> SurfaceInvariants:
    surface = quotient(G, contractible_handles(G))
    comps = []
    for c in surface.components:
        marks = tuple(surface.order_map[v] for v in c.vertices)
        comps.append((c.beta, c.genus, len(c.vertices), marks))
    return SurfaceInvariants(
        genus=sum(c.genus for c in surface.components),
        boundary_components=tuple(len(c.vertices) for c in surface.components),
        components=tuple(comps),
        beta=surface.beta,
        external_edges=surface.external_edges,
        graph=surface,
    )


def cut(G: DecoratedGraph, edges: Iterable[Sequence[int]]) -> DecoratedGraph:
    """Turn the given internal edges into pairs of external half-edges."""
    to_cut = {tuple(sorted(e)) for e in edges}
    for e in to_cut:
        if e not in G.internal_edges:
            raise EdgeOpError(f"edge {e} is not internal")
    if not to_cut:
        return G
    new_edges = []
    for e in G.edges:
        if e in to_cut:
            new_edges.extend([(e[0],), (e[1],)])
        else:
            new_edges.append(e)
    return DecoratedGraph.build(G.components, dict(G.orders), new_edges)


# ---------------------------------------------------------------------------
# forgetting an external edge


class NotRemovable:
    def __repr__(self) -> str:
        return "NotRemovable"

    def __eq__(self, other) -> bool:
        return isinstance(other, NotRemovable)

    def __hash__(self) -> int:
        return hash("NotRemovable")


NOT_REMOVABLE = NotRemovable()


def _edge_of(G: DecoratedGraph, h: int) -> tuple:
    return next(e for e in G.edges if h in e)


def _restrict_marking(marking: Sequence, keep: set, rename: Mapping | None = None) -> tuple:
    rename = rename or {}
    out = []
    for level in marking:
        new = set()
        for e in level:
            e = tuple(sorted(e))
            if e in rename:
                e = rename[e]
            if e in keep:
                new.add(e)
        out.append(frozenset(new))
    return tuple(out)


def unstable_case(G: DecoratedGraph, e: int) -> str | None:
    """Classify the component left unstable by forgetting external half-edge ``e``."""
    v = G.vertex_of[e]
    ci = G.component_of_vertex[v]
    c = G.components[ci]
    hs = G.component_half_edges(ci)
    if c.charged or 2 * G.chi_component(ci, "plain") - (len(hs) - 1) < 0:
        return None
    n_internal = sum(1 for x in G.internal_edges if x[0] in hs and x[1] in hs)
    if len(c.vertices) == 1 and not c.degenerate and len(hs) == 3 and n_internal == 0:
        return "disk"
    if len(c.vertices) == 1 and not c.degenerate and len(hs) == 3 and n_internal == 1:
        return "disk_edge"
    if len(c.vertices) == 2 and not c.degenerate and len(hs) == 1:
        return "annulus"
    if len(c.vertices) == 1 and len(c.degenerate) == 1 and len(hs) == 1:
        return "annulus_degenerate"
    raise EdgeOpError(f"unexpected unstable configuration at half-edge {e}")


def _drop_component(G: DecoratedGraph, ci: int) -> DecoratedGraph:
    c = G.components[ci]
    hs = set(G.component_half_edges(ci))
    comps = [x for k, x in enumerate(G.components) if k != ci]
    orders = {v: hs_ for v, hs_ in G.orders if v not in c.vertices}
    edges = [x for x in G.edges if not set(x) & hs]
    return DecoratedGraph.build(comps, orders, edges)


def forget_edge(G: DecoratedGraph, marking: Sequence, e) -> tuple | NotRemovable:
    """Remove an external edge, restabilizing if needed; returns (G', m') or NOT_REMOVABLE."""
    h = e[0] if isinstance(e, (tuple, list)) else e
    if (h,) not in G.external_edges:
        raise EdgeOpError(f"{h} is not an external half-edge")
    case = unstable_case(G, h)
    v = G.vertex_of[h]
    ci = G.component_of_vertex[v]
    if case is None:
        orders = dict(G.orders)
        orders[v] = tuple(x for x in orders[v] if x != h)
        edges = [x for x in G.edges if x != (h,)]
        out = DecoratedGraph.build(G.components, orders, edges)
        return out, _restrict_marking(marking, set(out.edges))
    if case in ("annulus", "annulus_degenerate"):
        out = _drop_component(G, ci)
        return out, _restrict_marking(marking, set(out.edges))
    hs = G.component_half_edges(ci)
    if case == "disk_edge":
        loop = next(x for x in G.internal_edges if x[0] in hs and x[1] in hs)
        top = set(tuple(sorted(x)) for x in marking[-1]) if marking else set()
        if loop in top:
            return NOT_REMOVABLE
        out = _drop_component(G, ci)
        return out, _restrict_marking(marking, set(out.edges))
    # disk: splice the two remaining half-edges through the deleted vertex
    h1, h2 = [x for x in hs if x != h]
    p1, p2 = G.partner.get(h1), G.partner.get(h2)
    base = _drop_component(G, ci)
    if p1 is None and p2 is None:
        # the disk is a whole connected piece with three boundary marks; it disappears
        return base, _restrict_marking(marking, set(base.edges))
    e1 = _edge_of(G, h1)
    e2 = _edge_of(G, h2)
    if p1 is not None and p2 is not None:
        new_edge = tuple(sorted((p1, p2)))
    else:
        new_edge = ((p1 if p1 is not None else p2),)
    out = DecoratedGraph.build(base.components, dict(base.orders), list(base.edges) + [new_edge])
    levels = []
    for level in marking:
        lv = {tuple(sorted(x)) for x in level}
        new = {x for x in lv if x in set(out.edges)}
        if e1 in lv and e2 in lv or (len(new_edge) == 1 and (e1 in lv or e2 in lv)):
            new.add(new_edge)
        levels.append(frozenset(new))
    return out, tuple(levels)


# ---------------------------------------------------------------------------
# degree-forgetting class


@dataclass(frozen=True)
class DaggerGraph:
    """Graph with charged components forgotten into a star part (V*, D*) and shifts (kappa*, d*)."""

    kappa_star: int
    d_star: int
    star_vertices: tuple
    star_degenerate: tuple
    comp0: tuple  # (vertices, degenerate, genus)
    orders: tuple
    edges: tuple

    def as_decorated(self) -> DecoratedGraph:
        comps = [Component((1,), 0, self.star_vertices, self.star_degenerate)]
        comps += [Component((0,), g, vs, ds) for vs, ds, g in self.comp0]
        return DecoratedGraph.build(comps, dict(self.orders), self.edges)

    @classmethod
    def from_decorated(cls, kappa_star: int, d_star: int, G: DecoratedGraph) -> "DaggerGraph":
        star = next(c for c in G.components if c.beta == (1,))
        comp0 = tuple(sorted((c.vertices, c.degenerate, c.genus) for c in G.components if c.beta == (0,)))
        return cls(kappa_star, d_star, star.vertices, star.degenerate, comp0, G.orders, G.edges)

    def chi(self, index: int) -> int:
        vs, ds, g = self.comp0[index]
        return 2 - 2 * g - len(vs) - len(ds)

    @property
    def n_half_edges(self) -> int:
        return sum(len(hs) for _, hs in self.orders)

    def kappa(self) -> Fraction:
        return self.kappa_star - sum(self.chi(i) for i in range(len(self.comp0))) + Fraction(self.n_half_edges, 2)

    def d(self) -> int:
        return self.d_star + sum(len(ds) for _, ds, _ in self.comp0)

    def is_stable(self) -> bool:
        hmap = dict(self.orders)
        for i, (vs, _, _) in enumerate(self.comp0):
            if 2 * self.chi(i) - sum(len(hmap.get(v, ())) for v in vs) >= 0:
                return False
        return True

    def canonical_key(self) -> tuple:
        return (self.kappa_star, self.d_star, canonicalize(self.as_decorated()).graph)

    def to_json(self) -> dict:
        return {
            "kappa_star": self.kappa_star,
            "d_star": self.d_star,
            "star_vertices": list(self.star_vertices),
            "star_degenerate": list(self.star_degenerate),
            "comp0": [{"vertices": list(v), "degenerate_vertices": list(d), "genus": g} for v, d, g in self.comp0],
            "half_edge_orders": {str(v): list(hs) for v, hs in self.orders},
            "edges": [list(e) for e in self.edges],
            "kappa": str(self.kappa()),
            "d": self.d(),
        }


class _Zero:
    def __repr__(self) -> str:
        return "Zero"

    def __eq__(self, other) -> bool:
        return isinstance(other, _Zero)

    def __hash__(self) -> int:
        return hash("Zero")


ZERO = _Zero()


def dagger(G: DecoratedGraph) -> DaggerGraph:
    charged = [i for i, c in enumerate(G.components) if c.charged]
    kappa_star = -sum(G.chi_component(i, "plain") for i in charged)
    star_v = tuple(v for i in charged for v in G.components[i].vertices)
    star_d = tuple(d for i in charged for d in G.components[i].degenerate)
    comp0 = tuple(sorted((c.vertices, c.degenerate, c.genus) for c in G.components if not c.charged))
    return DaggerGraph(kappa_star, 0, star_v, star_d, comp0, G.orders, G.edges)


def dagger_normalize(Gd: DaggerGraph, normalized: bool = False) -> DaggerGraph | _Zero:
    """Apply both quotient relations: drop vertex-free uncharged components and empty D*."""
    kappa_star, d_star = Gd.kappa_star, Gd.d_star
    keep = []
    for i, comp in enumerate(Gd.comp0):
        if not comp[0]:
            if normalized:
                return ZERO
            kappa_star -= Gd.chi(i)
            d_star += len(comp[1])
        else:
            keep.append(comp)
    n_star = len(Gd.star_degenerate)
    kappa_star += n_star
    d_star += n_star
    return DaggerGraph(kappa_star, d_star, Gd.star_vertices, (), tuple(keep), Gd.orders, Gd.edges)


def delta_dagger(Gd: DaggerGraph, e: EdgeHandle) -> DaggerGraph:
    """Edge contraction on the degree-forgetting class; star-side merges shift kappa*."""
    star = set(Gd.star_vertices)
    if isinstance(e, int):
        if e in Gd.star_degenerate:
            return DaggerGraph(
                Gd.kappa_star, Gd.d_star, Gd.star_vertices + (e,), tuple(d for d in Gd.star_degenerate if d != e),
                Gd.comp0, tuple(sorted(Gd.orders + ((e, ()),))), Gd.edges,
            )
    G = Gd.as_decorated()
    e = normalize_handle(G, e)
    if isinstance(e, tuple):
        v1, v2 = G.vertex_of[e[0]], G.vertex_of[e[1]]
        touches_star = v1 in star or v2 in star
    else:
        touches_star = False
    out = delta_edge(G, e)
    result = DaggerGraph.from_decorated(Gd.kappa_star, Gd.d_star, out)
    if not touches_star:
        return result
    if v1 in star and v2 in star:
        return DaggerGraph(result.kappa_star + 1, *_rest(result))
    # an uncharged component merges into the star part
    other = v2 if v1 in star else v1
    ci = next(i for i, (vs, _, _) in enumerate(Gd.comp0) if other in vs)
    return DaggerGraph(result.kappa_star - Gd.chi(ci) - len(Gd.comp0[ci][1]) + 1, *_rest(result))


def _rest(Gd: DaggerGraph) -> tuple:
    return (Gd.d_star, Gd.star_vertices, Gd.star_degenerate, Gd.comp0, Gd.orders, Gd.edges)


# ---------------------------------------------------------------------------
# partial orders


def contracts_to(G_big: DecoratedGraph, G_small: DecoratedGraph) -> bool:
    """Whether some nonempty set of contractible handles of G_big contracts it onto G_small."""
    handles = contractible_handles(G_big)
    k = len(handles) - len(contractible_handles(G_small))
    if k <= 0 or len(G_big.external_edges) != len(G_small.external_edges):
        return False
    target = canonicalize(G_small).graph
    for subset in itertools.combinations(handles, k):
        if canonicalize(quotient(G_big, subset)).graph == target:
            return True
    return False


def precedes(G_prime, G, order: str = "mc", spec: ChargeSpec | None = None) -> bool:
    """Strict partial orders on graphs: 'mc' (omega, kappa, quotient) or 'dagger' (kappa, d, quotient)."""
    if order == "mc":
        if spec is None:
            raise EdgeOpError("the mc order needs a ChargeSpec for omega")
        w1 = spec.omega_of(G_prime.total_beta(spec.rank))
        w2 = spec.omega_of(G.total_beta(spec.rank))
        if w1 != w2:
            return w1 < w2
        k1, k2 = G_prime.kappa(), G.kappa()
        if k1 != k2:
            return k1 < k2
        return contracts_to(G_prime, G)
    if order == "dagger":
        if G_prime.kappa() != G.kappa():
            return G_prime.kappa() < G.kappa()
        if G_prime.d() != G.d():
            return G_prime.d() < G.d()
        return dagger_contracts_to(G_prime, G)
    raise EdgeOpError(f"unknown order {order!r}")


def dagger_contracts_to(G_big: DaggerGraph, G_small: DaggerGraph) -> bool:
    handles = list(G_big.as_decorated().internal_edges)
    k = len(handles) - len(G_small.as_decorated().internal_edges)
    if k <= 0:
        return False
    target = G_small.canonical_key()
    for subset in itertools.combinations(handles, k):
        out = G_big
        for e in subset:
            out = delta_dagger(out, e)
        if out.canonical_key() == target:
            return True
    return False


def sub_graphs(G: DecoratedGraph, spec: ChargeSpec) -> list:
    """Pairs (G', E') from the same graded set with G'/E' isomorphic to G and E' nonempty."""
    found = []
    for candidate in enumerate_graphs(spec, G.total_beta(spec.rank), G.kappa()):
        handles = contractible_handles(candidate)
        k = len(handles) - len(contractible_handles(G))
        if k <= 0:
            continue
        for subset in itertools.combinations(handles, k):
            if is_isomorphic(quotient(candidate, subset), G):
                found.append((candidate, subset))
    return found


def topological_order(graphs: Sequence, order: str = "mc", spec: ChargeSpec | None = None) -> list | None:
    """Indices sorted compatibly with the order, or None if a cycle exists."""
    n = len(graphs)
    before = {i: set() for i in range(n)}
    for i in range(n):
        for j in range(n):
            if i != j and precedes(graphs[i], graphs[j], order, spec):
                before[j].add(i)
    done: list = []
    remaining = set(range(n))
    while remaining:
        ready = sorted(i for i in remaining if not (before[i] & remaining))
        if not ready:
            return None
        done.extend(ready)
        remaining -= set(ready)
    return done
