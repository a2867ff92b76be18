"""Cyclic gl(N) trace weights of decorated graphs.

Every half-edge carries a matrix, every vertex contributes the trace of the
product of its matrices in cyclic order, and every internal edge carries the
completeness tensor ``sum_ij E_ij (x) E_ji``.  A vertex with no half-edges
contributes ``tr(1) = N``.  On closed graphs the weight is ``N**faces``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

from .graphs import DecoratedGraph, GraphError


class TraceError(GraphError):
    pass


@dataclass(frozen=True)
class RibbonStructure:
    vertex_permutation: Mapping  # h -> next half-edge at its vertex
    edge_involution: Mapping  # h -> partner (internal only)
    faces: tuple  # orbits of edge_involution after vertex_permutation
    empty_vertices: int

    @property
    def face_count(self) -> int:
        return len(self.faces) + self.empty_vertices


def ribbon_structure(G: DecoratedGraph) -> RibbonStructure:
    if G.external_edges:
        raise TraceError("ribbon faces are defined here for closed (all-internal) graphs")
    nxt = {h: G.next_half_edge(h) for h in G.half_edges}
    partner = dict(G.partner)
    seen: set = set()
    faces = []
    for start in G.half_edges:
        if start in seen:
            continue
        orbit = []
        h = start
        while h not in seen:
            seen.add(h)
            orbit.append(h)
            h = partner[nxt[h]]
        faces.append(tuple(orbit))
    empty = sum(1 for _, hs in G.orders if not hs)
    return RibbonStructure(nxt, partner, tuple(faces), empty)


def trv_faces(G: DecoratedGraph) -> int:
    """Exponent F of the closed-graph weight N**F."""
    return ribbon_structure(G).face_count


def _elementary(N: int, i: int, j: int) -> np.ndarray:
    m = np.zeros((N, N), dtype=object)
    m[i, j] = 1
    return m


def _vertex_trace(N: int, mats: Sequence[np.ndarray]) -> int:
    prod = np.identity(N, dtype=object)
    for m in mats:
        prod = prod.dot(m)
    return int(sum(prod[i, i] for i in range(N)))


def trv_numeric(G: DecoratedGraph, N: int) -> Fraction:
    """Brute-force matrix evaluation over the elementary basis (test oracle)."""
    if G.external_edges:
        raise TraceError("trv_numeric needs a graph without external edges")
    if N < 1:
        raise TraceError("N must be positive")
    edges = G.internal_edges
    total = 0
    for labels in itertools.product(range(N), repeat=2 * len(edges)):
        mat = {}
        for k, (h1, h2) in enumerate(edges):
            i, j = labels[2 * k], labels[2 * k + 1]
            mat[h1] = _elementary(N, i, j)
            mat[h2] = _elementary(N, j, i)
        value = 1
        for _, hs in G.orders:
            value *= _vertex_trace(N, [mat[h] for h in hs])
            if value == 0:
                break
        total += value
    return Fraction(total)


def basis_index(N: int, row: int, col: int) -> int:
    return row * N + col


def dual_index(N: int, k: int) -> int:
    """Index of the dual basis element: E_ij pairs with E_ji."""
    row, col = divmod(k, N)
    return col * N + row


def external_trace(G: DecoratedGraph, N: int, assignment: Mapping[int, int]) -> int:
    """Tr_V with external half-edge h carrying the basis matrix E_{assignment[h]}.

    Row indices are identified along faces; the value is 0 or N to the number of
    unconstrained index classes.
    """
    parent: dict = {h: h for h in G.half_edges}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for h in G.half_edges:
        p = G.partner.get(h)
        if p is not None:
            # column of h equals the row of its cyclic successor and the row of its partner
            a, b = find(G.next_half_edge(h)), find(p)
            parent[a] = b
    pinned: dict = {}
    for h, k in assignment.items():
        row, col = divmod(k, N)
        for node, value in ((h, row), (G.next_half_edge(h), col)):
            root = find(node)
            if pinned.setdefault(root, value) != value:
                return 0
    classes = {find(h) for h in G.half_edges}
    free = len(classes - set(pinned))
    empty = sum(1 for _, hs in G.orders if not hs)
    return N ** (free + empty)


def trv_with_externals(G: DecoratedGraph, N: int, class_index: int = 0, transposed: Sequence[int] = ()):
    """Polynomial sum_k x^k tr(...) in the variables x{class}[k] (y for half-edges listed in ``transposed``).

    A half-edge in ``transposed`` carries the dual basis element, as the
    ``y`` insertion does.  Returns a Series over the standard ring with lie_dim N**2.
    """
    from .series import Series, SeriesRingSpec

    ext = sorted(G.external_half_edges)
    spec = SeriesRingSpec.standard(class_index + 1, N * N, {}, 0)
    result = Series.zero(spec)
    tset = set(transposed)
    for labels in itertools.product(range(N * N), repeat=len(ext)):
        assignment = {}
        for h, k in zip(ext, labels):
            assignment[h] = dual_index(N, k) if h in tset else k
        value = external_trace(G, N, assignment)
        if value:
            term = Series.constant(spec, value)
            for h, k in zip(ext, labels):
                name = f"{'y' if h in tset else 'x'}{class_index}[{k}]"
                term = term * Series.var(spec, name)
            result = result + term
    return result
