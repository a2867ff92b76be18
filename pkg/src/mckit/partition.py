"""Partition function, potential and the BV operator over the discrete backend.

The weight cochain of a marked graph (G, m) is assembled from three kinds of
blocks, listed in this order:

* a propagator block ``P(c_a, c_b)`` for every internal edge outside the top flag level,
* a correction block ``sum_i alpha_i (x) beta_i + beta_i (x) alpha_i`` for every flag step,
* a leg block for every external half-edge: ``x_i^k alpha_i X_k`` or ``y_i^k beta_i X'_k``.

Within a two-factor block the smaller half-edge id comes first.  The Lie
factors are contracted with the cyclic vertex traces of ``traces``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Mapping, Sequence

from . import discrete_geometry as dg
from .complex import MCChain, Marking
from .graphs import ChargeSpec, DecoratedGraph, automorphisms
from .series import Series, SeriesRingSpec
from .traces import dual_index, external_trace, trv_faces


class PartitionError(ValueError):
    pass


# Sign conventions fixed by requiring qme_check == 0 (see the test suite).
DELTA_SIGN = 1  # bv_delta(x y) = +1
Y_PLACEMENT = True  # a y variable stands right of its own cell: it passes every odd cell up to and including it
Y_REVERSED = True  # y variables are multiplied in reverse leg order


@dataclass(frozen=True)
class PartitionOptions:
    """How weights are evaluated.

    ``N`` is the gl(N) rank used for Lie legs; with ``symbolic_faces`` the
    closed-graph weight is kept as the monomial ``N**faces`` (only valid when
    no external legs are present).
    """

    N: int = 1
    symbolic_faces: bool = False
    truncation: tuple = (("g_s", 4),)
    gs_floor: int = -12
    charge_spec: ChargeSpec | None = None
    extra_scalars: tuple = ()

    def ring(self, K: dg.FiniteComplex) -> SeriesRingSpec:
        lie_dim = 0 if self.symbolic_faces else self.N * self.N
        return SeriesRingSpec.standard(len(K.classes), lie_dim, dict(self.truncation), self.gs_floor)

    def with_truncation(self, **orders) -> "PartitionOptions":
        merged = dict(self.truncation)
        merged.update(orders)
        return PartitionOptions(self.N, self.symbolic_faces, tuple(sorted(merged.items())), self.gs_floor, self.charge_spec)


@dataclass
class Amplitude:
    """Values <Omega_{G,m}, Z_{G,m}> keyed by canonical (G, m)."""

    values: dict = field(default_factory=dict)
    source: str = "discrete-backend"


# ---------------------------------------------------------------------------
# block structure


def block_layout(G: DecoratedGraph, m: Marking) -> tuple:
    """(propagator edges, step edges, legs) in block order."""
    top = m.top
    props = [e for e in G.internal_edges if e not in top]
    steps = m.step_edges()
    legs = sorted(h for (h,) in G.external_edges)
    return props, steps, legs


def block_order(G: DecoratedGraph, m: Marking) -> list:
    pos = G.position
    props, steps, legs = block_layout(G, m)
    order = []
    for e in props + steps:
        order.extend(pos[h] for h in e)
    order.extend(pos[h] for h in legs)
    return order


def _class_cochains(K: dg.FiniteComplex) -> list:
    return [(dict(c.alpha), dict(c.beta)) for c in K.classes]


def _correction(K: dg.FiniteComplex) -> dict:
    cached = K._cache.get("correction")
    if cached is None:
        cached = dg.correction_term(K)
        K._cache["correction"] = cached
    return cached


# ---------------------------------------------------------------------------
# Lie polynomials


def _lie_poly(spec: SeriesRingSpec, G: DecoratedGraph, N: int, signature: tuple) -> Series:
    """sum over Lie labels of Tr_V times the product of leg variables in leg order.

    ``signature`` lists (half-edge, kind, class) for each leg in sorted order;
    y legs carry the dual basis element.
    """
    key = ("lie", spec, G, N, signature)
    cached = _LIE_CACHE.get(key)
    if cached is not None:
        return cached
    result = Series.zero(spec)
    dim = N * N
    for labels in itertools.product(range(dim), repeat=len(signature)):
        assignment = {}
        for (h, kind, _), k in zip(signature, labels):
            assignment[h] = dual_index(N, k) if kind == "y" else k
        value = external_trace(G, N, assignment)
        if not value:
            continue
        term = Series.constant(spec, value)
        for (_, kind, i), k in zip(signature, labels):
            term = term * Series.var(spec, f"{kind}{i}[{k}]")
        result = result + term
    _LIE_CACHE[key] = result
    return result


_LIE_CACHE: dict = {}


def lie_weight(spec: SeriesRingSpec, G: DecoratedGraph, options: PartitionOptions, signature: tuple) -> Series:
    if options.symbolic_faces:
        if signature or G.external_edges:
            raise PartitionError("symbolic face weights need graphs without external legs")
        return Series.monomial(spec, {"N": trv_faces(G)})
    return _lie_poly(spec, G, options.N, signature)


# ---------------------------------------------------------------------------
# geometric values


def _leg_options(K: dg.FiniteComplex, cell: int) -> list:
    """(kind, class index, value) for every nonzero leg insertion at ``cell``."""
    out = []
    for i, (alpha, beta) in enumerate(_class_cochains(K)):
        a = alpha.get(cell)
        if a:
            out.append(("x", i, a))
        b = beta.get(cell)
        if b:
            out.append(("y", i, b))
    return out


def term_values(K: dg.FiniteComplex, propagator: Mapping, G: DecoratedGraph, m: Marking, cells: Sequence[int]) -> dict:
    """Geometric part of the weight on one basis term: {leg signature: rational}.

    Includes the reordering sign to block order, the y-placement signs and the
    (-1)^l normalization.
    """
    if not m.is_nondegenerate():
        return {}
    pos = G.position
    props, steps, legs = block_layout(G, m)
    value = Fraction(1)
    for e in props:
        w = propagator.get((cells[pos[e[0]]], cells[pos[e[1]]]))
        if not w:
            return {}
        value *= w
    corr = _correction(K)
    for e in steps:
        w = corr.get((cells[pos[e[0]]], cells[pos[e[1]]]))
        if not w:
            return {}
        value *= w
    order = block_order(G, m)
    value *= dg.permutation_sign(K, cells, order)
    if m.length % 2:
        value = -value
    # odd cells before the leg blocks
    n_fixed = 2 * (len(props) + len(steps))
    odd_before = sum(dg.parity(K, cells[p]) for p in order[:n_fixed])
    choices = [_leg_options(K, cells[pos[h]]) for h in legs]
    out: dict = {}
    for combo in itertools.product(*choices):
        v = value
        running = odd_before
        signature = []
        for h, (kind, i, w) in zip(legs, combo):
            v *= w
            running += dg.parity(K, cells[pos[h]])
            if kind == "y" and Y_PLACEMENT and running % 2:
                v = -v
            signature.append((h, kind, i))
        if Y_REVERSED:
            n_y = sum(1 for _, kind, _ in signature if kind == "y")
            if (n_y * (n_y - 1) // 2) % 2:
                v = -v
        key = tuple(signature)
        out[key] = out.get(key, 0) + v
    return {k: v for k, v in out.items() if v}


def pair_term(K: dg.FiniteComplex, propagator: Mapping, G: DecoratedGraph, m: Marking, tensor: Mapping) -> dict:
    """<Omega_{G,m}, tensor> before the Lie contraction: {leg signature: rational}."""
    out: dict = {}
    for cells, coeff in tensor.items():
        for sig, v in term_values(K, propagator, G, m, cells).items():
            out[sig] = out.get(sig, 0) + v * coeff
    return {k: v for k, v in out.items() if v}


def graph_weight(spec: SeriesRingSpec, G: DecoratedGraph, options: PartitionOptions) -> Series:
    """g_s^{-chi} N^{|D|} b^{|P|} (T^{omega(beta)} with a charge spec) / |Aut G|."""
    exps = {"g_s": -G.chi()}
    if G.num_degenerate():
        if options.symbolic_faces:
            exps["N"] = G.num_degenerate()
    if G.num_punctures():
        exps["b"] = G.num_punctures()
    if options.charge_spec is not None and G.components:
        omega = options.charge_spec.omega_of(G.total_beta(options.charge_spec.rank))
        if omega:
            exps["T"] = omega
    coeff = Fraction(1, automorphisms(G).order)
    if G.num_degenerate() and not options.symbolic_faces:
        coeff *= options.N ** G.num_degenerate()
    return Series.monomial(spec, exps, coeff)


def pair(omega_cochain: Mapping, tensor: Mapping, spec: SeriesRingSpec) -> Series:
    """Full contraction of a weight cochain (Series coefficients) with a chain tensor."""
    return dg.pair(omega_cochain, tensor, Series.zero(spec))


# ---------------------------------------------------------------------------
# the full weight cochain (independent route used as a cross-check)


def omega_cochain(
    graph: DecoratedGraph,
    marking: Marking,
    geometry: dg.FiniteComplex,
    propagator=None,
    lie_mode: str = "numeric",
    options: PartitionOptions | None = None,
) -> dict:
    """Omega_{G,m} as a cochain {cells: Series} on the factors of G in sorted half-edge order.

    Built as a tensor product of blocks in block order and moved to factor
    order with ``reorder``; only practical for small graphs.
    """
    K = geometry
    options = options or PartitionOptions(symbolic_faces=(lie_mode == "faces"))
    spec = options.ring(K)
    P = _propagator_map(K, propagator)
    G, m = graph, marking
    if not m.is_nondegenerate():
        return {}
    props, steps, legs = block_layout(G, m)
    corr = _correction(K)
    blocks: list = [dict(P) for _ in props] + [dict(corr) for _ in steps]
    tensor = {(): Fraction(1)}
    for b in blocks:
        tensor = dg.tensor_product(tensor, b)
    n_fixed = 2 * (len(props) + len(steps))
    # legs: pair each cell choice with its signature
    leg_tensors: dict = {(): {(): Fraction(1)}}
    for h in legs:
        nxt: dict = {}
        for sig, part in leg_tensors.items():
            for cell in range(K.size):
                for kind, i, w in _leg_options(K, cell):
                    key = sig + ((h, kind, i),)
                    slot = nxt.setdefault(key, {})
                    for cells, v in part.items():
                        slot[cells + (cell,)] = slot.get(cells + (cell,), 0) + v * w
        leg_tensors = nxt
    order = block_order(G, m)
    inverse = [0] * len(order)
    for k, p in enumerate(order):
        inverse[p] = k
    out: dict = {}
    sign_l = -1 if m.length % 2 else 1
    for sig, legs_tensor in leg_tensors.items():
        lie = lie_weight(spec, G, options, sig)
        if not lie:
            continue
        for fixed, v1 in tensor.items():
            odd_before = sum(dg.parity(K, c) for c in fixed)
            for leg_cells, v2 in legs_tensor.items():
                v = v1 * v2 * sign_l
                running = odd_before
                for (h, kind, i), c in zip(sig, leg_cells):
                    running += dg.parity(K, c)
                    if kind == "y" and Y_PLACEMENT and running % 2:
                        v = -v
                if Y_REVERSED:
                    n_y = sum(1 for _, kind, _ in sig if kind == "y")
                    if (n_y * (n_y - 1) // 2) % 2:
                        v = -v
                block_cells = fixed + leg_cells
                # block position k holds factor order[k]; move back to factor order
                moved = dg.reorder(K, {block_cells: v}, inverse)
                for cells, val in moved.items():
                    # the cochain is dual to the chain: pairing with the chain in block order
                    term = lie.scale(val)
                    out[cells] = out[cells] + term if cells in out else term
    return {k: v for k, v in out.items() if v}


def _propagator_map(K: dg.FiniteComplex, propagator) -> Mapping:
    if propagator is None:
        cached = K._cache.get("propagator")
        if cached is None:
            cached = dg.solve_propagator(K)
            K._cache["propagator"] = cached
        propagator = cached
    if isinstance(propagator, dg.Propagator):
        return propagator.cochain
    return propagator


# ---------------------------------------------------------------------------
# partition function and potential


def amplitudes(Z: MCChain, options: PartitionOptions | None = None, propagator=None) -> Amplitude:
    """Per-(G, m) values <Omega_{G,m}, Z_{G,m}> (Lie contraction included, no graph weight)."""
    options = options or PartitionOptions()
    K = Z.geometry
    spec = options.ring(K)
    P = _propagator_map(K, propagator)
    out = Amplitude()
    for (G, m), tensor in Z.terms.items():
        total = Series.zero(spec)
        for sig, v in pair_term(K, P, G, m, tensor).items():
            total = total + lie_weight(spec, G, options, sig).scale(v)
        if total:
            out.values[(G, m)] = total
    return out


def _select(G: DecoratedGraph, connected_only: bool) -> bool:
    if not connected_only:
        return True
    return G.is_connected() and not G.has_closed_component() and bool(G.components)


def _assemble(Z, options: PartitionOptions, propagator, connected_only: bool) -> Series:
    if isinstance(Z, Amplitude):
        if not Z.values:
            raise PartitionError("an empty amplitude map has no ring; pass a chain or a nonzero map")
        amp = Z
        spec = next(iter(Z.values.values())).spec
    else:
        amp = amplitudes(Z, options, propagator)
        spec = options.ring(Z.geometry)
    total = Series.zero(spec)
    for (G, m), value in amp.values.items():
        if not _select(G, connected_only):
            continue
        total = total + graph_weight(spec, G, options) * value
    return total


def partition_function(Z, options: PartitionOptions | None = None, propagator=None) -> Series:
    """Sum over stored (G, m) of g_s^{-chi} b^{|P|} N^{|D|} <Omega, Z> / |Aut G|."""
    return _assemble(Z, options or PartitionOptions(), propagator, False)


def potential(Z, options: PartitionOptions | None = None, propagator=None) -> Series:
    """g_s times the connected part, closed components excluded."""
    options = options or PartitionOptions()
    value = _assemble(Z, options, propagator, True)
    return value * Series.var(value.spec, "g_s")


# ---------------------------------------------------------------------------
# BV operator


def _paired_variables(spec: SeriesRingSpec) -> list:
    out = []
    for name in spec.variables:
        if name.startswith("x"):
            partner = "y" + name[1:]
            if partner in spec._index:
                out.append((name, partner))
    return out


def bv_delta(f: Series) -> Series:
    """sum_{i,k} d/dx_i^k d/dy_i^k (left derivatives), with the frozen sign."""
    total = Series.zero(f.spec)
    for x, y in _paired_variables(f.spec):
        total = total + f.derivative(y).derivative(x)
    return total.scale(DELTA_SIGN)


def _parity_of(f: Series) -> int:
    p = f.parity()
    return 0 if p is None else p


def bracket(f: Series, g: Series) -> Series:
    """{f, g} = Delta(fg) - Delta(f) g - (-1)^|f| f Delta(g)."""
    sign = -1 if _parity_of(f) else 1
    return bv_delta(f * g) - bv_delta(f) * g - (f * bv_delta(g)).scale(sign)


def qme_check(B: MCChain, options: PartitionOptions | None = None, propagator=None) -> Series:
    """P(hat_boundary B) - g_s Delta P(B); identically zero."""
    from .complex import hat_boundary

    options = options or PartitionOptions()
    lhs = partition_function(hat_boundary(B), options, propagator)
    rhs = partition_function(B, options, propagator)
    return lhs - Series.var(lhs.spec, "g_s") * bv_delta(rhs)


def potential_qme_residual(W: Series, dW: Series) -> Series:
    """dW + 1/2 {W, W} + g_s Delta W for a potential W and its isotopy derivative dW."""
    gs = Series.var(W.spec, "g_s")
    return dW + bracket(W, W).scale(Fraction(1, 2)) + gs * bv_delta(W)


def bulk_shift(f: Series, shift) -> Series:
    """b -> b + shift * g_s."""
    from .series import substitute_bulk_shift

    return substitute_bulk_shift(f, shift)
