"""Framed-link skein calculus on planar diagram codes.

A crossing is stored as ``(a, b, c, d, sign)``: ``a`` is the incoming
under-arc, the remaining arcs follow counterclockwise, so ``c`` is the
outgoing under-arc and ``{b, d}`` is the over-strand.  ``sign = +1`` means
the over-strand enters at ``d``; ``sign = -1`` means it enters at ``b``.

Values live in the coefficient ring of ``SkeinValue`` modulo the single
consistency relation ``A*r = alpha*beta - alpha^-1*beta^-1`` that the
crossing relation imposes on a one-crossing kink.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .series import SKEIN_GENERATORS, SeriesError, SkeinValue


class SkeinError(ValueError):
    pass


Crossing = tuple  # (a, b, c, d, sign)

_A, _R = SKEIN_GENERATORS.index("A"), SKEIN_GENERATORS.index("r")
_BETA, _ALPHA = SKEIN_GENERATORS.index("beta"), SKEIN_GENERATORS.index("alpha")


def _kink_relation() -> SkeinValue:
    beta, alpha = SkeinValue.gen("beta"), SkeinValue.gen("alpha")
    return alpha * beta - SkeinValue.gen("alpha", -1) * SkeinValue.gen("beta", -1)


def reduce_value(value: SkeinValue) -> SkeinValue:
    """Normal form in which no monomial contains both A and r."""
    relation = _kink_relation()
    out = SkeinValue.zero()
    pending = dict(value.terms)
    while pending:
        exps, coeff = pending.popitem()
        k = min(exps[_A], exps[_R])
        if k == 0:
            out = out + SkeinValue({exps: coeff})
            continue
        rest = list(exps)
        rest[_A] -= k
        rest[_R] -= k
        expanded = SkeinValue({tuple(rest): coeff})
        for _ in range(k):
            expanded = expanded * relation
        out = out + expanded
    return out


def mirror_reflection(value: SkeinValue) -> SkeinValue:
    """Reflection (beta -> beta^-1, A -> -A) combined with alpha -> alpha^-1.

    Mirroring reverses every framing twist, so alpha is inverted; r and theta
    stay fixed.  Unlike the bare reflection this map preserves the kink relation.
    """
    acc = {}
    for exps, v in value.reflection().terms.items():
        e = list(exps)
        e[_ALPHA] = -e[_ALPHA]
        acc[tuple(e)] = v
    return SkeinValue(acc)


def _over_in(x: Crossing):
    return x[3] if x[4] > 0 else x[1]


def _over_out(x: Crossing):
    return x[1] if x[4] > 0 else x[3]


def _slot_direction(x: Crossing) -> tuple:
    """Per slot: True for an incoming arc."""
    return (True, x[4] < 0, False, x[4] > 0)


@dataclass(frozen=True)
class LinkDiagram:
    """Oriented planar diagram with blackboard-relative framing and C_trivial offsets.

    ``loops`` holds the arc labels of crossingless circles.  ``extras`` maps an
    anchor arc to ``(framing, offset)``; a component's framing and offset are
    the sums over the anchors lying on it.
    """

    crossings: tuple = ()
    loops: tuple = ()
    extras: tuple = ()  # sorted ((anchor_arc, framing, offset), ...)
    _index: dict = field(default=None, compare=False, hash=False, repr=False)

    def __post_init__(self) -> None:
        crossings = tuple(tuple(x) for x in self.crossings)
        object.__setattr__(self, "crossings", crossings)
        object.__setattr__(self, "loops", tuple(sorted(self.loops)))
        object.__setattr__(self, "extras", tuple(sorted(tuple(e) for e in self.extras if e[1] or e[2])))
        heads: dict = {}
        tails: dict = {}
        for k, x in enumerate(crossings):
            if len(x) != 5 or x[4] not in (1, -1):
                raise SkeinError(f"crossing {k} must be (a, b, c, d, sign) with sign +-1")
            for s, incoming in enumerate(_slot_direction(x)):
                table = heads if incoming else tails
                if x[s] in table:
                    raise SkeinError(f"arc {x[s]} enters or leaves twice")
                table[x[s]] = (k, s)
        if set(heads) != set(tails):
            raise SkeinError("every arc must enter one crossing slot and leave one crossing slot")
        arcs = set(heads) | set(self.loops)
        if len(arcs) != len(heads) + len(self.loops):
            raise SkeinError("a loop label is also used by a crossing arc")
        for anchor, _, _ in self.extras:
            if anchor not in arcs:
                raise SkeinError(f"framing anchor {anchor} is not an arc")
        object.__setattr__(self, "_index", {"heads": heads, "tails": tails})

    # -- structure -----------------------------------------------------------
    @property
    def arcs(self) -> list:
        return sorted(set(self._index["heads"]) | set(self.loops))

    def successor(self, arc):
        if arc in self.loops:
            return arc
        k, s = self._index["heads"][arc]
        return self.crossings[k][(s + 2) % 4]

    def components(self) -> list:
        """Arc cycles in traversal order, each starting at its smallest arc."""
        seen: set = set()
        out = []
        for start in self.arcs:
            if start in seen:
                continue
            cycle = [start]
            seen.add(start)
            nxt = self.successor(start)
            while nxt != start:
                cycle.append(nxt)
                seen.add(nxt)
                nxt = self.successor(nxt)
            out.append(tuple(cycle))
        return out

    def component_of(self) -> dict:
        return {a: i for i, comp in enumerate(self.components()) for a in comp}

    def framing(self) -> list:
        where = self.component_of()
        out = [0] * len(self.components())
        for anchor, f, _ in self.extras:
            out[where[anchor]] += f
        return out

    def offsets(self) -> list:
        where = self.component_of()
        out = [0] * len(self.components())
        for anchor, _, o in self.extras:
            out[where[anchor]] += o
        return out

    def total_framing(self) -> int:
        return sum(f for _, f, _ in self.extras)

    def total_offset(self) -> int:
        return sum(o for _, _, o in self.extras)

    def writhe(self) -> int:
        return sum(x[4] for x in self.crossings)

    def self_writhe(self) -> int:
        where = self.component_of()
        return sum(x[4] for x in self.crossings if where[x[0]] == where[x[1]])

    def blackboard(self) -> "LinkDiagram":
        return LinkDiagram(self.crossings, self.loops)

    def with_extras(self, framing: Mapping | None = None, offsets: Mapping | None = None) -> "LinkDiagram":
        """Add framing/offset per component index (as listed by ``components``)."""
        comps = self.components()
        extras = list(self.extras)
        for i, f in (framing or {}).items():
            extras.append((comps[i][0], f, 0))
        for i, o in (offsets or {}).items():
            extras.append((comps[i][0], 0, o))
        return LinkDiagram(self.crossings, self.loops, _merge_extras(extras))

    # -- moves ---------------------------------------------------------------
    def switch(self, k: int) -> "LinkDiagram":
        a, b, c, d, sign = self.crossings[k]
        new = (d, a, b, c, -1) if sign > 0 else (b, c, d, a, 1)
        crossings = list(self.crossings)
        crossings[k] = new
        return LinkDiagram(tuple(crossings), self.loops, self.extras)

    def smooth(self, k: int) -> "LinkDiagram":
        """Orientation-preserving smoothing of crossing ``k``."""
        x = self.crossings[k]
        a, c = x[0], x[2]
        o_in, o_out = _over_in(x), _over_out(x)
        parent = {arc: arc for arc in (a, c, o_in, o_out)}

        def find(v):
            while parent[v] != v:
                v = parent[v]
            return v

        for u, v in ((a, o_out), (o_in, c)):
            ru, rv = find(u), find(v)
            if ru != rv:
                lo, hi = sorted((ru, rv))
                parent[hi] = lo
        rename = {arc: find(arc) for arc in parent}
        rest = [tuple(rename.get(v, v) for v in y[:4]) + (y[4],) for i, y in enumerate(self.crossings) if i != k]
        used = {v for y in rest for v in y[:4]}
        loops = list(self.loops) + sorted({r for r in rename.values() if r not in used})
        extras = [(rename.get(anchor, anchor), f, o) for anchor, f, o in self.extras]
        return LinkDiagram(tuple(rest), tuple(loops), _merge_extras(extras))

    def mirror(self) -> "LinkDiagram":
        """All crossings switched and framings negated; offsets are kept."""
        D = self
        for k in range(len(self.crossings)):
            D = D.switch(k)
        return LinkDiagram(D.crossings, D.loops, tuple((a, -f, o) for a, f, o in self.extras))

    # -- faces and planarity -------------------------------------------------
    def faces(self) -> list:
        """Face cycles of the projection, as lists of (crossing, slot) darts."""
        ends: dict = {}
        for k, x in enumerate(self.crossings):
            for s in range(4):
                ends.setdefault(x[s], []).append((k, s))
        other = {}
        for arc, pair in ends.items():
            (p, q) = pair
            other[p], other[q] = q, p
        seen: set = set()
        faces = []
        for start in sorted(other):
            if start in seen:
                continue
            face = []
            dart = start
            while dart not in seen:
                seen.add(dart)
                face.append(dart)
                k, s = other[dart]
                dart = (k, (s + 1) % 4)
            faces.append(face)
        return faces

    def is_planar(self) -> bool:
        n = len(self.crossings)
        if n == 0:
            return True
        parent = list(range(n))

        def find(v):
            while parent[v] != v:
                v = parent[v]
            return v

        for arc, (k1, _) in self._index["heads"].items():
            k2, _ = self._index["tails"][arc]
            parent[find(k1)] = find(k2)
        pieces: dict = {}
        for k in range(n):
            pieces.setdefault(find(k), [0, 0])[0] += 1
        for face in self.faces():
            pieces[find(face[0][0])][1] += 1
        # V - E + F = 2 on each connected piece, with E = 2V
        return all(f == v + 2 for v, f in pieces.values())

    # -- serialization -------------------------------------------------------
    def to_json(self) -> dict:
        return {
            "crossings": [list(x[:4]) for x in self.crossings],
            "signs": [x[4] for x in self.crossings],
            "loops": list(self.loops),
            "components": [list(c) for c in self.components()],
            "framing": self.framing(),
            "offsets": self.offsets(),
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "LinkDiagram":
        try:
            raw = data.get("crossings", [])
            signs = data.get("signs")
            if signs is None:
                signs = _signs_from_components(raw, data.get("components"))
            if len(signs) != len(raw):
                raise SkeinError("/signs: length differs from /crossings")
            crossings = []
            for i, (x, s) in enumerate(zip(raw, signs)):
                if len(x) != 4:
                    raise SkeinError(f"/crossings/{i}: expected four arc labels")
                crossings.append(tuple(x) + (int(s),))
            crossing_arcs = {v for x in raw for v in x}
            loops = list(data.get("loops", []))
            for comp in data.get("components", []) or []:
                if len(comp) == 1 and comp[0] not in crossing_arcs and comp[0] not in loops:
                    loops.append(comp[0])
            D = cls(tuple(crossings), tuple(loops))
        except SkeinError:
            raise
        except (TypeError, ValueError, AttributeError) as exc:
            raise SkeinError(f"/: malformed diagram ({exc})") from exc
        comps = D.components()
        framing = data.get("framing", [0] * len(comps))
        offsets = data.get("offsets", [0] * len(comps))
        for name, values in (("framing", framing), ("offsets", offsets)):
            if len(values) != len(comps):
                raise SkeinError(f"/{name}: expected {len(comps)} entries, one per component")
        listed = data.get("components")
        order = comps
        if listed:
            where = D.component_of()
            order = [comps[where[c[0]]] for c in listed]
        extras = [(comp[0], int(f), int(o)) for comp, f, o in zip(order, framing, offsets)]
        return cls(D.crossings, D.loops, _merge_extras(extras))

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


def _merge_extras(extras: Iterable) -> tuple:
    acc: dict = {}
    for anchor, f, o in extras:
        fa, oa = acc.get(anchor, (0, 0))
        acc[anchor] = (fa + f, oa + o)
    return tuple(sorted((a, f, o) for a, (f, o) in acc.items() if f or o))


def _signs_from_components(raw: Sequence, components) -> list:
    if components is None:
        raise SkeinError("/signs: give crossing signs or oriented /components")
    succ = {}
    for comp in components:
        for i, arc in enumerate(comp):
            succ[arc] = comp[(i + 1) % len(comp)]
    signs = []
    for i, (a, b, c, d) in enumerate(raw):
        if succ.get(a) != c:
            raise SkeinError(f"/crossings/{i}: under-strand {a} -> {c} disagrees with /components")
        forward, backward = succ.get(d) == b, succ.get(b) == d
        if forward == backward:
            raise SkeinError(f"/crossings/{i}: over-strand direction is ambiguous; give /signs")
        signs.append(1 if forward else -1)
    return signs


# ---------------------------------------------------------------------------
# constructors

def unknot(framing: int = 0, offset: int = 0) -> LinkDiagram:
    return LinkDiagram((), (0,), ((0, framing, offset),))


def unlink(n: int) -> LinkDiagram:
    return LinkDiagram((), tuple(range(n)))


def braid_closure(word: Sequence[int], strands: int) -> LinkDiagram:
    """Closure of a braid word; generator ``+i``/``-i`` crosses strands i and i+1 (1-based)."""
    if strands < 1:
        raise SkeinError("a braid needs at least one strand")
    parent: dict = {}

    def find(v):
        while parent[v] != v:
            v = parent[v]
        return v

    bottom = list(range(strands))
    current = list(bottom)
    for p in bottom:
        parent[p] = p
    fresh = strands
    raw = []
    for g in word:
        i = abs(g) - 1
        if g == 0 or i + 1 >= strands:
            raise SkeinError(f"generator {g} out of range for {strands} strands")
        left_in, right_in = current[i], current[i + 1]
        left_out, right_out = fresh, fresh + 1
        parent[left_out], parent[right_out] = left_out, right_out
        fresh += 2
        if g > 0:
            # over-strand runs bottom-left to top-right
            raw.append((right_in, right_out, left_out, left_in, 1))
        else:
            raw.append((left_in, right_in, right_out, left_out, -1))
        current[i], current[i + 1] = left_out, right_out
    for p in range(strands):
        a, b = find(current[p]), find(bottom[p])
        if a != b:
            lo, hi = sorted((a, b))
            parent[hi] = lo
    crossings = tuple(tuple(find(v) for v in x[:4]) + (x[4],) for x in raw)
    used = {v for x in crossings for v in x[:4]}
    loops = tuple(sorted({find(p) for p in range(strands)} - used))
    return LinkDiagram(crossings, loops)


def relabel(D: LinkDiagram) -> LinkDiagram:
    """Arcs renamed 0, 1, ... by first appearance (crossings first, then loops)."""
    names: dict = {}
    for x in D.crossings:
        for v in x[:4]:
            names.setdefault(v, len(names))
    for v in D.loops:
        names.setdefault(v, len(names))
    return LinkDiagram(
        tuple(tuple(names[v] for v in x[:4]) + (x[4],) for x in D.crossings),
        tuple(names[v] for v in D.loops),
        tuple((names[a], f, o) for a, f, o in D.extras),
    )


def canonical_code(D: LinkDiagram) -> tuple:
    """Relabeling-invariant key of the blackboard diagram (minimum over crossing orders)."""
    best = None
    for perm in itertools.permutations(range(len(D.crossings))):
        code = relabel(LinkDiagram(tuple(D.crossings[k] for k in perm), D.loops)).crossings
        if best is None or code < best:
            best = code
    return (best or (), len(D.loops))


def enumerate_diagrams(max_crossings: int) -> list:
    """All planar diagram codes with 1..max_crossings crossings, up to relabeling."""
    out: dict = {}
    for n in range(1, max_crossings + 1):
        for signs in itertools.product((1, -1), repeat=n):
            out_slots = []
            in_slots = []
            for k, s in enumerate(signs):
                out_slots += [(k, 2), (k, 1 if s > 0 else 3)]
                in_slots += [(k, 0), (k, 3 if s > 0 else 1)]
            for perm in itertools.permutations(range(2 * n)):
                slots = [[None] * 4 for _ in range(n)]
                for arc, (src, dst) in enumerate(zip(out_slots, (in_slots[j] for j in perm))):
                    slots[src[0]][src[1]] = arc
                    slots[dst[0]][dst[1]] = arc
                D = LinkDiagram(tuple(tuple(sl) + (s,) for sl, s in zip(slots, signs)))
                if not D.is_planar():
                    continue
                out.setdefault(canonical_code(D), D)
    return [out[k] for k in sorted(out)]


# ---------------------------------------------------------------------------
# evaluation

def resolve_crossing(D: LinkDiagram, k: int) -> list:
    """D expressed through the switched and the smoothed diagram at crossing ``k``.

    ``D_+ = beta^-2 D_- + beta^-1 A D_0`` and ``D_- = beta^2 D_+ - beta A D_0``.
    """
    eps = D.crossings[k][4]
    beta_pow = SkeinValue.gen("beta", -2 * eps)
    smooth_coeff = SkeinValue.gen("beta", -eps) * SkeinValue.gen("A") * eps
    return [(beta_pow, D.switch(k)), (smooth_coeff, D.smooth(k))]


def _traversal(D: LinkDiagram, basepoints: Sequence, order: Sequence[int]) -> list:
    """Passages (crossing, is_over) in the order met from the chosen basepoints."""
    passages = []
    for ci in order:
        start = basepoints[ci]
        arc = start
        while True:
            if arc in D.loops:
                break
            k, s = D._index["heads"][arc]
            passages.append((k, s in (1, 3)))
            arc = D.crossings[k][(s + 2) % 4]
            if arc == start:
                break
    return passages


def bad_crossings(D: LinkDiagram, basepoints: Sequence, order: Sequence[int]) -> list:
    """Crossings first met as an under-passage, in traversal order."""
    first: dict = {}
    for k, over in _traversal(D, basepoints, order):
        first.setdefault(k, over)
    return [k for k, over in first.items() if not over]


def _descending_value(D: LinkDiagram) -> SkeinValue:
    comps = len(D.components())
    return SkeinValue.gen("alpha", D.self_writhe()) * SkeinValue.gen("r", comps)


def _default_choice(D: LinkDiagram) -> tuple:
    comps = D.components()
    return [c[0] for c in comps], list(range(len(comps)))


class Evaluator:
    """Memoized descending-diagram evaluation of blackboard diagrams."""

    def __init__(self, max_depth: int = 500) -> None:
        self.max_depth = max_depth
        self.memo: dict = {}

    def blackboard_value(self, D: LinkDiagram, depth: int = 0) -> SkeinValue:
        if depth > self.max_depth:
            raise SkeinError(f"resolution depth bound {self.max_depth} exceeded")
        D = relabel(D.blackboard())
        key = (D.crossings, len(D.loops))
        hit = self.memo.get(key)
        if hit is not None:
            return hit
        basepoints, order = _default_choice(D)
        bad = bad_crossings(D, basepoints, order)
        # switch every bad crossing against one fixed traversal; smoothings recurse
        value = SkeinValue.zero()
        carried = SkeinValue.one()
        current = D
        for k in bad:
            (c_switch, switched), (c_smooth, smoothed) = resolve_crossing(current, k)
            value = value + carried * c_smooth * self.blackboard_value(smoothed, depth + 1)
            carried = carried * c_switch
            current = switched
        value = reduce_value(value + carried * _descending_value(current))
        self.memo[key] = value
        return value

    def evaluate(self, D: LinkDiagram) -> SkeinValue:
        extra = SkeinValue.gen("alpha", D.total_framing())
        offset = D.total_offset()
        if offset < 0:
            raise SkeinError("negative C_trivial offsets have no value (theta is not invertible)")
        extra = extra * SkeinValue.gen("theta", offset)
        return reduce_value(extra * self.blackboard_value(D))


_DEFAULT = Evaluator()


def evaluate(D: LinkDiagram, max_depth: int | None = None) -> SkeinValue:
    """Skein value: crossings resolved down to descending diagrams, then
    alpha^framing * r^components * theta^offsets, reduced by the kink relation."""
    if max_depth is not None:
        return Evaluator(max_depth).evaluate(D)
    return _DEFAULT.evaluate(D)


def evaluation_set(D: LinkDiagram, memo: dict | None = None) -> set:
    """Every value reachable by varying basepoints, component order and the
    order in which bad crossings are switched, recursively on smoothings."""
    memo = {} if memo is None else memo
    D = relabel(D.blackboard())
    key = (D.crossings, len(D.loops))
    if key in memo:
        return memo[key]
    comps = D.components()
    results: set = set()
    for order in itertools.permutations(range(len(comps))):
        for basepoints in itertools.product(*comps):
            bad = bad_crossings(D, basepoints, order)
            for sequence in itertools.permutations(bad):
                results |= _switch_sequence(D, list(sequence), memo)
    memo[key] = results
    return results


def _switch_sequence(D: LinkDiagram, sequence: list, memo: dict) -> set:
    if not sequence:
        return {_descending_value(D)}
    k = sequence[0]
    (c_switch, switched), (c_smooth, smoothed) = resolve_crossing(D, k)
    head = _switch_sequence(switched, sequence[1:], memo)
    tail = evaluation_set(smoothed, memo)
    return {reduce_value(c_switch * h + c_smooth * t) for h in head for t in tail}


# ---------------------------------------------------------------------------
# braid moves used to generate Reidemeister pairs

def reidemeister_two(word: Sequence[int], position: int, generator: int) -> list:
    """Insert ``g g^-1`` at ``position``."""
    return list(word[:position]) + [generator, -generator] + list(word[position:])


R3_PATTERNS = (
    ((1, 2, 1), (2, 1, 2)),
    ((-1, -2, -1), (-2, -1, -2)),
    ((1, 2, -1), (-2, 1, 2)),
    ((-1, 2, 1), (2, 1, -2)),
    ((1, -2, -1), (-2, -1, 2)),
    ((-1, -2, 1), (2, -1, -2)),
)


def reidemeister_three(word: Sequence[int], position: int, base: int, pattern: int) -> tuple:
    """Insert an R3 pattern at ``position`` on strands base, base+1, base+2;
    return the two braid words differing by the move."""
    lhs, rhs = R3_PATTERNS[pattern]

    def shift(seq):
        return [(abs(g) + base - 1) * (1 if g > 0 else -1) for g in seq]

    head, tail = list(word[:position]), list(word[position:])
    return head + shift(lhs) + tail, head + shift(rhs) + tail


def parse_expansion(data: Mapping, spec=None):
    """Expansion map {generator: Series JSON} for ``SkeinValue.expand``."""
    from .series import Series

    missing = [g for g in SKEIN_GENERATORS if g not in data]
    if missing:
        raise SkeinError(f"/: expansion lacks {missing}")
    try:
        return {g: Series.from_json(data[g], spec) for g in SKEIN_GENERATORS}
    except (SeriesError, KeyError, TypeError) as exc:
        raise SkeinError(f"/: malformed expansion ({exc})") from exc
