"""A finite exact chain-complex model standing in for chains on a closed 3-manifold.

Tensor conventions (used by every module downstream):

* A tensor chain on ``n`` factors is a dict mapping a tuple of cell ids to a
  rational coefficient.  Cochains use the same layout; the pairing of a
  cochain with a chain is factorwise, with no sign.
* Each factor carries the *shifted* parity ``deg(cell) + s`` where
  ``s = dim(K) mod 2``.  The boundary of a tensor chain is the graded
  derivation for this parity, and the coboundary of a cochain is its adjoint,
  so ``<d w, c> = <w, boundary c>`` holds on the nose.
* Reordering factors costs the Koszul sign of the shifted parities.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from sympy import QQ
from sympy.polys.matrices import DomainMatrix

TensorChain = dict  # tuple[int, ...] -> Fraction


class GeometryError(ValueError):
    pass


class PropagatorObstruction(GeometryError):
    """The right-hand side of the propagator equation is not exact."""

    def __init__(self, degree: int, components: list):
        self.degree = degree
        self.components = components
        detail = ", ".join(f"H^{p}(x)H^{q}: {v}" for p, q, v in components)
        super().__init__(f"right-hand side is not exact: obstruction in degree {degree} ({detail})")


# ---------------------------------------------------------------------------
# exact linear algebra (sympy DomainMatrix over QQ)


def _dm(rows: Sequence, ncols: int) -> DomainMatrix:
    """Sparse DomainMatrix from rows given as dicts (column -> Fraction) or dense lists."""
    data = {}
    for i, row in enumerate(rows):
        items = row.items() if isinstance(row, Mapping) else enumerate(row)
        entries = {j: QQ(int(x.numerator), int(x.denominator)) for j, x in items if x}
        if entries:
            data[i] = entries
    return DomainMatrix(data, (len(rows), ncols), QQ)


def _to_fraction(x) -> Fraction:
    return Fraction(int(x.numerator), int(x.denominator))


def matrix_rank(rows: Sequence, ncols: int) -> int:
    if not rows or not ncols:
        return 0
    return _dm(rows, ncols).rank()


def _rref_solution(matrix: DomainMatrix, ncols: int) -> list | None:
    reduced, pivots = matrix.rref()
    if ncols in pivots:
        return None
    dense = reduced.to_sdm()
    solution = [Fraction(0)] * ncols
    for r, p in enumerate(pivots):
        value = dense.get(r, {}).get(ncols)
        if value:
            solution[p] = _to_fraction(value)
    return solution


def solve_particular(rows: Sequence, rhs: Sequence[Fraction], ncols: int) -> list | None:
    """A particular solution of rows . x = rhs (free variables set to zero), or None."""
    if not rows:
        return [Fraction(0)] * ncols
    aug = []
    for row, b in zip(rows, rhs):
        entry = dict(row.items()) if isinstance(row, Mapping) else dict(enumerate(row))
        entry[ncols] = Fraction(b)
        aug.append(entry)
    return _rref_solution(_dm(aug, ncols + 1), ncols)


def solve_min_norm(rows: Sequence, rhs: Sequence[Fraction], ncols: int) -> list | None:
    """The minimal Euclidean-norm solution x = A^T y with (A A^T) y = rhs."""
    if not rows:
        return [Fraction(0)] * ncols
    A = _dm(rows, ncols)
    gram = A * A.transpose()
    b = _dm([{0: Fraction(v)} for v in rhs], 1)
    y = _rref_solution(gram.hstack(b), len(rows))
    if y is None:
        return None
    x = A.transpose() * _dm([{0: v} for v in y], 1)
    column = x.to_sdm()
    return [_to_fraction(column[j][0]) if j in column and 0 in column[j] else Fraction(0) for j in range(ncols)]


def nullspace(rows: Sequence, ncols: int) -> list:
    if not rows:
        return [[Fraction(int(i == j)) for j in range(ncols)] for i in range(ncols)]
    basis = _dm(rows, ncols).nullspace().to_list()
    return [[_to_fraction(x) for x in vec] for vec in basis]


# ---------------------------------------------------------------------------
# finite complexes


@dataclass(frozen=True)
class CohomologyPair:
    """A closed odd cochain alpha and a closed even cochain beta (dicts cell -> coefficient)."""

    alpha: Mapping
    beta: Mapping


@dataclass
class FiniteComplex:
    """Graded cells with an exact boundary, a point, a fundamental class and cohomology pairs."""

    dim: int
    degrees: tuple
    boundary: tuple  # boundary[c] = {face: coefficient}
    names: tuple
    point: int
    fundamental: dict
    classes: tuple = ()
    label: str = ""
    diagonal_rule: str = "complementary"  # or "periods"
    _cofaces: tuple = field(default=(), repr=False)
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self) -> None:
        cof: list = [dict() for _ in self.degrees]
        for cell, faces in enumerate(self.boundary):
            for face, coeff in faces.items():
                cof[face][cell] = coeff
        self._cofaces = tuple(cof)
        self.validate()

    @property
    def shift(self) -> int:
        return self.dim % 2

    @property
    def size(self) -> int:
        return len(self.degrees)

    def cells(self, degree: int) -> list:
        return [c for c, d in enumerate(self.degrees) if d == degree]

    def cofaces(self, cell: int) -> Mapping:
        return self._cofaces[cell]

    def validate(self) -> None:
        for cell, faces in enumerate(self.boundary):
            for face in faces:
                if self.degrees[face] != self.degrees[cell] - 1:
                    raise GeometryError(f"boundary of cell {cell} has a face of the wrong degree")
            square: dict = {}
            for face, c1 in faces.items():
                for sub, c2 in self.boundary[face].items():
                    square[sub] = square.get(sub, 0) + c1 * c2
            if any(square.values()):
                raise GeometryError(f"boundary squared is nonzero on cell {cell}")
        if any(self.boundary_of_chain(self.fundamental).values()):
            raise GeometryError("fundamental class is not a cycle")
        for pair in self.classes:
            for cochain in (pair.alpha, pair.beta):
                if any(cochain_coboundary_single(self, cochain).values()):
                    raise GeometryError("cohomology representative is not closed")

    def boundary_of_chain(self, chain: Mapping) -> dict:
        out: dict = {}
        for cell, coeff in chain.items():
            for face, c in self.boundary[cell].items():
                out[face] = out.get(face, 0) + coeff * c
        return {k: v for k, v in out.items() if v}

    def boundary_matrix(self, degree: int) -> tuple:
        """Rows = (degree-1)-cells, columns = degree-cells."""
        rows_idx = self.cells(degree - 1)
        cols_idx = self.cells(degree)
        pos = {c: i for i, c in enumerate(rows_idx)}
        rows = [[Fraction(0)] * len(cols_idx) for _ in rows_idx]
        for j, cell in enumerate(cols_idx):
            for face, coeff in self.boundary[cell].items():
                rows[pos[face]][j] = Fraction(coeff)
        return rows, rows_idx, cols_idx

    def homology_basis(self, degree: int) -> list:
        """Cycles spanning a complement of the boundaries in degree ``degree``."""
        cols_idx = self.cells(degree)
        if not cols_idx:
            return []
        if degree > 0:
            rows, _, _ = self.boundary_matrix(degree)
            cycles = nullspace(rows, len(cols_idx)) if rows else [
                [Fraction(int(i == j)) for j in range(len(cols_idx))] for i in range(len(cols_idx))
            ]
        else:
            cycles = [[Fraction(int(i == j)) for j in range(len(cols_idx))] for i in range(len(cols_idx))]
        boundaries: list = []
        if degree + 1 <= self.dim:
            rows_up, _, up_cols = self.boundary_matrix(degree + 1)
            boundaries = [[rows_up[i][j] for i in range(len(cols_idx))] for j in range(len(up_cols))]
        chosen: list = []
        current = list(boundaries)
        rank = matrix_rank(current, len(cols_idx))
        for vec in cycles:
            trial = current + [vec]
            new_rank = matrix_rank(trial, len(cols_idx))
            if new_rank > rank:
                current, rank = trial, new_rank
                chosen.append({cols_idx[i]: x for i, x in enumerate(vec) if x})
        return chosen

    # serialization ---------------------------------------------------
    def to_json(self) -> dict:
        return {
            "label": self.label,
            "dim": self.dim,
            "degrees": list(self.degrees),
            "names": list(self.names),
            "boundary": [[cell, face, str(c)] for cell, faces in enumerate(self.boundary) for face, c in sorted(faces.items())],
            "point": self.point,
            "fundamental": [[c, str(v)] for c, v in sorted(self.fundamental.items())],
            "classes": [
                {
                    "alpha": [[c, str(v)] for c, v in sorted(p.alpha.items())],
                    "beta": [[c, str(v)] for c, v in sorted(p.beta.items())],
                }
                for p in self.classes
            ],
            "diagonal_rule": self.diagonal_rule,
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "FiniteComplex":
        degrees = tuple(int(d) for d in data["degrees"])
        boundary = [dict() for _ in degrees]
        for cell, face, coeff in data["boundary"]:
            boundary[int(cell)][int(face)] = Fraction(coeff)
        classes = tuple(
            CohomologyPair(
                {int(c): Fraction(v) for c, v in p["alpha"]},
                {int(c): Fraction(v) for c, v in p["beta"]},
            )
            for p in data.get("classes", [])
        )
        return cls(
            dim=int(data["dim"]),
            degrees=degrees,
            boundary=tuple(boundary),
            names=tuple(data.get("names") or [str(i) for i in range(len(degrees))]),
            point=int(data["point"]),
            fundamental={int(c): Fraction(v) for c, v in data["fundamental"]},
            classes=classes,
            label=data.get("label", ""),
            diagonal_rule=data.get("diagonal_rule", "complementary"),
        )


def cochain_coboundary_single(K: FiniteComplex, cochain: Mapping) -> dict:
    out: dict = {}
    for cell, coeff in cochain.items():
        for coface, c in K.cofaces(cell).items():
            out[coface] = out.get(coface, 0) + coeff * c
    return {k: v for k, v in out.items() if v}


def simplex_boundary_sphere() -> FiniteComplex:
    """The boundary of the 4-simplex: proper nonempty subsets of {0..4}."""
    vertices = range(5)
    simplices = [s for k in range(1, 5) for s in itertools.combinations(vertices, k)]
    index = {s: i for i, s in enumerate(simplices)}
    boundary = []
    for s in simplices:
        faces = {}
        if len(s) > 1:
            for i in range(len(s)):
                faces[index[s[:i] + s[i + 1:]]] = (-1) ** i
        boundary.append(faces)
    degrees = tuple(len(s) - 1 for s in simplices)
    # orientation of the 3-sphere: sign (-1)^(missing vertex)
    fundamental = {}
    for s in simplices:
        if len(s) == 4:
            missing = next(v for v in vertices if v not in s)
            fundamental[index[s]] = Fraction((-1) ** missing)
    volume = {c: v / 5 for c, v in fundamental.items()}
    unit = {index[(v,)]: Fraction(1) for v in vertices}
    names = tuple("".join(map(str, s)) for s in simplices)
    return FiniteComplex(
        dim=3,
        degrees=degrees,
        boundary=tuple(boundary),
        names=names,
        point=index[(0,)],
        fundamental=fundamental,
        classes=(CohomologyPair(volume, unit),),
        label="boundary of the 4-simplex",
    )


def circle_product_torus(n: int = 3) -> FiniteComplex:
    """Cellular torus: product of two n-gon circles (n^2 vertices, 2n^2 edges, n^2 squares).

    Used as the obstructed fixture: H^1 is nonzero and only the volume/unit
    pair is declared, so the H^1 (x) H^1 part of the diagonal class is left
    uncorrected.
    """
    circle_cells = [("v", i) for i in range(n)] + [("e", i) for i in range(n)]
    circle_deg = {c: (0 if c[0] == "v" else 1) for c in circle_cells}

    def circle_boundary(c):
        if c[0] == "v":
            return {}
        i = c[1]
        out = {("v", (i + 1) % n): 1}
        out[("v", i)] = out.get(("v", i), 0) - 1
        return {k: v for k, v in out.items() if v}

    cells = [(a, b) for a in circle_cells for b in circle_cells]
    cells.sort(key=lambda ab: (circle_deg[ab[0]] + circle_deg[ab[1]], circle_cells.index(ab[0]), circle_cells.index(ab[1])))
    index = {c: i for i, c in enumerate(cells)}
    boundary = []
    for a, b in cells:
        faces: dict = {}
        for fa, ca in circle_boundary(a).items():
            faces[index[(fa, b)]] = faces.get(index[(fa, b)], 0) + ca
        sign = (-1) ** circle_deg[a]
        for fb, cb in circle_boundary(b).items():
            faces[index[(a, fb)]] = faces.get(index[(a, fb)], 0) + sign * cb
        boundary.append({k: v for k, v in faces.items() if v})
    degrees = tuple(circle_deg[a] + circle_deg[b] for a, b in cells)
    fundamental = {index[(("e", i), ("e", j))]: Fraction(1) for i in range(n) for j in range(n)}
    volume = {c: Fraction(1, n * n) for c in fundamental}
    unit = {index[(("v", i), ("v", j))]: Fraction(1) for i in range(n) for j in range(n)}
    names = tuple(f"{a[0]}{a[1]}x{b[0]}{b[1]}" for a, b in cells)
    return FiniteComplex(
        dim=2,
        degrees=degrees,
        boundary=tuple(boundary),
        names=names,
        point=index[(("v", 0), ("v", 0))],
        fundamental=fundamental,
        classes=(CohomologyPair(volume, unit),),
        label=f"torus ({n}x{n} cells)",
        diagonal_rule="periods",
    )


# ---------------------------------------------------------------------------
# tensor chains and cochains


def parity(K: FiniteComplex, cell: int) -> int:
    return (K.degrees[cell] + K.shift) & 1


def tensor_degree(K: FiniteComplex, cells: Iterable[int]) -> int:
    return sum(K.degrees[c] for c in cells)


def tensor_boundary(K: FiniteComplex, chain: Mapping) -> dict:
    """Graded derivation on each factor with shifted-parity signs."""
    out: dict = {}
    for cells, coeff in chain.items():
        sign = 1
        for j, cell in enumerate(cells):
            for face, c in K.boundary[cell].items():
                key = cells[:j] + (face,) + cells[j + 1:]
                out[key] = out.get(key, 0) + sign * c * coeff
            if parity(K, cell):
                sign = -sign
    return {k: v for k, v in out.items() if v}


def cochain_coboundary(K: FiniteComplex, cochain: Mapping) -> dict:
    """Adjoint of ``tensor_boundary``; coefficients may be any ring elements."""
    out: dict = {}
    for cells, coeff in cochain.items():
        sign = 1
        for j, cell in enumerate(cells):
            for coface, c in K.cofaces(cell).items():
                key = cells[:j] + (coface,) + cells[j + 1:]
                term = coeff * (sign * c)
                out[key] = out[key] + term if key in out else term
            if parity(K, cell):
                sign = -sign
    return {k: v for k, v in out.items() if v}


def pair(cochain: Mapping, chain: Mapping, zero=0):
    """Factorwise pairing; cochain coefficients may be Series."""
    total = zero
    if len(chain) < len(cochain):
        for cells, c in chain.items():
            w = cochain.get(cells)
            if w is not None:
                total = total + w * c
    else:
        for cells, w in cochain.items():
            c = chain.get(cells)
            if c is not None:
                total = total + w * c
    return total


def _parities(K: FiniteComplex) -> tuple:
    cached = K._cache.get("parities")
    if cached is None:
        cached = tuple((d + K.shift) & 1 for d in K.degrees)
        K._cache["parities"] = cached
    return cached


def permutation_sign(K: FiniteComplex, cells: Sequence[int], order: Sequence[int]) -> int:
    """Sign of listing the factors ``cells`` in the order ``order`` (positions)."""
    par = _parities(K)
    odd = [p for p in order if par[cells[p]]]
    inversions = 0
    for a in range(len(odd)):
        pa = odd[a]
        for b in range(a + 1, len(odd)):
            if pa > odd[b]:
                inversions += 1
    return -1 if inversions & 1 else 1


def reorder(K: FiniteComplex, chain: Mapping, order: Sequence[int]) -> dict:
    """Move factor ``order[k]`` to position k, with the shifted Koszul sign."""
    out: dict = {}
    for cells, coeff in chain.items():
        key = tuple(cells[p] for p in order)
        value = coeff if permutation_sign(K, cells, order) > 0 else -coeff
        if key in out:
            out[key] += value
        else:
            out[key] = value
    return {k: v for k, v in out.items() if v}


def switch_pullback(K: FiniteComplex, cochain: Mapping, koszul: str = "shifted") -> dict:
    """(sw^* w)(a(x)b) = sign * w(b(x)a) on a two-factor cochain."""
    out = {}
    for (a, b), w in cochain.items():
        if koszul == "shifted":
            odd = parity(K, a) and parity(K, b)
        else:
            odd = (K.degrees[a] & 1) and (K.degrees[b] & 1)
        out[(b, a)] = -w if odd else w
    return out


def tensor_product(left: Mapping, right: Mapping) -> dict:
    out: dict = {}
    for k1, v1 in left.items():
        for k2, v2 in right.items():
            out[k1 + k2] = out.get(k1 + k2, 0) + v1 * v2
    return {k: v for k, v in out.items() if v}


# ---------------------------------------------------------------------------
# diagonal, correction term and propagator


def _two_factor_basis(K: FiniteComplex, degree: int) -> list:
    return [(a, b) for a in range(K.size) for b in range(K.size) if K.degrees[a] + K.degrees[b] == degree]


def _complementary_support(K: FiniteComplex) -> list:
    vertex_sets = {c: frozenset(name) for c, name in enumerate(K.names)}
    full = frozenset().union(*vertex_sets.values())
    by_set = {s: c for c, s in vertex_sets.items()}
    return [(a, by_set[full - vertex_sets[a]]) for a in range(K.size) if (full - vertex_sets[a]) in by_set]


def _complementary_diagonal(K: FiniteComplex) -> dict:
    """Cocycle supported on complementary simplices sigma (x) sigma^c, signs solved exactly."""
    support = _complementary_support(K)
    column = {pair_: i for i, pair_ in enumerate(support)}
    rows = []
    for a, b in _two_factor_basis(K, K.dim + 1):
        row = [Fraction(0)] * len(support)
        probe = tensor_boundary(K, {(a, b): Fraction(1)})
        for key, coeff in probe.items():
            if key in column:
                row[column[key]] += coeff
        if any(row):
            rows.append(row)
    kernel = nullspace(rows, len(support))
    if len(kernel) != 1:
        raise GeometryError("complementary diagonal is not unique up to scale")
    vec = kernel[0]
    return {support[i]: x for i, x in enumerate(vec) if x}


def _period_diagonal(K: FiniteComplex) -> dict:
    """A cocycle of degree dim K whose periods on H*(K)(x)H*(K) give the intersection form."""
    basis = _two_factor_basis(K, K.dim)
    col = {b: i for i, b in enumerate(basis)}
    rows: list = []
    rhs: list = []
    for a, b in _two_factor_basis(K, K.dim + 1):
        probe = tensor_boundary(K, {(a, b): Fraction(1)})
        row = [Fraction(0)] * len(basis)
        for key, coeff in probe.items():
            row[col[key]] += coeff
        if any(row):
            rows.append(row)
            rhs.append(Fraction(0))
    for p in range(K.dim + 1):
        for z1 in K.homology_basis(p):
            for z2 in K.homology_basis(K.dim - p):
                row = [Fraction(0)] * len(basis)
                for (c1, v1), (c2, v2) in itertools.product(z1.items(), z2.items()):
                    row[col[(c1, c2)]] += v1 * v2
                rows.append(row)
                rhs.append(intersection_number(K, z1, z2))
    sol = solve_min_norm(rows, rhs, len(basis))
    if sol is None:
        raise GeometryError("no cocycle with the requested periods")
    return {basis[i]: x for i, x in enumerate(sol) if x}


def intersection_number(K: FiniteComplex, z1: Mapping, z2: Mapping) -> Fraction:
    """Intersection numbers for the product-of-circles model (cells named 'vIxvJ', 'eIxvJ', ...)."""
    def kinds(chain):
        total = {}
        for c, v in chain.items():
            name = K.names[c]
            key = (name[0], name[name.index("x") + 1])
            total[key] = total.get(key, 0) + v
        return total

    k1, k2 = kinds(z1), kinds(z2)
    d1 = K.degrees[next(iter(z1))]
    n = round(len(K.cells(0)) ** 0.5)
    if d1 == 0:
        return Fraction(sum(k1.values())) * sum(v for (a, b), v in k2.items() if (a, b) == ("e", "e")) / (n * n)
    if d1 == 2:
        return sum(v for (a, b), v in k1.items() if (a, b) == ("e", "e")) * Fraction(sum(k2.values())) / (n * n)
    # degree one: the horizontal and vertical circles meet once
    h1 = sum(v for (a, b), v in k1.items() if (a, b) == ("e", "v")) / n
    v1 = sum(v for (a, b), v in k1.items() if (a, b) == ("v", "e")) / n
    h2 = sum(v for (a, b), v in k2.items() if (a, b) == ("e", "v")) / n
    v2 = sum(v for (a, b), v in k2.items() if (a, b) == ("v", "e")) / n
    return Fraction(h1 * v2 - v1 * h2)


def correction_term(K: FiniteComplex, classes: Sequence[CohomologyPair] | None = None) -> dict:
    """Sum over pairs of alpha(x)beta + beta(x)alpha."""
    classes = K.classes if classes is None else classes
    out: dict = {}
    for pair_ in classes:
        for left, right in ((pair_.alpha, pair_.beta), (pair_.beta, pair_.alpha)):
            for key, v in tensor_product({(c,): x for c, x in left.items()}, {(c,): x for c, x in right.items()}).items():
                out[key] = out.get(key, 0) + v
    return {k: v for k, v in out.items() if v}


def diagonal_cocycle(K: FiniteComplex) -> dict:
    """Diag*: a degree-dim cocycle on K(x)K representing the diagonal class.

    The complementary-simplex cocycle is scaled so that Diag* - correction has
    vanishing periods on the fundamental-class-times-point cycles.
    """
    cached = K._cache.get("diagonal")
    if cached is not None:
        return cached
    if K.diagonal_rule == "periods":
        result = _period_diagonal(K)
    else:
        raw = _complementary_diagonal(K)
        probe = tensor_product({(c,): v for c, v in K.fundamental.items()}, {(K.point,): Fraction(1)})
        value = pair(raw, probe)
        if value == 0:
            raise GeometryError("complementary cocycle has zero period")
        result = {k: v / value for k, v in raw.items()}
    K._cache["diagonal"] = result
    return result


def diagonal_cycle(K: FiniteComplex) -> dict:
    """Diag as a cycle on K(x)K supported on complementary simplices, normalized by <1(x)vol, Diag> = 1."""
    if K.diagonal_rule != "complementary":
        raise GeometryError("a chain-level diagonal is only shipped for simplicial boundary complexes")
    cached = K._cache.get("diagonal_cycle")
    if cached is not None:
        return cached
    support = _complementary_support(K)
    column = {pair_: i for i, pair_ in enumerate(support)}
    rows: dict = {}
    for i, key in enumerate(support):
        for face_key, coeff in tensor_boundary(K, {key: Fraction(1)}).items():
            rows.setdefault(face_key, {})[i] = coeff
    kernel = nullspace(list(rows.values()), len(support))
    if len(kernel) != 1:
        raise GeometryError("complementary diagonal cycle is not unique up to scale")
    raw = {support[i]: x for i, x in enumerate(kernel[0]) if x}
    pair_ = K.classes[0]
    probe = tensor_product({(c,): v for c, v in pair_.beta.items()}, {(c,): v for c, v in pair_.alpha.items()})
    value = pair(probe, raw)
    result = {k: v / value for k, v in raw.items()}
    K._cache["diagonal_cycle"] = result
    return result


@dataclass(frozen=True)
class Propagator:
    cochain: Mapping
    rhs: Mapping

    def __getitem__(self, key):
        return self.cochain.get(key, 0)


def obstruction_components(K: FiniteComplex, cocycle: Mapping, degree: int) -> list:
    """Nonzero periods of a two-factor cocycle on products of homology basis cycles."""
    found = []
    for p in range(degree + 1):
        q = degree - p
        if p > K.dim or q > K.dim:
            continue
        for i, z1 in enumerate(K.homology_basis(p)):
            for j, z2 in enumerate(K.homology_basis(q)):
                value = pair(cocycle, tensor_product({(c,): v for c, v in z1.items()}, {(c,): v for c, v in z2.items()}))
                if value:
                    found.append((p, q, value))
    return found


def solve_propagator(K: FiniteComplex, classes: Sequence[CohomologyPair] | None = None) -> Propagator:
    """Solve dP = Diag* - correction; returns the shifted-switch-symmetric minimal solution.

    The shifted-symmetric solution is antisymmetric under the plain Koszul
    switch, which is the anti-invariance required of a propagator.
    """
    degree = K.dim
    rhs = dict(diagonal_cocycle(K))
    for key, v in correction_term(K, classes).items():
        rhs[key] = rhs.get(key, 0) - v
    rhs = {k: v for k, v in rhs.items() if v}
    if any(cochain_coboundary(K, rhs).values()):
        raise GeometryError("right-hand side is not closed")
    unknowns = _two_factor_basis(K, degree - 1)
    equations = _two_factor_basis(K, degree)
    col = {b: i for i, b in enumerate(unknowns)}
    rows: list = [dict() for _ in equations]
    for i, (a, b) in enumerate(equations):
        for key, coeff in tensor_boundary(K, {(a, b): Fraction(1)}).items():
            rows[i][col[key]] = rows[i].get(col[key], 0) + coeff
    target = [Fraction(rhs.get(e, 0)) for e in equations]
    solution = solve_min_norm(rows, target, len(unknowns))
    if solution is None:
        raise PropagatorObstruction(degree, obstruction_components(K, rhs, degree))
    raw = {unknowns[i]: x for i, x in enumerate(solution) if x}
    swapped = switch_pullback(K, raw, "shifted")
    sym: dict = {}
    for source in (raw, swapped):
        for k, v in source.items():
            sym[k] = sym.get(k, 0) + v / 2
    sym = {k: v for k, v in sym.items() if v}
    residual = cochain_coboundary(K, sym)
    for k, v in rhs.items():
        residual[k] = residual.get(k, 0) - v
    if any(residual.values()):
        raise GeometryError("symmetrized propagator fails the coboundary identity")
    return Propagator(sym, rhs)


def contract_diagonal(K: FiniteComplex, chain: Mapping, i: int, j: int, diag: Mapping | None = None) -> dict:
    """The delta_e rule: -(Diag* applied to factors i, j after moving them to the front).

    Factor i goes first, factor j second; the remaining factors keep their order.
    """
    diag = diagonal_cocycle(K) if diag is None else diag
    out: dict = {}
    for cells, coeff in chain.items():
        n = len(cells)
        order = [i, j] + [p for p in range(n) if p not in (i, j)]
        value = diag.get((cells[i], cells[j]))
        if not value:
            continue
        sign = permutation_sign(K, cells, order)
        key = tuple(cells[p] for p in order[2:])
        out[key] = out.get(key, 0) - sign * value * coeff
    return {k: v for k, v in out.items() if v}


def geometry_to_json(K: FiniteComplex) -> str:
    payload = K.to_json()
    payload["diagonal"] = [[a, b, str(v)] for (a, b), v in sorted(diagonal_cocycle(K).items())]
    return json.dumps(payload, indent=1, sort_keys=True)


def propagator_to_json(P: Propagator) -> str:
    return json.dumps({"propagator": [[a, b, str(v)] for (a, b), v in sorted(P.cochain.items())]}, indent=1)


def load_geometry(path: str) -> FiniteComplex:
    with open(path) as fh:
        data = json.load(fh)
    if data.get("builtin") == "sphere":
        return simplex_boundary_sphere()
    if data.get("builtin") == "torus":
        return circle_product_torus(int(data.get("n", 3)))
    return FiniteComplex.from_json(data)


def omega(graph, marking, propagator, geometry, lie_mode="faces", **kwargs):
    """Omega_{G,m}; implemented in the partition module (deferred import keeps layering acyclic)."""
    from .partition import omega_cochain

    return omega_cochain(graph, marking, geometry, propagator=propagator, lie_mode=lie_mode, **kwargs)
