"""Exact truncated multivariate formal series over the rationals.

Variables carry a parity tag.  Even variables commute; odd variables
anticommute and square to zero.  With no odd variables in play the ring is
the ordinary commutative power-series ring.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Iterator, Mapping, Union

Number = Union[int, Fraction]
# A monomial is a sorted tuple of (variable index, exponent) with exponent != 0.
Monomial = tuple

STANDARD_SCALARS = ("g_s", "a", "T", "b", "N")


class SeriesError(ValueError):
    """Raised on spec mismatch, truncation violations and failed preconditions."""


def _as_fraction(value: Number) -> Fraction:
    return value if isinstance(value, Fraction) else Fraction(value)


def variable_group(name: str) -> str:
    """Group of a variable for truncation purposes: ``x0[1,2]`` belongs to ``x``."""
    match = re.match(r"^([A-Za-z_]+?)(\d+\[.*\])?$", name)
    if match and match.group(2):
        return match.group(1)
    return name


@dataclass(frozen=True)
class SeriesRingSpec:
    """Variables (in canonical print order), parities, truncation and the g_s floor.

    ``truncation`` maps a variable name or a group name (``x``, ``y``) to the
    maximal total exponent kept in that group.  Groups absent from the map are
    untruncated.
    """

    variables: tuple
    odd: frozenset = frozenset()
    truncation: tuple = ()
    gs_floor: int = 0

    def __post_init__(self) -> None:
        if len(set(self.variables)) != len(self.variables):
            raise SeriesError("duplicate variable names")
        unknown = set(self.odd) - set(self.variables)
        if unknown:
            raise SeriesError(f"odd tags on unknown variables {sorted(unknown)}")
        for group, order in self.truncation:
            if order < 0:
                raise SeriesError(f"negative truncation order for {group}")
        object.__setattr__(self, "_index", {v: i for i, v in enumerate(self.variables)})
        groups: dict = {}
        for i, name in enumerate(self.variables):
            for key in {name, variable_group(name)}:
                groups.setdefault(key, []).append(i)
        limits = []
        for group, order in self.truncation:
            members = tuple(groups.get(group, ()))
            limits.append((members, _as_fraction(order)))
        object.__setattr__(self, "_limits", tuple(limits))
        object.__setattr__(self, "_odd_index", frozenset(self._index[v] for v in self.odd))
        object.__setattr__(self, "_gs", self._index.get("g_s"))

    @classmethod
    def make(
        cls,
        variables: Iterable[str],
        odd: Iterable[str] = (),
        truncation: Mapping[str, Number] | None = None,
        gs_floor: int = 0,
    ) -> "SeriesRingSpec":
        trunc = tuple(sorted((truncation or {}).items()))
        return cls(tuple(variables), frozenset(odd), trunc, gs_floor)

    @classmethod
    def standard(
        cls,
        n_classes: int = 0,
        lie_dim: int = 0,
        truncation: Mapping[str, Number] | None = None,
        gs_floor: int = 0,
        scalars: Iterable[str] = STANDARD_SCALARS,
    ) -> "SeriesRingSpec":
        """Scalars followed by even ``x{i}[k]`` and odd ``y{i}[k]`` variables."""
        xs = [f"x{i}[{k}]" for i in range(n_classes) for k in range(lie_dim)]
        ys = [f"y{i}[{k}]" for i in range(n_classes) for k in range(lie_dim)]
        return cls.make(list(scalars) + xs + ys, ys, truncation, gs_floor)

    def index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise SeriesError(f"unknown variable {name!r}") from None

    def is_odd(self, idx: int) -> bool:
        return idx in self._odd_index

    def admits(self, mono: Monomial) -> bool:
        if self._gs is not None:
            gs_exp = 0
            for idx, exp in mono:
                if idx == self._gs:
                    gs_exp = exp
            if gs_exp < self.gs_floor:
                return False
        for members, order in self._limits:
            total = 0
            for idx, exp in mono:
                if idx in members:
                    total += exp
            if total > order:
                return False
        return True

    def with_truncation(self, truncation: Mapping[str, Number], gs_floor: int | None = None) -> "SeriesRingSpec":
        return SeriesRingSpec.make(
            self.variables, self.odd, truncation, self.gs_floor if gs_floor is None else gs_floor
        )


def _mono_mul(spec: SeriesRingSpec, left: Monomial, right: Monomial) -> tuple[int, Monomial] | None:
    """Product of two monomials as (sign, monomial), or None when an odd square appears."""
    merged: dict = dict(left)
    for idx, exp in right:
        if idx in merged:
            if spec.is_odd(idx):
                return None
            total = merged[idx] + exp
            if total == 0:
                del merged[idx]
            else:
                merged[idx] = total
        else:
            merged[idx] = exp
    sign = 1
    if spec._odd_index:
        left_odd = [i for i, _ in left if spec.is_odd(i)]
        if left_odd:
            for j, _ in right:
                if spec.is_odd(j):
                    for i in left_odd:
                        if i > j:
                            sign = -sign
    return sign, tuple(sorted(merged.items()))


@dataclass(frozen=True)
class Series:
    """Immutable finite map from monomials to nonzero rationals, truncated per ``spec``."""

    spec: SeriesRingSpec
    terms: Mapping = field(default_factory=dict)

    # construction -----------------------------------------------------
    @classmethod
    def from_terms(cls, spec: SeriesRingSpec, terms: Mapping | Iterable) -> "Series":
        items = terms.items() if isinstance(terms, Mapping) else terms
        acc: dict = {}
        for mono, coeff in items:
            mono = tuple(sorted((i, e) for i, e in mono if e != 0))
            if not spec.admits(mono):
                continue
            acc[mono] = acc.get(mono, 0) + _as_fraction(coeff)
        return cls(spec, {m: c for m, c in acc.items() if c != 0})

    @classmethod
    def zero(cls, spec: SeriesRingSpec) -> "Series":
        return cls(spec, {})

    @classmethod
    def constant(cls, spec: SeriesRingSpec, value: Number) -> "Series":
        return cls.from_terms(spec, {(): value})

    @classmethod
    def var(cls, spec: SeriesRingSpec, name: str, power: Number = 1) -> "Series":
        return cls.from_terms(spec, {((spec.index(name), power),): 1})

    @classmethod
    def monomial(cls, spec: SeriesRingSpec, exponents: Mapping[str, Number], coeff: Number = 1) -> "Series":
        """Monomial from a name->exponent map; odd factors are ordered canonically."""
        mono = tuple(sorted((spec.index(n), e) for n, e in exponents.items() if e != 0))
        for idx, exp in mono:
            if spec.is_odd(idx) and exp != 1:
                return cls.zero(spec)
        return cls.from_terms(spec, {mono: coeff})

    # basic protocol ---------------------------------------------------
    def _check(self, other: "Series") -> None:
        if self.spec != other.spec:
            raise SeriesError("series ring spec mismatch")

    def _coerce(self, other) -> "Series":
        if isinstance(other, Series):
            self._check(other)
            return other
        if isinstance(other, (int, Fraction)):
            return Series.constant(self.spec, other)
        return NotImplemented

    def __bool__(self) -> bool:
        return bool(self.terms)

    def is_zero(self) -> bool:
        return not self.terms

    def __eq__(self, other) -> bool:
        if isinstance(other, (int, Fraction)):
            other = Series.constant(self.spec, other)
        if not isinstance(other, Series):
            return NotImplemented
        return self.spec == other.spec and dict(self.terms) == dict(other.terms)

    def __hash__(self) -> int:
        return hash((self.spec, frozenset(self.terms.items())))

    def __iter__(self) -> Iterator:
        return iter(self.terms.items())

    def __len__(self) -> int:
        return len(self.terms)

    def coefficient(self, exponents: Mapping[str, Number]) -> Fraction:
        mono = tuple(sorted((self.spec.index(n), e) for n, e in exponents.items() if e != 0))
        return self.terms.get(mono, Fraction(0))

    def constant_term(self) -> Fraction:
        return self.terms.get((), Fraction(0))

    # arithmetic -------------------------------------------------------
    def __add__(self, other) -> "Series":
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        acc = dict(self.terms)
        for mono, coeff in other.terms.items():
            total = acc.get(mono, 0) + coeff
            if total:
                acc[mono] = total
            else:
                acc.pop(mono, None)
        return Series(self.spec, acc)

    __radd__ = __add__

    def __neg__(self) -> "Series":
        return Series(self.spec, {m: -c for m, c in self.terms.items()})

    def __sub__(self, other) -> "Series":
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other) -> "Series":
        return (-self) + other

    def scale(self, factor: Number) -> "Series":
        factor = _as_fraction(factor)
        if factor == 0:
            return Series.zero(self.spec)
        return Series(self.spec, {m: c * factor for m, c in self.terms.items()})

    def __mul__(self, other) -> "Series":
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        if not isinstance(other, Series):
            return NotImplemented
        self._check(other)
        spec = self.spec
        acc: dict = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                prod = _mono_mul(spec, m1, m2)
                if prod is None:
                    continue
                sign, mono = prod
                if not spec.admits(mono):
                    continue
                acc[mono] = acc.get(mono, 0) + sign * c1 * c2
        return Series(spec, {m: c for m, c in acc.items() if c != 0})

    def __rmul__(self, other) -> "Series":
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        return NotImplemented

    def __truediv__(self, other: Number) -> "Series":
        return self.scale(1 / _as_fraction(other))

    def __pow__(self, n: int) -> "Series":
        if n < 0:
            return self.inverse() ** (-n)
        result = Series.constant(self.spec, 1)
        base = self
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result

    # parity -----------------------------------------------------------
    def parity(self) -> int | None:
        """0 or 1 when every term has the same parity, None for mixed series."""
        seen = {sum(1 for i, _ in m if self.spec.is_odd(i)) % 2 for m in self.terms}
        if len(seen) > 1:
            return None
        return seen.pop() if seen else 0

    def parity_parts(self) -> tuple["Series", "Series"]:
        even: dict = {}
        odd: dict = {}
        for m, c in self.terms.items():
            target = odd if sum(1 for i, _ in m if self.spec.is_odd(i)) % 2 else even
            target[m] = c
        return Series(self.spec, even), Series(self.spec, odd)

    # nilpotency, exp, log ---------------------------------------------
    def _is_topologically_nilpotent(self) -> bool:
        spec = self.spec
        for mono in self.terms:
            if any(spec.is_odd(i) for i, _ in mono):
                continue
            graded = False
            for members, _ in spec._limits:
                if sum(e for i, e in mono if i in members) > 0:
                    graded = True
                    break
            if not graded:
                return False
        return True

    def _geometric_powers(self) -> Iterator[tuple[int, "Series"]]:
        if not self._is_topologically_nilpotent():
            raise SeriesError("series is not nilpotent under the truncation grading")
        power = Series.constant(self.spec, 1)
        n = 0
        while power:
            yield n, power
            n += 1
            power = power * self

    def exp(self) -> "Series":
        if self.constant_term() != 0:
            raise SeriesError("exp requires zero constant term")
        total = Series.zero(self.spec)
        factorial = 1
        for n, power in self._geometric_powers():
            if n:
                factorial *= n
            total = total + power.scale(Fraction(1, factorial))
        return total

    def log(self) -> "Series":
        if self.constant_term() != 1:
            raise SeriesError("log requires constant term 1")
        shifted = self - 1
        total = Series.zero(self.spec)
        for n, power in shifted._geometric_powers():
            if n:
                total = total + power.scale(Fraction((-1) ** (n + 1), n))
        return total

    def inverse(self) -> "Series":
        c0 = self.constant_term()
        if c0 == 0:
            raise SeriesError("inverse requires a nonzero constant term")
        rest = (self - c0).scale(1 / c0)
        total = Series.zero(self.spec)
        for n, power in rest._geometric_powers():
            total = total + power.scale((-1) ** n)
        return total.scale(1 / c0)

    # substitution and derivatives --------------------------------------
    def map_monomials(self, fn: Callable[[Monomial, Fraction], Iterable[tuple[Monomial, Fraction]]]) -> "Series":
        acc: dict = {}
        for mono, coeff in self.terms.items():
            for new_mono, new_coeff in fn(mono, coeff):
                acc[new_mono] = acc.get(new_mono, 0) + new_coeff
        return Series.from_terms(self.spec, acc)

    def substitute(self, name: str, value: "Series") -> "Series":
        """Replace an even variable by a series (integer exponents only)."""
        idx = self.spec.index(name)
        if self.spec.is_odd(idx):
            raise SeriesError("cannot substitute an odd variable")
        value = self._coerce(value)
        total = Series.zero(self.spec)
        cache: dict = {}
        for mono, coeff in self.terms.items():
            exp = dict(mono).get(idx, 0)
            if exp != int(exp):
                raise SeriesError("substitution needs integer exponents")
            exp = int(exp)
            if exp not in cache:
                cache[exp] = value ** exp
            rest = Series(self.spec, {tuple((i, e) for i, e in mono if i != idx): coeff})
            total = total + rest * cache[exp]
        return total

    def derivative(self, name: str) -> "Series":
        """Left derivative; for odd variables the sign counts odd factors to the left."""
        idx = self.spec.index(name)
        odd = self.spec.is_odd(idx)

        def step(mono, coeff):
            exps = dict(mono)
            if idx not in exps:
                return ()
            exp = exps[idx]
            if odd:
                before = sum(1 for i, _ in mono if i < idx and self.spec.is_odd(i))
                factor = -coeff if before % 2 else coeff
            else:
                factor = coeff * exp
            if exp == 1:
                del exps[idx]
            else:
                exps[idx] = exp - 1
            return ((tuple(sorted(exps.items())), factor),)

        return self.map_monomials(step)

    def reflection(self) -> "Series":
        """g_s -> -g_s (integer g_s exponents only)."""
        gs = self.spec._gs
        if gs is None:
            return self

        def step(mono, coeff):
            exp = dict(mono).get(gs, 0)
            if exp != int(exp):
                raise SeriesError("reflection needs integer g_s exponents")
            return ((mono, -coeff if int(exp) % 2 else coeff),)

        return self.map_monomials(step)

    def retruncate(self, spec: SeriesRingSpec) -> "Series":
        """Move to another spec with the same variables (e.g. a tighter truncation)."""
        if spec.variables != self.spec.variables or spec.odd != self.spec.odd:
            raise SeriesError("retruncate needs identical variables")
        return Series.from_terms(spec, self.terms)

    # rendering --------------------------------------------------------
    def _sort_key(self, mono: Monomial):
        full = [Fraction(0)] * len(self.spec.variables)
        for i, e in mono:
            full[i] = Fraction(e)
        return (sum(full), [-e for e in full])

    def sorted_terms(self) -> list:
        return sorted(self.terms.items(), key=lambda kv: self._sort_key(kv[0]))

    def monomial_text(self, mono: Monomial) -> str:
        parts = []
        for i, e in mono:
            name = self.spec.variables[i]
            parts.append(name if e == 1 else f"{name}^{_fmt(e)}")
        return "*".join(parts)

    def to_text(self) -> str:
        if not self.terms:
            return "0"
        chunks = []
        for mono, coeff in self.sorted_terms():
            body = self.monomial_text(mono)
            mag = abs(coeff)
            if not body:
                piece = _fmt(mag)
            elif mag == 1:
                piece = body
            else:
                piece = f"{_fmt(mag)}*{body}"
            if not chunks:
                chunks.append(piece if coeff > 0 else f"-{piece}")
            else:
                chunks.append(("+ " if coeff > 0 else "- ") + piece)
        return " ".join(chunks)

    __str__ = to_text

    def __repr__(self) -> str:
        return f"Series({self.to_text()})"

    def to_json(self) -> dict:
        return {
            "variables": list(self.spec.variables),
            "odd": sorted(self.spec.odd),
            "truncation": {k: _fmt(v) for k, v in self.spec.truncation},
            "gs_floor": self.spec.gs_floor,
            "terms": [
                {"monomial": {self.spec.variables[i]: _fmt(e) for i, e in mono}, "coeff": _fmt(c)}
                for mono, c in self.sorted_terms()
            ],
        }

    @classmethod
    def from_json(cls, data: Mapping, spec: SeriesRingSpec | None = None) -> "Series":
        if spec is None:
            spec = SeriesRingSpec.make(
                data["variables"],
                data.get("odd", ()),
                {k: Fraction(v) for k, v in data.get("truncation", {}).items()},
                int(data.get("gs_floor", 0)),
            )
        total = cls.zero(spec)
        for term in data["terms"]:
            exps = {k: _parse_number(v) for k, v in term["monomial"].items()}
            total = total + cls.monomial(spec, exps, Fraction(term["coeff"]))
        return total

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


def _fmt(value: Number) -> str:
    value = _as_fraction(value)
    return str(value.numerator) if value.denominator == 1 else f"{value.numerator}/{value.denominator}"


def _parse_number(text) -> Number:
    value = Fraction(str(text))
    return int(value) if value.denominator == 1 else value


def exp(f: Series) -> Series:
    return f.exp()


def log(f: Series) -> Series:
    return f.log()


def series_mul(f: Series, g: Series) -> Series:
    return f * g


def series_exp_log(f: Series, which: str) -> Series:
    if which == "exp":
        return f.exp()
    if which == "log":
        return f.log()
    raise SeriesError(f"unknown operation {which!r}")


def substitute_bulk_shift(f: Series, shift: Number) -> Series:
    """The bulk substitution b -> b + shift * g_s."""
    spec = f.spec
    value = Series.var(spec, "b") + Series.var(spec, "g_s").scale(shift)
    return f.substitute("b", value)


# ---------------------------------------------------------------------------
# skein coefficient ring

SKEIN_GENERATORS = ("beta", "A", "alpha", "r", "theta")
_LAURENT = frozenset({"beta", "alpha"})


@dataclass(frozen=True)
class SkeinValue:
    """Laurent polynomial in beta and alpha, polynomial in A, r and theta."""

    terms: Mapping = field(default_factory=dict)

    @classmethod
    def from_terms(cls, terms: Mapping | Iterable) -> "SkeinValue":
        items = terms.items() if isinstance(terms, Mapping) else terms
        acc: dict = {}
        for exps, coeff in items:
            exps = tuple(int(e) for e in exps)
            if len(exps) != len(SKEIN_GENERATORS):
                raise SeriesError("skein exponent vector has the wrong length")
            for name, e in zip(SKEIN_GENERATORS, exps):
                if e < 0 and name not in _LAURENT:
                    raise SeriesError(f"negative power of {name}")
            acc[exps] = acc.get(exps, 0) + _as_fraction(coeff)
        return cls({k: v for k, v in acc.items() if v != 0})

    @classmethod
    def one(cls) -> "SkeinValue":
        return cls.from_terms({(0, 0, 0, 0, 0): 1})

    @classmethod
    def zero(cls) -> "SkeinValue":
        return cls({})

    @classmethod
    def gen(cls, name: str, power: int = 1) -> "SkeinValue":
        exps = [0] * len(SKEIN_GENERATORS)
        exps[SKEIN_GENERATORS.index(name)] = power
        return cls.from_terms({tuple(exps): 1})

    def __bool__(self) -> bool:
        return bool(self.terms)

    def __eq__(self, other) -> bool:
        if isinstance(other, (int, Fraction)):
            other = SkeinValue.one() * other
        if not isinstance(other, SkeinValue):
            return NotImplemented
        return dict(self.terms) == dict(other.terms)

    def __hash__(self) -> int:
        return hash(frozenset(self.terms.items()))

    def __add__(self, other: "SkeinValue") -> "SkeinValue":
        if isinstance(other, (int, Fraction)):
            other = SkeinValue.one() * other
        acc = dict(self.terms)
        for k, v in other.terms.items():
            acc[k] = acc.get(k, 0) + v
        return SkeinValue({k: v for k, v in acc.items() if v != 0})

    __radd__ = __add__

    def __neg__(self) -> "SkeinValue":
        return SkeinValue({k: -v for k, v in self.terms.items()})

    def __sub__(self, other: "SkeinValue") -> "SkeinValue":
        return self + (-other)

    def __mul__(self, other) -> "SkeinValue":
        if isinstance(other, (int, Fraction)):
            factor = _as_fraction(other)
            return SkeinValue({k: v * factor for k, v in self.terms.items() if v * factor != 0})
        if not isinstance(other, SkeinValue):
            return NotImplemented
        acc: dict = {}
        for k1, v1 in self.terms.items():
            for k2, v2 in other.terms.items():
                key = tuple(a + b for a, b in zip(k1, k2))
                acc[key] = acc.get(key, 0) + v1 * v2
        return SkeinValue({k: v for k, v in acc.items() if v != 0})

    __rmul__ = __mul__

    def reflection(self) -> "SkeinValue":
        """beta -> beta^-1, A -> -A; alpha, r, theta fixed."""
        acc = {}
        for (b, a, al, r, th), v in self.terms.items():
            acc[(-b, a, al, r, th)] = -v if a % 2 else v
        return SkeinValue(acc)

    def expand(self, expansion: Mapping[str, Series]) -> Series:
        """Evaluate in a series ring given series for each generator (beta, alpha invertible)."""
        missing = [g for g in SKEIN_GENERATORS if g not in expansion]
        if missing:
            raise SeriesError(f"expansion map lacks {missing}")
        spec = next(iter(expansion.values())).spec
        inverses = {g: expansion[g].inverse() for g in _LAURENT}
        total = Series.zero(spec)
        for exps, coeff in self.terms.items():
            term = Series.constant(spec, coeff)
            for name, e in zip(SKEIN_GENERATORS, exps):
                if e > 0:
                    term = term * expansion[name] ** e
                elif e < 0:
                    term = term * inverses[name] ** (-e)
            total = total + term
        return total

    def _sort_key(self, exps):
        return (sum(abs(e) for e in exps), tuple(-e for e in exps))

    def to_text(self) -> str:
        if not self.terms:
            return "0"
        chunks = []
        for exps, coeff in sorted(self.terms.items(), key=lambda kv: self._sort_key(kv[0])):
            factors = [
                name if e == 1 else f"{name}^{e}" for name, e in zip(SKEIN_GENERATORS, exps) if e != 0
            ]
            body = "*".join(factors)
            mag = abs(coeff)
            if not body:
                piece = _fmt(mag)
            elif mag == 1:
                piece = body
            else:
                piece = f"{_fmt(mag)}*{body}"
            if not chunks:
                chunks.append(piece if coeff > 0 else f"-{piece}")
            else:
                chunks.append(("+ " if coeff > 0 else "- ") + piece)
        return " ".join(chunks)

    __str__ = to_text

    def __repr__(self) -> str:
        return f"SkeinValue({self.to_text()})"

    def to_json(self) -> list:
        return [
            {"exponents": dict(zip(SKEIN_GENERATORS, exps)), "coeff": _fmt(c)}
            for exps, c in sorted(self.terms.items(), key=lambda kv: self._sort_key(kv[0]))
        ]

    @classmethod
    def from_json(cls, data: list) -> "SkeinValue":
        return cls.from_terms(
            (tuple(int(t["exponents"].get(g, 0)) for g in SKEIN_GENERATORS), Fraction(t["coeff"]))
            for t in data
        )


def reflection(value):
    """Reflection involution on a Series or a SkeinValue."""
    return value.reflection()
