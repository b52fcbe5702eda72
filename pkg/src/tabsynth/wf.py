"""Well-founded relation combinators and the unification measure.

Relations are combinator trees evaluated by rel_less.  The measure used
by the derived algorithm compares input triples (environment, e1, e2)
lexicographically: strict shrink of range(env) | vars(e1, e2), else
non-growth of that set plus strict shrink of size(e1).
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Sequence, Union

from .term import Expr, encode_tuple, size_of, vars_of
from .subst import Subst, range_of


class SortMismatchError(Exception):
    pass


@dataclass(frozen=True)
class InputTriple:
    env: Subst
    e1: Expr
    e2: Expr


def _triple_measure(t: InputTriple) -> frozenset[str]:
    return range_of(t.env) | vars_of(encode_tuple([t.e1, t.e2]))


@dataclass(frozen=True)
class Base:
    """A primitive relation, named by kind."""

    kind: str

    def __post_init__(self):
        if self.kind not in _BASE_STRICT:
            raise ValueError(f"unknown base relation {self.kind!r}")


@dataclass(frozen=True)
class InducedBy:
    """Compare through a projection: a < b iff g(a) < g(b) in the inner relation."""

    projection: str
    inner: "RelSpec"

    def __post_init__(self):
        if self.projection not in _PROJECTIONS:
            raise ValueError(f"unknown projection {self.projection!r}")


@dataclass(frozen=True)
class Lex:
    """Lexicographic combination, in the reflexive-property form."""

    parts: tuple["RelSpec", ...]

    def __post_init__(self):
        if len(self.parts) < 2:
            raise ValueError("Lex needs at least two components")


@dataclass(frozen=True)
class ReflexiveClosure:
    inner: "RelSpec"


RelSpec = Union[Base, InducedBy, Lex, ReflexiveClosure]


def _expr_pair(value) -> tuple:
    if not (isinstance(value, tuple) and len(value) == 2):
        raise SortMismatchError(f"expected a (set, int) pair, got {value!r}")
    return value


_BASE_STRICT = {
    "size-lt": lambda a, b: size_of(a) < size_of(b),
    "vars-strict-subset": lambda a, b: vars_of(a) < vars_of(b),
    "subset-int-lex": lambda a, b: _expr_pair(a)[0] < _expr_pair(b)[0]
    or (_expr_pair(a)[0] == _expr_pair(b)[0] and _expr_pair(a)[1] < _expr_pair(b)[1]),
    "range-vars": lambda a, b: _triple_measure(a) < _triple_measure(b),
    "size-first": lambda a, b: size_of(a.e1) < size_of(b.e1),
}

# reflexive (weak) companions, taken on the measure each base compares
_BASE_WEAK = {
    "size-lt": lambda a, b: size_of(a) <= size_of(b),
    "vars-strict-subset": lambda a, b: vars_of(a) <= vars_of(b),
    "subset-int-lex": lambda a, b: _BASE_STRICT["subset-int-lex"](a, b) or a == b,
    "range-vars": lambda a, b: _triple_measure(a) <= _triple_measure(b),
    "size-first": lambda a, b: size_of(a.e1) <= size_of(b.e1),
}

_PROJECTIONS = {
    "first": lambda v: v[0],
    "second": lambda v: v[1],
    "vars": lambda e: vars_of(e),
    "size": lambda e: size_of(e),
    "range": lambda s: range_of(s),
    "vars-size": lambda e: (vars_of(e), size_of(e)),
}


def rel_less(spec: RelSpec, a, b) -> bool:
    """Strict comparison under the combinator tree."""
    try:
        return _strict(spec, a, b)
    except (AttributeError, TypeError) as exc:
        raise SortMismatchError(str(exc)) from exc


def rel_leq(spec: RelSpec, a, b) -> bool:
    """Reflexive companion of rel_less (measure-level for base relations)."""
    try:
        return _weak(spec, a, b)
    except (AttributeError, TypeError) as exc:
        raise SortMismatchError(str(exc)) from exc


def _strict(spec: RelSpec, a, b) -> bool:
    if isinstance(spec, Base):
        return _BASE_STRICT[spec.kind](a, b)
    if isinstance(spec, InducedBy):
        g = _PROJECTIONS[spec.projection]
        return _strict(spec.inner, g(a), g(b))
    if isinstance(spec, ReflexiveClosure):
        return _strict(spec.inner, a, b) or a == b
    first, rest = spec.parts[0], spec.parts[1:]
    tail: RelSpec = rest[0] if len(rest) == 1 else Lex(rest)
    return _strict(first, a, b) or (_weak(first, a, b) and _strict(tail, a, b))


def _weak(spec: RelSpec, a, b) -> bool:
    if isinstance(spec, Base):
        return _BASE_WEAK[spec.kind](a, b)
    if isinstance(spec, InducedBy):
        g = _PROJECTIONS[spec.projection]
        return _weak(spec.inner, g(a), g(b))
    if isinstance(spec, ReflexiveClosure):
        return _strict(spec, a, b) or a == b
    return _strict(spec, a, b) or a == b


U_REL = Lex((Base("range-vars"), Base("size-first")))


def u_less(t1: InputTriple, t2: InputTriple) -> bool:
    """The unification measure on input triples."""
    m1, m2 = _triple_measure(t1), _triple_measure(t2)
    if m1 < m2:
        return True
    return m1 <= m2 and size_of(t1.e1) < size_of(t2.e1)


@dataclass(frozen=True)
class StrictnessReport:
    checked: int
    irreflexivity_violations: tuple
    antisymmetry_violations: tuple

    @property
    def ok(self) -> bool:
        return not self.irreflexivity_violations and not self.antisymmetry_violations


def strictness_probe(spec: RelSpec, samples: Sequence[tuple]) -> StrictnessReport:
    """Check irreflexivity and antisymmetry over the sampled pairs."""
    irref, antisym = [], []
    for a, b in samples:
        if rel_less(spec, a, a):
            irref.append(a)
        if rel_less(spec, b, b):
            irref.append(b)
        if rel_less(spec, a, b) and rel_less(spec, b, a):
            antisym.append((a, b))
    return StrictnessReport(len(samples), tuple(irref), tuple(antisym))


def parse_relspec(text: str) -> RelSpec:
    """Parse the textual combinator form, e.g. (lex (range-vars) (size-first))."""
    tokens = re.findall(r"\(|\)|[^\s()]+", text)
    spec, rest = _parse_rel(tokens)
    if rest:
        raise ValueError(f"trailing tokens in relation spec: {rest}")
    return spec


def _parse_rel(tokens: list[str]) -> tuple[RelSpec, list[str]]:
    if not tokens:
        raise ValueError("empty relation spec")
    tok = tokens[0]
    if tok != "(":
        if tok in _BASE_STRICT:
            return Base(tok), tokens[1:]
        raise ValueError(f"unknown relation {tok!r}")
    head, rest = tokens[1], tokens[2:]
    if head == "lex":
        parts = []
        while rest and rest[0] != ")":
            part, rest = _parse_rel(rest)
            parts.append(part)
        return Lex(tuple(parts)), _expect_close(rest)
    if head == "induced":
        projection = rest[0]
        inner, rest = _parse_rel(rest[1:])
        return InducedBy(projection, inner), _expect_close(rest)
    if head == "reflexive":
        inner, rest = _parse_rel(rest)
        return ReflexiveClosure(inner), _expect_close(rest)
    if head in _BASE_STRICT:
        return Base(head), _expect_close(rest)
    raise ValueError(f"unknown relation constructor {head!r}")


def _expect_close(tokens: list[str]) -> list[str]:
    if not tokens or tokens[0] != ")":
        raise ValueError("expected ')' in relation spec")
    return tokens[1:]
