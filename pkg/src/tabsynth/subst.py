"""Substitutions over symbolic expressions.

A substitution is either a proper finite binding map (variable name to
expression, identities removed) or the failure substitution ``bot``,
which maps every expression to the black hole.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional, Union

from .term import (
    BLACK_HOLE,
    Cons,
    Const,
    Expr,
    Var,
    is_atom,
    parse_expr,
    print_expr,
    vars_of,
)


class SubstError(Exception):
    pass


class DuplicateVariableError(SubstError):
    pass


class ImproperOperandError(SubstError):
    pass


class NotAPermutationError(SubstError):
    pass


@dataclass(frozen=True)
class Failure:
    """The failure substitution; maps every expression to the black hole."""

    def __repr__(self) -> str:
        return "bot"


BOT = Failure()


@dataclass(frozen=True)
class Proper:
    """A proper substitution: sorted, identity-free binding pairs."""

    bindings: tuple[tuple[str, Expr], ...] = field(default=())

    def mapping(self) -> dict[str, Expr]:
        return dict(self.bindings)

    def __repr__(self) -> str:
        return print_subst(self)


Subst = Union[Proper, Failure]


def make_subst(pairs: Iterable[tuple[str, Expr]]) -> Proper:
    """Build a proper substitution; identity pairs are dropped."""
    seen: dict[str, Expr] = {}
    for name, image in pairs:
        if name in seen:
            raise DuplicateVariableError(f"variable {name} bound twice")
        seen[name] = image
    kept = {n: e for n, e in seen.items() if e != Var(n)}
    return Proper(tuple(sorted(kept.items(), key=lambda kv: kv[0])))


EMPTY = make_subst([])


def is_proper(s: Subst) -> bool:
    return isinstance(s, Proper)


def apply(e: Expr, s: Subst) -> Expr:
    """Apply s to e: simultaneous replacement; bot yields the black hole."""
    if isinstance(s, Failure):
        return BLACK_HOLE
    if isinstance(e, Var):
        return s.mapping().get(e.name, e)
    if isinstance(e, Const):
        return e
    return Cons(apply(e.left, s), apply(e.right, s))


def compose(s1: Subst, s2: Subst) -> Subst:
    """Sequential composition: apply(e, compose(s1, s2)) = apply(apply(e, s1), s2)."""
    if isinstance(s1, Failure) or isinstance(s2, Failure):
        return BOT
    pairs = {x: apply(img, s2) for x, img in s1.bindings}
    for y, img in s2.bindings:
        if y not in pairs:
            pairs[y] = img
    return make_subst(pairs.items())


def add(s1: Subst, s2: Subst) -> Proper:
    """Parallel combination; bindings of s1 win on overlap."""
    if isinstance(s1, Failure) or isinstance(s2, Failure):
        raise ImproperOperandError("add is defined only for proper substitutions")
    pairs = dict(s2.bindings)
    pairs.update(dict(s1.bindings))
    return make_subst(pairs.items())


def replacement(x: str, e: Expr) -> Proper:
    """The single-variable substitution {x -> e}; {x -> x} is empty."""
    return make_subst([(x, e)])


def dom_of(s: Subst) -> frozenset[str]:
    if isinstance(s, Failure):
        return frozenset()
    return frozenset(n for n, _ in s.bindings)


def range_of(s: Subst) -> frozenset[str]:
    if isinstance(s, Failure):
        return frozenset()
    out: frozenset[str] = frozenset()
    for _, img in s.bindings:
        out |= vars_of(img)
    return out


def support(s: Subst) -> tuple[frozenset[str], frozenset[str], frozenset[str]]:
    """Return (dom, range, vars) of s; all empty for bot and {}."""
    d, r = dom_of(s), range_of(s)
    return d, r, d | r


def misses(s: Subst, e: Expr) -> bool:
    """True iff applying s leaves e unchanged."""
    return apply(e, s) == e


def is_idempotent(s: Subst) -> bool:
    """True iff s composed with itself equals s."""
    if isinstance(s, Failure):
        return True
    return not (dom_of(s) & range_of(s))


def more_general(s1: Subst, s2: Subst) -> bool:
    """Strong generality: compose(s1, s2) = s2 (s2 extends s1)."""
    return compose(s1, s2) == s2


def subst_equal(s1: Subst, s2: Subst) -> bool:
    """Equality of canonical forms (same effect on every variable)."""
    return s1 == s2


def _match(pattern: Expr, target: Expr, out: dict[str, Expr]) -> bool:
    if isinstance(pattern, Var):
        if pattern.name in out:
            return out[pattern.name] == target
        out[pattern.name] = target
        return True
    if isinstance(pattern, Const):
        return pattern == target
    if is_atom(target):
        return False
    assert isinstance(pattern, Cons) and isinstance(target, Cons)
    return _match(pattern.left, target.left, out) and _match(
        pattern.right, target.right, out
    )


def weakly_more_general(s1: Proper, s2: Proper) -> Optional[Proper]:
    """Find a witness d with compose(s1, d) = s2, if one exists.

    Solved as a simultaneous matching problem over dom(s1) | dom(s2).
    """
    bindings: dict[str, Expr] = {}
    for x in sorted(dom_of(s1) | dom_of(s2)):
        if not _match(apply(Var(x), s1), apply(Var(x), s2), bindings):
            return None
    for y in sorted(dom_of(s2) - dom_of(s1)):
        bindings.setdefault(y, apply(Var(y), s2))
    witness = make_subst(bindings.items())
    if compose(s1, witness) == s2:
        return witness
    return None


class FreshSupply:
    """Monotonic supply of fresh variable names base#k."""

    def __init__(self, start: int = 1):
        self._next = start

    def fresh(self, base: str) -> str:
        base = base.split("#", 1)[0]
        name = f"{base}#{self._next}"
        self._next += 1
        return name


_GLOBAL_SUPPLY = FreshSupply()


def standardize_apart(e1, e2, supply: FreshSupply | None = None):
    """Rename the variables of e2 (in first-occurrence order) to fresh names.

    Returns the renamed e2 and the renaming substitution; the result
    shares no variables with e1.  Accepts expressions or formulas; for a
    formula the metavariables are renamed.
    """
    supply = supply or _GLOBAL_SUPPLY
    if not isinstance(e2, (Const, Var, Cons)):
        return _standardize_formula(e2, supply)
    renaming: dict[str, Expr] = {}

    def walk(e: Expr) -> None:
        if isinstance(e, Var) and e.name not in renaming:
            renaming[e.name] = Var(supply.fresh(e.name))
        elif isinstance(e, Cons):
            walk(e.left)
            walk(e.right)

    walk(e2)
    perm = make_subst(renaming.items())
    return apply(e2, perm), perm


def _standardize_formula(f, supply: FreshSupply):
    from . import logic

    renaming: dict[str, str] = {}

    def walk(node) -> None:
        if isinstance(node, logic.MetaVar) and node.name not in renaming:
            renaming[node.name] = supply.fresh(node.name)
        for kid in logic.children(node):
            walk(kid)

    walk(f)
    perm = make_subst((old, Var(new)) for old, new in renaming.items())
    return logic.rename_metavars(f, renaming), perm


def permutation_inverse(s: Subst) -> Proper:
    """Invert a permutation substitution; composing either way gives {}."""
    if isinstance(s, Failure):
        raise NotAPermutationError("bot is not a permutation")
    images = []
    for _, img in s.bindings:
        if not isinstance(img, Var):
            raise NotAPermutationError("image is not a variable")
        images.append(img.name)
    if set(images) != dom_of(s) or len(set(images)) != len(images):
        raise NotAPermutationError("images are not a permutation of the domain")
    return make_subst(
        (img.name, Var(x)) for x, img in s.bindings if isinstance(img, Var)
    )


def print_subst(s: Subst) -> str:
    if isinstance(s, Failure):
        return "bot"
    inner = ", ".join(f"{x} -> {print_expr(e)}" for x, e in s.bindings)
    return "{" + inner + "}"


def parse_subst(text: str) -> Subst:
    """Parse '{}', 'bot' or '{X -> a, Y -> (b . Z)}'."""
    stripped = text.strip()
    if stripped == "bot":
        return BOT
    if not (stripped.startswith("{") and stripped.endswith("}")):
        raise SubstError(f"not a substitution: {text!r}")
    body = stripped[1:-1].strip()
    if not body:
        return EMPTY
    pairs = []
    for part in _split_bindings(body):
        if "->" not in part:
            raise SubstError(f"missing '->' in binding {part!r}")
        name, image = part.split("->", 1)
        name = name.strip()
        if not name or not name[0].isupper():
            raise SubstError(f"bound name {name!r} is not a variable")
        pairs.append((name, parse_expr(image.strip())))
    return make_subst(pairs)


def _split_bindings(body: str) -> list[str]:
    parts, depth, start = [], 0, 0
    for i, ch in enumerate(body):
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        elif ch == "," and depth == 0:
            parts.append(body[start:i])
            start = i + 1
    parts.append(body[start:])
    return parts
