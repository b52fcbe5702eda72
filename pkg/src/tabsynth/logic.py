"""Sorted first-order formulas and terms used by the tableau rules.

The signature is fixed: sorts expr/subst/varset/nat/triple/rel, the
function and predicate symbols of the expression-and-substitution
vocabulary, plus named program calls registered per specification.
MetaVars are uppercase identifiers and stand for unknowns that rules may
instantiate; lowercase identifiers are signature symbols.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterator, Optional, Union

from . import subst as _subst
from . import term as _term


class LogicError(Exception):
    pass


class FormulaSyntaxError(LogicError):
    pass


class SortError(LogicError):
    pass


class BadPathError(LogicError):
    pass


SORTS = ("expr", "subst", "varset", "nat", "triple", "rel")

_BASE_FUNCTIONS: dict[str, tuple[tuple[str, ...], str]] = {
    "cons": (("expr", "expr"), "expr"),
    "left": (("expr",), "expr"),
    "right": (("expr",), "expr"),
    "apply": (("expr", "subst"), "expr"),
    "compose": (("subst", "subst"), "subst"),
    "replace": (("expr", "expr"), "subst"),
    "empty-subst": ((), "subst"),
    "bot": ((), "subst"),
    "vars": (("expr",), "varset"),
    "vars2": (("expr", "expr"), "varset"),
    "vs-apply": (("varset", "subst"), "varset"),
    "dom": (("subst",), "varset"),
    "range": (("subst",), "varset"),
    "size": (("expr",), "nat"),
    "union": (("varset", "varset"), "varset"),
    "tuple2": (("expr", "expr"), "expr"),
    "tuple3": (("subst", "expr", "expr"), "triple"),
}

_BASE_PREDICATES: dict[str, tuple[str, ...]] = {
    "is-atom": ("expr",),
    "is-const": ("expr",),
    "is-var": ("expr",),
    "is-proper": ("subst",),
    "occurs-proper": ("expr", "expr"),
    "occurs-refl": ("expr", "expr"),
    "misses": ("subst", "expr"),
    "idem": ("subst",),
    "more-genid": ("subst", "subst"),
    "mgi": ("subst", "expr", "expr", "subst"),
    "mgiu": ("subst", "expr", "expr", "subst"),
    "reduce": ("subst", "varset", "subst"),
    "subset": ("varset", "varset"),
    "proper-subset": ("varset", "varset"),
    "size-lt": ("expr", "expr"),
    "wf-ordered": ("rel", "triple", "triple"),
}


class Signature:
    """Symbol table; program parameters and calls extend the base tables."""

    def __init__(self):
        self.functions = dict(_BASE_FUNCTIONS)
        self.predicates = dict(_BASE_PREDICATES)

    def add_constant(self, name: str, sort: str) -> None:
        self.add_function(name, (), sort)

    def add_function(self, name: str, args: tuple[str, ...], result: str) -> None:
        known = self.functions.get(name)
        if known is not None and known != (args, result):
            raise SortError(f"conflicting declarations for function {name}")
        if result not in SORTS or any(a not in SORTS for a in args):
            raise SortError(f"unknown sort in declaration of {name}")
        self.functions[name] = (args, result)

    def add_predicate(self, name: str, args: tuple[str, ...]) -> None:
        known = self.predicates.get(name)
        if known is not None and known != args:
            raise SortError(f"conflicting declarations for predicate {name}")
        self.predicates[name] = args


def default_signature() -> Signature:
    sig = Signature()
    sig.add_constant("u-rel", "rel")
    return sig


# ---------------------------------------------------------------------------
# terms and formulas


@dataclass(frozen=True)
class MetaVar:
    name: str
    sort: str


@dataclass(frozen=True)
class Literal:
    """An embedded ground value (an Expr or a Subst)."""

    value: object
    sort: str


@dataclass(frozen=True)
class Apply:
    fn: str
    args: tuple["LTerm", ...] = ()


@dataclass(frozen=True)
class Cond:
    test: "Formula"
    then: "LTerm"
    els: "LTerm"


LTerm = Union[MetaVar, Literal, Apply, Cond]


@dataclass(frozen=True)
class TrueF:
    pass


@dataclass(frozen=True)
class FalseF:
    pass


@dataclass(frozen=True)
class Atom:
    pred: str
    args: tuple[LTerm, ...] = ()


@dataclass(frozen=True)
class Not:
    body: "Formula"


@dataclass(frozen=True)
class And:
    parts: tuple["Formula", ...]


@dataclass(frozen=True)
class Or:
    parts: tuple["Formula", ...]


@dataclass(frozen=True)
class Implies:
    antecedent: "Formula"
    consequent: "Formula"


@dataclass(frozen=True)
class Iff:
    lhs: "Formula"
    rhs: "Formula"


@dataclass(frozen=True)
class Eq:
    lhs: LTerm
    rhs: LTerm


Formula = Union[TrueF, FalseF, Atom, Not, And, Or, Implies, Iff, Eq]

TRUE = TrueF()
FALSE = FalseF()


def term_sort(t: LTerm, sig: Signature) -> str:
    if isinstance(t, (MetaVar, Literal)):
        return t.sort
    if isinstance(t, Apply):
        if t.fn not in sig.functions:
            raise SortError(f"unknown function {t.fn}")
        return sig.functions[t.fn][1]
    return term_sort(t.then, sig)


def check_term(t: LTerm, sig: Signature, expected: str | None = None) -> str:
    """Check well-sortedness of t; returns its sort."""
    if isinstance(t, (MetaVar, Literal)):
        got = t.sort
    elif isinstance(t, Apply):
        if t.fn not in sig.functions:
            raise SortError(f"unknown function {t.fn}")
        argsorts, got = sig.functions[t.fn]
        if len(argsorts) != len(t.args):
            raise SortError(f"{t.fn} expects {len(argsorts)} arguments")
        for arg, want in zip(t.args, argsorts):
            check_term(arg, sig, want)
    else:
        check_formula(t.test, sig)
        got = check_term(t.then, sig)
        if check_term(t.els, sig) != got:
            raise SortError("conditional branches have different sorts")
    if expected is not None and got != expected:
        raise SortError(f"expected sort {expected}, got {got} in {print_term(t)}")
    return got


def check_formula(f: Formula, sig: Signature) -> None:
    if isinstance(f, (TrueF, FalseF)):
        return
    if isinstance(f, Atom):
        if f.pred not in sig.predicates:
            raise SortError(f"unknown predicate {f.pred}")
        argsorts = sig.predicates[f.pred]
        if len(argsorts) != len(f.args):
            raise SortError(f"{f.pred} expects {len(argsorts)} arguments")
        for arg, want in zip(f.args, argsorts):
            check_term(arg, sig, want)
        return
    if isinstance(f, Eq):
        if check_term(f.lhs, sig) != check_term(f.rhs, sig):
            raise SortError("equality between different sorts")
        return
    if isinstance(f, Not):
        check_formula(f.body, sig)
        return
    if isinstance(f, (And, Or)):
        for p in f.parts:
            check_formula(p, sig)
        return
    check_formula(f.antecedent if isinstance(f, Implies) else f.lhs, sig)
    check_formula(f.consequent if isinstance(f, Implies) else f.rhs, sig)


# ---------------------------------------------------------------------------
# parsing

_TOKEN = re.compile(r"\(|\)|[^\s()]+")
_METAVAR = re.compile(r"[A-Z][A-Za-z0-9_#']*")


def _tokenize(text: str) -> list[str]:
    return _TOKEN.findall(text)


def parse_formula(text: str, sig: Signature | None = None) -> Formula:
    sig = sig or default_signature()
    toks = _tokenize(text)
    raw, rest = _parse_formula(toks, sig)
    if rest:
        raise FormulaSyntaxError(f"trailing tokens: {' '.join(rest)}")
    return _resolve_sorts(raw, sig)


def parse_term(text: str, sig: Signature | None = None) -> LTerm:
    sig = sig or default_signature()
    toks = _tokenize(text)
    raw, rest = _parse_term(toks, sig)
    if rest:
        raise FormulaSyntaxError(f"trailing tokens: {' '.join(rest)}")
    return _resolve_sorts_term(raw, sig)


def _parse_formula(toks: list[str], sig: Signature):
    if not toks:
        raise FormulaSyntaxError("unexpected end of formula")
    tok = toks[0]
    if tok == "true":
        return TRUE, toks[1:]
    if tok == "false":
        return FALSE, toks[1:]
    if tok != "(":
        raise FormulaSyntaxError(f"unexpected token {tok!r} in formula")
    if len(toks) < 2:
        raise FormulaSyntaxError("unclosed '('")
    head, rest = toks[1], toks[2:]
    if head in ("and", "or"):
        parts = []
        while rest and rest[0] != ")":
            part, rest = _parse_formula(rest, sig)
            parts.append(part)
        rest = _close(rest)
        if not parts:
            raise FormulaSyntaxError(f"empty ({head})")
        node = And(tuple(parts)) if head == "and" else Or(tuple(parts))
        return node, rest
    if head == "not":
        body, rest = _parse_formula(rest, sig)
        return Not(body), _close(rest)
    if head in ("implies", "iff"):
        a, rest = _parse_formula(rest, sig)
        b, rest = _parse_formula(rest, sig)
        node = Implies(a, b) if head == "implies" else Iff(a, b)
        return node, _close(rest)
    if head == "=":
        lhs, rest = _parse_term(rest, sig)
        rhs, rest = _parse_term(rest, sig)
        return Eq(lhs, rhs), _close(rest)
    if head in sig.predicates:
        args = []
        while rest and rest[0] != ")":
            arg, rest = _parse_term(rest, sig)
            args.append(arg)
        return Atom(head, tuple(args)), _close(rest)
    raise FormulaSyntaxError(f"unknown connective or predicate {head!r}")


def _parse_term(toks: list[str], sig: Signature):
    if not toks:
        raise FormulaSyntaxError("unexpected end of term")
    tok = toks[0]
    if tok == ")":
        raise FormulaSyntaxError("unexpected ')'")
    if tok == "(":
        head, rest = toks[1], toks[2:]
        if head == "if":
            test, rest = _parse_formula(rest, sig)
            then, rest = _parse_term(rest, sig)
            els, rest = _parse_term(rest, sig)
            return Cond(test, then, els), _close(rest)
        if head in sig.functions:
            args = []
            while rest and rest[0] != ")":
                arg, rest = _parse_term(rest, sig)
                args.append(arg)
            return Apply(head, tuple(args)), _close(rest)
        raise FormulaSyntaxError(f"unknown function {head!r}")
    name, _, sort = tok.partition(":")
    if _METAVAR.match(name) and _METAVAR.match(name).end() == len(name):
        if sort and sort not in SORTS:
            raise SortError(f"unknown sort annotation {sort!r}")
        return MetaVar(name, sort or "?"), toks[1:]
    if tok in sig.functions and not sig.functions[tok][0]:
        return Apply(tok, ()), toks[1:]
    raise FormulaSyntaxError(f"unknown symbol {tok!r}")


def _close(toks: list[str]) -> list[str]:
    if not toks or toks[0] != ")":
        raise FormulaSyntaxError("expected ')'")
    return toks[1:]


def _resolve_sorts(f: Formula, sig: Signature) -> Formula:
    env: dict[str, str] = {}
    for _ in range(2):
        _collect_formula(f, sig, env)
    out = _assign_formula(f, env)
    check_formula(out, sig)
    return out


def _resolve_sorts_term(t: LTerm, sig: Signature) -> LTerm:
    env: dict[str, str] = {}
    for _ in range(2):
        _collect_term(t, None, sig, env)
    out = _assign_term(t, env)
    check_term(out, sig)
    return out


def _note(env: dict[str, str], name: str, sort: str | None) -> None:
    if sort is None:
        return
    if name in env and env[name] != sort:
        raise SortError(f"metavar {name} used at sorts {env[name]} and {sort}")
    env[name] = sort


def _collect_formula(f: Formula, sig: Signature, env: dict[str, str]) -> None:
    if isinstance(f, Atom):
        if f.pred not in sig.predicates:
            raise SortError(f"unknown predicate {f.pred}")
        for arg, want in zip(f.args, sig.predicates[f.pred]):
            _collect_term(arg, want, sig, env)
    elif isinstance(f, Eq):
        lhs = _peek_sort(f.lhs, sig, env)
        rhs = _peek_sort(f.rhs, sig, env)
        want = lhs or rhs
        _collect_term(f.lhs, want, sig, env)
        _collect_term(f.rhs, want, sig, env)
    elif isinstance(f, Not):
        _collect_formula(f.body, sig, env)
    elif isinstance(f, (And, Or)):
        for p in f.parts:
            _collect_formula(p, sig, env)
    elif isinstance(f, Implies):
        _collect_formula(f.antecedent, sig, env)
        _collect_formula(f.consequent, sig, env)
    elif isinstance(f, Iff):
        _collect_formula(f.lhs, sig, env)
        _collect_formula(f.rhs, sig, env)


def _collect_term(t: LTerm, want: str | None, sig: Signature, env: dict[str, str]) -> None:
    if isinstance(t, MetaVar):
        _note(env, t.name, t.sort if t.sort != "?" else want)
    elif isinstance(t, Apply):
        if t.fn not in sig.functions:
            raise SortError(f"unknown function {t.fn}")
        for arg, argwant in zip(t.args, sig.functions[t.fn][0]):
            _collect_term(arg, argwant, sig, env)
    elif isinstance(t, Cond):
        _collect_formula(t.test, sig, env)
        branch = _peek_sort(t.then, sig, env) or _peek_sort(t.els, sig, env) or want
        _collect_term(t.then, branch, sig, env)
        _collect_term(t.els, branch, sig, env)


def _peek_sort(t: LTerm, sig: Signature, env: dict[str, str]) -> str | None:
    if isinstance(t, MetaVar):
        if t.sort != "?":
            return t.sort
        return env.get(t.name)
    if isinstance(t, Literal):
        return t.sort
    if isinstance(t, Apply):
        if t.fn not in sig.functions:
            raise SortError(f"unknown function {t.fn}")
        return sig.functions[t.fn][1]
    return _peek_sort(t.then, sig, env) or _peek_sort(t.els, sig, env)


def _assign_formula(f: Formula, env: dict[str, str]) -> Formula:
    if isinstance(f, Atom):
        return Atom(f.pred, tuple(_assign_term(a, env) for a in f.args))
    if isinstance(f, Eq):
        return Eq(_assign_term(f.lhs, env), _assign_term(f.rhs, env))
    if isinstance(f, Not):
        return Not(_assign_formula(f.body, env))
    if isinstance(f, And):
        return And(tuple(_assign_formula(p, env) for p in f.parts))
    if isinstance(f, Or):
        return Or(tuple(_assign_formula(p, env) for p in f.parts))
    if isinstance(f, Implies):
        return Implies(_assign_formula(f.antecedent, env), _assign_formula(f.consequent, env))
    if isinstance(f, Iff):
        return Iff(_assign_formula(f.lhs, env), _assign_formula(f.rhs, env))
    return f


def _assign_term(t: LTerm, env: dict[str, str]) -> LTerm:
    if isinstance(t, MetaVar):
        sort = t.sort if t.sort != "?" else env.get(t.name)
        if sort is None:
            raise SortError(f"cannot infer sort of metavar {t.name}; annotate it")
        return MetaVar(t.name, sort)
    if isinstance(t, Apply):
        return Apply(t.fn, tuple(_assign_term(a, env) for a in t.args))
    if isinstance(t, Cond):
        return Cond(
            _assign_formula(t.test, env),
            _assign_term(t.then, env),
            _assign_term(t.els, env),
        )
    return t


# ---------------------------------------------------------------------------
# printing

def print_term(t: LTerm) -> str:
    if isinstance(t, MetaVar):
        return t.name
    if isinstance(t, Literal):
        if isinstance(t.value, (_subst.Proper, _subst.Failure)):
            return f"'{_subst.print_subst(t.value)}'"
        return f"'{_term.print_expr(t.value)}'"
    if isinstance(t, Apply):
        if not t.args:
            return t.fn
        return "(" + " ".join([t.fn] + [print_term(a) for a in t.args]) + ")"
    return f"(if {print_formula(t.test)} {print_term(t.then)} {print_term(t.els)})"


def print_formula(f: Formula) -> str:
    if isinstance(f, TrueF):
        return "true"
    if isinstance(f, FalseF):
        return "false"
    if isinstance(f, Atom):
        if not f.args:
            return f"({f.pred})"
        return "(" + " ".join([f.pred] + [print_term(a) for a in f.args]) + ")"
    if isinstance(f, Eq):
        return f"(= {print_term(f.lhs)} {print_term(f.rhs)})"
    if isinstance(f, Not):
        return f"(not {print_formula(f.body)})"
    if isinstance(f, And):
        return "(and " + " ".join(print_formula(p) for p in f.parts) + ")"
    if isinstance(f, Or):
        return "(or " + " ".join(print_formula(p) for p in f.parts) + ")"
    if isinstance(f, Implies):
        return f"(implies {print_formula(f.antecedent)} {print_formula(f.consequent)})"
    return f"(iff {print_formula(f.lhs)} {print_formula(f.rhs)})"


# ---------------------------------------------------------------------------
# structural helpers

Node = Union[Formula, LTerm]


def children(node: Node) -> tuple[Node, ...]:
    if isinstance(node, (TrueF, FalseF, MetaVar, Literal)):
        return ()
    if isinstance(node, (Atom, Apply)):
        return node.args
    if isinstance(node, Eq):
        return (node.lhs, node.rhs)
    if isinstance(node, Not):
        return (node.body,)
    if isinstance(node, (And, Or)):
        return node.parts
    if isinstance(node, Implies):
        return (node.antecedent, node.consequent)
    if isinstance(node, Iff):
        return (node.lhs, node.rhs)
    return (node.test, node.then, node.els)


def _with_children(node: Node, kids: tuple[Node, ...]) -> Node:
    if isinstance(node, Atom):
        return Atom(node.pred, kids)
    if isinstance(node, Apply):
        return Apply(node.fn, kids)
    if isinstance(node, Eq):
        return Eq(kids[0], kids[1])
    if isinstance(node, Not):
        return Not(kids[0])
    if isinstance(node, And):
        return And(kids)
    if isinstance(node, Or):
        return Or(kids)
    if isinstance(node, Implies):
        return Implies(kids[0], kids[1])
    if isinstance(node, Iff):
        return Iff(kids[0], kids[1])
    if isinstance(node, Cond):
        return Cond(kids[0], kids[1], kids[2])
    raise BadPathError(f"node {node!r} has no children")


def get_at(node: Node, path: tuple[int, ...]) -> Node:
    """Fetch the sub-node at a 1-based child path."""
    for idx in path:
        kids = children(node)
        if not (1 <= idx <= len(kids)):
            raise BadPathError(f"no child {idx} at {node!r}")
        node = kids[idx - 1]
    return node


def replace_at(node: Node, path: tuple[int, ...], new: Node) -> Node:
    if not path:
        return new
    kids = list(children(node))
    idx = path[0]
    if not (1 <= idx <= len(kids)):
        raise BadPathError(f"no child {idx} at {node!r}")
    kids[idx - 1] = replace_at(kids[idx - 1], path[1:], new)
    return _with_children(node, tuple(kids))


def parse_path(text: str) -> tuple[int, ...]:
    """Dot-separated 1-based indices; '-' denotes the root."""
    text = text.strip()
    if text in ("-", ""):
        return ()
    try:
        return tuple(int(p) for p in text.split("."))
    except ValueError as exc:
        raise BadPathError(f"bad path {text!r}") from exc


def metavars_of(node: Node) -> frozenset[MetaVar]:
    out: set[MetaVar] = set()

    def walk(n: Node) -> None:
        if isinstance(n, MetaVar):
            out.add(n)
        for kid in children(n):
            walk(kid)

    walk(node)
    return frozenset(out)


def atom_paths(f: Formula) -> Iterator[tuple[tuple[int, ...], Formula]]:
    """All Atom/Eq occurrences in f with their paths."""

    def walk(n: Node, path: tuple[int, ...]):
        if isinstance(n, (Atom, Eq)):
            yield path, n
            return
        if isinstance(n, (MetaVar, Literal, Apply, Cond)):
            return
        for i, kid in enumerate(children(n), start=1):
            yield from walk(kid, path + (i,))

    yield from walk(f, ())


# ---------------------------------------------------------------------------
# meta-substitution and unification

MetaSubst = dict[str, LTerm]


def apply_subst_term(t: LTerm, sub: MetaSubst) -> LTerm:
    if isinstance(t, MetaVar):
        return sub.get(t.name, t)
    if isinstance(t, Apply):
        return Apply(t.fn, tuple(apply_subst_term(a, sub) for a in t.args))
    if isinstance(t, Cond):
        return Cond(
            apply_subst_formula(t.test, sub),
            apply_subst_term(t.then, sub),
            apply_subst_term(t.els, sub),
        )
    return t


def apply_subst_formula(f: Formula, sub: MetaSubst) -> Formula:
    """Homomorphic application of a meta-substitution."""
    if isinstance(f, Atom):
        return Atom(f.pred, tuple(apply_subst_term(a, sub) for a in f.args))
    if isinstance(f, Eq):
        return Eq(apply_subst_term(f.lhs, sub), apply_subst_term(f.rhs, sub))
    if isinstance(f, Not):
        return Not(apply_subst_formula(f.body, sub))
    if isinstance(f, And):
        return And(tuple(apply_subst_formula(p, sub) for p in f.parts))
    if isinstance(f, Or):
        return Or(tuple(apply_subst_formula(p, sub) for p in f.parts))
    if isinstance(f, Implies):
        return Implies(
            apply_subst_formula(f.antecedent, sub),
            apply_subst_formula(f.consequent, sub),
        )
    if isinstance(f, Iff):
        return Iff(apply_subst_formula(f.lhs, sub), apply_subst_formula(f.rhs, sub))
    return f


def apply_subst(node: Node, sub: MetaSubst) -> Node:
    if isinstance(node, (TrueF, FalseF, Atom, Not, And, Or, Implies, Iff, Eq)):
        return apply_subst_formula(node, sub)
    return apply_subst_term(node, sub)


def compose_meta(s1: MetaSubst, s2: MetaSubst) -> MetaSubst:
    out = {name: apply_subst_term(t, s2) for name, t in s1.items()}
    for name, t in s2.items():
        out.setdefault(name, t)
    return {
        n: t for n, t in out.items() if not (isinstance(t, MetaVar) and t.name == n)
    }


def term_unify(a: Node, b: Node, sig: Signature | None = None) -> Optional[MetaSubst]:
    """Most general syntactic unifier of two formulas or two terms.

    Occurs check included; the result is idempotent.  When two MetaVars
    meet, the one from `a` is bound.
    """
    sig = sig or default_signature()
    sub: MetaSubst = {}

    def walk(x: Node, y: Node) -> bool:
        x = apply_subst(x, sub)
        y = apply_subst(y, sub)
        if x == y:
            return True
        if isinstance(x, MetaVar):
            return bind(x, y)
        if isinstance(y, MetaVar):
            return bind(y, x)
        if type(x) is not type(y):
            return False
        if isinstance(x, Atom) and x.pred != y.pred:
            return False
        if isinstance(x, Apply) and x.fn != y.fn:
            return False
        xk, yk = children(x), children(y)
        if len(xk) != len(yk):
            return False
        return all(walk(p, q) for p, q in zip(xk, yk))

    def bind(v: MetaVar, t: Node) -> bool:
        if not isinstance(t, (MetaVar, Literal, Apply, Cond)):
            return False
        if v.sort != "?" and term_sort(t, sig) != v.sort:
            return False
        if v in metavars_of(t):
            return False
        one = {v.name: t}
        for name in list(sub):
            sub[name] = apply_subst_term(sub[name], one)
        sub[v.name] = t
        return True

    if walk(a, b):
        return sub
    return None


def rename_metavars(node: Node, mapping: dict[str, str]) -> Node:
    sub = {
        old: MetaVar(new, mv.sort)
        for mv in metavars_of(node)
        for old, new in [(mv.name, mapping.get(mv.name))]
        if new is not None
    }
    return apply_subst(node, sub)


# ---------------------------------------------------------------------------
# normalization

def normalize(f: Formula, expand_implies: bool = False) -> Formula:
    """Propositional simplification with negations pushed inward.

    Flattens and deduplicates and/or, removes true/false units, applies
    double negation, and simplifies implications and equivalences with
    constant sides.  Implies is rewritten as a disjunction only when
    expand_implies is set; Iff atoms are preserved.
    """
    if isinstance(f, (TrueF, FalseF, Atom, Eq)):
        return f
    if isinstance(f, Not):
        body = normalize(f.body, expand_implies)
        if isinstance(body, TrueF):
            return FALSE
        if isinstance(body, FalseF):
            return TRUE
        if isinstance(body, Not):
            return body.body
        if isinstance(body, And):
            return normalize(Or(tuple(Not(p) for p in body.parts)), expand_implies)
        if isinstance(body, Or):
            return normalize(And(tuple(Not(p) for p in body.parts)), expand_implies)
        if isinstance(body, Implies):
            return normalize(
                And((body.antecedent, Not(body.consequent))), expand_implies
            )
        return Not(body)
    if isinstance(f, And):
        return _normalize_junction(f.parts, And, TrueF, FalseF, expand_implies)
    if isinstance(f, Or):
        return _normalize_junction(f.parts, Or, FalseF, TrueF, expand_implies)
    if isinstance(f, Implies):
        p = normalize(f.antecedent, expand_implies)
        q = normalize(f.consequent, expand_implies)
        if expand_implies:
            return normalize(Or((Not(p), q)), expand_implies)
        if isinstance(p, TrueF):
            return q
        if isinstance(p, FalseF) or isinstance(q, TrueF):
            return TRUE
        if isinstance(q, FalseF):
            return normalize(Not(p), expand_implies)
        return Implies(p, q)
    if isinstance(f, Iff):
        lhs = normalize(f.lhs, expand_implies)
        rhs = normalize(f.rhs, expand_implies)
        if lhs == rhs:
            return TRUE
        if isinstance(lhs, TrueF):
            return rhs
        if isinstance(rhs, TrueF):
            return lhs
        if isinstance(lhs, FalseF):
            return normalize(Not(rhs), expand_implies)
        if isinstance(rhs, FalseF):
            return normalize(Not(lhs), expand_implies)
        return Iff(lhs, rhs)
    return f


def _normalize_junction(parts, ctor, unit, absorber, expand_implies: bool) -> Formula:
    flat: list[Formula] = []
    for p in parts:
        p = normalize(p, expand_implies)
        if isinstance(p, unit):
            continue
        if isinstance(p, absorber):
            return absorber()
        if isinstance(p, ctor):
            flat.extend(q for q in p.parts if q not in flat)
        elif p not in flat:
            flat.append(p)
    if not flat:
        return unit()
    if len(flat) == 1:
        return flat[0]
    return ctor(tuple(flat))
