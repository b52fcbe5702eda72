"""Extracted programs: interpretation, simplification, and emission.

The interpreter evaluates bodies over runtime values (expressions,
substitutions, variable-name sets, integers) with strict primitives and
a lazy conditional.  Self-calls consume fuel, and can be checked for
strict decrease under a registered well-founded relation.
"""

from __future__ import annotations

from . import logic as L
from . import subst as S
from . import term as T
from .logic import Apply, Atom, Cond, Eq, Formula, LTerm, MetaVar, Signature
from .tableau import ProgramDef
from .wf import InputTriple, u_less


class ProgramError(Exception):
    pass


class FuelExhaustedError(ProgramError):
    pass


class DecreaseViolationError(ProgramError):
    def __init__(self, parent, child):
        super().__init__(
            f"self-call does not decrease: {child} under parent {parent}"
        )
        self.parent = parent
        self.child = child


class PrimitiveError(ProgramError):
    pass


Value = object  # Expr | Subst | frozenset[str] | int | bool | InputTriple


def interpret(
    p: ProgramDef,
    args: list[Value],
    fuel: int = 10000,
    check_decrease: bool = False,
    calls: list | None = None,
) -> Value:
    """Evaluate p on the given argument values.

    With check_decrease set (and a decrease relation recorded on p),
    every self-call must be strictly smaller than its parent under the
    unification measure.  `calls` collects (parent_args, child_args)
    pairs when provided.
    """
    if len(args) != len(p.params):
        raise ProgramError(f"{p.name} expects {len(p.params)} arguments")
    for value, (name, sort) in zip(args, p.params):
        want = S.Proper if sort == "subst" else (T.Const, T.Var, T.Cons)
        if sort == "subst" and isinstance(value, S.Failure):
            continue
        if not isinstance(value, want):
            raise ProgramError(f"argument {name} is not of sort {sort}")
    state = {"fuel": fuel}

    def call(argvals: list[Value]) -> Value:
        env = {name: v for (name, _), v in zip(p.params, argvals)}

        def term(t: LTerm) -> Value:
            if isinstance(t, Apply):
                if t.fn == p.name:
                    child = [term(a) for a in t.args]
                    if calls is not None:
                        calls.append((list(argvals), list(child)))
                    if check_decrease and p.decrease is not None:
                        _check_decrease(argvals, child)
                    if state["fuel"] <= 0:
                        raise FuelExhaustedError(f"{p.name}: fuel exhausted")
                    state["fuel"] -= 1
                    return call(child)
                if not t.args and t.fn in env:
                    return env[t.fn]
                return eval_apply(t.fn, [term(a) for a in t.args])
            if isinstance(t, Cond):
                return term(t.then) if formula(t.test) else term(t.els)
            if isinstance(t, L.Literal):
                return t.value
            if isinstance(t, MetaVar):
                raise ProgramError(f"unbound metavar {t.name} in program body")
            raise ProgramError(f"cannot evaluate {t!r}")

        def formula(f: Formula) -> bool:
            return eval_formula(f, env, self_call=term_self)

        def term_self(t: LTerm) -> Value:
            return term(t)

        return term(p.body)

    def _check_decrease(parent, child):
        if not u_less(_as_triple(child), _as_triple(parent)):
            raise DecreaseViolationError(tuple(parent), tuple(child))

    return call(list(args))


def _as_triple(vals) -> InputTriple:
    if len(vals) != 3:
        raise ProgramError("decrease checking expects (env, e1, e2) arguments")
    return InputTriple(vals[0], vals[1], vals[2])


# ---------------------------------------------------------------------------
# semantics of the fixed signature over runtime values

def eval_apply(fn: str, vals: list[Value]) -> Value:
    try:
        return _FUNCTIONS[fn](*vals)
    except KeyError:
        raise PrimitiveError(f"unknown function {fn}") from None
    except (T.ExprError, S.SubstError) as exc:
        raise PrimitiveError(str(exc)) from exc


def _vs_apply(v: frozenset, s: S.Subst) -> frozenset:
    out: frozenset[str] = frozenset()
    for name in v:
        out |= T.vars_of(S.apply(T.Var(name), s))
    return out


_FUNCTIONS = {
    "cons": lambda a, b: T.Cons(a, b),
    "left": T.left_of,
    "right": T.right_of,
    "apply": S.apply,
    "compose": S.compose,
    "replace": lambda x, e: _replace_value(x, e),
    "empty-subst": lambda: S.EMPTY,
    "bot": lambda: S.BOT,
    "vars": T.vars_of,
    "vars2": lambda a, b: T.vars_of(a) | T.vars_of(b),
    "vs-apply": _vs_apply,
    "dom": S.dom_of,
    "range": S.range_of,
    "size": T.size_of,
    "union": lambda a, b: a | b,
    "tuple2": lambda a, b: T.encode_tuple([a, b]),
    "tuple3": lambda s, a, b: InputTriple(s, a, b),
}


def _replace_value(x: T.Expr, e: T.Expr) -> S.Subst:
    if not isinstance(x, T.Var):
        raise PrimitiveError("replace needs a variable as its first argument")
    return S.replacement(x.name, e)


def eval_term(t: LTerm, env: dict[str, Value], relations=None) -> Value:
    if isinstance(t, Apply):
        if not t.args and t.fn in env:
            return env[t.fn]
        if not t.args and t.fn not in _FUNCTIONS:
            return t.fn  # an uninterpreted constant, e.g. a relation name
        return eval_apply(t.fn, [eval_term(a, env, relations) for a in t.args])
    if isinstance(t, Cond):
        branch = t.then if eval_formula(t.test, env, relations) else t.els
        return eval_term(branch, env, relations)
    if isinstance(t, L.Literal):
        return t.value
    if isinstance(t, MetaVar):
        if t.name in env:
            return env[t.name]
        raise ProgramError(f"unbound metavar {t.name}")
    raise ProgramError(f"cannot evaluate {t!r}")


def eval_formula(
    f: Formula, env: dict[str, Value], relations=None, self_call=None
) -> bool:
    """Ground truth of a formula under runtime values."""

    def term(t: LTerm) -> Value:
        if self_call is not None:
            return self_call(t)
        return eval_term(t, env, relations)

    if isinstance(f, L.TrueF):
        return True
    if isinstance(f, L.FalseF):
        return False
    if isinstance(f, Eq):
        return term(f.lhs) == term(f.rhs)
    if isinstance(f, Atom):
        vals = [term(a) for a in f.args]
        return _eval_pred(f.pred, vals, relations)
    if isinstance(f, L.Not):
        return not eval_formula(f.body, env, relations, self_call)
    if isinstance(f, L.And):
        return all(eval_formula(p, env, relations, self_call) for p in f.parts)
    if isinstance(f, L.Or):
        return any(eval_formula(p, env, relations, self_call) for p in f.parts)
    if isinstance(f, L.Implies):
        return not eval_formula(f.antecedent, env, relations, self_call) or eval_formula(
            f.consequent, env, relations, self_call
        )
    if isinstance(f, L.Iff):
        return eval_formula(f.lhs, env, relations, self_call) == eval_formula(
            f.rhs, env, relations, self_call
        )
    raise ProgramError(f"cannot evaluate formula {f!r}")


def _eval_pred(pred: str, vals: list[Value], relations) -> bool:
    from . import unify as U
    from . import wf as W

    if pred == "wf-ordered":
        name, t1, t2 = vals
        relations = relations or {}
        if name == "u-rel":
            return u_less(t1, t2)
        if name in relations:
            return W.rel_less(relations[name], t1, t2)
        raise ProgramError(f"unknown relation {name}")
    table = {
        "is-atom": lambda e: T.is_atom(e),
        "is-const": lambda e: T.is_const(e),
        "is-var": lambda e: T.is_var(e),
        "is-proper": lambda s: S.is_proper(s),
        "occurs-proper": lambda a, b: T.occurs_in(a, b, "proper"),
        "occurs-refl": lambda a, b: T.occurs_in(a, b, "reflexive"),
        "misses": lambda s, e: S.misses(s, e),
        "idem": lambda s: S.is_idempotent(s),
        "more-genid": lambda a, b: S.more_general(a, b),
        "mgi": lambda env, a, b, s: U.mgi_decide(env, a, b, s),
        "mgiu": lambda env, a, b, s: U.mgiu_check(env, a, b, s).ok,
        "reduce": lambda env, v, s: U.reduce_holds(env, v, s),
        "subset": lambda a, b: a <= b,
        "proper-subset": lambda a, b: a < b,
        "size-lt": lambda a, b: T.size_of(a) < T.size_of(b),
    }
    if pred not in table:
        raise ProgramError(f"unknown predicate {pred}")
    return table[pred](*vals)


# ---------------------------------------------------------------------------
# simplification

def simplify(body: LTerm) -> LTerm:
    """Rewrite conditionals to a fixpoint, preserving meaning.

    Rules: same-branch collapse, constant tests, and elimination of a
    test repeated immediately inside one of its own branches.
    """
    while True:
        new = _simplify_once(body)
        if new == body:
            return new
        body = new


def _simplify_once(t: LTerm) -> LTerm:
    if isinstance(t, Apply):
        return Apply(t.fn, tuple(_simplify_once(a) for a in t.args))
    if not isinstance(t, Cond):
        return t
    test = t.test
    then = _simplify_once(t.then)
    els = _simplify_once(t.els)
    if isinstance(test, L.TrueF):
        return then
    if isinstance(test, L.FalseF):
        return els
    if then == els:
        return then
    if isinstance(then, Cond) and then.test == test:
        then = then.then
    if isinstance(els, Cond) and els.test == test:
        els = els.els
    return Cond(test, then, els)


# ---------------------------------------------------------------------------
# text form

def emit(p: ProgramDef) -> str:
    """Canonical program text; parse_program inverts it."""
    params = " ".join(name for name, _ in p.params)
    body = _pp_term(p.body, indent=2)
    return f"(define ({p.name} {params})\n{body})\n"


def _pp_term(t: LTerm, indent: int) -> str:
    pad = " " * indent
    if isinstance(t, Cond):
        return (
            f"{pad}(if {L.print_formula(t.test)}\n"
            f"{_pp_term(t.then, indent + 4)}\n"
            f"{_pp_term(t.els, indent + 4)})"
        )
    return pad + L.print_term(t)


def parse_program(text: str, sig: Signature | None = None) -> ProgramDef:
    """Parse `(define (name params...) body)`; params get default sorts."""
    tokens = L._tokenize(text)
    if tokens[:2] != ["(", "define"] or tokens[2] != "(":
        raise ProgramError("expected (define (name params...) body)")
    idx = 3
    name = tokens[idx]
    idx += 1
    params = []
    while tokens[idx] != ")":
        params.append(tokens[idx])
        idx += 1
    idx += 1
    sig = sig or L.default_signature()
    sorts = _default_param_sorts(params)
    for pname, sort in zip(params, sorts):
        sig.add_constant(pname, sort)
    sig.add_function(name, tuple(sorts), sorts[0])
    body_tokens = tokens[idx:]
    if not body_tokens or body_tokens[-1] != ")":
        raise ProgramError("unterminated define")
    raw, rest = L._parse_term(body_tokens[:-1], sig)
    if rest:
        raise ProgramError(f"trailing tokens: {' '.join(rest)}")
    body = L._resolve_sorts_term(raw, sig)
    _check_body_symbols(body, name, set(params))
    return ProgramDef(name, tuple(zip(params, sorts)), body, "u-rel")


def _check_body_symbols(body: LTerm, name: str, params: set[str]) -> None:
    from .tableau import PRIMITIVE_FUNCTIONS, PRIMITIVE_PREDICATES

    def walk_term(t: LTerm) -> None:
        if isinstance(t, Apply):
            if not (t.fn in PRIMITIVE_FUNCTIONS or t.fn == name or t.fn in params):
                raise ProgramError(f"nonprimitive symbol {t.fn} in program body")
            for a in t.args:
                walk_term(a)
        elif isinstance(t, Cond):
            walk_formula(t.test)
            walk_term(t.then)
            walk_term(t.els)

    def walk_formula(f: Formula) -> None:
        if isinstance(f, Atom):
            if f.pred not in PRIMITIVE_PREDICATES:
                raise ProgramError(f"nonprimitive predicate {f.pred} in program body")
            for a in f.args:
                walk_term(a)
        elif isinstance(f, Eq):
            walk_term(f.lhs)
            walk_term(f.rhs)
        else:
            for kid in L.children(f):
                walk_formula(kid)  # type: ignore[arg-type]

    walk_term(body)


def _default_param_sorts(params: list[str]) -> list[str]:
    # environment-carrying programs: substitution first, expressions after
    if len(params) == 3:
        return ["subst", "expr", "expr"]
    return ["expr"] * len(params)
