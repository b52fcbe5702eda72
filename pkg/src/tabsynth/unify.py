"""Environment-carrying unification and its specification predicates.

``reference_unify`` is the derived three-argument algorithm, transcribed
as a fixed decision tree.  ``oracle_unify`` is an independent textbook
algorithm used to cross-check it and to decide the most-general
idempotence relation.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .term import Cons, Expr, Var, encode_tuple, is_const, is_var, occurs_in, vars_of
from .subst import (
    BOT,
    Proper,
    Subst,
    apply,
    compose,
    is_idempotent,
    is_proper,
    make_subst,
    misses,
    more_general,
    range_of,
    replacement,
)


class FuelExhaustedError(Exception):
    """Recursion budget ran out (possible with a non-idempotent environment)."""


def reference_unify(env: Subst, e1: Expr, e2: Expr, fuel: int = 10000) -> Subst:
    """Unify e1 and e2 as an extension of env, or return bot.

    The test order is fixed: properness of the environment, occurs
    check, equality, the constant cases, the variable cases (replacement
    or recursion on environment instances), then the nested recursion on
    components.  fuel bounds the total number of calls; only a
    non-idempotent environment can exhaust it.
    """
    cell = [fuel]
    return _unify(env, e1, e2, cell)


def _unify(env: Subst, e1: Expr, e2: Expr, fuel: list[int]) -> Subst:
    if fuel[0] <= 0:
        raise FuelExhaustedError("unification did not terminate within fuel")
    fuel[0] -= 1
    if not is_proper(env):
        return BOT
    if occurs_in(e1, e2, "proper"):
        return BOT
    if e1 == e2:
        return env
    if is_const(e1):
        if is_const(e2):
            return BOT
        if is_var(e2):
            return _unify(env, e2, e1, fuel)
        return BOT
    if is_var(e1):
        assert isinstance(e1, Var)
        if misses(env, e2):
            if misses(env, e1):
                return compose(env, replacement(e1.name, e2))
            return _unify(env, apply(e1, env), apply(e2, env), fuel)
        return _unify(env, apply(e1, env), apply(e2, env), fuel)
    if is_const(e2):
        return BOT
    if is_var(e2):
        return _unify(env, e2, e1, fuel)
    assert isinstance(e1, Cons) and isinstance(e2, Cons)
    return _unify(_unify(env, e1.left, e2.left, fuel), e1.right, e2.right, fuel)


def _dapply(e: Expr, sol: dict[str, Expr]) -> Expr:
    # local substitution application so the oracle shares no logic with
    # reference_unify beyond the data types
    if isinstance(e, Var):
        return sol.get(e.name, e)
    if isinstance(e, Cons):
        return Cons(_dapply(e.left, sol), _dapply(e.right, sol))
    return e


def _dbind(sol: dict[str, Expr], name: str, image: Expr) -> None:
    one = {name: image}
    for k in list(sol):
        sol[k] = _dapply(sol[k], one)
    sol[name] = image


def _mm_solve(a: Expr, b: Expr) -> Optional[dict[str, Expr]]:
    """Worklist unification with occurs check; idempotent solved form."""
    sol: dict[str, Expr] = {}
    work = [(a, b)]
    while work:
        s, t = work.pop()
        s, t = _dapply(s, sol), _dapply(t, sol)
        if s == t:
            continue
        if isinstance(s, Var):
            if s.name in vars_of(t):
                return None
            _dbind(sol, s.name, t)
        elif isinstance(t, Var):
            if t.name in vars_of(s):
                return None
            _dbind(sol, t.name, s)
        elif isinstance(s, Cons) and isinstance(t, Cons):
            work.append((s.right, t.right))
            work.append((s.left, t.left))
        else:
            return None
    return sol


def oracle_unify(env: Subst, e1: Expr, e2: Expr) -> Subst:
    """Textbook cross-check: unify the env-instances, then compose with env.

    Requires a proper, idempotent environment.  Returns an idempotent
    extension of env unifying e1 and e2, or bot when none exists.
    """
    if not (is_proper(env) and is_idempotent(env)):
        raise ValueError("oracle_unify requires a proper idempotent environment")
    sol = _mm_solve(apply(e1, env), apply(e2, env))
    if sol is None:
        return BOT
    out = compose(env, make_subst(sol.items()))
    assert is_idempotent(out), "oracle produced a non-idempotent unifier"
    return out


def is_unifier(s: Subst, e1: Expr, e2: Expr) -> bool:
    """True iff applying s makes e1 and e2 identical."""
    return apply(e1, s) == apply(e2, s)


def reduce_holds(env: Subst, v: frozenset[str], s: Subst) -> bool:
    """The reduction relation: range(s) within range(env) union v."""
    return range_of(s) <= range_of(env) | v


def mgi_decide(env: Subst, e1: Expr, e2: Expr, s: Subst) -> bool:
    """Decide the most-general idempotence relation through the oracle.

    If the expressions are ununifiable over env the relation holds
    vacuously; otherwise s must be strongly more general than the
    oracle's unifier (itself most-general idempotent, so the comparison
    is sound and complete by mutual generality).
    """
    best = oracle_unify(env, e1, e2)
    if best == BOT:
        return True
    return compose(s, best) == best


def mgi_refute_witness(
    env: Subst, e1: Expr, e2: Expr, s: Subst, witnesses: list[Subst]
) -> Optional[Subst]:
    """First witness refuting mgi(env, e1, e2, s) among the candidates.

    A refutation is a unifier of e1 and e2 extending env that s is not
    strongly more general than.
    """
    for w in witnesses:
        if is_unifier(w, e1, e2) and more_general(env, w) and not more_general(s, w):
            return w
    return None


@dataclass(frozen=True)
class MgiuReport:
    """The four conjuncts of the unification output contract."""

    unifier_ok: bool
    extension_ok: bool
    most_general_ok: bool
    reduce_ok: bool
    oracle_used: Subst

    @property
    def ok(self) -> bool:
        return (
            self.unifier_ok
            and self.extension_ok
            and self.most_general_ok
            and self.reduce_ok
        )


def mgiu_check(env: Subst, e1: Expr, e2: Expr, s: Subst) -> MgiuReport:
    """Check that s is a most-general idempotent reducing unifier for env."""
    if not (is_proper(env) and is_idempotent(env)):
        raise ValueError("mgiu_check requires a proper idempotent environment")
    v = vars_of(apply(encode_tuple([e1, e2]), env))
    return MgiuReport(
        unifier_ok=is_unifier(s, e1, e2),
        extension_ok=more_general(env, s),
        most_general_ok=mgi_decide(env, e1, e2, s),
        reduce_ok=reduce_holds(env, v, s),
        oracle_used=oracle_unify(env, e1, e2),
    )
