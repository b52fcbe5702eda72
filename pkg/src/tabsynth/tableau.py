"""Deductive-tableau rows and rules with answer extraction.

A tableau holds assertion and goal rows, each with an optional output
entry.  Rules add rows while preserving the allowable outputs; a final
row (goal true, or assertion false, with an output) yields the
synthesized program.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import logic as L
from .logic import (
    And,
    Apply,
    Atom,
    Cond,
    Eq,
    FalseF,
    Formula,
    Iff,
    Implies,
    LTerm,
    MetaVar,
    Not,
    Or,
    Signature,
    TrueF,
    default_signature,
    normalize,
)
from .wf import RelSpec


class TableauError(Exception):
    pass


class IllFormedSpecError(TableauError):
    pass


class UnknownLemmaError(TableauError):
    pass


class UnknownRelationError(TableauError):
    pass


class NotInitialError(TableauError):
    pass


class NotUnifiableError(TableauError):
    pass


class BadPathError(TableauError):
    pass


class NotSplittableError(TableauError):
    pass


class NotOrphanError(TableauError):
    pass


ASSERTION = "assertion"
GOAL = "goal"

# symbols allowed in extracted program bodies (beyond parameters and the
# program's own name)
PRIMITIVE_FUNCTIONS = frozenset(
    ["bot", "empty-subst", "left", "right", "apply", "compose", "replace", "cons"]
)
PRIMITIVE_PREDICATES = frozenset(
    ["is-proper", "is-atom", "is-const", "is-var", "occurs-proper", "misses"]
)


@dataclass(frozen=True)
class Justification:
    rule: str
    parents: tuple[int, ...] = ()
    paths: tuple[str, ...] = ()
    unifier: str = ""
    note: str = ""

    def render(self) -> str:
        parts = [self.rule]
        if self.parents:
            links = ", ".join(
                f"{rid}@{path}" if path else str(rid)
                for rid, path in zip(
                    self.parents, list(self.paths) + [""] * len(self.parents)
                )
            )
            parts.append(f"({links})")
        if self.unifier:
            parts.append(self.unifier)
        if self.note:
            parts.append(self.note)
        return " ".join(parts)


@dataclass(frozen=True)
class Row:
    rid: int
    kind: str
    formula: Formula
    output: LTerm | None
    just: Justification

    def is_final(self) -> bool:
        if self.output is None:
            return False
        if self.kind == GOAL:
            return isinstance(self.formula, TrueF)
        return isinstance(self.formula, FalseF)


@dataclass(frozen=True)
class ProgramSpec:
    """find <output> such that <condition>, for program name(params)."""

    name: str
    params: tuple[tuple[str, str], ...]
    output: MetaVar | None
    condition: Formula


@dataclass(frozen=True)
class ProgramDef:
    name: str
    params: tuple[tuple[str, str], ...]
    body: LTerm
    decrease: str | None = None


def _mk_cond(test: Formula, then: LTerm, els: LTerm) -> LTerm:
    if then == els:
        return then
    if isinstance(test, TrueF):
        return then
    if isinstance(test, FalseF):
        return els
    return Cond(test, then, els)


class Tableau:
    """Single-owner mutable tableau; rows are immutable once created."""

    def __init__(
        self,
        spec: ProgramSpec,
        sig: Signature | None = None,
        lemmas: dict[str, Formula] | None = None,
        relations: dict[str, RelSpec] | None = None,
        strict: bool = True,
        primitive_fns: frozenset[str] = PRIMITIVE_FUNCTIONS,
        primitive_preds: frozenset[str] = PRIMITIVE_PREDICATES,
    ):
        self.spec = spec
        self.sig = sig or default_signature()
        self.lemmas = dict(lemmas or {})
        self.relations = dict(relations or {})
        self.strict = strict
        self.primitive_fns = primitive_fns
        self.primitive_preds = primitive_preds
        self.rows: list[Row] = []
        self.decrease: str | None = None
        self._fresh = 0
        self._init()

    # -- construction -------------------------------------------------

    def _init(self) -> None:
        cond = normalize(self.spec.condition)
        mvs = {mv.name for mv in L.metavars_of(cond)}
        allowed = {self.spec.output.name} if self.spec.output else set()
        if mvs - allowed:
            raise IllFormedSpecError(
                f"condition mentions free metavars {sorted(mvs - allowed)}"
            )
        self._append(GOAL, cond, self.spec.output, Justification("init"))

    def _append(self, kind: str, formula: Formula, output: LTerm | None, just) -> Row:
        row = Row(len(self.rows) + 1, kind, formula, output, just)
        self.rows.append(row)
        return row

    def row(self, rid: int) -> Row:
        if not (1 <= rid <= len(self.rows)):
            raise TableauError(f"no row {rid}")
        return self.rows[rid - 1]

    def truncate(self, length: int) -> None:
        """Drop rows from the end (used by search to discard dead ends)."""
        if length < 1 or length > len(self.rows):
            raise TableauError("bad truncation length")
        del self.rows[length:]

    def render_row(self, row: Row) -> str:
        tag = "A" if row.kind == ASSERTION else "G"
        out = L.print_term(row.output) if row.output is not None else ""
        return f"#{row.rid} [{tag}] {L.print_formula(row.formula)} | {out} | {row.just.render()}"

    # -- fresh renaming (standardize apart) ---------------------------

    def _rename_apart(self, *nodes):
        """Fresh-rename every metavar occurring in the given nodes."""
        names = set()
        for node in nodes:
            if node is not None:
                names |= {mv.name for mv in L.metavars_of(node)}
        mapping = {}
        for name in sorted(names):
            self._fresh += 1
            mapping[name] = f"{name.split('#', 1)[0]}#{self._fresh}"
        return [
            None if node is None else L.rename_metavars(node, mapping)
            for node in nodes
        ]

    # -- row-entry operations ------------------------------------------

    def add_assertion(
        self,
        formula: Formula | None = None,
        output: LTerm | None = None,
        name: str | None = None,
        assumption: bool = False,
    ) -> Row:
        """Enter a registered lemma (by name) or a scripted case assumption."""
        if name is not None:
            if name not in self.lemmas:
                raise UnknownLemmaError(f"lemma {name!r} is not registered")
            formula = self.lemmas[name]
        elif self.strict and not assumption:
            raise UnknownLemmaError("strict mode requires a registered lemma name")
        if formula is None:
            raise TableauError("no formula to assert")
        L.check_formula(formula, self.sig)
        just = Justification("assume" if assumption else "assert", note=name or "")
        return self._append(ASSERTION, normalize(formula), output, just)

    def dualize(self, rid: int) -> Row:
        row = self.row(rid)
        kind = GOAL if row.kind == ASSERTION else ASSERTION
        return self._append(
            kind, normalize(Not(row.formula)), row.output, Justification("dualize", (rid,))
        )

    def drop_orphan_output(self, rid: int) -> Row:
        row = self.row(rid)
        if row.output is None or not isinstance(row.output, MetaVar):
            raise NotOrphanError("output entry is not a lone metavar")
        if row.output in L.metavars_of(row.formula):
            raise NotOrphanError("output metavar occurs in the row formula")
        return self._append(row.kind, row.formula, None, Justification("orphan", (rid,)))

    # -- structural rules ----------------------------------------------

    def split_row(self, rid: int) -> list[Row]:
        row = self.row(rid)
        just = lambda: Justification("split", (rid,))  # noqa: E731
        if row.kind == GOAL:
            if isinstance(row.formula, Implies):
                a = self._append(ASSERTION, row.formula.antecedent, row.output, just())
                g = self._append(GOAL, row.formula.consequent, row.output, just())
                return [a, g]
            dist = _distribute_and(row.formula)
            if isinstance(dist, Or):
                return [self._append(GOAL, p, row.output, just()) for p in dist.parts]
            raise NotSplittableError("goal is neither an implication nor a disjunction")
        dist = _distribute_or(row.formula)
        if isinstance(dist, And):
            return [
                self._append(ASSERTION, p, row.output, just()) for p in dist.parts
            ]
        raise NotSplittableError("assertion has no conjunctive structure")

    # -- the resolution rule -------------------------------------------

    def resolve(self, rid1: int, path1: str, rid2: int, path2: str) -> Row:
        """Nonclausal resolution on a shared subformula occurrence.

        The occurrence in row1 is taken true, the one in row2 false; the
        conditional output (when both parents carry outputs) follows the
        same orientation.
        """
        row1, row2 = self.row(rid1), self.row(rid2)
        f2, out2 = self._rename_apart(row2.formula, row2.output)
        assert not (
            {mv.name for mv in L.metavars_of(row1.formula)}
            & {mv.name for mv in L.metavars_of(f2)}
        ), "rows share metavars after standardizing apart"
        p1, p2 = L.parse_path(path1), L.parse_path(path2)
        occ1 = self._formula_at(row1.formula, p1)
        occ2 = self._formula_at(f2, p2)
        theta = L.term_unify(occ2, occ1, self.sig)
        if theta is None:
            raise NotUnifiableError(
                f"{L.print_formula(occ1)} does not unify with {L.print_formula(occ2)}"
            )
        test = L.apply_subst_formula(occ1, theta)
        g1 = self._goal_sense(
            L.apply_subst_formula(L.replace_at(row1.formula, p1, L.TRUE), theta),
            row1.kind,
        )
        g2 = self._goal_sense(
            L.apply_subst_formula(L.replace_at(f2, p2, L.FALSE), theta), row2.kind
        )
        combined = normalize(And((g1, g2)))
        output = self._outputs(test, row1.output, out2, theta)
        just = Justification(
            "resolve", (rid1, rid2), (path1, path2), _print_meta(theta)
        )
        return self._emit(combined, row1.kind, row2.kind, output, just)

    # -- replacement rules ----------------------------------------------

    def equality_replace(
        self, eq_rid: int, eq_path: str, target_rid: int, target_path: str, direction: str
    ) -> Row:
        return self._replace(eq_rid, eq_path, target_rid, target_path, direction, Eq)

    def equivalence_replace(
        self, iff_rid: int, iff_path: str, target_rid: int, target_path: str, direction: str
    ) -> Row:
        return self._replace(iff_rid, iff_path, target_rid, target_path, direction, Iff)

    def _replace(self, rid1, path1, rid2, path2, direction, node_type) -> Row:
        if direction not in ("ltr", "rtl"):
            raise TableauError(f"direction must be ltr or rtl, not {direction!r}")
        row1, row2 = self.row(rid1), self.row(rid2)
        p1, p2 = L.parse_path(path1), L.parse_path(path2)
        eqnode = L.get_at(row1.formula, p1)
        if not isinstance(eqnode, node_type):
            raise BadPathError(f"row {rid1} at {path1} is not {node_type.__name__}")
        f2, out2 = self._rename_apart(row2.formula, row2.output)
        assert not (
            {mv.name for mv in L.metavars_of(row1.formula)}
            & {mv.name for mv in L.metavars_of(f2)}
        ), "rows share metavars after standardizing apart"
        target = L.get_at(f2, p2)
        if node_type is Eq and not isinstance(target, (MetaVar, Apply, Cond, L.Literal)):
            raise BadPathError("equality replacement needs a term occurrence")
        if node_type is Iff and not isinstance(
            target, (Atom, Eq, Not, And, Or, Implies, Iff, TrueF, FalseF)
        ):
            raise BadPathError("equivalence replacement needs a formula occurrence")
        src, dst = (
            (eqnode.lhs, eqnode.rhs) if direction == "ltr" else (eqnode.rhs, eqnode.lhs)
        )
        theta = L.term_unify(target, src, self.sig)
        if theta is None:
            raise NotUnifiableError("selected occurrence does not unify with the side")
        rewritten = L.apply_subst(L.replace_at(f2, p2, dst), theta)
        g1 = self._goal_sense(
            L.apply_subst_formula(L.replace_at(row1.formula, p1, L.FALSE), theta),
            row1.kind,
        )
        g2 = self._goal_sense(rewritten, row2.kind)
        combined = normalize(And((g1, g2)))
        test = L.apply_subst_formula(eqnode, theta)
        output = self._outputs(test, out2, row1.output, theta)
        rule = "eqrepl" if node_type is Eq else "iffrepl"
        just = Justification(
            rule, (rid1, rid2), (path1, path2, direction), _print_meta(theta)
        )
        return self._emit(combined, row1.kind, row2.kind, output, just)

    # -- induction -------------------------------------------------------

    def insert_induction_hypothesis(self, relname: str) -> Row:
        if relname not in self.relations:
            raise UnknownRelationError(f"relation {relname!r} is not registered")
        if any(r.just.rule != "init" for r in self.rows):
            raise NotInitialError("induction applies only to the initial tableau")
        if self.spec.output is None:
            raise IllFormedSpecError("induction needs an output to recurse on")
        primed = [
            MetaVar(name.upper().replace("_", "") + "'", sort)
            for name, sort in self.spec.params
        ]
        actual = [Apply(name) for name, _ in self.spec.params]
        call = Apply(self.spec.name, tuple(primed))
        sub = {name: mv for (name, _), mv in zip(self.spec.params, primed)}
        cond = _instantiate_params(self.spec.condition, sub)
        cond = L.apply_subst_formula(cond, {self.spec.output.name: call})
        wf = Atom(
            "wf-ordered",
            (Apply(relname), self._measure_tuple(primed), self._measure_tuple(actual)),
        )
        self.decrease = relname
        return self._append(
            ASSERTION,
            normalize(Implies(wf, cond)),
            None,
            Justification("induct", note=relname),
        )

    def _measure_tuple(self, items: list) -> LTerm:
        sorts = tuple(sort for _, sort in self.spec.params)
        if sorts == ("subst", "expr", "expr"):
            return Apply("tuple3", tuple(items))
        if len(items) == 1:
            # single-input programs compare the argument itself; relax the
            # ordering predicate to that sort in this tableau's signature
            self.sig.predicates["wf-ordered"] = ("rel", sorts[0], sorts[0])
            return items[0]
        raise IllFormedSpecError(f"no tuple encoding for parameter sorts {sorts}")

    # -- extraction ------------------------------------------------------

    def extract_program(self) -> ProgramDef | None:
        """The program of the first final row with a primitive output."""
        for row in self.rows:
            if row.is_final() and self.is_primitive(row.output):
                return ProgramDef(
                    self.spec.name, self.spec.params, row.output, self.decrease
                )
        return None

    def is_primitive(self, body: LTerm) -> bool:
        params = {name for name, _ in self.spec.params}

        def walk_term(t: LTerm) -> bool:
            if isinstance(t, MetaVar):
                return True
            if isinstance(t, Apply):
                ok = (
                    t.fn in self.primitive_fns
                    or t.fn == self.spec.name
                    or (t.fn in params and not t.args)
                )
                return ok and all(walk_term(a) for a in t.args)
            if isinstance(t, Cond):
                return (
                    walk_formula(t.test) and walk_term(t.then) and walk_term(t.els)
                )
            return True

        def walk_formula(f: Formula) -> bool:
            if isinstance(f, Atom):
                return f.pred in self.primitive_preds and all(
                    walk_term(a) for a in f.args
                )
            if isinstance(f, Eq):
                return walk_term(f.lhs) and walk_term(f.rhs)
            return all(
                walk_formula(kid)  # type: ignore[arg-type]
                for kid in L.children(f)
            )

        return walk_term(body)

    # -- helpers ---------------------------------------------------------

    def _formula_at(self, f: Formula, path: tuple[int, ...]) -> Formula:
        occ = L.get_at(f, path)
        if not isinstance(occ, (Atom, Eq, TrueF, FalseF)):
            raise BadPathError("resolution selects atomic subformulas")
        return occ

    def _goal_sense(self, f: Formula, kind: str) -> Formula:
        return f if kind == GOAL else Not(f)

    def _outputs(self, test, then_out, else_out, theta):
        t1 = L.apply_subst_term(then_out, theta) if then_out is not None else None
        t2 = L.apply_subst_term(else_out, theta) if else_out is not None else None
        if t1 is not None and t2 is not None:
            return _mk_cond(test, t1, t2)
        return t1 if t1 is not None else t2

    def _emit(self, combined, kind1, kind2, output, just) -> Row:
        if kind1 == ASSERTION and kind2 == ASSERTION:
            return self._append(ASSERTION, normalize(Not(combined)), output, just)
        return self._append(GOAL, combined, output, just)


def _distribute_or(f: Formula) -> Formula:
    """Distribute a disjunction over one conjunct (clausal-style), repeatedly."""
    while isinstance(f, Or):
        target = next((p for p in f.parts if isinstance(p, And)), None)
        if target is None:
            break
        rest = tuple(p for p in f.parts if p is not target)
        f = normalize(And(tuple(Or(rest + (c,)) for c in target.parts)))
    return f


def _distribute_and(f: Formula) -> Formula:
    """Distribute a conjunction over one disjunct, repeatedly (dual form)."""
    while isinstance(f, And):
        target = next((p for p in f.parts if isinstance(p, Or)), None)
        if target is None:
            break
        rest = tuple(p for p in f.parts if p is not target)
        f = normalize(Or(tuple(And(rest + (d,)) for d in target.parts)))
    return f


def _instantiate_params(f: Formula, sub: dict[str, MetaVar]) -> Formula:
    """Replace parameter constants with the given metavars."""

    def walk_term(t: LTerm) -> LTerm:
        if isinstance(t, Apply):
            if not t.args and t.fn in sub:
                return sub[t.fn]
            return Apply(t.fn, tuple(walk_term(a) for a in t.args))
        if isinstance(t, Cond):
            return Cond(walk_formula(t.test), walk_term(t.then), walk_term(t.els))
        return t

    def walk_formula(g: Formula) -> Formula:
        if isinstance(g, Atom):
            return Atom(g.pred, tuple(walk_term(a) for a in g.args))
        if isinstance(g, Eq):
            return Eq(walk_term(g.lhs), walk_term(g.rhs))
        if isinstance(g, Not):
            return Not(walk_formula(g.body))
        if isinstance(g, And):
            return And(tuple(walk_formula(p) for p in g.parts))
        if isinstance(g, Or):
            return Or(tuple(walk_formula(p) for p in g.parts))
        if isinstance(g, Implies):
            return Implies(walk_formula(g.antecedent), walk_formula(g.consequent))
        if isinstance(g, Iff):
            return Iff(walk_formula(g.lhs), walk_formula(g.rhs))
        return g

    return walk_formula(f)


def _print_meta(theta: L.MetaSubst) -> str:
    if not theta:
        return "{}"
    inner = ", ".join(f"{n} -> {L.print_term(t)}" for n, t in sorted(theta.items()))
    return "{" + inner + "}"


def equal_up_to_renaming(a: L.Node, b: L.Node) -> bool:
    """Structural equality modulo a bijective renaming of MetaVars."""
    fwd: dict[str, str] = {}
    bwd: dict[str, str] = {}

    def walk(x: L.Node, y: L.Node) -> bool:
        if isinstance(x, MetaVar) and isinstance(y, MetaVar):
            if x.sort != y.sort:
                return False
            if fwd.setdefault(x.name, y.name) != y.name:
                return False
            return bwd.setdefault(y.name, x.name) == x.name
        if type(x) is not type(y):
            return False
        if isinstance(x, Atom) and x.pred != y.pred:
            return False
        if isinstance(x, Apply) and x.fn != y.fn:
            return False
        if isinstance(x, L.Literal):
            return x == y
        xk, yk = L.children(x), L.children(y)
        if len(xk) != len(yk):
            return False
        return all(walk(p, q) for p, q in zip(xk, yk))

    return walk(a, b)
