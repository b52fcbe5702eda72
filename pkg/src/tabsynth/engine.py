"""Derivation driver: theory files, scripted replay, bounded search.

A theory file registers lemmas, well-founded relations, and program
specifications.  A derivation script applies tableau rules one command
per line; replay executes it, failing fast, and returns the extracted,
simplified program.  Search explores rule applications best-first under
symbol weights.
"""

from __future__ import annotations

import heapq
import itertools
import re
from dataclasses import dataclass, field

from . import logic as L
from . import program as P
from .tableau import (
    ASSERTION,
    GOAL,
    ProgramDef,
    ProgramSpec,
    Row,
    Tableau,
    TableauError,
    equal_up_to_renaming,
)
from .wf import RelSpec, parse_relspec


class EngineError(Exception):
    pass


class StepFailedError(EngineError):
    def __init__(self, index: int, command: str, cause: Exception):
        super().__init__(f"step {index} failed: {command!r}: {cause}")
        self.index = index
        self.command = command
        self.cause = cause


class NoFinalRowError(EngineError):
    pass


@dataclass
class Theory:
    lemmas: dict[str, L.Formula] = field(default_factory=dict)
    relations: dict[str, RelSpec] = field(default_factory=dict)
    specs: dict[str, ProgramSpec] = field(default_factory=dict)
    signature: L.Signature = field(default_factory=L.default_signature)


def load_theory(text: str) -> Theory:
    """Parse a theory file: lemma, wfrel and spec declarations."""
    theory = Theory()
    for entry in _entries(text):
        kind, rest = entry.split(None, 1)
        if kind == "lemma":
            name, body = rest.split(None, 1)
            theory.lemmas[name] = L.parse_formula(body, theory.signature)
        elif kind == "wfrel":
            name, body = rest.split(None, 1)
            theory.relations[name] = parse_relspec(body)
            theory.signature.add_constant(name, "rel")
        elif kind == "spec":
            spec = _parse_spec(rest, theory.signature)
            theory.specs[spec.name] = spec
        else:
            raise EngineError(f"unknown theory entry {kind!r}")
    return theory


def _entries(text: str):
    """Yield complete (paren-balanced) declarations, comments stripped."""
    pending = ""
    for line in text.splitlines():
        line = re.sub(r"#.*", "", line).rstrip()
        if not line.strip():
            continue
        pending = f"{pending} {line}".strip() if pending else line.strip()
        if "(" in pending and pending.count("(") == pending.count(")"):
            yield pending
            pending = ""
    if pending:
        raise EngineError(f"unterminated declaration: {pending!r}")


def _parse_spec(rest: str, sig: L.Signature) -> ProgramSpec:
    m = re.match(r"(\S+)\s*\((.*?)\)\s*output\s+(\S+)\s+(.*)$", rest, re.S)
    if not m:
        raise EngineError(f"malformed spec declaration: {rest!r}")
    name, params_text, out_text, cond_text = m.groups()
    params = []
    for chunk in params_text.split():
        pname, _, psort = chunk.partition(":")
        if psort not in L.SORTS:
            raise EngineError(f"parameter {chunk!r} needs a sort annotation")
        params.append((pname, psort))
        sig.add_constant(pname, psort)
    output = None
    if out_text != "none":
        oname, _, osort = out_text.partition(":")
        if osort not in L.SORTS:
            raise EngineError(f"output {out_text!r} needs a sort annotation")
        output = L.MetaVar(oname, osort)
        sig.add_function(name, tuple(s for _, s in params), osort)
    condition = L.parse_formula(cond_text, sig)
    return ProgramSpec(name, tuple(params), output, condition)


# ---------------------------------------------------------------------------
# scripted replay

@dataclass(frozen=True)
class Command:
    line_no: int
    text: str


def parse_script(text: str) -> list[Command]:
    commands = []
    for i, raw in enumerate(text.splitlines(), start=1):
        line = re.sub(r"#.*", "", raw).strip()
        if line:
            commands.append(Command(i, line))
    return commands


def make_tableau(theory: Theory, spec_name: str) -> Tableau:
    if spec_name not in theory.specs:
        raise EngineError(f"unknown spec {spec_name!r}")
    return Tableau(
        theory.specs[spec_name],
        theory.signature,
        lemmas=theory.lemmas,
        relations=theory.relations,
    )


def replay(
    theory: Theory, spec_name: str, script_text: str, trace=None
) -> tuple[Tableau, ProgramDef]:
    """Execute a derivation script; return the tableau and final program."""
    tableau = make_tableau(theory, spec_name)
    if trace:
        trace(tableau.render_row(tableau.rows[0]))
    commands = parse_script(script_text)
    if not commands or commands[-1].text.split()[0] != "extract":
        raise EngineError("script must end with extract")
    program: ProgramDef | None = None
    for idx, cmd in enumerate(commands, start=1):
        before = len(tableau.rows)
        try:
            program = _run_command(tableau, cmd.text)
        except (TableauError, L.LogicError, EngineError, ValueError) as exc:
            raise StepFailedError(idx, cmd.text, exc) from exc
        if trace:
            for row in tableau.rows[before:]:
                trace(tableau.render_row(row))
    if program is None:
        raise NoFinalRowError("no final row to extract a program from")
    return tableau, ProgramDef(
        program.name, program.params, P.simplify(program.body), program.decrease
    )


def _run_command(tableau: Tableau, text: str) -> ProgramDef | None:
    parts = text.split()
    op, args = parts[0], parts[1:]
    if op == "assert":
        tableau.add_assertion(name=_one(args, text))
    elif op == "assume":
        formula_text, output_text = _split_output(text[len("assume") :])
        formula = L.parse_formula(formula_text, tableau.sig)
        output = L.parse_term(output_text, tableau.sig) if output_text else None
        tableau.add_assertion(formula=formula, output=output, assumption=True)
    elif op == "split":
        tableau.split_row(int(_one(args, text)))
    elif op == "dualize":
        tableau.dualize(int(_one(args, text)))
    elif op == "orphan":
        tableau.drop_orphan_output(int(_one(args, text)))
    elif op == "induct":
        tableau.insert_induction_hypothesis(_one(args, text))
    elif op == "resolve":
        r1, p1, r2, p2 = args
        tableau.resolve(int(r1), p1, int(r2), p2)
    elif op == "eqrepl":
        r1, p1, r2, p2, direction = args
        tableau.equality_replace(int(r1), p1, int(r2), p2, direction)
    elif op == "iffrepl":
        r1, p1, r2, p2, direction = args
        tableau.equivalence_replace(int(r1), p1, int(r2), p2, direction)
    elif op == "extract":
        program = tableau.extract_program()
        if program is None:
            raise NoFinalRowError("no final row")
        return program
    else:
        raise EngineError(f"unknown command {op!r}")
    return None


def _one(args: list[str], text: str) -> str:
    if len(args) != 1:
        raise EngineError(f"malformed command {text!r}")
    return args[0]


def _split_output(rest: str) -> tuple[str, str]:
    m = re.search(r"\boutput\b", rest)
    if m:
        return rest[: m.start()].strip(), rest[m.end() :].strip()
    return rest.strip(), ""


def verify_replay(theory: Theory, spec_name: str, tableau: Tableau) -> bool:
    """Re-derive every row from its recorded justification and compare.

    This is the kernel-checkable-log property: the justifications alone
    reproduce the tableau.
    """
    check = make_tableau(theory, spec_name)
    idx = 0
    rows = tableau.rows
    while idx < len(rows):
        row = rows[idx]
        rule = row.just.rule
        produced: list[Row]
        if rule == "init":
            produced = [check.rows[0]]
        elif rule == "induct":
            produced = [check.insert_induction_hypothesis(row.just.note)]
        elif rule == "assert":
            produced = [check.add_assertion(name=row.just.note)]
        elif rule == "assume":
            produced = [
                check.add_assertion(
                    formula=row.formula, output=row.output, assumption=True
                )
            ]
        elif rule == "split":
            produced = check.split_row(row.just.parents[0])
        elif rule == "dualize":
            produced = [check.dualize(row.just.parents[0])]
        elif rule == "orphan":
            produced = [check.drop_orphan_output(row.just.parents[0])]
        elif rule == "resolve":
            r1, r2 = row.just.parents
            p1, p2 = row.just.paths
            produced = [check.resolve(r1, p1, r2, p2)]
        elif rule in ("eqrepl", "iffrepl"):
            r1, r2 = row.just.parents
            p1, p2, direction = row.just.paths
            method = (
                check.equality_replace if rule == "eqrepl" else check.equivalence_replace
            )
            produced = [method(r1, p1, r2, p2, direction)]
        else:
            raise EngineError(f"unknown rule {rule!r} in log")
        for got in produced:
            want = rows[idx]
            same = got.kind == want.kind and equal_up_to_renaming(
                got.formula, want.formula
            )
            if same and (want.output is None) == (got.output is None):
                if want.output is not None:
                    same = equal_up_to_renaming(got.output, want.output)
            else:
                same = False
            if not same:
                return False
            idx += 1
    return True


# ---------------------------------------------------------------------------
# bounded best-first search

# default literal-selection precedence, lowest first; selection boxes only
# atoms whose predicate is maximal within their row.  The order is a tuned
# strategy knob, not a semantic commitment.
DEFAULT_PRECEDENCE = (
    "idem",
    "is-proper",
    "is-atom",
    "is-const",
    "is-var",
    "misses",
    "occurs-proper",
    "occurs-refl",
    "wf-ordered",
    "subset",
    "proper-subset",
    "size-lt",
    "more-genid",
    "reduce",
    "mgi",
    "=",
    "mgiu",
)


@dataclass
class SearchConfig:
    max_rows: int = 200
    weights: dict[str, int] = field(default_factory=dict)
    precedence: tuple[str, ...] = DEFAULT_PRECEDENCE
    seed: int = 0

    def weight_of(self, symbol: str) -> int:
        w = self.weights.get(symbol, 1)
        if w <= 0:
            raise EngineError(f"weight for {symbol} must be positive")
        return w


def _formula_weight(f: L.Formula, config: SearchConfig) -> int:
    total = 0

    def walk(node):
        nonlocal total
        if isinstance(node, L.Atom):
            total += config.weight_of(node.pred)
        elif isinstance(node, L.Apply):
            total += config.weight_of(node.fn)
        elif isinstance(node, (L.MetaVar, L.Literal)):
            total += 1
        elif isinstance(node, L.Eq):
            total += config.weight_of("=")
        else:
            total += 1
        for kid in L.children(node):
            walk(kid)

    walk(f)
    return total


def _selected_paths(row: Row, config: SearchConfig) -> list[tuple[str, L.Formula]]:
    """Atom occurrences eligible for boxing: precedence-maximal predicates."""
    occs = [(path, atom) for path, atom in L.atom_paths(row.formula)]
    if not occs or not config.precedence:
        return [(".".join(map(str, p)) or "-", a) for p, a in occs]
    rank = {name: i for i, name in enumerate(config.precedence)}

    def key(atom) -> int:
        name = atom.pred if isinstance(atom, L.Atom) else "="
        return rank.get(name, -1)

    best = max(key(a) for _, a in occs)
    return [
        (".".join(map(str, p)) or "-", a) for p, a in occs if key(a) == best
    ]


def _canonical_key(row: Row) -> tuple:
    """Row identity up to metavar renaming, for duplicate pruning.

    The output entry does not participate beyond its presence: rows
    restating a formula with a different program fragment are pruned in
    favor of the first one found.
    """
    mapping: dict[str, str] = {}

    def visit(node) -> None:
        if isinstance(node, L.MetaVar):
            mapping.setdefault(node.name, f"V{len(mapping)}")
        for kid in L.children(node):
            visit(kid)

    visit(row.formula)
    formula = L.print_formula(L.rename_metavars(row.formula, mapping))
    return (row.kind, formula, row.output is None)


def search(
    theory: Theory, spec_name: str, config: SearchConfig
) -> tuple[Tableau, ProgramDef] | None:
    """Best-first proof search; returns the simplified program if found.

    Given-clause style: rows wait in a passive queue keyed by weighted
    symbol count (ties by row id); activating a row executes every rule
    application pairing it with the already-active rows.  Pair moves
    require one side to descend from the goal (set of support); vacuous
    and duplicate results are discarded.
    """
    tableau = make_tableau(theory, spec_name)
    supported = {tableau.rows[0].rid}
    for name in sorted(theory.lemmas):
        tableau.add_assertion(name=name)
    seen = {_canonical_key(r) for r in tableau.rows}
    counter = itertools.count()
    passive: list = []
    # the theory's lemmas are usable from the start; only derived rows
    # (and the initial goal) wait in the passive queue
    active: list[Row] = [r for r in tableau.rows if r.just.rule == "assert"]

    def enqueue(row: Row) -> None:
        weight = _formula_weight(row.formula, config)
        heapq.heappush(passive, (weight, row.rid, next(counter), row))

    def moves_for(row: Row):
        yield ("split", row.rid)
        if row.kind == ASSERTION:
            yield ("orphan", row.rid)
        # literal selection restricts the activated row; the partner row
        # may be boxed at any atom occurrence
        own = _selected_paths(row, config)
        for other in active:
            if other.rid == row.rid:
                continue
            if not (row.rid in supported or other.rid in supported):
                continue
            partner = [
                (".".join(map(str, p)) or "-", a)
                for p, a in L.atom_paths(other.formula)
            ]
            for (path1, a1), (path2, a2) in itertools.product(own, partner):
                n1 = a1.pred if isinstance(a1, L.Atom) else "="
                n2 = a2.pred if isinstance(a2, L.Atom) else "="
                if n1 == n2:
                    yield ("resolve", row.rid, path1, other.rid, path2)
                    yield ("resolve", other.rid, path2, row.rid, path1)
            if isinstance(other.formula, L.Iff):
                for path1, _ in own:
                    yield ("iffrepl", other.rid, "-", row.rid, path1, "ltr")
                    yield ("iffrepl", other.rid, "-", row.rid, path1, "rtl")
            if isinstance(row.formula, L.Iff):
                for path2, _ in partner:
                    yield ("iffrepl", row.rid, "-", other.rid, path2, "ltr")
                    yield ("iffrepl", row.rid, "-", other.rid, path2, "rtl")

    def vacuous(row: Row) -> bool:
        if row.kind == ASSERTION and isinstance(row.formula, L.TrueF):
            return True
        return row.kind == GOAL and isinstance(row.formula, L.FalseF)

    enqueue(tableau.rows[0])

    while passive and len(tableau.rows) < config.max_rows:
        _, _, _, row = heapq.heappop(passive)
        for move in list(moves_for(row)):
            if len(tableau.rows) >= config.max_rows:
                break
            before = len(tableau.rows)
            try:
                if move[0] == "split":
                    tableau.split_row(move[1])
                elif move[0] == "orphan":
                    tableau.drop_orphan_output(move[1])
                elif move[0] == "resolve":
                    tableau.resolve(move[1], move[2], move[3], move[4])
                else:
                    tableau.equivalence_replace(
                        move[1], move[2], move[3], move[4], move[5]
                    )
            except (TableauError, L.LogicError):
                continue
            batch = tableau.rows[before:]
            parent_supported = any(
                rid in supported
                for new_row in batch
                for rid in new_row.just.parents
            )
            if any(r.is_final() for r in batch):
                program = tableau.extract_program()
                if program is not None:
                    return tableau, ProgramDef(
                        program.name,
                        program.params,
                        P.simplify(program.body),
                        program.decrease,
                    )
            keep_any = False
            for new_row in batch:
                key = _canonical_key(new_row)
                if vacuous(new_row) or key in seen:
                    continue
                seen.add(key)
                keep_any = True
                if parent_supported:
                    supported.add(new_row.rid)
                enqueue(new_row)
            if not keep_any:
                tableau.truncate(before)
        active.append(row)
    return None
