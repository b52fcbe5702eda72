"""Command-line interface.

Subcommands: unify (run the reference algorithm), check-mgiu (verify a
candidate unifier), replay (execute a derivation script), search
(bounded best-first derivation), run (interpret a program file), and
selftest (exhaustive small-universe comparison against the oracle).

Exit status: 0 success, 1 negative verdict (ununifiable input or failed
check), 2 usage or parse error, 3 internal rule or step failure.
"""

from __future__ import annotations

import argparse
import itertools
import json
import sys
from importlib import resources

from . import engine, program as P
from .logic import LogicError
from .subst import BOT, EMPTY, SubstError, is_proper, parse_subst, print_subst
from .term import Cons, Const, ExprError, Var, parse_expr, print_expr
from .unify import mgiu_check, oracle_unify, reference_unify
from .tableau import TableauError

OK, NEGATIVE, USAGE, INTERNAL = 0, 1, 2, 3


def _read(path: str) -> str:
    if path.startswith("builtin:"):
        return resources.files("tabsynth.data").joinpath(path[8:]).read_text()
    with open(path, encoding="utf-8") as handle:
        return handle.read()


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (engine.StepFailedError, P.DecreaseViolationError, P.FuelExhaustedError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return INTERNAL
    except (
        ExprError,
        SubstError,
        engine.EngineError,
        TableauError,
        P.ProgramError,
        LogicError,
        OSError,
        ValueError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tabsynth", description="deductive-tableau synthesis toolkit"
    )
    sub = parser.add_subparsers(required=True)

    p = sub.add_parser("unify", help="unify two expressions in an environment")
    p.add_argument("e1")
    p.add_argument("e2")
    p.add_argument("--env", default="{}")
    p.add_argument("--fuel", type=int, default=10000)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_unify)

    p = sub.add_parser("check-mgiu", help="check a candidate unifier's contract")
    p.add_argument("e1")
    p.add_argument("e2")
    p.add_argument("candidate")
    p.add_argument("--env", default="{}")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_check_mgiu)

    p = sub.add_parser("replay", help="replay a derivation script")
    p.add_argument("script", nargs="?", default="builtin:unify.derivation")
    p.add_argument("--theory", default="builtin:unify.thy")
    p.add_argument("--spec", default=None)
    p.add_argument("--emit", default=None)
    p.add_argument("--trace", action="store_true")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("search", help="bounded best-first derivation search")
    p.add_argument("--theory", default="builtin:unify_same.thy")
    p.add_argument("--spec", default=None)
    p.add_argument("--max-rows", type=int, default=200)
    p.add_argument("--weights", default=None, help="JSON file of symbol weights")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--emit", default=None)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("run", help="interpret a program file")
    p.add_argument("program")
    p.add_argument("args", nargs="+", help="argument values (substitution first)")
    p.add_argument("--env", default=None, help="unused; kept for symmetry")
    p.add_argument("--fuel", type=int, default=10000)
    p.add_argument("--check-decrease", action="store_true")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("selftest", help="exhaustive small-universe oracle check")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_selftest)
    return parser


def cmd_unify(args) -> int:
    env = parse_subst(args.env)
    result = reference_unify(env, parse_expr(args.e1), parse_expr(args.e2), args.fuel)
    text = print_subst(result)
    if args.json:
        print(json.dumps({"result": text, "proper": is_proper(result)}))
    else:
        print(text)
    return OK if is_proper(result) else NEGATIVE


def cmd_check_mgiu(args) -> int:
    env = parse_subst(args.env)
    report = mgiu_check(
        env, parse_expr(args.e1), parse_expr(args.e2), parse_subst(args.candidate)
    )
    payload = {
        "unifier_ok": report.unifier_ok,
        "extension_ok": report.extension_ok,
        "most_general_ok": report.most_general_ok,
        "reduce_ok": report.reduce_ok,
        "ok": report.ok,
        "oracle": print_subst(report.oracle_used),
    }
    if args.json:
        print(json.dumps(payload))
    else:
        for key, value in payload.items():
            print(f"{key}: {value}")
    return OK if report.ok else NEGATIVE


def _load_theory_and_spec(args) -> tuple[engine.Theory, str]:
    theory = engine.load_theory(_read(args.theory))
    spec = args.spec
    if spec is None:
        if len(theory.specs) != 1:
            raise engine.EngineError("--spec needed: theory declares several specs")
        spec = next(iter(theory.specs))
    return theory, spec


def cmd_replay(args) -> int:
    theory, spec = _load_theory_and_spec(args)
    trace = print if args.trace else None
    tableau, prog = engine.replay(theory, spec, _read(args.script), trace=trace)
    text = P.emit(prog)
    if args.emit:
        with open(args.emit, "w", encoding="utf-8") as handle:
            handle.write(text)
    if args.json:
        print(json.dumps({"rows": len(tableau.rows), "program": text}))
    else:
        print(text, end="")
    return OK


def cmd_search(args) -> int:
    theory, spec = _load_theory_and_spec(args)
    weights = {}
    if args.weights:
        weights = {k: int(v) for k, v in json.loads(_read(args.weights)).items()}
    config = engine.SearchConfig(
        max_rows=args.max_rows, weights=weights, seed=args.seed
    )
    result = engine.search(theory, spec, config)
    if result is None:
        if args.json:
            print(json.dumps({"found": False}))
        else:
            print("no derivation found within the row limit")
        return NEGATIVE
    tableau, prog = result
    text = P.emit(prog)
    if args.emit:
        with open(args.emit, "w", encoding="utf-8") as handle:
            handle.write(text)
    if args.json:
        print(json.dumps({"found": True, "rows": len(tableau.rows), "program": text}))
    else:
        print(text, end="")
    return OK


def _parse_value(text: str):
    text = text.strip()
    if text == "bot" or text.startswith("{"):
        return parse_subst(text)
    return parse_expr(text)


def _show_value(value) -> str:
    if isinstance(value, (Const, Var, Cons)):
        return print_expr(value)
    return print_subst(value)


def cmd_run(args) -> int:
    prog = P.parse_program(_read(args.program))
    values = [_parse_value(a) for a in args.args]
    result = P.interpret(
        prog, values, fuel=args.fuel, check_decrease=args.check_decrease
    )
    text = _show_value(result)
    if args.json:
        print(json.dumps({"result": text}))
    else:
        print(text)
    return NEGATIVE if result == BOT else OK


def small_universe():
    """All expressions over {a, b, X, Y} of size at most 3."""
    atoms = [Const("a"), Const("b"), Var("X"), Var("Y")]
    exprs = list(atoms)
    for l, r in itertools.product(atoms, atoms):
        exprs.append(Cons(l, r))
    from .term import size_of

    return [e for e in exprs if size_of(e) <= 3]


def selftest_environments():
    return [EMPTY, parse_subst("{X -> a}"), parse_subst("{X -> Y}")]


def cmd_selftest(args) -> int:
    universe = small_universe()
    disagreements = 0
    pairs = 0
    for env in selftest_environments():
        for e1, e2 in itertools.product(universe, universe):
            pairs += 1
            ref = reference_unify(env, e1, e2)
            ora = oracle_unify(env, e1, e2)
            if is_proper(ref) != is_proper(ora):
                disagreements += 1
                continue
            if is_proper(ref):
                from .subst import compose

                if compose(ref, ora) != ora or compose(ora, ref) != ref:
                    disagreements += 1
    payload = {"pairs": pairs, "disagreements": disagreements}
    if args.json:
        print(json.dumps(payload))
    else:
        print(f"checked {pairs} pairs, {disagreements} disagreements")
    return OK if disagreements == 0 else NEGATIVE


run = main  # the module-level entry point, exit status as an int


if __name__ == "__main__":
    sys.exit(main())
