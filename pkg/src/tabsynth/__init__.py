"""Deductive-tableau program synthesis over expressions and substitutions.

The package replays the derivation of a three-argument, environment-
carrying unification algorithm from its specification, executes the
extracted program, and verifies it against independent oracles.
"""

__all__ = [
    "term",
    "subst",
    "unify",
    "wf",
    "logic",
    "tableau",
    "program",
    "engine",
    "cli",
]
