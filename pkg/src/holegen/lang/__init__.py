"""MiniJ language front end: grammar, typed AST, parser, printer, checks."""

from __future__ import annotations

from . import nodes
from .parser import parse_program
from .printer import print_expr, print_program, print_spec
from .typecheck import Candidate, Checker, HoleSite, check_program


def parse(text: str, name: str = "unit") -> nodes.Program:
    """Parse and typecheck source text into a resolved Program."""
    return check_program(parse_program(text, name))


def resolve_type(expr: nodes.Expr, program: nodes.Program, fn_key: str | None = None) -> nodes.Type:
    """The unique static type of `expr` in the scope of `fn_key` (or globals)."""
    checker = Checker(program)
    checker.known_globals = list(program.globals)
    if fn_key is not None:
        fn = program.function(fn_key)
        checker.fn = fn
        checker.locals = [{q.name: q.ty for q in fn.params}]
        checker.local_order = [(q.name, "param", q.ty) for q in fn.params]
    return checker.expr(expr)


__all__ = [
    "nodes",
    "parse",
    "parse_program",
    "check_program",
    "print_program",
    "print_expr",
    "print_spec",
    "resolve_type",
    "Candidate",
    "HoleSite",
    "Checker",
]
