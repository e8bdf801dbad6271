"""Hole resolution strategies used while evaluating templates.

The interpreter asks its oracle for a concrete expression whenever it reaches
a Hole node. Filling mode decides each hole exactly once, on first reach, by
drawing uniformly from the hole's search space against the bindings visible
at the site; the decided expression is re-evaluated on every later reach.
Replay mode serves a fixed decision map; trapping mode refuses all holes.
"""

from __future__ import annotations

import math
import random

from .errors import UNFILLED_HOLE, Trap
from .lang import nodes as N
from .lang.typecheck import Candidate, HoleSite

# Mixture for double literals: mostly ordinary magnitudes, with deliberate
# mass on signed zeros, NaN, infinities, subnormals, and spread exponents.
_DOUBLE_SPECIALS = (0.0, -0.0, float("nan"), float("inf"), float("-inf"), 5e-324, -5e-324)


class FillError(Exception):
    """No candidate exists for an Id hole (empty scope of the required type)."""


class TrappingOracle:
    decisions: dict[int, N.Expr] = {}

    def resolve(self, hole: N.Hole) -> N.Expr:
        raise Trap(UNFILLED_HOLE, hole.hole_id)


class ReplayOracle:
    """Serves pre-made decisions; undecided holes trap like unfilled sites."""

    def __init__(self, decisions: dict[int, N.Expr]):
        self.decisions = dict(decisions)

    def resolve(self, hole: N.Hole) -> N.Expr:
        expr = self.decisions.get(hole.hole_id)
        if expr is None:
            raise Trap(UNFILLED_HOLE, hole.hole_id)
        return expr


class FillingOracle:
    """Decides holes lazily; the decision map is append-only."""

    def __init__(self, program: N.Program, rng: random.Random):
        self.sites = program.hole_sites
        self.rng = rng
        self.decisions: dict[int, N.Expr] = {}

    def resolve(self, hole: N.Hole) -> N.Expr:
        expr = self.decisions.get(hole.hole_id)
        if expr is None:
            expr = build_fill(hole.spec, self.sites[hole.hole_id], self.rng)
            self.decisions[hole.hole_id] = expr
        return expr


def draw_int(rng: random.Random) -> int:
    return rng.randint(N.INT_MIN, N.INT_MAX)


def draw_double(rng: random.Random) -> float:
    r = rng.random()
    if r < 0.5:
        return rng.uniform(-(2.0**31), 2.0**31)
    if r < 0.75:
        return _DOUBLE_SPECIALS[rng.randrange(len(_DOUBLE_SPECIALS))]
    sign = -1.0 if rng.random() < 0.5 else 1.0
    return sign * math.ldexp(1.0 + rng.random(), rng.randint(-1022, 1023))


def draw_literal(ty: N.Type, rng: random.Random) -> N.Expr:
    if ty == N.INT:
        e = N.IntLit(draw_int(rng))
    elif ty == N.DOUBLE:
        e = N.DoubleLit(draw_double(rng))
    elif ty == N.BOOL:
        e = N.BoolLit(rng.random() < 0.5)
    elif ty == N.CHAR:
        e = N.CharLit(rng.randint(0, 0xFFFF))
    else:
        raise AssertionError(f"no literal draw for {ty}")
    e.ty = ty
    return e


def _candidate_expr(c: Candidate) -> N.Expr:
    if c.binding == "self":
        e = N.SelfRef()
        e.ty = c.ty
        return e
    if c.binding == "field" and c.shadowed:
        recv = N.SelfRef()
        e = N.FieldAccess(recv, c.name)
        e.ty = c.ty
        return e
    e = N.Ident(c.name)
    e.ty = c.ty
    e.binding = c.binding
    return e


def id_candidates(ty: N.Type, site: HoleSite) -> list[Candidate]:
    """Variables a `<ty>Id` hole may pick at this site.

    The enclosing assignment's target is excluded unless it is the only
    variable of the type in scope.
    """
    exact = [c for c in site.scope if c.ty == ty]
    if site.excluded is not None:
        kept = [c for c in exact if (c.name, c.binding) != site.excluded]
        if kept:
            return kept
    return exact


def build_fill(spec: N.HoleSpec, site: HoleSite, rng: random.Random) -> N.Expr:
    """One uniform draw from the hole's search space, fully type-annotated."""
    kind = spec.kind
    if kind == N.KIND_ID:
        cands = id_candidates(spec.ty, site)
        if not cands:
            raise FillError(f"no variable of type {spec.ty} in scope for hole {spec.hole_id}")
        return _candidate_expr(cands[rng.randrange(len(cands))])
    if kind == N.KIND_VAL:
        return draw_literal(spec.ty, rng)

    def operand(i: int) -> N.Expr:
        op = spec.operands[i]
        if isinstance(op, N.FixedOperand):
            return op.expr
        return build_fill(op, site, rng)

    if kind in (N.KIND_ARITH, N.KIND_SHIFT, N.KIND_RELATION, N.KIND_LOGIC):
        op = spec.ops[rng.randrange(len(spec.ops))]
        lhs = operand(0)
        rhs = operand(1)
        e = N.Binary(op, lhs, rhs)
        e.ty = spec.ty
        if kind == N.KIND_ARITH:
            e.op_kind = spec.ty.tag
        elif kind == N.KIND_SHIFT:
            e.op_kind = "int"
        elif kind == N.KIND_LOGIC:
            e.op_kind = "bool"
        else:
            e.op_kind = lhs.ty.tag
        return e
    if kind == N.KIND_ARRAY_ACC:
        arr = operand(0)
        idx = operand(1)
        e = N.ArrayAccess(arr, idx)
        e.ty = spec.ty
        return e
    if kind == N.KIND_CAST:
        e = N.Cast(spec.ty, operand(0))
        e.ty = spec.ty
        return e
    raise AssertionError(f"unknown hole kind {kind}")


def spec_admits(spec: N.HoleSpec, expr: N.Expr, site: HoleSite) -> bool:
    """Whether `expr` is a member of the hole's search space (soundness check)."""
    kind = spec.kind
    if kind == N.KIND_ID:
        if isinstance(expr, N.SelfRef):
            return any(c.binding == "self" and c.ty == spec.ty for c in site.scope)
        if isinstance(expr, N.FieldAccess) and isinstance(expr.target, N.SelfRef):
            return any(
                c.binding == "field" and c.name == expr.fieldname and c.ty == spec.ty
                for c in site.scope
            )
        return isinstance(expr, N.Ident) and any(
            c.name == expr.name and c.ty == spec.ty for c in site.scope
        )
    if kind == N.KIND_VAL:
        return isinstance(expr, (N.IntLit, N.DoubleLit, N.BoolLit, N.CharLit))
    if kind in (N.KIND_ARITH, N.KIND_SHIFT, N.KIND_RELATION, N.KIND_LOGIC):
        if not isinstance(expr, N.Binary) or expr.op not in spec.ops:
            return False
        return _operand_admits(spec.operands[0], expr.lhs, site) and _operand_admits(
            spec.operands[1], expr.rhs, site
        )
    if kind == N.KIND_ARRAY_ACC:
        if not isinstance(expr, N.ArrayAccess):
            return False
        return _operand_admits(spec.operands[0], expr.array, site) and _operand_admits(
            spec.operands[1], expr.index, site
        )
    if kind == N.KIND_CAST:
        if not isinstance(expr, N.Cast) or expr.to != spec.ty:
            return False
        return _operand_admits(spec.operands[0], expr.operand, site)
    return False


def _operand_admits(op: N.HoleSpec | N.FixedOperand, expr: N.Expr, site: HoleSite) -> bool:
    if isinstance(op, N.FixedOperand):
        return expr == op.expr
    return spec_admits(op, expr, site)
