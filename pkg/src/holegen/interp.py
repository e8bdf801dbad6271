"""Reference tree-walking evaluator for MiniJ.

This is the semantic oracle: hole filling executes templates through it, and
it doubles as the interpreter-mode configuration in the differential matrix.
Evaluation is big-step over typechecked trees; holes consult the session's
oracle; every run is bounded by step, heap, depth, and optional wall limits.
"""

from __future__ import annotations

import math
import os
import time
from dataclasses import dataclass

from .errors import (
    DIV_BY_ZERO,
    INDEX_OUT_OF_BOUNDS,
    LIMIT_DEPTH,
    LIMIT_HEAP,
    LIMIT_STEPS,
    LIMIT_WALL,
    NULL_DEREF,
    UNFILLED_HOLE,
    LimitExceeded,
    Trap,
)
from .fill import TrappingOracle
from .lang import nodes as N
from .lang import values as V


@dataclass(frozen=True)
class ExecLimits:
    max_steps: int = 10**7
    max_heap_cells: int = 1 << 24
    wall_timeout: float | None = None
    max_depth: int = 200


class Budget:
    """Mutable countdown shared by everything one run executes.

    `loop_bound` turns on iteration observation: a loop whose single entry
    exceeds the bound sets `loop_overflow` (used to filter collected inputs
    that would collide with template loop limiters).
    """

    __slots__ = (
        "steps",
        "cells",
        "deadline",
        "depth",
        "max_depth",
        "_wall_check",
        "loop_bound",
        "loop_overflow",
    )

    def __init__(self, limits: ExecLimits, loop_bound: int | None = None):
        self.steps = limits.max_steps
        self.cells = limits.max_heap_cells
        self.deadline = None if limits.wall_timeout is None else time.monotonic() + limits.wall_timeout
        self.depth = 0
        self.max_depth = limits.max_depth
        self._wall_check = 0
        self.loop_bound = loop_bound
        self.loop_overflow = False

    def step(self) -> None:
        self.steps -= 1
        if self.steps < 0:
            raise LimitExceeded(LIMIT_STEPS)
        if self.deadline is not None:
            self._wall_check += 1
            if self._wall_check >= 4096:
                self._wall_check = 0
                if time.monotonic() > self.deadline:
                    raise LimitExceeded(LIMIT_WALL)

    def alloc(self, cells: int) -> None:
        self.cells -= cells
        if self.cells < 0:
            raise LimitExceeded(LIMIT_HEAP)


# -- outcomes ----------------------------------------------------------------


@dataclass(frozen=True)
class Outcome:
    pass


@dataclass(frozen=True)
class Returned(Outcome):
    value: object


@dataclass(frozen=True)
class Trapped(Outcome):
    kind: str
    hole_id: int | None = None


@dataclass(frozen=True)
class Exhausted(Outcome):
    which: str


class _ReturnSig(Exception):
    __slots__ = ("value",)

    def __init__(self, value):
        self.value = value


def _entropy_seed() -> int:
    return (time.time_ns() ^ int.from_bytes(os.urandom(4), "big")) & 0xFFFFFFFF


class Interpreter:
    """One evaluation session over a typechecked program."""

    def __init__(self, program: N.Program, oracle=None, tick_seed: int | None = None):
        self.p = program
        self.oracle = oracle if oracle is not None else TrappingOracle()
        self._tick = V.wrap32(tick_seed if tick_seed is not None else _entropy_seed())

    # -- public API ----------------------------------------------------------

    def init_globals(self, budget: Budget) -> dict:
        """Evaluate all global initializers in declaration order."""
        state: dict[str, object] = {}
        for g in self.p.globals:
            state[g.name] = self._eval(g.init, _GLOBAL_FRAME, state, budget)
        return state

    def init_globals_lenient(self, budget: Budget) -> tuple[dict, list[tuple[str, str]]]:
        """Like init_globals, but a trapped initializer leaves its default value
        and initialization continues; returns (state, [(global, trap kind)])."""
        state: dict[str, object] = {}
        trapped: list[tuple[str, str]] = []
        for g in self.p.globals:
            try:
                state[g.name] = self._eval(g.init, _GLOBAL_FRAME, state, budget)
            except Trap as t:
                state[g.name] = V.default_value(g.ty)
                trapped.append((g.name, t.kind))
        return state, trapped

    def call(self, state: dict, fn_key: str, args: list, budget: Budget) -> object:
        """Invoke a function; receiver, if any, is args[0]. Raises Trap/LimitExceeded."""
        fn = self.p.function(fn_key)
        assert fn is not None, fn_key
        return self._invoke(fn, list(args), state, budget)

    def call_outcome(self, state: dict, fn_key: str, args: list, budget: Budget) -> Outcome:
        try:
            return Returned(self.call(state, fn_key, args, budget))
        except Trap as t:
            return Trapped(t.kind, t.hole_id)
        except LimitExceeded as l:
            return Exhausted(l.which)

    # -- machinery -------------------------------------------------------------

    def _ticks(self) -> int:
        self._tick = V.wrap32(self._tick * 1103515245 + 12345)
        return self._tick

    def _invoke(self, fn: N.FunctionDecl, args: list, state: dict, budget: Budget) -> object:
        budget.depth += 1
        if budget.depth > budget.max_depth:
            raise LimitExceeded(LIMIT_DEPTH)
        frame = {}
        if fn.receiver is not None:
            frame["self"] = args[0]
            rest = args[1:]
        else:
            rest = args
        for q, v in zip(fn.params, rest):
            frame[q.name] = v
        try:
            self._exec_block(fn.body, frame, state, budget, scoped=False)
        except _ReturnSig as r:
            return r.value
        finally:
            budget.depth -= 1
        return V.UNIT

    def _exec_block(self, b: N.Block, frame, state, budget, scoped=True) -> None:
        if not scoped:
            for s in b.stmts:
                self._exec(s, frame, state, budget)
            return
        declared: list[str] = []
        try:
            for s in b.stmts:
                if type(s) is N.VarDecl:
                    declared.append(s.name)
                self._exec(s, frame, state, budget)
        finally:
            for name in declared:
                frame.pop(name, None)

    def _exec(self, s: N.Stmt, frame, state, budget) -> None:
        budget.step()
        t = type(s)
        if t is N.VarDecl:
            frame[s.name] = self._eval(s.init, frame, state, budget)
        elif t is N.Assign:
            self._assign(s.target, self._eval(s.value, frame, state, budget), frame, state, budget)
        elif t is N.ExprStmt:
            self._eval(s.expr, frame, state, budget)
        elif t is N.If:
            if self._eval(s.cond, frame, state, budget):
                self._exec_block(s.then, frame, state, budget)
            elif s.orelse is not None:
                if type(s.orelse) is N.If:
                    self._exec(s.orelse, frame, state, budget)
                else:
                    self._exec_block(s.orelse, frame, state, budget)
        elif t is N.While:
            iters = 0
            while self._eval(s.cond, frame, state, budget):
                self._exec_block(s.body, frame, state, budget)
                iters += 1
            if budget.loop_bound is not None and iters > budget.loop_bound:
                budget.loop_overflow = True
        elif t is N.For:
            declared = []
            if s.init is not None:
                if type(s.init) is N.VarDecl:
                    declared.append(s.init.name)
                self._exec(s.init, frame, state, budget)
            iters = 0
            try:
                while s.cond is None or self._eval(s.cond, frame, state, budget):
                    self._exec_block(s.body, frame, state, budget)
                    if s.update is not None:
                        self._exec(s.update, frame, state, budget)
                    iters += 1
            finally:
                for name in declared:
                    frame.pop(name, None)
            if budget.loop_bound is not None and iters > budget.loop_bound:
                budget.loop_overflow = True
        elif t is N.Return:
            value = V.UNIT if s.value is None else self._eval(s.value, frame, state, budget)
            raise _ReturnSig(value)
        elif t is N.Block:
            self._exec_block(s, frame, state, budget)
        else:
            raise AssertionError(f"unexecutable statement {s!r}")

    def _assign(self, target: N.Expr, value, frame, state, budget) -> None:
        t = type(target)
        if t is N.Ident:
            b = target.binding
            if b == "global":
                state[target.name] = value
            elif b == "field":
                obj = frame["self"]
                if obj is None:
                    raise Trap(NULL_DEREF)
                obj.values[target.name] = value
            else:
                frame[target.name] = value
        elif t is N.FieldAccess:
            obj = self._eval(target.target, frame, state, budget)
            if obj is None:
                raise Trap(NULL_DEREF)
            obj.values[target.fieldname] = value
        elif t is N.ArrayAccess:
            arr = self._eval(target.array, frame, state, budget)
            idx = self._eval(target.index, frame, state, budget)
            items = arr.items
            if idx < 0 or idx >= len(items):
                raise Trap(INDEX_OUT_OF_BOUNDS)
            items[idx] = value
        else:
            raise AssertionError("bad assignment target")

    def _eval(self, e: N.Expr, frame, state, budget) -> object:
        budget.step()
        t = type(e)
        if t is N.Ident:
            b = e.binding
            if b == "global":
                return state[e.name]
            if b == "field":
                obj = frame["self"]
                if obj is None:
                    raise Trap(NULL_DEREF)
                return obj.values[e.name]
            return frame[e.name]
        if t is N.IntLit or t is N.DoubleLit or t is N.BoolLit or t is N.CharLit:
            return e.value
        if t is N.Binary:
            return self._binary(e, frame, state, budget)
        if t is N.ArrayAccess:
            arr = self._eval(e.array, frame, state, budget)
            idx = self._eval(e.index, frame, state, budget)
            items = arr.items
            if idx < 0 or idx >= len(items):
                raise Trap(INDEX_OUT_OF_BOUNDS)
            return items[idx]
        if t is N.FieldAccess:
            obj = self._eval(e.target, frame, state, budget)
            if obj is None:
                raise Trap(NULL_DEREF)
            return obj.values[e.fieldname]
        if t is N.SelfRef:
            return frame["self"]
        if t is N.NullLit:
            return None
        if t is N.ArrayLength:
            arr = self._eval(e.array, frame, state, budget)
            return len(arr.items)
        if t is N.Unary:
            v = self._eval(e.operand, frame, state, budget)
            if e.op == "!":
                return not v
            if e.op_kind == "int":
                return V.wrap32(-v)
            return -v
        if t is N.Cast:
            v = self._eval(e.operand, frame, state, budget)
            to = e.to.tag
            frm = e.operand.ty.tag
            if to == "int":
                if frm == "double":
                    return V.d2i(v)
                return v  # char widens zero-extended; int is identity
            if to == "double":
                return float(v)
            return V.i2c(v)
        if t is N.Call:
            fn_args = []
            if e.receiver is not None:
                recv = self._eval(e.receiver, frame, state, budget)
                if recv is None:
                    raise Trap(NULL_DEREF)
                fn_args.append(recv)
                key = f"{e.receiver.ty.name}.{e.name}"
            else:
                key = e.name
            for a in e.args:
                fn_args.append(self._eval(a, frame, state, budget))
            return self._invoke(self.p.function(key), fn_args, state, budget)
        if t is N.New:
            rec = self.p.record(e.record)
            budget.alloc(len(rec.fields) + 1)
            values = {}
            for f, a in zip(rec.fields, e.args):
                values[f.name] = self._eval(a, frame, state, budget)
            return V.RecordV(rec, values)
        if t is N.NewArray:
            n = self._eval(e.length, frame, state, budget)
            return V.new_array(e.elem, n, budget)
        if t is N.PostIncDec:
            b = e.binding
            if b == "global":
                old = state[e.name]
                state[e.name] = V.wrap32(old + 1 if e.op == "++" else old - 1)
            elif b == "field":
                obj = frame["self"]
                if obj is None:
                    raise Trap(NULL_DEREF)
                old = obj.values[e.name]
                obj.values[e.name] = V.wrap32(old + 1 if e.op == "++" else old - 1)
            else:
                old = frame[e.name]
                frame[e.name] = V.wrap32(old + 1 if e.op == "++" else old - 1)
            return old
        if t is N.Hole:
            expr = self.oracle.resolve(e)
            return self._eval(expr, frame, state, budget)
        if t is N.Unfilled:
            raise Trap(UNFILLED_HOLE, e.hole_id)
        if t is N.Ticks:
            return self._ticks()
        raise AssertionError(f"unevaluable expression {e!r}")

    def _binary(self, e: N.Binary, frame, state, budget) -> object:
        op = e.op
        if op == "&&":
            if not self._eval(e.lhs, frame, state, budget):
                return False
            return self._eval(e.rhs, frame, state, budget)
        if op == "||":
            if self._eval(e.lhs, frame, state, budget):
                return True
            return self._eval(e.rhs, frame, state, budget)
        l = self._eval(e.lhs, frame, state, budget)
        r = self._eval(e.rhs, frame, state, budget)
        kind = e.op_kind
        if kind == "int":
            if op == "+":
                return V.wrap32(l + r)
            if op == "-":
                return V.wrap32(l - r)
            if op == "*":
                return V.wrap32(l * r)
            if op == "/":
                return V.int_div(l, r)
            if op == "%":
                return V.int_rem(l, r)
            if op == "<<":
                return V.int_shl(l, r)
            if op == ">>":
                return V.int_shr(l, r)
            if op == ">>>":
                return V.int_ushr(l, r)
            return _compare(op, l, r)
        if kind == "double":
            if op == "+":
                return l + r
            if op == "-":
                return l - r
            if op == "*":
                return l * r
            if op == "/":
                return _ddiv(l, r)
            if op == "%":
                return V.dbl_rem(l, r)
            return _compare(op, l, r)
        if kind == "char":
            # Chars compare by promoting both code units to int.
            return _compare(op, l, r)
        if kind == "bool":
            return l == r if op == "==" else l != r
        # references: identity, or null test
        return (l is r) if op == "==" else (l is not r)


def _ddiv(l: float, r: float) -> float:
    try:
        return l / r
    except ZeroDivisionError:
        if l != l or l == 0.0:
            return float("nan")
        return math.copysign(float("inf"), l) * math.copysign(1.0, r)


def _compare(op: str, l, r) -> bool:
    if op == "<":
        return l < r
    if op == "<=":
        return l <= r
    if op == ">":
        return l > r
    if op == ">=":
        return l >= r
    if op == "==":
        return l == r
    return l != r


_GLOBAL_FRAME: dict = {}


# -- module-level operations matching the documented engine surface -----------


def init_globals(program: N.Program, oracle=None, limits: ExecLimits | None = None) -> dict:
    """Fresh global state for `program`; raises Trap on a trapping initializer."""
    interp = Interpreter(program, oracle)
    return interp.init_globals(Budget(limits or ExecLimits()))


def call_entry(
    program: N.Program,
    state: dict,
    entry: str,
    args: list,
    oracle=None,
    limits: ExecLimits | None = None,
) -> Outcome:
    """Big-step evaluation of one entry invocation under `oracle` and `limits`."""
    interp = Interpreter(program, oracle)
    return interp.call_outcome(state, entry, args, Budget(limits or ExecLimits()))
