"""Loop-range analysis feeding the L2 passes.

Deliberately simple interval propagation: integer locals get intervals from
constant initializers and straight-line arithmetic; arrays created with a
known length carry a length interval while the variable is not reassigned.
Two consumers:

  * guard decisions: a while/for guard provably false on loop entry (with a
    pure evaluated prefix under short-circuiting) marks the loop dead; the
    LOOPCOND_FORCE fault instead compiles such a loop to run its body once
    before the real guard applies;
  * bounds-check elimination: the canonical counting loop
    `for (int i = <c>; i < length(a); i++)` (or a constant bound not above
    the array's known length) proves `a[i]` in range, so those accesses
    compile unchecked. The BCE_OVERAGGRESSIVE fault additionally treats any
    access whose index contains an integer `%` as in range, which is wrong
    for zero-length arrays and negative dividends.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..lang import nodes as N

FAULT_FREM = "FREM_CLOBBER"
FAULT_BCE = "BCE_OVERAGGRESSIVE"
FAULT_LOOPCOND = "LOOPCOND_FORCE"
FAULT_CHAR = "CHAR_WIDEN_SIGN"

FAULT_NAMES = (FAULT_FREM, FAULT_BCE, FAULT_LOOPCOND, FAULT_CHAR)

_IV_FULL = None  # unknown interval


@dataclass
class L2Marks:
    unchecked: set[int] = field(default_factory=set)  # id(ArrayAccess)
    dead_loops: set[int] = field(default_factory=set)  # id(While|For), faults off
    forced_loops: set[int] = field(default_factory=set)  # id(While|For), LOOPCOND_FORCE


def _join(a, b):
    if a is _IV_FULL or b is _IV_FULL:
        return _IV_FULL
    return (min(a[0], b[0]), max(a[1], b[1]))


def _in_int32(iv) -> bool:
    return iv is not _IV_FULL and N.INT_MIN <= iv[0] and iv[1] <= N.INT_MAX


class _Ranges:
    """Interval environment over int locals plus array-length intervals."""

    def __init__(self):
        self.iv: dict[str, tuple[int, int]] = {}
        self.alen: dict[str, tuple[int, int]] = {}

    def copy(self) -> "_Ranges":
        c = _Ranges()
        c.iv = dict(self.iv)
        c.alen = dict(self.alen)
        return c

    def join_with(self, other: "_Ranges") -> None:
        for name in list(self.iv):
            o = other.iv.get(name)
            j = _join(self.iv[name], o) if o is not None else _IV_FULL
            if j is _IV_FULL:
                del self.iv[name]
            else:
                self.iv[name] = j
        for name in list(self.alen):
            o = other.alen.get(name)
            j = _join(self.alen[name], o) if o is not None else _IV_FULL
            if j is _IV_FULL:
                del self.alen[name]
            else:
                self.alen[name] = j

    def havoc(self, names: set[str]) -> None:
        for n in names:
            self.iv.pop(n, None)
            self.alen.pop(n, None)


def _eval_iv(e: N.Expr, env: _Ranges):
    """Interval of a pure, non-trapping int expression; None if unknown/impure."""
    if isinstance(e, N.IntLit):
        return (e.value, e.value)
    if isinstance(e, N.Ident):
        if e.binding in ("local", "param"):
            return env.iv.get(e.name, _IV_FULL)
        return _IV_FULL
    if isinstance(e, N.ArrayLength):
        arr = e.array
        if isinstance(arr, N.Ident) and arr.binding in ("local", "param"):
            return env.alen.get(arr.name, _IV_FULL)
        return _IV_FULL
    if isinstance(e, N.Unary) and e.op == "-" and e.op_kind == "int":
        iv = _eval_iv(e.operand, env)
        if iv is _IV_FULL:
            return _IV_FULL
        out = (-iv[1], -iv[0])
        return out if _in_int32(out) else _IV_FULL
    if isinstance(e, N.Binary) and e.op in ("+", "-", "*") and e.op_kind == "int":
        l = _eval_iv(e.lhs, env)
        r = _eval_iv(e.rhs, env)
        if l is _IV_FULL or r is _IV_FULL:
            return _IV_FULL
        if e.op == "+":
            out = (l[0] + r[0], l[1] + r[1])
        elif e.op == "-":
            out = (l[0] - r[1], l[1] - r[0])
        else:
            corners = [a * b for a in l for b in r]
            out = (min(corners), max(corners))
        return out if _in_int32(out) else _IV_FULL
    return _IV_FULL


def _decide_rel(op: str, l, r):
    """True/False when intervals decide the comparison, else None."""
    lo_l, hi_l = l
    lo_r, hi_r = r
    if op == "<":
        if hi_l < lo_r:
            return True
        if lo_l >= hi_r:
            return False
    elif op == "<=":
        if hi_l <= lo_r:
            return True
        if lo_l > hi_r:
            return False
    elif op == ">":
        if lo_l > hi_r:
            return True
        if hi_l <= lo_r:
            return False
    elif op == ">=":
        if lo_l >= hi_r:
            return True
        if hi_l < lo_r:
            return False
    elif op == "==":
        if lo_l == hi_l == lo_r == hi_r:
            return True
        if hi_l < lo_r or lo_l > hi_r:
            return False
    elif op == "!=":
        if hi_l < lo_r or lo_l > hi_r:
            return True
        if lo_l == hi_l == lo_r == hi_r:
            return False
    return None


def _guard_value(e: N.Expr, env: _Ranges):
    """Decide a guard on loop entry: True/False/None.

    Deciding honors short-circuit order, so a provably-false && prefix makes
    the whole guard provably false regardless of what follows (the suffix is
    never evaluated). Only pure interval-evaluable subterms decide.
    """
    if isinstance(e, N.BoolLit):
        return e.value
    if isinstance(e, N.Unary) and e.op == "!":
        v = _guard_value(e.operand, env)
        return None if v is None else (not v)
    if isinstance(e, N.Binary):
        if e.op == "&&":
            l = _guard_value(e.lhs, env)
            if l is False:
                return False
            if l is True:
                return _guard_value(e.rhs, env)
            return None
        if e.op == "||":
            l = _guard_value(e.lhs, env)
            if l is True:
                return True
            if l is False:
                return _guard_value(e.rhs, env)
            return None
        if e.op in N.REL_OPS and e.op_kind == "int":
            l = _eval_iv(e.lhs, env)
            r = _eval_iv(e.rhs, env)
            if l is _IV_FULL or r is _IV_FULL:
                return None
            return _decide_rel(e.op, l, r)
    return None


def _assigned_names(stmts) -> set[str]:
    names: set[str] = set()
    for s in stmts:
        for sub in N.walk_stmts(s):
            if isinstance(sub, N.Assign) and isinstance(sub.target, N.Ident):
                names.add(sub.target.name)
            elif isinstance(sub, N.VarDecl):
                names.add(sub.name)
            for e in N.stmt_exprs(sub):
                for x in N.walk_exprs(e):
                    if isinstance(x, N.PostIncDec):
                        names.add(x.name)
    return names


def _index_has_rem(e: N.Expr) -> bool:
    return any(
        isinstance(x, N.Binary) and x.op == "%" and x.op_kind == "int"
        for x in N.walk_exprs(e)
    )


def expr_has_frem(e: N.Expr) -> bool:
    return any(
        isinstance(x, N.Binary) and x.op == "%" and x.op_kind == "double"
        for x in N.walk_exprs(e)
    )


def _all_array_accesses(fn: N.FunctionDecl):
    for s in N.walk_stmts(fn.body):
        for top in N.stmt_exprs(s):
            for e in N.walk_exprs(top):
                if isinstance(e, N.ArrayAccess):
                    yield e


class _Analyzer:
    def __init__(self, fn: N.FunctionDecl, faults: frozenset[str], marks: L2Marks):
        self.fn = fn
        self.faults = faults
        self.marks = marks

    def run(self) -> None:
        env = _Ranges()
        self._walk(self.fn.body.stmts, env)
        if FAULT_BCE in self.faults:
            for acc in _all_array_accesses(self.fn):
                if _index_has_rem(acc.index):
                    self.marks.unchecked.add(id(acc))

    def _walk(self, stmts, env: _Ranges) -> None:
        for s in stmts:
            self._stmt(s, env)

    def _stmt(self, s: N.Stmt, env: _Ranges) -> None:
        if isinstance(s, N.VarDecl):
            self._bind(s.name, s.ty, s.init, env)
        elif isinstance(s, N.Assign):
            if isinstance(s.target, N.Ident) and s.target.binding in ("local", "param"):
                self._bind(s.target.name, s.target.ty, s.value, env)
        elif isinstance(s, N.If):
            then_env = env.copy()
            self._walk(s.then.stmts, then_env)
            else_env = env.copy()
            if s.orelse is not None:
                if isinstance(s.orelse, N.If):
                    self._stmt(s.orelse, else_env)
                else:
                    self._walk(s.orelse.stmts, else_env)
            then_env.join_with(else_env)
            env.iv = then_env.iv
            env.alen = then_env.alen
        elif isinstance(s, N.While):
            decided = _guard_value(s.cond, env)
            if decided is False:
                target = self.marks.forced_loops if FAULT_LOOPCOND in self.faults else self.marks.dead_loops
                target.add(id(s))
            env.havoc(_assigned_names(s.body.stmts))
            self._walk(s.body.stmts, env.copy())
        elif isinstance(s, N.For):
            if s.init is not None:
                self._stmt(s.init, env)
            body_stmts = list(s.body.stmts) + ([s.update] if s.update is not None else [])
            decided = _guard_value(s.cond, env) if s.cond is not None else True
            if decided is False:
                target = self.marks.forced_loops if FAULT_LOOPCOND in self.faults else self.marks.dead_loops
                target.add(id(s))
            self._mark_counting_loop(s, env)
            env.havoc(_assigned_names(body_stmts))
            self._walk(s.body.stmts, env.copy())
        elif isinstance(s, N.Block):
            self._walk(s.stmts, env)
        # Return / ExprStmt leave the environment unchanged.

    def _bind(self, name: str, ty: N.Type, init: N.Expr, env: _Ranges) -> None:
        env.iv.pop(name, None)
        env.alen.pop(name, None)
        if ty == N.INT:
            iv = _eval_iv(init, env)
            if iv is not _IV_FULL:
                env.iv[name] = iv
        elif ty.tag == "array":
            if isinstance(init, N.NewArray):
                iv = _eval_iv(init.length, env)
                if iv is not _IV_FULL and 0 <= iv[0] and iv[1] <= N.MAX_ARRAY_LEN:
                    env.alen[name] = iv
            elif isinstance(init, N.Ident) and init.name in env.alen:
                env.alen[name] = env.alen[init.name]

    def _mark_counting_loop(self, s: N.For, env: _Ranges) -> None:
        """`for (int i = c; i < E; i++)` with `E = length(a)` or a constant
        bounded by a's known length proves every `a[i]` in the body in range."""
        init = s.init
        if not (isinstance(init, N.VarDecl) and init.ty == N.INT):
            return
        if not isinstance(init.init, N.IntLit) or init.init.value < 0:
            return
        ivar = init.name
        cond = s.cond
        if not (
            isinstance(cond, N.Binary)
            and cond.op == "<"
            and isinstance(cond.lhs, N.Ident)
            and cond.lhs.name == ivar
        ):
            return
        upd = s.update
        ok_update = (
            isinstance(upd, N.ExprStmt)
            and isinstance(upd.expr, N.PostIncDec)
            and upd.expr.op == "++"
            and upd.expr.name == ivar
        ) or (
            isinstance(upd, N.Assign)
            and isinstance(upd.target, N.Ident)
            and upd.target.name == ivar
            and isinstance(upd.value, N.Binary)
            and upd.value.op == "+"
            and isinstance(upd.value.lhs, N.Ident)
            and upd.value.lhs.name == ivar
            and isinstance(upd.value.rhs, N.IntLit)
            and upd.value.rhs.value >= 1
        )
        if not ok_update:
            return
        assigned = _assigned_names(s.body.stmts)
        if ivar in assigned:
            return
        bound = cond.rhs
        arrays: set[str] = set()
        if isinstance(bound, N.ArrayLength) and isinstance(bound.array, N.Ident):
            if bound.array.name not in assigned:
                arrays.add(bound.array.name)
        elif isinstance(bound, N.IntLit):
            c = bound.value
            for name, iv in env.alen.items():
                if name not in assigned and iv[0] >= c:
                    arrays.add(name)
        for stmt in N.walk_stmts(s.body):
            for top in N.stmt_exprs(stmt):
                for e in N.walk_exprs(top):
                    if (
                        isinstance(e, N.ArrayAccess)
                        and isinstance(e.array, N.Ident)
                        and e.array.name in arrays
                        and isinstance(e.index, N.Ident)
                        and e.index.name == ivar
                    ):
                        self.marks.unchecked.add(id(e))


def analyze_function(fn: N.FunctionDecl, faults: frozenset[str]) -> L2Marks:
    marks = L2Marks()
    _Analyzer(fn, faults, marks).run()
    return marks


def find_fault_triggers(p: N.Program) -> set[str]:
    """Fault flags whose trigger pattern occurs somewhere in `p` (for report
    deduplication): frem feeding a constructor/call argument list, `%` inside
    an array index, a loop guard provably false on entry, or a char widening
    site (cast or char comparison)."""
    triggers: set[str] = set()
    for fn in p.functions:
        for s in N.walk_stmts(fn.body):
            for top in N.stmt_exprs(s):
                for e in N.walk_exprs(top):
                    if isinstance(e, (N.New, N.Call)) and any(expr_has_frem(a) for a in e.args):
                        triggers.add(FAULT_FREM)
                    if isinstance(e, N.ArrayAccess) and _index_has_rem(e.index):
                        triggers.add(FAULT_BCE)
                    if isinstance(e, N.Cast) and e.to == N.INT and e.operand.ty == N.CHAR:
                        triggers.add(FAULT_CHAR)
                    if isinstance(e, N.Binary) and e.op_kind == "char" and e.op in N.REL_OPS:
                        triggers.add(FAULT_CHAR)
        marks = analyze_function(fn, frozenset())
        if marks.dead_loops:
            triggers.add(FAULT_LOOPCOND)
    return triggers
