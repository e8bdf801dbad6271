"""MiniJ -> register bytecode, with optimization levels and injectable faults.

Levels:
    L0  direct translation, every check emitted
    L1  L0 + constant folding, copy propagation, dead-code elimination
    L2  L1 + loop-range analysis driving bounds-check elimination, elimination
        of loops whose guard is provably false on entry, loop-invariant code
        motion, and strength reduction of *, /, % by power-of-two constants

Fault flags take effect only inside L2 passes; with all flags off every level
must agree with the reference interpreter.

    FREM_CLOBBER       after a floating remainder feeding a constructor/call
                       argument list, the register holding the next double
                       argument is zeroed (a register-reuse bug)
    BCE_OVERAGGRESSIVE any array access whose index contains an integer `%`
                       compiles unchecked
    LOOPCOND_FORCE     a loop guard proven false by range analysis compiles
                       as true for the first iteration
    CHAR_WIDEN_SIGN    char-to-int widening sign-extends instead of
                       zero-extending
"""

from __future__ import annotations

import copy

from ..errors import InternalCompileError
from ..interp import _ddiv
from ..lang import nodes as N
from ..lang import values as V
from .analysis import (
    FAULT_CHAR,
    FAULT_FREM,
    FAULT_NAMES,
    L2Marks,
    analyze_function,
    expr_has_frem,
)
from .ir import (
    PURE_OPS,
    BytecodeModule,
    IRFunction,
    block_leaders,
    instr_def,
    instr_uses,
    verify_module,
)

_LEVELS = ("L0", "L1", "L2")


class _Label:
    __slots__ = ("index",)

    def __init__(self):
        self.index = None


class _FnCodegen:
    def __init__(self, program: N.Program, level: str, faults: frozenset[str], marks: L2Marks | None):
        self.p = program
        self.level = level
        self.faults = faults
        self.marks = marks or L2Marks()
        self.code: list[tuple] = []
        self.spans: list[tuple] = []
        self.nregs = 0
        self.scopes: list[dict[str, int]] = []
        self.has_receiver = False

    # -- emission helpers -----------------------------------------------------

    def fresh(self) -> int:
        r = self.nregs
        self.nregs += 1
        return r

    def emit(self, ins: tuple, pos=None) -> None:
        self.code.append(ins)
        self.spans.append(pos or (0, 0))

    def label(self) -> _Label:
        return _Label()

    def place(self, lab: _Label) -> None:
        lab.index = len(self.code)

    def _finalize(self) -> None:
        out = []
        for ins in self.code:
            if ins[0] == "jmp":
                out.append(("jmp", ins[1].index))
            elif ins[0] in ("jz", "jnz"):
                out.append((ins[0], ins[1], ins[2].index))
            else:
                out.append(ins)
        self.code = out

    def lookup(self, name: str) -> int:
        for scope in reversed(self.scopes):
            if name in scope:
                return scope[name]
        raise InternalCompileError(f"unbound local {name}")

    # -- function entry points -------------------------------------------------

    def compile_function(self, fn: N.FunctionDecl) -> IRFunction:
        self.scopes = [dict()]
        self.has_receiver = fn.receiver is not None
        if self.has_receiver:
            self.scopes[0]["self"] = self.fresh()
        for q in fn.params:
            self.scopes[0][q.name] = self.fresh()
        nparams = self.nregs
        self.block(fn.body, push=False)
        self.emit(("retu",))
        self._finalize()
        tags = tuple(t.tag for t in fn.signature())
        return IRFunction(fn.key, nparams, self.nregs, self.code, self.spans, fn.ret.tag, tags)

    def compile_global_init(self, g: N.GlobalDecl) -> IRFunction:
        self.scopes = [dict()]
        r = self.expr(g.init)
        self.emit(("ret", r), g.pos)
        self._finalize()
        return IRFunction(f"<init:{g.name}>", 0, self.nregs, self.code, self.spans, g.ty.tag)

    # -- statements -------------------------------------------------------------

    def block(self, b: N.Block, push: bool = True) -> None:
        if push:
            self.scopes.append({})
        for s in b.stmts:
            self.stmt(s)
        if push:
            self.scopes.pop()

    def stmt(self, s: N.Stmt) -> None:
        if isinstance(s, N.VarDecl):
            val = self.expr(s.init)
            reg = self.fresh()
            self.scopes[-1][s.name] = reg
            self.emit(("mov", reg, val), s.pos)
        elif isinstance(s, N.Assign):
            self._assign(s)
        elif isinstance(s, N.ExprStmt):
            self.expr(s.expr)
        elif isinstance(s, N.If):
            otherwise = self.label()
            done = self.label()
            c = self.expr(s.cond)
            self.emit(("jz", c, otherwise), s.pos)
            self.block(s.then)
            if s.orelse is not None:
                self.emit(("jmp", done))
                self.place(otherwise)
                if isinstance(s.orelse, N.If):
                    self.stmt(s.orelse)
                else:
                    self.block(s.orelse)
                self.place(done)
            else:
                self.place(otherwise)
        elif isinstance(s, N.While):
            if id(s) in self.marks.dead_loops:
                return
            head = self.label()
            body = self.label()
            done = self.label()
            if id(s) in self.marks.forced_loops:
                self.emit(("jmp", body), s.pos)
            self.place(head)
            c = self.expr(s.cond)
            self.emit(("jz", c, done), s.pos)
            self.place(body)
            self.block(s.body)
            self.emit(("jmp", head))
            self.place(done)
        elif isinstance(s, N.For):
            self.scopes.append({})
            if s.init is not None:
                self.stmt(s.init)
            if id(s) in self.marks.dead_loops:
                self.scopes.pop()
                return
            head = self.label()
            body = self.label()
            done = self.label()
            if id(s) in self.marks.forced_loops:
                self.emit(("jmp", body), s.pos)
            self.place(head)
            if s.cond is not None:
                c = self.expr(s.cond)
                self.emit(("jz", c, done), s.pos)
            self.place(body)
            self.block(s.body)
            if s.update is not None:
                self.stmt(s.update)
            self.emit(("jmp", head))
            self.place(done)
            self.scopes.pop()
        elif isinstance(s, N.Return):
            if s.value is None:
                self.emit(("retu",), s.pos)
            else:
                self.emit(("ret", self.expr(s.value)), s.pos)
        elif isinstance(s, N.Block):
            self.block(s)
        else:
            raise InternalCompileError(f"cannot compile statement {s!r}")

    def _assign(self, s: N.Assign) -> None:
        t = s.target
        if isinstance(t, N.Ident):
            val = self.expr(s.value)
            if t.binding == "global":
                self.emit(("gstore", t.name, val), s.pos)
            elif t.binding == "field":
                self.emit(("setf", self.lookup("self"), t.name, val), s.pos)
            else:
                self.emit(("mov", self.lookup(t.name), val), s.pos)
        elif isinstance(t, N.FieldAccess):
            obj = self.expr(t.target)
            val = self.expr(s.value)
            self.emit(("setf", obj, t.fieldname, val), s.pos)
        elif isinstance(t, N.ArrayAccess):
            arr = self.expr(t.array)
            idx = self.expr(t.index)
            val = self.expr(s.value)
            op = "astore_nc" if id(t) in self.marks.unchecked else "astore"
            self.emit((op, arr, idx, val), s.pos)
        else:
            raise InternalCompileError("bad assignment target")

    # -- expressions --------------------------------------------------------------

    def expr(self, e: N.Expr) -> int:
        if isinstance(e, (N.IntLit, N.DoubleLit, N.BoolLit, N.CharLit)):
            d = self.fresh()
            self.emit(("const", d, e.value), e.pos)
            return d
        if isinstance(e, N.NullLit):
            d = self.fresh()
            self.emit(("const", d, None), e.pos)
            return d
        if isinstance(e, N.Ident):
            d = self.fresh()
            if e.binding == "global":
                self.emit(("gload", d, e.name), e.pos)
            elif e.binding == "field":
                self.emit(("getf", d, self.lookup("self"), e.name), e.pos)
            else:
                self.emit(("mov", d, self.lookup(e.name)), e.pos)
            return d
        if isinstance(e, N.SelfRef):
            return self.lookup("self")
        if isinstance(e, N.FieldAccess):
            obj = self.expr(e.target)
            d = self.fresh()
            self.emit(("getf", d, obj, e.fieldname), e.pos)
            return d
        if isinstance(e, N.ArrayAccess):
            arr = self.expr(e.array)
            idx = self.expr(e.index)
            d = self.fresh()
            op = "aload_nc" if id(e) in self.marks.unchecked else "aload"
            self.emit((op, d, arr, idx), e.pos)
            return d
        if isinstance(e, N.ArrayLength):
            arr = self.expr(e.array)
            d = self.fresh()
            self.emit(("alen", d, arr), e.pos)
            return d
        if isinstance(e, N.Unary):
            v = self.expr(e.operand)
            d = self.fresh()
            if e.op == "!":
                self.emit(("bnot", d, v), e.pos)
            elif e.op_kind == "double":
                self.emit(("dneg", d, v), e.pos)
            else:
                self.emit(("ineg", d, v), e.pos)
            return d
        if isinstance(e, N.Binary):
            return self._binary(e)
        if isinstance(e, N.Cast):
            return self._cast(e)
        if isinstance(e, N.Call):
            key, args = self._call_args(e)
            d = self.fresh()
            self.emit(("call", d, key, tuple(args)), e.pos)
            return d
        if isinstance(e, N.New):
            rec = self.p.record(e.record)
            arg_tags = [f.ty.tag for f in rec.fields]
            args = self._arg_regs(e.args, arg_tags, e.pos)
            d = self.fresh()
            self.emit(("newrec", d, e.record, tuple(args)), e.pos)
            return d
        if isinstance(e, N.NewArray):
            n = self.expr(e.length)
            d = self.fresh()
            self.emit(("newarr", d, e.elem, n), e.pos)
            return d
        if isinstance(e, N.PostIncDec):
            return self._postincdec(e)
        if isinstance(e, N.Unfilled):
            self.emit(("unfilled", e.hole_id), e.pos)
            d = self.fresh()
            self.emit(("const", d, 0), e.pos)
            return d
        if isinstance(e, N.Ticks):
            d = self.fresh()
            self.emit(("ticks", d), e.pos)
            return d
        if isinstance(e, N.Hole):
            raise InternalCompileError("templates are not compilable; fill holes first")
        raise InternalCompileError(f"cannot compile expression {e!r}")

    def _widen_char(self, r: int, pos) -> int:
        d = self.fresh()
        op = "c2i_s" if self.level == "L2" and FAULT_CHAR in self.faults else "c2i"
        self.emit((op, d, r), pos)
        return d

    def _binary(self, e: N.Binary) -> int:
        op = e.op
        if op in ("&&", "||"):
            d = self.fresh()
            short = self.label()
            done = self.label()
            l = self.expr(e.lhs)
            if op == "&&":
                self.emit(("jz", l, short), e.pos)
            else:
                self.emit(("jnz", l, short), e.pos)
            r = self.expr(e.rhs)
            self.emit(("mov", d, r))
            self.emit(("jmp", done))
            self.place(short)
            self.emit(("const", d, op == "||"))
            self.place(done)
            return d
        l = self.expr(e.lhs)
        r = self.expr(e.rhs)
        kind = e.op_kind
        d = self.fresh()
        if op in N.REL_OPS:
            if kind == "char":
                l = self._widen_char(l, e.pos)
                r = self._widen_char(r, e.pos)
                self.emit(("icmp", d, op, l, r), e.pos)
            elif kind == "double":
                self.emit(("dcmp", d, op, l, r), e.pos)
            elif kind == "ref":
                self.emit(("acmp", d, op, l, r), e.pos)
            else:  # int and bool compare by value
                self.emit(("icmp", d, op, l, r), e.pos)
            return d
        mnem = {
            "+": "add", "-": "sub", "*": "mul", "/": "div", "%": "rem",
            "<<": "shl", ">>": "shr", ">>>": "ushr",
        }[op]
        prefix = "d" if kind == "double" else "i"
        self.emit((f"{prefix}{mnem}", d, l, r), e.pos)
        return d

    def _cast(self, e: N.Cast) -> int:
        v = self.expr(e.operand)
        frm = e.operand.ty.tag
        to = e.to.tag
        if frm == to:
            return v
        d = self.fresh()
        if to == "int":
            if frm == "char":
                return self._widen_char(v, e.pos)
            self.emit(("d2i", d, v), e.pos)
        elif to == "double":
            if frm == "char":
                w = self._widen_char(v, e.pos)
                self.emit(("i2d", d, w), e.pos)
            else:
                self.emit(("i2d", d, v), e.pos)
        else:
            self.emit(("i2c", d, v), e.pos)
        return d

    def _call_args(self, e: N.Call) -> tuple[str, list[int]]:
        if e.receiver is not None:
            key = f"{e.receiver.ty.name}.{e.name}"
            fn = self.p.function(key)
            recv = self.expr(e.receiver)
            self.emit(("nullck", recv), e.pos)
            tags = [t.tag for t in fn.signature()]
            args = [recv] + self._arg_regs(e.args, tags[1:], e.pos)
            return key, args
        fn = self.p.function(e.name)
        tags = [t.tag for t in fn.signature()]
        return e.name, self._arg_regs(e.args, tags, e.pos)

    def _arg_regs(self, args: list[N.Expr], tags: list[str], pos, skip_frem_guard: bool = False) -> list[int]:
        regs = [self.expr(a) for a in args]
        if self.level != "L2" or FAULT_FREM not in self.faults or skip_frem_guard:
            return regs
        frem_at = next((i for i, a in enumerate(args) if a.ty is not None and a.ty.tag == "double" and expr_has_frem(a)), None)
        if frem_at is None:
            return regs
        doubles = [i for i, t in enumerate(tags) if t == "double"]
        if len(doubles) < 2:
            return regs
        # The remainder's scratch register aliases the next double argument's
        # register, leaving 0.0 there.
        after = [i for i in doubles if i > frem_at]
        victim = after[0] if after else doubles[0]
        if victim == frem_at:
            return regs
        self.emit(("const", regs[victim], 0.0), pos)
        return regs

    def _postincdec(self, e: N.PostIncDec) -> int:
        old = self.fresh()
        if e.binding == "global":
            self.emit(("gload", old, e.name), e.pos)
        elif e.binding == "field":
            self.emit(("getf", old, self.lookup("self"), e.name), e.pos)
        else:
            self.emit(("mov", old, self.lookup(e.name)), e.pos)
        one = self.fresh()
        self.emit(("const", one, 1), e.pos)
        new = self.fresh()
        self.emit(("iadd" if e.op == "++" else "isub", new, old, one), e.pos)
        if e.binding == "global":
            self.emit(("gstore", e.name, new), e.pos)
        elif e.binding == "field":
            self.emit(("setf", self.lookup("self"), e.name, new), e.pos)
        else:
            self.emit(("mov", self.lookup(e.name), new), e.pos)
        return old


# -- loop-invariant code motion (AST level, L2) ---------------------------------

_LICM_LEAF = (N.IntLit, N.DoubleLit, N.BoolLit, N.CharLit)


def _licm_hoistable(e: N.Expr, banned: set[str]) -> bool:
    """Pure, non-trapping, and all free locals outside `banned`."""
    if isinstance(e, _LICM_LEAF):
        return True
    if isinstance(e, N.Ident):
        return e.binding in ("local", "param") and e.name not in banned
    if isinstance(e, N.ArrayLength):
        return _licm_hoistable(e.array, banned)
    if isinstance(e, N.Unary):
        return _licm_hoistable(e.operand, banned)
    if isinstance(e, N.Cast):
        return _licm_hoistable(e.operand, banned)
    if isinstance(e, N.Binary):
        if e.op in ("&&", "||"):
            return False
        if e.op_kind == "int" and e.op in ("/", "%"):
            return False  # may trap
        if e.op_kind == "ref":
            return False
        return _licm_hoistable(e.lhs, banned) and _licm_hoistable(e.rhs, banned)
    return False


def _is_compound(e: N.Expr) -> bool:
    return isinstance(e, (N.Unary, N.Binary, N.Cast, N.ArrayLength))


def _licm_candidates(loop: N.While, banned: set[str]) -> list[N.Expr]:
    """Maximal hoistable compound subexpressions of the guard and body."""
    found: list[N.Expr] = []

    def visit(e: N.Expr):
        if _is_compound(e) and _licm_hoistable(e, banned):
            if not any(e == f for f in found):
                found.append(e)
            return
        for child in N.expr_children(e):
            visit(child)

    visit(loop.cond)
    for s in N.walk_stmts(loop.body):
        for top in N.stmt_exprs(s):
            visit(top)
    return found


def _replace_expr(e: N.Expr, old: N.Expr, make_new) -> N.Expr:
    if e == old:
        return make_new()
    for name in ("operand", "lhs", "rhs", "target", "array", "index", "length", "value"):
        if hasattr(e, name):
            child = getattr(e, name)
            if isinstance(child, N.Expr):
                setattr(e, name, _replace_expr(child, old, make_new))
    if isinstance(e, (N.Call, N.New)):
        e.args = [_replace_expr(a, old, make_new) for a in e.args]
        if isinstance(e, N.Call) and e.receiver is not None:
            e.receiver = _replace_expr(e.receiver, old, make_new)
    return e


def _replace_in_stmt(s: N.Stmt, old: N.Expr, make_new) -> None:
    for sub in N.walk_stmts(s):
        if isinstance(sub, N.VarDecl):
            sub.init = _replace_expr(sub.init, old, make_new)
        elif isinstance(sub, N.Assign):
            sub.value = _replace_expr(sub.value, old, make_new)
            if isinstance(sub.target, N.ArrayAccess):
                sub.target.index = _replace_expr(sub.target.index, old, make_new)
        elif isinstance(sub, N.ExprStmt):
            sub.expr = _replace_expr(sub.expr, old, make_new)
        elif isinstance(sub, N.If):
            sub.cond = _replace_expr(sub.cond, old, make_new)
        elif isinstance(sub, N.While):
            sub.cond = _replace_expr(sub.cond, old, make_new)
        elif isinstance(sub, N.For):
            if sub.cond is not None:
                sub.cond = _replace_expr(sub.cond, old, make_new)
        elif isinstance(sub, N.Return) and sub.value is not None:
            sub.value = _replace_expr(sub.value, old, make_new)


class _LicmRewriter:
    def __init__(self, fn: N.FunctionDecl):
        self.fn = fn
        self.counter = 0
        taken = {q.name for q in fn.params}
        for s in N.walk_stmts(fn.body):
            if isinstance(s, N.VarDecl):
                taken.add(s.name)
        self.taken = taken

    def _fresh_name(self) -> str:
        while True:
            self.counter += 1
            name = f"_licm{self.counter}"
            if name not in self.taken:
                self.taken.add(name)
                return name

    def rewrite_block(self, b: N.Block) -> None:
        out: list[N.Stmt] = []
        for s in b.stmts:
            if isinstance(s, N.If):
                self.rewrite_block(s.then)
                if isinstance(s.orelse, N.Block):
                    self.rewrite_block(s.orelse)
                elif isinstance(s.orelse, N.If):
                    self.rewrite_block(N.Block([s.orelse]))
            elif isinstance(s, (N.While, N.For)):
                self.rewrite_block(s.body)
            if isinstance(s, N.While):
                out.extend(self._hoist(s))
            out.append(s)
        b.stmts = out

    def _hoist(self, loop: N.While) -> list[N.Stmt]:
        banned = set()
        for sub in N.walk_stmts(loop):
            if isinstance(sub, N.Assign) and isinstance(sub.target, N.Ident):
                banned.add(sub.target.name)
            elif isinstance(sub, N.VarDecl):
                banned.add(sub.name)
            for e0 in N.stmt_exprs(sub):
                for x in N.walk_exprs(e0):
                    if isinstance(x, N.PostIncDec):
                        banned.add(x.name)
        decls: list[N.Stmt] = []
        for cand in _licm_candidates(loop, banned):
            name = self._fresh_name()
            hoisted = copy.deepcopy(cand)
            decl = N.VarDecl(cand.ty, name, hoisted)
            decls.append(decl)

            def make_ident(nm=name, ty=cand.ty):
                ident = N.Ident(nm)
                ident.ty = ty
                ident.binding = "local"
                return ident

            loop.cond = _replace_expr(loop.cond, cand, make_ident)
            for s in loop.body.stmts:
                _replace_in_stmt(s, cand, make_ident)
        return decls


def _licm_program(p: N.Program) -> None:
    for fn in p.functions:
        _LicmRewriter(fn).rewrite_block(fn.body)


# -- IR optimization passes --------------------------------------------------------

_FOLD_INT = {
    "iadd": V.int_add, "isub": V.int_sub, "imul": V.int_mul,
    "ishl": V.int_shl, "ishr": V.int_shr, "iushr": V.int_ushr,
}
_FOLD_DBL = {
    "dadd": lambda a, b: a + b,
    "dsub": lambda a, b: a - b,
    "dmul": lambda a, b: a * b,
    "drem": V.dbl_rem,
}


def _cmp(op: str, l, r) -> bool:
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


def _map_uses(ins: tuple, f) -> tuple:
    op = ins[0]
    if op in ("mov", "ineg", "dneg", "bnot", "c2i", "c2i_s", "i2c", "i2d", "d2i", "alen"):
        return (op, ins[1], f(ins[2]))
    if op in _FOLD_INT or op in ("idiv", "irem") or op in _FOLD_DBL or op in ("ddiv",):
        return (op, ins[1], f(ins[2]), f(ins[3]))
    if op in ("icmp", "dcmp", "acmp"):
        return (op, ins[1], ins[2], f(ins[3]), f(ins[4]))
    if op == "newarr":
        return (op, ins[1], ins[2], f(ins[3]))
    if op in ("aload", "aload_nc"):
        return (op, ins[1], f(ins[2]), f(ins[3]))
    if op in ("astore", "astore_nc"):
        return (op, f(ins[1]), f(ins[2]), f(ins[3]))
    if op in ("newrec", "call"):
        return (op, ins[1], ins[2], tuple(f(a) for a in ins[3]))
    if op == "getf":
        return (op, ins[1], f(ins[2]), ins[3])
    if op == "setf":
        return (op, f(ins[1]), ins[2], f(ins[3]))
    if op == "gstore":
        return (op, ins[1], f(ins[2]))
    if op in ("jz", "jnz"):
        return (op, f(ins[1]), ins[2])
    if op == "ret":
        return (op, f(ins[1]))
    if op == "nullck":
        return (op, f(ins[1]))
    return ins


def _fold_pass(fn: IRFunction) -> bool:
    code = fn.code
    leaders = set(block_leaders(code))
    consts: dict[int, object] = {}
    copies: dict[int, int] = {}
    changed = False

    def resolve(r: int) -> int:
        seen = set()
        while r in copies and r not in seen:
            seen.add(r)
            r = copies[r]
        return r

    for i, ins in enumerate(code):
        if i in leaders:
            consts.clear()
            copies.clear()
        op = ins[0]
        if op == "nop":
            continue
        new = _map_uses(ins, resolve)
        op = new[0]
        folded = None
        if op == "mov":
            src = new[2]
            if src in consts:
                folded = ("const", new[1], consts[src])
        elif op in _FOLD_INT and new[2] in consts and new[3] in consts:
            folded = ("const", new[1], _FOLD_INT[op](consts[new[2]], consts[new[3]]))
        elif op in ("idiv", "irem") and new[2] in consts and new[3] in consts:
            if consts[new[3]] != 0:
                f = V.int_div if op == "idiv" else V.int_rem
                folded = ("const", new[1], f(consts[new[2]], consts[new[3]]))
        elif op in _FOLD_DBL and new[2] in consts and new[3] in consts:
            folded = ("const", new[1], _FOLD_DBL[op](consts[new[2]], consts[new[3]]))
        elif op == "ddiv" and new[2] in consts and new[3] in consts:
            folded = ("const", new[1], _ddiv(consts[new[2]], consts[new[3]]))
        elif op in ("icmp", "dcmp") and new[3] in consts and new[4] in consts:
            folded = ("const", new[1], _cmp(new[2], consts[new[3]], consts[new[4]]))
        elif op == "ineg" and new[2] in consts:
            folded = ("const", new[1], V.wrap32(-consts[new[2]]))
        elif op == "dneg" and new[2] in consts:
            folded = ("const", new[1], -consts[new[2]])
        elif op == "bnot" and new[2] in consts:
            folded = ("const", new[1], not consts[new[2]])
        elif op == "c2i" and new[2] in consts:
            folded = ("const", new[1], consts[new[2]])
        elif op == "c2i_s" and new[2] in consts:
            v = consts[new[2]]
            folded = ("const", new[1], v - 0x10000 if v >= 0x8000 else v)
        elif op == "i2c" and new[2] in consts:
            folded = ("const", new[1], V.i2c(consts[new[2]]))
        elif op == "i2d" and new[2] in consts:
            folded = ("const", new[1], float(consts[new[2]]))
        elif op == "d2i" and new[2] in consts:
            folded = ("const", new[1], V.d2i(consts[new[2]]))
        elif op == "jz" and new[1] in consts:
            folded = ("nop",) if consts[new[1]] else ("jmp", new[2])
        elif op == "jnz" and new[1] in consts:
            folded = ("jmp", new[2]) if consts[new[1]] else ("nop",)
        if folded is not None:
            new = folded
            op = new[0]
        if new != ins:
            code[i] = new
            changed = True
        d = instr_def(new)
        if d is not None:
            consts.pop(d, None)
            copies.pop(d, None)
            for k in [k for k, v in copies.items() if v == d]:
                copies.pop(k)
        if op == "const":
            consts[new[1]] = new[2]
        elif op == "mov":
            copies[new[1]] = new[2]
    return changed


def _dce_pass(fn: IRFunction) -> bool:
    used: set[int] = set()
    for ins in fn.code:
        if ins[0] == "nop":
            continue
        used.update(instr_uses(ins))
    changed = False
    for i, ins in enumerate(fn.code):
        op = ins[0]
        if op == "nop" or op not in PURE_OPS:
            continue
        d = instr_def(ins)
        if d is not None and d not in used:
            fn.code[i] = ("nop",)
            changed = True
    return changed


def _reach_pass(fn: IRFunction) -> bool:
    """Drop instructions no path reaches (after branch folding)."""
    code = fn.code
    n = len(code)
    reach = [False] * n
    work = [0]
    while work:
        i = work.pop()
        while i < n and not reach[i]:
            reach[i] = True
            ins = code[i]
            op = ins[0]
            if op == "jmp":
                work.append(ins[1])
                break
            if op in ("jz", "jnz"):
                work.append(ins[2])
            elif op in ("ret", "retu"):
                break
            i += 1
    changed = False
    for i in range(n):
        if not reach[i] and code[i][0] != "nop":
            code[i] = ("nop",)
            changed = True
    return changed


def _pow2_exp(v) -> int | None:
    if isinstance(v, int) and not isinstance(v, bool) and v >= 2 and (v & (v - 1)) == 0:
        return v.bit_length() - 1
    return None


def _strength_reduce(fn: IRFunction) -> bool:
    code = fn.code
    leaders = set(block_leaders(code))
    consts: dict[int, object] = {}
    new_code: list[tuple] = []
    new_spans: list[tuple] = []
    remap: list[int] = []
    changed = False

    def emit(ins, span):
        new_code.append(ins)
        new_spans.append(span)

    def fresh() -> int:
        fn.nregs += 1
        return fn.nregs - 1

    for i, ins in enumerate(code):
        if i in leaders:
            consts.clear()
        remap.append(len(new_code))
        span = fn.spans[i] if i < len(fn.spans) else (0, 0)
        op = ins[0]
        k = None
        if op == "imul":
            for a, b in ((ins[2], ins[3]), (ins[3], ins[2])):
                k = _pow2_exp(consts.get(b)) if b in consts else None
                if k is not None:
                    tk = fresh()
                    emit(("const", tk, k), span)
                    emit(("ishl", ins[1], a, tk), span)
                    changed = True
                    break
        elif op in ("idiv", "irem") and ins[3] in consts:
            k = _pow2_exp(consts.get(ins[3]))
            if k is not None and k >= 1:
                x = ins[2]
                t31 = fresh()
                emit(("const", t31, 31), span)
                sign = fresh()
                emit(("ishr", sign, x, t31), span)
                tshift = fresh()
                emit(("const", tshift, 32 - k), span)
                bias = fresh()
                emit(("iushr", bias, sign, tshift), span)
                adj = fresh()
                emit(("iadd", adj, x, bias), span)
                tk = fresh()
                emit(("const", tk, k), span)
                if op == "idiv":
                    emit(("ishr", ins[1], adj, tk), span)
                else:
                    q = fresh()
                    emit(("ishr", q, adj, tk), span)
                    shifted = fresh()
                    emit(("ishl", shifted, q, tk), span)
                    emit(("isub", ins[1], x, shifted), span)
                changed = True
            else:
                k = None
        if k is None:
            emit(ins, span)
        d = instr_def(ins)
        if d is not None:
            consts.pop(d, None)
        if op == "const":
            consts[ins[1]] = ins[2]
    if not changed:
        return False
    for j, ins in enumerate(new_code):
        if ins[0] == "jmp":
            new_code[j] = ("jmp", remap[ins[1]])
        elif ins[0] in ("jz", "jnz"):
            new_code[j] = (ins[0], ins[1], remap[ins[2]])
    fn.code = new_code
    fn.spans = new_spans
    return True


def _compact(fn: IRFunction) -> None:
    code = fn.code
    n = len(code)
    next_real = [0] * (n + 1)
    acc = sum(1 for ins in code if ins[0] != "nop")
    next_real[n] = acc
    pos = acc
    for i in range(n - 1, -1, -1):
        if code[i][0] != "nop":
            pos -= 1
        next_real[i] = pos
    new_code = []
    new_spans = []
    for i, ins in enumerate(code):
        if ins[0] == "nop":
            continue
        if ins[0] == "jmp":
            ins = ("jmp", next_real[ins[1]])
        elif ins[0] in ("jz", "jnz"):
            ins = (ins[0], ins[1], next_real[ins[2]])
        new_code.append(ins)
        new_spans.append(fn.spans[i] if i < len(fn.spans) else (0, 0))
    if not new_code or new_code[-1][0] not in ("jmp", "ret", "retu"):
        new_code.append(("retu",))
        new_spans.append((0, 0))
    fn.code = new_code
    fn.spans = new_spans


def _optimize_fn(fn: IRFunction, level: str) -> None:
    for _ in range(4):
        changed = _fold_pass(fn)
        changed |= _reach_pass(fn)
        changed |= _dce_pass(fn)
        if not changed:
            break
    if level == "L2" and _strength_reduce(fn):
        for _ in range(3):
            if not (_fold_pass(fn) | _dce_pass(fn)):
                break
    _compact(fn)


# -- driver -------------------------------------------------------------------------


def compile_program(
    program: N.Program, level: str = "L0", faults: frozenset[str] | set[str] = frozenset()
) -> BytecodeModule:
    """Compile a hole-free program. Faults activate only in L2 passes; at L0
    the instruction stream is the naive translation."""
    if level not in _LEVELS:
        raise InternalCompileError(f"unknown level {level}")
    faults = frozenset(faults)
    unknown = faults - set(FAULT_NAMES)
    if unknown:
        raise InternalCompileError(f"unknown fault flags {sorted(unknown)}")

    prog = program
    marks_by_key: dict[str, L2Marks] = {}
    if level == "L2":
        prog = copy.deepcopy(program)
        _licm_program(prog)
        for fn in prog.functions:
            marks_by_key[fn.key] = analyze_function(fn, faults)

    functions: dict[str, IRFunction] = {}
    for fn in prog.functions:
        cg = _FnCodegen(prog, level, faults, marks_by_key.get(fn.key))
        functions[fn.key] = cg.compile_function(fn)
    global_inits = []
    for g in prog.globals:
        cg = _FnCodegen(prog, level, faults, None)
        global_inits.append((g.name, g.ty.tag, cg.compile_global_init(g)))

    if level in ("L1", "L2"):
        for fn in functions.values():
            _optimize_fn(fn, level)
        for _, _, init in global_inits:
            _optimize_fn(init, level)

    module = BytecodeModule(
        unit=prog.name,
        level=level,
        faults=faults,
        functions=functions,
        global_inits=global_inits,
        records={r.name: r for r in prog.records},
    )
    verify_module(module)
    return module
