"""Name resolution and static typing for MiniJ.

Every expression gets exactly one static type; identifiers resolve through
locals/params, then receiver fields, then globals. Checking also snapshots,
per hole site, the visible value bindings at that point together with the
enclosing assignment target, which is what execution-based filling consults
when it decides a hole.

Typing rules: arithmetic is int*int or double*double (no implicit numeric
promotion); relational operators compare int, double, or char pairs (chars
compare by code unit) and yield bool; `==`/`!=` additionally compare bool
pairs and references (same record type, or against null); logical operators
short-circuit over bools. Casts cover int<->double and int<->char.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..errors import TypeCheckError
from . import nodes as N

_CASTS = {
    "int": ("int", "double", "char"),
    "double": ("int", "double"),
    "char": ("int", "char"),
}


@dataclass(frozen=True)
class Candidate:
    """One visible value binding: how a fill can reference it."""

    name: str
    binding: str  # local | param | field | global | self
    ty: N.Type
    shadowed: bool = False  # field hidden by a local; reachable via self.<name>


@dataclass(frozen=True)
class HoleSite:
    """Static context of an evaluable hole: scope snapshot and excluded target."""

    scope: tuple[Candidate, ...]
    excluded: tuple[str, str] | None  # (name, binding) of the enclosing assign target
    fn_key: str | None  # None for global initializers


class Checker:
    def __init__(self, program: N.Program):
        self.p = program
        self.fn: N.FunctionDecl | None = None
        self.locals: list[dict[str, N.Type]] = []
        self.local_order: list[tuple[str, str, N.Type]] = []  # (name, binding, ty)
        self.known_globals: list[N.GlobalDecl] = []
        self.in_global_init = False
        self.assign_target: tuple[str, str] | None = None
        self.hole_sites: dict[int, HoleSite] = {}

    # -- entry point ---------------------------------------------------------

    def check(self) -> None:
        self._check_decl_names()
        self.known_globals = []
        for g in self.p.globals:
            self.in_global_init = True
            got = self.expr(g.init, expected=g.ty)
            self.in_global_init = False
            if got != g.ty:
                self._err(g.init, f"global {g.name}: initializer is {got}, declared {g.ty}")
            self.known_globals.append(g)
        for fn in self.p.functions:
            self._check_function(fn)
        if self.p.harness is not None:
            self._check_harness(self.p.harness)
        self.p.hole_sites = self.hole_sites

    def _check_decl_names(self) -> None:
        seen: set[str] = set()
        for g in self.p.globals:
            if g.name in seen:
                raise TypeCheckError(f"duplicate global {g.name}")
            if g.ty == N.UNIT:
                raise TypeCheckError(f"global {g.name} cannot be unit")
            seen.add(g.name)
        rnames: set[str] = set()
        for r in self.p.records:
            if r.name in rnames:
                raise TypeCheckError(f"duplicate record {r.name}")
            rnames.add(r.name)
            fnames: set[str] = set()
            for f in r.fields:
                if f.name in fnames:
                    raise TypeCheckError(f"duplicate field {r.name}.{f.name}")
                fnames.add(f.name)
                self._require_value_type(f.ty, f"field {r.name}.{f.name}")
        fkeys: set[str] = set()
        for fn in self.p.functions:
            if fn.key in fkeys:
                raise TypeCheckError(f"duplicate function {fn.key}")
            fkeys.add(fn.key)
            if fn.receiver is not None and self.p.record(fn.receiver) is None:
                raise TypeCheckError(f"{fn.key}: receiver record {fn.receiver} not declared")
            pnames = set()
            for q in fn.params:
                if q.name in pnames or q.name == "self":
                    raise TypeCheckError(f"{fn.key}: bad parameter name {q.name}")
                pnames.add(q.name)
                self._require_value_type(q.ty, f"parameter {fn.key}.{q.name}")
            if fn.ret != N.UNIT:
                self._require_value_type(fn.ret, f"return type of {fn.key}")

    def _require_value_type(self, ty: N.Type, what: str) -> None:
        if ty == N.UNIT:
            raise TypeCheckError(f"{what} cannot be unit")
        if ty.tag == "record" and self.p.record(ty.name) is None:
            raise TypeCheckError(f"{what}: unknown record {ty.name}")

    # -- functions -----------------------------------------------------------

    def _check_function(self, fn: N.FunctionDecl) -> None:
        self.fn = fn
        self.locals = [dict()]
        self.local_order = []
        for q in fn.params:
            self.locals[0][q.name] = q.ty
            self.local_order.append((q.name, "param", q.ty))
        self.block(fn.body, push=False)
        if fn.ret != N.UNIT and not self._returns(fn.body):
            raise TypeCheckError(f"{fn.key}: missing return on some path")
        self.fn = None
        self.locals = []
        self.local_order = []

    def _returns(self, s: N.Stmt) -> bool:
        if isinstance(s, N.Return):
            return True
        if isinstance(s, N.Block):
            return any(self._returns(sub) for sub in s.stmts)
        if isinstance(s, N.If):
            return s.orelse is not None and self._returns(s.then) and self._returns(s.orelse)
        return False

    def _check_harness(self, h: N.HarnessDecl) -> None:
        entry = self.p.function(h.entry)
        if entry is None:
            raise TypeCheckError(f"harness entry {h.entry} not declared")
        sig = entry.signature()
        if h.args_from is not None:
            fn = self.p.function(h.args_from)
            if fn is None or fn.params or fn.receiver:
                raise TypeCheckError(f"harness args_from {h.args_from} must be a zero-arg function")
            if fn.ret.tag != "record":
                raise TypeCheckError("args_from function must return a tuple record")
            rec = self.p.record(fn.ret.name)
            if tuple(f.ty for f in rec.fields) != sig:
                raise TypeCheckError("args_from record fields do not match the entry signature")
        else:
            provs = h.providers or []
            if len(provs) != len(sig):
                raise TypeCheckError(
                    f"harness provides {len(provs)} args, entry takes {len(sig)}"
                )
            for name, ty in zip(provs, sig):
                fn = self.p.function(name)
                if fn is None or fn.params or fn.receiver:
                    raise TypeCheckError(f"provider {name} must be a zero-arg function")
                if fn.ret != ty:
                    raise TypeCheckError(f"provider {name} returns {fn.ret}, entry needs {ty}")

    # -- statements ----------------------------------------------------------

    def block(self, b: N.Block, push: bool = True) -> None:
        if push:
            self.locals.append({})
            mark = len(self.local_order)
        for s in b.stmts:
            self.stmt(s)
        if push:
            self.locals.pop()
            del self.local_order[mark:]

    def stmt(self, s: N.Stmt) -> None:
        if isinstance(s, N.VarDecl):
            self._require_value_type(s.ty, f"local {s.name}")
            got = self.expr(s.init, expected=s.ty)
            if got != s.ty:
                self._err(s.init, f"{s.name}: initializer is {got}, declared {s.ty}")
            if s.name == "self" or any(s.name in scope for scope in self.locals):
                raise TypeCheckError(f"redeclaration of {s.name}")
            self.locals[-1][s.name] = s.ty
            self.local_order.append((s.name, "local", s.ty))
        elif isinstance(s, N.Assign):
            tty = self._lvalue(s.target)
            prev = self.assign_target
            self.assign_target = self._target_key(s.target)
            got = self.expr(s.value, expected=tty)
            self.assign_target = prev
            if got != tty:
                self._err(s.value, f"assigning {got} to {tty} target")
        elif isinstance(s, N.ExprStmt):
            self.expr(s.expr)
        elif isinstance(s, N.If):
            self._cond(s.cond)
            self.block(s.then)
            if s.orelse is not None:
                if isinstance(s.orelse, N.If):
                    self.stmt(s.orelse)
                else:
                    self.block(s.orelse)
        elif isinstance(s, N.While):
            self._cond(s.cond)
            self.block(s.body)
        elif isinstance(s, N.For):
            self.locals.append({})
            mark = len(self.local_order)
            if s.init is not None:
                self.stmt(s.init)
            if s.cond is not None:
                self._cond(s.cond)
            self.block(s.body)
            if s.update is not None:
                self.stmt(s.update)
            self.locals.pop()
            del self.local_order[mark:]
        elif isinstance(s, N.Return):
            assert self.fn is not None
            if s.value is None:
                if self.fn.ret != N.UNIT:
                    raise TypeCheckError(f"{self.fn.key}: return needs a {self.fn.ret} value")
            else:
                got = self.expr(s.value, expected=self.fn.ret)
                if got != self.fn.ret:
                    self._err(s.value, f"returning {got} from {self.fn.ret} function")
        elif isinstance(s, N.Block):
            self.block(s)
        else:
            raise AssertionError(f"unknown statement {s!r}")

    def _cond(self, e: N.Expr) -> None:
        got = self.expr(e, expected=N.BOOL)
        if got != N.BOOL:
            self._err(e, f"condition is {got}, needs bool")

    def _lvalue(self, e: N.Expr) -> N.Type:
        if isinstance(e, N.Ident):
            ty, binding = self._resolve(e.name, e)
            e.ty, e.binding = ty, binding
            return ty
        if isinstance(e, N.FieldAccess):
            return self.expr(e)
        if isinstance(e, N.ArrayAccess):
            return self.expr(e)
        self._err(e, "invalid assignment target")

    def _target_key(self, target: N.Expr) -> tuple[str, str] | None:
        if isinstance(target, N.Ident):
            return (target.name, target.binding)
        if isinstance(target, N.FieldAccess) and isinstance(target.target, N.SelfRef):
            return (target.fieldname, "field")
        return None

    # -- scope ----------------------------------------------------------------

    def _resolve(self, name: str, where: N.Expr) -> tuple[N.Type, str]:
        for scope in reversed(self.locals):
            if name in scope:
                binding = "param" if (self.fn and any(q.name == name for q in self.fn.params) and name in self.locals[0]) else "local"
                return scope[name], binding
        if self.fn is not None and self.fn.receiver is not None:
            rec = self.p.record(self.fn.receiver)
            fty = rec.field_type(name)
            if fty is not None:
                return fty, "field"
        g = self.p.global_decl(name)
        if g is not None:
            if self.in_global_init and g not in self.known_globals:
                self._err(where, f"global initializer references later global {name}")
            return g.ty, "global"
        self._err(where, f"unresolved name {name}")

    def _visible_scope(self) -> tuple[Candidate, ...]:
        """Bindings visible here, in a stable canonical order."""
        out: list[Candidate] = []
        local_names = {name for scope in self.locals for name in scope}
        for name, binding, ty in self.local_order:
            if any(name in scope for scope in self.locals):
                out.append(Candidate(name, binding, ty))
        if self.fn is not None and self.fn.receiver is not None:
            rec = self.p.record(self.fn.receiver)
            for f in rec.fields:
                out.append(Candidate(f.name, "field", f.ty, shadowed=f.name in local_names))
            out.append(Candidate("self", "self", N.record_ref(self.fn.receiver)))
        field_names = set()
        if self.fn is not None and self.fn.receiver is not None:
            field_names = {f.name for f in self.p.record(self.fn.receiver).fields}
        for g in self.known_globals if self.in_global_init else self.p.globals:
            if g.name not in local_names and g.name not in field_names:
                out.append(Candidate(g.name, "global", g.ty))
        return tuple(out)

    # -- expressions -----------------------------------------------------------

    def expr(self, e: N.Expr, expected: N.Type | None = None) -> N.Type:
        ty = self._expr(e, expected)
        e.ty = ty
        return ty

    def _expr(self, e: N.Expr, expected: N.Type | None) -> N.Type:
        if isinstance(e, N.IntLit):
            return N.INT
        if isinstance(e, N.DoubleLit):
            return N.DOUBLE
        if isinstance(e, N.BoolLit):
            return N.BOOL
        if isinstance(e, N.CharLit):
            return N.CHAR
        if isinstance(e, N.NullLit):
            if expected is not None and expected.tag == "record":
                return expected
            self._err(e, "cannot infer a record type for null here")
        if isinstance(e, N.Unfilled):
            # Unreached unless executed; adopt the contextual type, int failing that.
            return expected if expected is not None else N.INT
        if isinstance(e, N.Ticks):
            if self.in_global_init:
                self._err(e, "ticks() is not allowed in global initializers")
            return N.INT
        if isinstance(e, N.Ident):
            ty, binding = self._resolve(e.name, e)
            e.binding = binding
            return ty
        if isinstance(e, N.SelfRef):
            if self.fn is None or self.fn.receiver is None:
                self._err(e, "self outside a method")
            return N.record_ref(self.fn.receiver)
        if isinstance(e, N.FieldAccess):
            tty = self.expr(e.target)
            if tty.tag != "record":
                self._err(e, f"field access on {tty}")
            fty = self.p.record(tty.name).field_type(e.fieldname)
            if fty is None:
                self._err(e, f"record {tty.name} has no field {e.fieldname}")
            return fty
        if isinstance(e, N.ArrayAccess):
            aty = self.expr(e.array)
            if aty.tag != "array":
                self._err(e, f"indexing a {aty}")
            ity = self.expr(e.index, expected=N.INT)
            if ity != N.INT:
                self._err(e.index, f"array index is {ity}, needs int")
            return N.PRIMITIVES[aty.elem]
        if isinstance(e, N.ArrayLength):
            aty = self.expr(e.array)
            if aty.tag != "array":
                self._err(e, f"length of a {aty}")
            return N.INT
        if isinstance(e, N.Unary):
            if e.op == "!":
                got = self.expr(e.operand, expected=N.BOOL)
                if got != N.BOOL:
                    self._err(e, f"! applied to {got}")
                e.op_kind = "bool"
                return N.BOOL
            got = self.expr(e.operand)
            if got not in (N.INT, N.DOUBLE):
                self._err(e, f"unary - applied to {got}")
            e.op_kind = got.tag
            return got
        if isinstance(e, N.Binary):
            return self._binary(e)
        if isinstance(e, N.Cast):
            got = self.expr(e.operand)
            if got.tag not in _CASTS.get(e.to.tag, ()):
                self._err(e, f"cannot cast {got} to {e.to}")
            return e.to
        if isinstance(e, N.Call):
            if self.in_global_init:
                self._err(e, "calls are not allowed in global initializers")
            return self._call(e)
        if isinstance(e, N.New):
            rec = self.p.record(e.record)
            if rec is None:
                self._err(e, f"unknown record {e.record}")
            if len(e.args) != len(rec.fields):
                self._err(e, f"new {e.record} takes {len(rec.fields)} field values")
            for a, f in zip(e.args, rec.fields):
                got = self.expr(a, expected=f.ty)
                if got != f.ty:
                    self._err(a, f"field {e.record}.{f.name} is {f.ty}, got {got}")
            return N.record_ref(e.record)
        if isinstance(e, N.NewArray):
            got = self.expr(e.length, expected=N.INT)
            if got != N.INT:
                self._err(e.length, f"array length is {got}, needs int")
            return N.array_of(e.elem)
        if isinstance(e, N.PostIncDec):
            if self.in_global_init:
                self._err(e, "++/-- not allowed in global initializers")
            ty, binding = self._resolve(e.name, e)
            if ty != N.INT:
                self._err(e, f"++/-- needs an int variable, {e.name} is {ty}")
            e.binding = binding
            return N.INT
        if isinstance(e, N.Hole):
            return self._hole(e)
        raise AssertionError(f"unknown expression {e!r}")

    def _binary(self, e: N.Binary) -> N.Type:
        op = e.op
        # Check the side that can stand alone first so null/unfilled operands
        # can borrow the other side's type.
        lhs, rhs = e.lhs, e.rhs
        l_poly = isinstance(lhs, (N.NullLit, N.Unfilled))
        r_poly = isinstance(rhs, (N.NullLit, N.Unfilled))
        if op in N.LOGIC_OPS:
            lt = self.expr(lhs, expected=N.BOOL)
            rt = self.expr(rhs, expected=N.BOOL)
            if lt != N.BOOL or rt != N.BOOL:
                self._err(e, f"{op} needs bool operands, got {lt} and {rt}")
            e.op_kind = "bool"
            return N.BOOL
        if (
            op in ("==", "!=")
            and l_poly
            and r_poly
            and (isinstance(lhs, N.NullLit) or isinstance(rhs, N.NullLit))
        ):
            # e.g. `unfilled(k) == null`: a reference test whose record type
            # is unknowable; evaluation traps at the unfilled site anyway.
            anon = N.record_ref("_")
            self.expr(lhs, expected=anon)
            self.expr(rhs, expected=anon)
            e.op_kind = "ref"
            return N.BOOL
        if l_poly and not r_poly:
            rt = self.expr(rhs)
            lt = self.expr(lhs, expected=rt)
        else:
            lt = self.expr(lhs)
            rt = self.expr(rhs, expected=lt)
        if op in N.ARITH_OPS:
            if lt == rt and lt in (N.INT, N.DOUBLE):
                e.op_kind = lt.tag
                return lt
            self._err(e, f"{op} needs int/int or double/double, got {lt} and {rt}")
        if op in N.SHIFT_OPS:
            if lt == rt == N.INT:
                e.op_kind = "int"
                return N.INT
            self._err(e, f"{op} needs int operands, got {lt} and {rt}")
        if op in ("<", "<=", ">", ">="):
            if lt == rt and lt in (N.INT, N.DOUBLE, N.CHAR):
                e.op_kind = lt.tag
                return N.BOOL
            self._err(e, f"{op} compares int, double or char pairs, got {lt} and {rt}")
        if op in ("==", "!="):
            if lt == rt and lt in (N.INT, N.DOUBLE, N.CHAR, N.BOOL):
                e.op_kind = lt.tag
                return N.BOOL
            if lt.tag == "record" and rt.tag == "record" and lt.name == rt.name:
                e.op_kind = "ref"
                return N.BOOL
            self._err(e, f"{op} cannot compare {lt} and {rt}")
        raise AssertionError(f"unknown operator {op}")

    def _call(self, e: N.Call) -> N.Type:
        if e.receiver is not None:
            rty = self.expr(e.receiver)
            if rty.tag != "record":
                self._err(e, f"method call on {rty}")
            key = f"{rty.name}.{e.name}"
        else:
            key = e.name
        fn = self.p.function(key)
        if fn is None:
            self._err(e, f"unresolved function {key}")
        if len(e.args) != len(fn.params):
            self._err(e, f"{key} takes {len(fn.params)} arguments, got {len(e.args)}")
        for a, q in zip(e.args, fn.params):
            got = self.expr(a, expected=q.ty)
            if got != q.ty:
                self._err(a, f"argument {q.name} of {key} is {q.ty}, got {got}")
        return fn.ret

    # -- holes ------------------------------------------------------------------

    def _hole(self, e: N.Hole) -> N.Type:
        spec = e.spec if e.spec is not None else self.p.holes.get(e.hole_id)
        if spec is None:
            self._err(e, f"hole {e.hole_id} has no spec")
        e.spec = spec
        self._validate_spec(spec, e)
        self.hole_sites[e.hole_id] = HoleSite(
            scope=self._visible_scope(),
            excluded=self.assign_target,
            fn_key=self.fn.key if self.fn is not None else None,
        )
        return spec.ty

    def _validate_spec(self, spec: N.HoleSpec, where: N.Expr) -> None:
        k = spec.kind
        if k in N.TERMINAL_KINDS:
            if spec.operands:
                self._err(where, f"{k} hole takes no operands")
            if k == N.KIND_VAL and not spec.ty.is_primitive:
                self._err(where, f"Val hole of non-primitive type {spec.ty}")
            return
        roles = self._operand_roles(spec, where)
        if len(spec.operands) != len(roles):
            self._err(where, f"{k} hole needs {len(roles)} operands")
        for op, role in zip(spec.operands, roles):
            if isinstance(op, N.FixedOperand):
                got = self.expr(op.expr, expected=role)
                if got != role:
                    self._err(where, f"fixed operand is {got}, {k} hole needs {role}")
            else:
                if op.ty != role:
                    self._err(where, f"operand spec is {op.ty}, {k} hole needs {role}")
                self._validate_spec(op, where)

    def _operand_roles(self, spec: N.HoleSpec, where: N.Expr) -> list[N.Type]:
        k = spec.kind
        if k == N.KIND_ARITH:
            if spec.ty not in (N.INT, N.DOUBLE):
                self._err(where, f"Arith hole of type {spec.ty}")
            return [spec.ty, spec.ty]
        if k == N.KIND_SHIFT:
            if spec.ty != N.INT:
                self._err(where, "Shift hole must be int")
            return [N.INT, N.INT]
        if k == N.KIND_LOGIC:
            if spec.ty != N.BOOL:
                self._err(where, "Logic hole must be bool")
            return [N.BOOL, N.BOOL]
        if k == N.KIND_RELATION:
            if spec.ty != N.BOOL:
                self._err(where, "Relation hole must be bool")
            t = self._operand_type(spec.operands[0]) if spec.operands else None
            if t not in (N.INT, N.DOUBLE, N.CHAR):
                self._err(where, f"Relation hole over {t}")
            return [t, t]
        if k == N.KIND_ARRAY_ACC:
            if not spec.ty.is_primitive or spec.ty == N.BOOL:
                self._err(where, f"ArrayAcc hole of type {spec.ty}")
            return [N.array_of(spec.ty.tag), N.INT]
        if k == N.KIND_CAST:
            t = self._operand_type(spec.operands[0]) if spec.operands else None
            if t is None or t.tag not in _CASTS.get(spec.ty.tag, ()):
                self._err(where, f"Cast hole {t} -> {spec.ty}")
            return [t]
        self._err(where, f"unknown hole kind {k}")

    def _operand_type(self, op: N.HoleSpec | N.FixedOperand) -> N.Type | None:
        if isinstance(op, N.HoleSpec):
            return op.ty
        got = self.expr(op.expr)
        return got

    # -- misc ---------------------------------------------------------------------

    def _err(self, node, msg: str):
        pos = getattr(node, "pos", None) or (0, 0)
        raise TypeCheckError(msg, pos[0], pos[1])


def check_program(p: N.Program) -> N.Program:
    """Resolve and typecheck `p` in place; returns `p` for chaining."""
    Checker(p).check()
    return p
